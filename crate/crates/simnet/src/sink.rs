use trustchain_core::ledger::{CommitOutcome, Transaction};
use trustchain_core::{Ledger, LedgerError};

use crate::pipeline::CommitSink;

/// Feeds committed blocks into a real ledger, one `commit_batch` per block.
///
/// Block timestamps are the simulated commit time rounded up to a whole
/// tick, clamped so they never go backwards.
pub struct LedgerSink {
    pub ledger: Ledger,
    pub outcomes: Vec<CommitOutcome>,
    pub errors: Vec<LedgerError>,
}

impl LedgerSink {
    pub fn new(ledger: Ledger) -> Self {
        LedgerSink { ledger, outcomes: Vec::new(), errors: Vec::new() }
    }
}

impl CommitSink<Transaction> for LedgerSink {
    fn commit(&mut self, txs: Vec<Transaction>, at: f64) {
        let ts = (at.ceil() as u64).max(self.ledger.chain().tip().timestamp);
        match self.ledger.commit_batch(txs, ts) {
            Ok(o) => self.outcomes.push(o),
            Err(e) => self.errors.push(e),
        }
    }
}
