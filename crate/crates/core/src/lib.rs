//! Permissioned supply-chain ledger with smart-contract quality scoring,
//! seller reputation and trust evaluation.
//!
//! Transactions flow through [`ledger::Ledger`]: they are validated against
//! the identity registry and access rules, batched into hash-linked blocks,
//! and applied on a single commit path that runs the quality and rating
//! contracts and updates trust profiles. The byte formats used for hashing
//! and export are described in `docs/serialization.md`.

pub mod application;
pub mod codec;
pub mod contracts;
pub mod crypto;
pub mod events;
pub mod ledger;
pub mod trust;

pub use events::{Event, EventLog};
pub use ledger::{Ledger, LedgerConfig, LedgerError, LedgerMode};
