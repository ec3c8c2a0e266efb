use super::AppError;
use crate::ledger::{Identity, Ledger, Operation, ParticipantId, RejectReason, Tick, Transaction, TxId, TxKind, Verdict};

/// Admin or regulator request to aggregate a seller's reputation at `t_n`.
/// Returns `(R, T)`.
pub fn request_trust_recompute(
    ledger: &mut Ledger,
    issuer: &ParticipantId,
    seller: &ParticipantId,
    commodity_type: &str,
    t_n: Tick,
) -> Result<(f64, f64), AppError> {
    let snap = ledger.recompute_trust(issuer, seller, commodity_type, t_n)?;
    Ok((snap.reputation, snap.trust))
}

fn commit_status_change(ledger: &mut Ledger, admin: &Identity, tx: Transaction, tick: Tick) -> Result<TxId, AppError> {
    ledger.authorize_member(&admin.id, Operation::Submit(tx.kind()))?;
    match ledger.validate(&tx) {
        Verdict::Accept => {}
        Verdict::Reject(reason) => {
            let target = match &tx.body {
                crate::ledger::TxBody::Revoke { participant_id, .. }
                | crate::ledger::TxBody::Resume { participant_id, .. } => participant_id.clone(),
                _ => unreachable!("status change transaction"),
            };
            return Err(match reason {
                RejectReason::AlreadyRevoked => AppError::AlreadyRevoked(target),
                RejectReason::NotRevoked => AppError::NotRevoked(target),
                RejectReason::UnknownParticipant(id) => AppError::NotFound(format!("participant {id}")),
                other => AppError::Rejected(other),
            });
        }
    }
    let id = tx.id();
    let ts = tick.max(ledger.chain().tip().timestamp);
    ledger.append_block(vec![tx], ts)?;
    Ok(id)
}

/// Revokes a participant and commits the transaction in its own block.
pub fn revoke(ledger: &mut Ledger, admin: &Identity, participant_id: &ParticipantId, tick: Tick) -> Result<TxId, AppError> {
    let tx = Transaction::revoke(admin, participant_id.clone(), tick);
    debug_assert_eq!(tx.kind(), TxKind::Revoke);
    commit_status_change(ledger, admin, tx, tick)
}

/// Lets a revoked participant back in after the penalty period. Trust
/// restarts at the minimum.
pub fn resume(ledger: &mut Ledger, admin: &Identity, participant_id: &ParticipantId, tick: Tick) -> Result<TxId, AppError> {
    let tx = Transaction::resume(admin, participant_id.clone(), tick);
    commit_status_change(ledger, admin, tx, tick)
}
