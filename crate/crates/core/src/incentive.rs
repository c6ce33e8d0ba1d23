//! Service-fee settlement for query transactions.
//!
//! The query transaction pays `service_fee` to the hash of a secret script
//! (a single hash-preimage condition). The verifier reveals the script to
//! the winning prover, who redeems the fee. Miner fees go to a sink account.

use std::collections::BTreeMap;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::{sha256, Hash32};
use crate::protocol::QueryTransaction;

/// Account credited with transaction fees.
pub const FEE_SINK: &str = "miners";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IncentiveError {
    #[error("query payload is empty")]
    EmptyPayload,
    #[error("unknown transaction {0}")]
    UnknownTx(Hash32),
    #[error("transaction {0} was already redeemed")]
    AlreadyRedeemed(Hash32),
    #[error("transaction {0} is already pending")]
    DuplicateTx(Hash32),
    #[error("{who} holds {have}, needs {need}")]
    InsufficientFunds { who: String, have: u64, need: u64 },
}

/// Raised when `tx_fee <= service_fee`, which leaves the verifier no reason
/// to reveal the script instead of restarting with another prover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeePolicyWarning {
    pub service_fee: u64,
    pub tx_fee: u64,
}

/// The verifier's secret: the script whose hash the query transaction pays to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptSecret(pub Vec<u8>);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptReveal {
    pub script: Vec<u8>,
    pub redeemer: String,
}

#[derive(Debug, Clone)]
pub struct CreatedQuery {
    pub tx: QueryTransaction,
    pub secret: ScriptSecret,
    pub warning: Option<FeePolicyWarning>,
}

pub fn create_query_transaction(
    payload: &[u8],
    service_fee: u64,
    tx_fee: u64,
    challenge_period: f64,
    rng: &mut impl RngCore,
) -> Result<CreatedQuery, IncentiveError> {
    if payload.is_empty() {
        return Err(IncentiveError::EmptyPayload);
    }
    let mut script = vec![0u8; 32];
    rng.fill_bytes(&mut script);
    let tx = QueryTransaction::new(
        payload.to_vec(),
        sha256(&script),
        service_fee,
        tx_fee,
        challenge_period,
    );
    let warning = (tx_fee <= service_fee).then_some(FeePolicyWarning {
        service_fee,
        tx_fee,
    });
    Ok(CreatedQuery {
        tx,
        secret: ScriptSecret(script),
        warning,
    })
}

/// `(restart_cost, reveal_cost)` for a verifier deciding whether to pay the
/// prover. Restarting means a fresh query transaction (its `tx_fee`);
/// revealing forfeits the `service_fee`.
pub fn abandonment_cost(service_fee: u64, tx_fee: u64) -> (u64, u64) {
    (tx_fee, service_fee)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PendingFee {
    pub script_hash: Hash32,
    pub service_fee: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Settlement {
    Paid {
        amount: u64,
    },
    /// Script did not hash to the committed value; nothing changed.
    WrongScript,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SettlementLedger {
    pub balances: BTreeMap<String, u64>,
    pub pending: BTreeMap<Hash32, PendingFee>,
    #[serde(default)]
    redeemed: Vec<Hash32>,
}

impl SettlementLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn fund(&mut self, who: &str, amount: u64) {
        *self.balances.entry(who.to_string()).or_default() += amount;
    }

    pub fn balance(&self, who: &str) -> u64 {
        self.balances.get(who).copied().unwrap_or(0)
    }

    /// Sum of balances plus pending service fees.
    pub fn total(&self) -> u128 {
        self.balances.values().map(|v| *v as u128).sum::<u128>()
            + self
                .pending
                .values()
                .map(|p| p.service_fee as u128)
                .sum::<u128>()
    }

    /// The payer funds the service fee (held pending) and the transaction
    /// fee (moved to [`FEE_SINK`]).
    pub fn submit(&mut self, payer: &str, tx: &QueryTransaction) -> Result<(), IncentiveError> {
        if self.pending.contains_key(&tx.id) || self.redeemed.contains(&tx.id) {
            return Err(IncentiveError::DuplicateTx(tx.id));
        }
        let need = tx.service_fee.saturating_add(tx.tx_fee);
        let have = self.balance(payer);
        if have < need {
            return Err(IncentiveError::InsufficientFunds {
                who: payer.to_string(),
                have,
                need,
            });
        }
        self.balances.insert(payer.to_string(), have - need);
        self.fund(FEE_SINK, tx.tx_fee);
        self.pending.insert(
            tx.id,
            PendingFee {
                script_hash: tx.script_hash,
                service_fee: tx.service_fee,
            },
        );
        Ok(())
    }

    pub fn redeem(
        &mut self,
        tx_id: &Hash32,
        reveal: &ScriptReveal,
    ) -> Result<Settlement, IncentiveError> {
        if self.redeemed.contains(tx_id) {
            return Err(IncentiveError::AlreadyRedeemed(*tx_id));
        }
        let entry = self
            .pending
            .get(tx_id)
            .ok_or(IncentiveError::UnknownTx(*tx_id))?;
        if sha256(&reveal.script) != entry.script_hash {
            return Ok(Settlement::WrongScript);
        }
        let amount = entry.service_fee;
        self.pending.remove(tx_id);
        self.redeemed.push(*tx_id);
        self.fund(&reveal.redeemer, amount);
        Ok(Settlement::Paid { amount })
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("ledger serializes")
    }
}

pub fn redeem(
    ledger: &mut SettlementLedger,
    tx_id: &Hash32,
    reveal: &ScriptReveal,
) -> Result<Settlement, IncentiveError> {
    ledger.redeem(tx_id, reveal)
}
