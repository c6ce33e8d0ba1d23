//! Nonce grinding.

use rand::RngCore;

use super::SimError;
use crate::chain::{tx_merkle_root, BlockHeader, CoinbaseData};
use crate::digest::{Hash32, Target};

/// Everything in a header except the nonce.
#[derive(Debug, Clone)]
pub struct BlockTemplate<'a> {
    pub txs: &'a [Vec<u8>],
    pub coinbase: &'a CoinbaseData,
    pub target: Target,
    pub timestamp: u64,
}

/// Grind a nonce so the header extending `parent` meets `template.target`.
/// The search starts at a random nonce and gives up after `budget` tries.
pub fn mine_next(
    parent: &BlockHeader,
    template: &BlockTemplate<'_>,
    rng: &mut impl RngCore,
    budget: u64,
) -> Result<BlockHeader, SimError> {
    grind(parent.height + 1, parent.digest(), template, rng, budget)
}

pub fn mine_genesis(
    template: &BlockTemplate<'_>,
    rng: &mut impl RngCore,
    budget: u64,
) -> Result<BlockHeader, SimError> {
    grind(0, Hash32::ZERO, template, rng, budget)
}

fn grind(
    height: u64,
    prev_hash: Hash32,
    template: &BlockTemplate<'_>,
    rng: &mut impl RngCore,
    budget: u64,
) -> Result<BlockHeader, SimError> {
    let mut header = BlockHeader {
        height,
        prev_hash,
        tx_root: tx_merkle_root(template.txs)?,
        target: template.target,
        nonce: rng.next_u64(),
        timestamp: template.timestamp,
        coinbase_commitment: template.coinbase.commitment(),
    };
    for _ in 0..budget {
        if header.meets_target() {
            return Ok(header);
        }
        header.nonce = header.nonce.wrapping_add(1);
    }
    Err(SimError::GrindBudget { height, budget })
}
