//! Velvet-fork histories: a mix of legacy and upgraded miners, where
//! upgraded miners publish an MMR root and vote on earlier roots.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    mine_genesis, mine_next, stream, substream, BlockTemplate, MmrStrategy, PopulationConfig,
    SimError, SimRng,
};
use crate::chain::{CoinbaseData, FullChain};
use crate::digest::{sha256, Hash32, Target};
use crate::mmr::MmrStore;
use crate::protocol::{build_mmr_discovery, find_last_mmr, DiscoveryError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockOrigin {
    pub upgraded: bool,
    /// Meaningful for upgraded blocks only.
    pub honest: bool,
}

/// One draw per block, shared by history generation and direct sampling.
pub fn sample_origin(pop: &PopulationConfig, rng: &mut impl Rng) -> BlockOrigin {
    let upgraded = rng.random_bool(pop.upgraded_fraction);
    let honest = rng.random_bool(pop.upgraded_honest_fraction);
    BlockOrigin { upgraded, honest }
}

/// A previous upgraded block as seen by a voter.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UpgradedEntry {
    pub height: u64,
    pub mmr_root: Hash32,
    /// The root over headers `[0, height)`, as any full node recomputes it.
    pub expected_root: Hash32,
    pub honest_miner: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Voter {
    Honest,
    Adversary(MmrStrategy),
}

/// Vote buffer of exactly `alpha` bits over `previous` (the most recent
/// `min(alpha, available)` upgraded blocks, most recent last). Missing
/// entries are zero bits at the front.
pub fn cast_votes(voter: Voter, previous: &[UpgradedEntry], alpha: usize) -> Vec<bool> {
    let previous = &previous[previous.len().saturating_sub(alpha)..];
    let mut buf = vec![false; alpha - previous.len()];
    buf.extend(previous.iter().map(|e| {
        let valid = e.mmr_root == e.expected_root;
        match voter {
            Voter::Honest | Voter::Adversary(MmrStrategy::AlwaysValidRoot) => valid,
            Voter::Adversary(MmrStrategy::AlwaysInvalidRoot) => !valid,
            Voter::Adversary(MmrStrategy::AcceptOwnRejectHonest) => !e.honest_miner,
        }
    }));
    buf
}

/// The wrong root an adversary plants in place of `honest_root`.
pub fn invalid_root(honest_root: &Hash32) -> Hash32 {
    let mut buf = b"invalid".to_vec();
    buf.extend_from_slice(&honest_root.0);
    sha256(&buf)
}

#[derive(Debug, Clone)]
pub struct VelvetHistory {
    pub chain: FullChain,
    /// MMR over every header digest in `chain`.
    pub store: MmrStore,
    /// `origins[h]` for each height; genesis is a legacy block.
    pub origins: Vec<BlockOrigin>,
}

impl VelvetHistory {
    pub fn upgraded_heights(&self) -> impl Iterator<Item = u64> + '_ {
        self.chain
            .coinbases
            .iter()
            .enumerate()
            .filter(|(_, c)| c.is_upgraded())
            .map(|(h, _)| h as u64)
    }
}

/// Grind budget for velvet histories; the desk target is easy.
const VELVET_BUDGET: u64 = 1 << 24;

fn generate(
    pop: &PopulationConfig,
    target: Target,
    rng: &mut SimRng,
    grind_rng: &mut SimRng,
    mut done: impl FnMut(usize, usize) -> bool,
) -> Result<VelvetHistory, SimError> {
    pop.validate()?;
    let alpha = pop.alpha as usize;
    let genesis_cb = CoinbaseData::plain(alpha);
    let genesis_txs = vec![b"genesis".to_vec()];
    let genesis = mine_genesis(
        &BlockTemplate {
            txs: &genesis_txs,
            coinbase: &genesis_cb,
            target,
            timestamp: 0,
        },
        grind_rng,
        VELVET_BUDGET,
    )?;
    let mut chain = FullChain::default();
    let mut store = MmrStore::new();
    store.append(&genesis.digest());
    chain.push(genesis, genesis_txs, genesis_cb);
    let mut origins = vec![BlockOrigin {
        upgraded: false,
        honest: true,
    }];
    let mut entries: Vec<UpgradedEntry> = Vec::new();

    while !done(chain.len(), entries.len()) {
        let height = chain.len() as u64;
        let origin = sample_origin(pop, rng);
        let coinbase = if origin.upgraded {
            let expected_root = store.root_at(height)?;
            let voter = if origin.honest {
                Voter::Honest
            } else {
                Voter::Adversary(pop.adversary_mmr_strategy)
            };
            let plants_invalid =
                !origin.honest && pop.adversary_mmr_strategy != MmrStrategy::AlwaysValidRoot;
            let mmr_root = if plants_invalid {
                invalid_root(&expected_root)
            } else {
                expected_root
            };
            let votes = cast_votes(voter, &entries, alpha);
            entries.push(UpgradedEntry {
                height,
                mmr_root,
                expected_root,
                honest_miner: origin.honest,
            });
            CoinbaseData::upgraded(mmr_root, votes)
        } else {
            CoinbaseData::plain(alpha)
        };
        let txs = vec![format!("velvet:{height}").into_bytes()];
        let header = mine_next(
            chain.tip().expect("genesis present"),
            &BlockTemplate {
                txs: &txs,
                coinbase: &coinbase,
                target,
                timestamp: height,
            },
            grind_rng,
            VELVET_BUDGET,
        )?;
        store.append(&header.digest());
        chain.push(header, txs, coinbase);
        origins.push(origin);
    }
    Ok(VelvetHistory {
        chain,
        store,
        origins,
    })
}

/// A history of `length` blocks including genesis.
pub fn run_velvet_history(
    pop: &PopulationConfig,
    length: usize,
    target: Target,
    seed: u64,
    trial: u64,
) -> Result<VelvetHistory, SimError> {
    if length == 0 {
        return Err(SimError::InvalidConfig(
            "history length must be at least 1".into(),
        ));
    }
    let mut rng = substream(seed, trial, stream::VELVET_ORIGINS);
    let mut grind_rng = substream(seed, trial, stream::GRIND);
    generate(pop, target, &mut rng, &mut grind_rng, |len, _| {
        len >= length
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VelvetOutcome {
    /// The honest root over all headers was recovered.
    Found,
    /// None of the `beta` candidates carried a correct root.
    NoHonestCandidate,
    /// A correct candidate existed but the votes picked a wrong one or
    /// rejected every correct one.
    VoteOverwhelm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VelvetTrial {
    pub trial: u64,
    pub outcome: VelvetOutcome,
    pub chain_length: u64,
    pub candidate_valid: Vec<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Generate a history that ends on its `alpha + beta`-th upgraded block,
/// build the honest discovery proof for the tip and run the verifier.
pub fn velvet_discovery_trial(
    pop: &PopulationConfig,
    beta: u32,
    target: Target,
    seed: u64,
    trial: u64,
) -> Result<VelvetTrial, SimError> {
    if beta == 0 {
        return Err(SimError::InvalidConfig("beta must be at least 1".into()));
    }
    let (alpha, beta) = (pop.alpha as usize, beta as usize);
    let needed = alpha + beta;
    let mut rng = substream(seed, trial, stream::VELVET_ORIGINS);
    let mut grind_rng = substream(seed, trial, stream::GRIND);
    let history = generate(pop, target, &mut rng, &mut grind_rng, |_, up| up >= needed)?;
    let tip = *history.chain.tip().expect("non-empty");
    let honest_root = history.store.root_at(history.chain.len() as u64)?;

    let proof = build_mmr_discovery(&history.chain, &history.store, &tip, alpha, beta)
        .map_err(|e| SimError::InvalidConfig(format!("honest discovery proof failed: {e}")))?;
    let candidate_valid: Vec<bool> = history
        .upgraded_heights()
        .take(beta)
        .map(|h| {
            let h = h as usize;
            Ok(history.chain.coinbases[h].mmr_root == history.store.root_at(h as u64)?)
        })
        .collect::<Result<_, SimError>>()?;

    let result = find_last_mmr(&proof, &tip, alpha, beta);
    let outcome = match &result {
        Ok(found) if found.root == honest_root => VelvetOutcome::Found,
        _ if !candidate_valid.iter().any(|v| *v) => VelvetOutcome::NoHonestCandidate,
        _ => VelvetOutcome::VoteOverwhelm,
    };
    Ok(VelvetTrial {
        trial,
        outcome,
        chain_length: history.chain.len() as u64,
        candidate_valid,
        error: result.err().map(|e: DiscoveryError| e.to_string()),
    })
}

/// Draw `beta` upgraded origins with [`sample_origin`] and report whether
/// none was honest. Matches the candidate draw of a velvet history.
pub fn sample_candidates_missed(pop: &PopulationConfig, beta: u32, rng: &mut impl Rng) -> bool {
    let mut seen = 0;
    let mut all_adversarial = true;
    while seen < beta {
        let o = sample_origin(pop, rng);
        if o.upgraded {
            seen += 1;
            all_adversarial &= !o.honest;
        }
    }
    all_adversarial
}
