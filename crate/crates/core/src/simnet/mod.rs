//! Deterministic discrete-event simulation of miners, provers and the
//! verifier.
//!
//! Block arrivals follow a Poisson schedule; every block is then mined for
//! real by grinding a nonce against an easy target, so proofs built from
//! simulated chains pass the genuine PoW checks.

mod events;
mod mining;
mod race;
mod rng;
mod velvet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use events::*;
pub use mining::*;
pub use race::*;
pub use rng::*;
pub use velvet::*;

use crate::chain::ChainError;
use crate::digest::Target;
use crate::mmr::MmrError;
use crate::protocol::ProofError;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("no nonce below the target after {budget} attempts at height {height}")]
    GrindBudget { height: u64, budget: u64 },
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Mmr(#[from] MmrError),
    #[error(transparent)]
    Proof(#[from] ProofError),
}

fn bad<T>(msg: impl Into<String>) -> Result<T, SimError> {
    Err(SimError::InvalidConfig(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MmrStrategy {
    /// Plant a wrong root; accept wrong roots and reject correct ones.
    AlwaysInvalidRoot,
    /// Behave like an honest upgraded miner.
    AlwaysValidRoot,
    /// Plant a wrong root; accept adversary blocks and reject honest ones.
    AcceptOwnRejectHonest,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PopulationConfig {
    /// Honest arrival rate, blocks per second, at the first honest target.
    pub lambda_honest: f64,
    /// Adversary power over honest power.
    pub adversary_ratio: f64,
    /// Share of blocks mined by upgraded miners.
    pub upgraded_fraction: f64,
    /// Share of upgraded blocks mined honestly.
    pub upgraded_honest_fraction: f64,
    pub alpha: u32,
    pub adversary_mmr_strategy: MmrStrategy,
}

impl Default for PopulationConfig {
    fn default() -> Self {
        PopulationConfig {
            lambda_honest: 1.0 / 600.0,
            adversary_ratio: 0.5,
            upgraded_fraction: 0.5,
            upgraded_honest_fraction: 2.0 / 3.0,
            alpha: 80,
            adversary_mmr_strategy: MmrStrategy::AlwaysInvalidRoot,
        }
    }
}

impl PopulationConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.lambda_honest > 0.0 && self.lambda_honest.is_finite()) {
            return bad("lambda_honest must be positive");
        }
        if !(0.0..1.0).contains(&self.adversary_ratio) {
            return bad("adversary_ratio must lie in [0, 1)");
        }
        if !(self.upgraded_fraction > 0.0 && self.upgraded_fraction <= 1.0) {
            return bad("upgraded_fraction must lie in (0, 1]");
        }
        if !(self.upgraded_honest_fraction > 0.5 && self.upgraded_honest_fraction <= 1.0) {
            return bad("upgraded_honest_fraction must lie in (0.5, 1]");
        }
        if self.alpha == 0 {
            return bad("alpha must be at least 1");
        }
        Ok(())
    }
}

/// A target change: `target = 2^target_log2` from `start` seconds into the
/// challenge period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetChange {
    pub target_log2: u32,
    pub start: f64,
}

impl TargetChange {
    pub fn target(&self) -> Target {
        Target::pow2(self.target_log2).expect("validated exponent")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DifficultySchedule {
    pub honest: Vec<TargetChange>,
    pub adversary: Vec<TargetChange>,
}

pub const DEFAULT_TARGET_LOG2: u32 = 240;

impl Default for DifficultySchedule {
    fn default() -> Self {
        Self::constant(DEFAULT_TARGET_LOG2)
    }
}

impl DifficultySchedule {
    pub fn constant(target_log2: u32) -> Self {
        let c = vec![TargetChange {
            target_log2,
            start: 0.0,
        }];
        DifficultySchedule {
            honest: c.clone(),
            adversary: c,
        }
    }

    fn validate_side(name: &str, s: &[TargetChange], t: f64) -> Result<(), SimError> {
        if s.is_empty() || s.len() > 2 {
            return bad(format!("{name} schedule needs one or two entries"));
        }
        if s[0].start != 0.0 {
            return bad(format!("{name} schedule must start at 0"));
        }
        for c in s {
            if c.target_log2 > 255 {
                return bad(format!("{name} target exponent above 255"));
            }
            if !(c.start >= 0.0 && c.start <= t.max(0.0)) {
                return bad(format!("{name} change time outside the challenge period"));
            }
        }
        if s.len() == 2 && s[1].start < s[0].start {
            return bad(format!("{name} schedule is out of order"));
        }
        Ok(())
    }

    pub fn validate(&self, challenge_period: f64) -> Result<(), SimError> {
        Self::validate_side("honest", &self.honest, challenge_period)?;
        Self::validate_side("adversary", &self.adversary, challenge_period)
    }
}

pub const DEFAULT_GRIND_BUDGET: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub seed: u64,
    /// Message delay, seconds.
    pub delta: f64,
    /// Seconds.
    pub challenge_period: f64,
    pub k: u32,
    pub difficulty_schedule: DifficultySchedule,
    /// Honest blocks mined after the period starts before the query
    /// transaction is included; zero means the first block carries it.
    pub inclusion_delay: u32,
    pub grind_budget: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            seed: 0,
            delta: 0.0,
            challenge_period: 3600.0,
            k: 6,
            difficulty_schedule: DifficultySchedule::default(),
            inclusion_delay: 0,
            grind_budget: DEFAULT_GRIND_BUDGET,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return bad("delta must be non-negative");
        }
        if !(self.challenge_period >= 0.0 && self.challenge_period.is_finite()) {
            return bad("challenge_period must be non-negative");
        }
        if self.challenge_period < 2.0 * self.delta {
            return bad("challenge_period must leave room for 2 delta");
        }
        if self.grind_budget == 0 {
            return bad("grind_budget must be positive");
        }
        self.difficulty_schedule.validate(self.challenge_period)
    }
}
