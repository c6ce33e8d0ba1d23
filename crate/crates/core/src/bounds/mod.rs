//! Analytic race bounds, vote tails, parameter solvers and size estimates.

mod chernoff;
mod race;
mod sizes;
mod votes;

pub use chernoff::*;
pub use race::*;
pub use sizes::*;
pub use votes::*;

use serde::{Deserialize, Serialize};

/// Security parameters shared by the solvers and the simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecurityParams {
    /// Finality depth.
    pub k: u32,
    pub alpha: u32,
    pub beta: u32,
    /// Adversarial share of upgraded mining power.
    #[serde(rename = "M_a")]
    pub m_a: f64,
    pub epsilon: f64,
    /// Share of blocks mined by upgraded miners.
    pub upgraded_fraction: f64,
}

impl Default for SecurityParams {
    fn default() -> Self {
        SecurityParams {
            k: 6,
            alpha: 80,
            beta: 7,
            m_a: 1.0 / 3.0,
            epsilon: 2f64.powi(-20),
            upgraded_fraction: 0.5,
        }
    }
}

impl SecurityParams {
    pub fn m_h(&self) -> f64 {
        1.0 - self.m_a
    }

    pub fn validate(&self) -> Result<(), BoundsError> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(BoundsError::Epsilon(self.epsilon));
        }
        if !(self.m_a >= 0.0 && self.m_a < 0.5) {
            return Err(BoundsError::AdversaryFraction(self.m_a.to_string()));
        }
        if !(self.upgraded_fraction > 0.0 && self.upgraded_fraction <= 1.0) {
            return Err(BoundsError::InvalidConfig(
                "upgraded_fraction must lie in (0, 1]".into(),
            ));
        }
        if self.alpha == 0 || self.beta == 0 {
            return Err(BoundsError::InvalidConfig(
                "alpha and beta must be at least 1".into(),
            ));
        }
        Ok(())
    }
}
