//! Chernoff-style bound on the adversary winning the overall-difficulty race.
//!
//! Within the challenge period `t` each chain changes target at most once:
//! the honest chain mines at rate `lambda1` with target `T1` for `t1`
//! seconds and at `lambda2`/`T2` afterwards; the adversary likewise with
//! primed symbols. Everything is evaluated as a logarithm first.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BoundsError {
    #[error("m must be positive, got {0}")]
    NonPositiveM(f64),
    #[error("honest mining power must exceed the adversary's (lambda1/T1 > lambda1'/T1')")]
    NoHonestMajority,
    #[error("invalid race configuration: {0}")]
    InvalidConfig(String),
    #[error("parameter grid is empty")]
    EmptyGrid,
    #[error("epsilon must lie in (0, 1), got {0}")]
    Epsilon(f64),
    #[error("adversary fraction {0} outside the allowed range")]
    AdversaryFraction(String),
    #[error("no solution up to the search cap {0}")]
    SearchCap(u64),
}

/// Rates, targets and change times of one race.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RaceConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    #[serde(rename = "lambda1p")]
    pub lambda1_adv: f64,
    #[serde(rename = "lambda2p")]
    pub lambda2_adv: f64,
    #[serde(rename = "T1")]
    pub target1: f64,
    #[serde(rename = "T2")]
    pub target2: f64,
    #[serde(rename = "T1p")]
    pub target1_adv: f64,
    #[serde(rename = "T2p")]
    pub target2_adv: f64,
    pub t: f64,
    pub t1: f64,
    #[serde(rename = "t1p")]
    pub t1_adv: f64,
}

const RATE_TOL: f64 = 1e-9;

impl RaceConfig {
    /// No difficulty change and the adversary uses the honest target.
    pub fn equal_targets(lambda: f64, lambda_adv: f64, t: f64) -> Self {
        RaceConfig {
            lambda1: lambda,
            lambda2: lambda,
            lambda1_adv: lambda_adv,
            lambda2_adv: lambda_adv,
            target1: 1.0,
            target2: 1.0,
            target1_adv: 1.0,
            target2_adv: 1.0,
            t,
            t1: t,
            t1_adv: t,
        }
    }

    pub fn t2(&self) -> f64 {
        self.t - self.t1
    }

    pub fn t2_adv(&self) -> f64 {
        self.t - self.t1_adv
    }

    /// Honest majority at the first targets: `lambda1/T1 > lambda1'/T1'`.
    pub fn honest_majority(&self) -> bool {
        self.lambda1 / self.target1 > self.lambda1_adv / self.target1_adv
    }

    /// All structural invariants: positive targets, constant mining power
    /// per side, honest majority, change times inside `[0, t]`, and the
    /// ordering `T2 >= T1`, `T2' >= T1'`.
    pub fn validate(&self) -> Result<(), BoundsError> {
        let bad = |m: &str| Err(BoundsError::InvalidConfig(m.to_string()));
        let targets = [
            self.target1,
            self.target2,
            self.target1_adv,
            self.target2_adv,
        ];
        if targets.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return bad("targets must be positive");
        }
        let rates = [
            self.lambda1,
            self.lambda2,
            self.lambda1_adv,
            self.lambda2_adv,
        ];
        if rates.iter().any(|v| !(v.is_finite() && *v >= 0.0)) || self.lambda1 <= 0.0 {
            return bad("rates must be non-negative and lambda1 positive");
        }
        if !(self.t >= 0.0
            && (0.0..=self.t).contains(&self.t1)
            && (0.0..=self.t).contains(&self.t1_adv))
        {
            return bad("change times must lie in [0, t]");
        }
        if self.target2 < self.target1 || self.target2_adv < self.target1_adv {
            return bad("expected T2 >= T1 and T2' >= T1'");
        }
        let close = |a: f64, b: f64| (a - b).abs() <= RATE_TOL * a.abs().max(b.abs()).max(1e-300);
        if !close(self.lambda1 / self.target1, self.lambda2 / self.target2)
            || !close(
                self.lambda1_adv / self.target1_adv,
                self.lambda2_adv / self.target2_adv,
            )
        {
            return bad("mining power must stay constant across the target change");
        }
        if !self.honest_majority() {
            return Err(BoundsError::NoHonestMajority);
        }
        Ok(())
    }
}

/// Natural log of the Chernoff bound on
/// `Pr{N1' > n1 T1'/T1 + n2 T1'/T2 - n2' T1'/T2'}` with `N1' ~ Poisson(lambda1' t1')`.
pub fn ln_chernoff_tail(
    n1: f64,
    n2: f64,
    n2_adv: f64,
    m: f64,
    cfg: &RaceConfig,
) -> Result<f64, BoundsError> {
    if m.is_nan() || m <= 0.0 {
        return Err(BoundsError::NonPositiveM(m));
    }
    let r1 = cfg.target1_adv / cfg.target1;
    let r2 = cfg.target1_adv / cfg.target2;
    let r2a = cfg.target1_adv / cfg.target2_adv;
    Ok(m.exp_m1() * cfg.lambda1_adv * cfg.t1_adv - m * n1 * r1 - m * n2 * r2 + m * n2_adv * r2a)
}

pub fn chernoff_tail(
    n1: f64,
    n2: f64,
    n2_adv: f64,
    m: f64,
    cfg: &RaceConfig,
) -> Result<f64, BoundsError> {
    ln_chernoff_tail(n1, n2, n2_adv, m, cfg).map(f64::exp)
}

/// `m0 = ln(T1' lambda1 / (T1 lambda1')) / (1 + T1'/T1)`, the minimizer of
/// the bound's exponent.
pub fn m0_of(cfg: &RaceConfig) -> Result<f64, BoundsError> {
    if !cfg.honest_majority() || cfg.lambda1.is_nan() || cfg.lambda1 <= 0.0 {
        return Err(BoundsError::NoHonestMajority);
    }
    if cfg.lambda1_adv.is_nan() || cfg.lambda1_adv <= 0.0 {
        return Err(BoundsError::InvalidConfig(
            "m0 is unbounded when the adversary rate is zero".into(),
        ));
    }
    let ratio = cfg.target1_adv / cfg.target1;
    Ok(((ratio * cfg.lambda1) / cfg.lambda1_adv).ln() / (1.0 + ratio))
}

/// The three exponent coefficients `(f1, f2, f3)` with
/// `ln T(m) = t1 f1 + t1' f2 + t f3`.
pub fn bound_exponents(m: f64, cfg: &RaceConfig) -> (f64, f64, f64) {
    let a = (-m * cfg.target1_adv / cfg.target1).exp();
    let b = (-m * cfg.target1_adv / cfg.target2).exp();
    let c = (m * cfg.target1_adv / cfg.target2_adv).exp();
    let f1 = -cfg.lambda1 + cfg.lambda2 + cfg.lambda1 * a - cfg.lambda2 * b;
    let f2 = cfg.lambda1_adv * m.exp() - cfg.lambda2_adv * c - cfg.lambda1_adv + cfg.lambda2_adv;
    let f3 = cfg.lambda2_adv * c - cfg.lambda2 - cfg.lambda2_adv + cfg.lambda2 * b;
    (f1, f2, f3)
}

pub fn ln_bound_t(m: f64, cfg: &RaceConfig) -> Result<f64, BoundsError> {
    if m.is_nan() || m <= 0.0 {
        return Err(BoundsError::NonPositiveM(m));
    }
    let (f1, f2, f3) = bound_exponents(m, cfg);
    // t1 = 0 with an infinite coefficient would give NaN; zero time means
    // the factor is exactly 1.
    let term = |time: f64, coef: f64| if time == 0.0 { 0.0 } else { time * coef };
    Ok(term(cfg.t1, f1) + term(cfg.t1_adv, f2) + term(cfg.t, f3))
}

/// `T(m, t, t1, t1')`, the bound on the adversary's win probability.
pub fn bound_t(m: f64, cfg: &RaceConfig) -> Result<f64, BoundsError> {
    ln_bound_t(m, cfg).map(f64::exp)
}

/// Inputs for the worst case over change times and adversary targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaceBoundGrid {
    /// Honest rate at target `target1`.
    pub lambda: f64,
    pub target1: f64,
    pub target2: f64,
    /// Adversary power over honest power.
    pub adversary_ratio: f64,
    /// Candidate `(T1', T2')` pairs the adversary may use.
    pub adversary_targets: Vec<(f64, f64)>,
    pub t: f64,
    /// Points per axis for `(t1, t1')` over `[0, t]`; 1 means just `t`.
    pub resolution: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorstCaseBound {
    pub bound: f64,
    pub ln_bound: f64,
    pub argmax: RaceConfig,
}

fn ordered(a: f64, b: f64) -> (f64, f64) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Worst case of `T(m0, ...)` over the `(t1, t1')` grid and the supplied
/// adversary targets. Target pairs are reordered so the smaller comes
/// first; the race probability is symmetric in that order.
pub fn worst_case_race_bound(grid: &RaceBoundGrid) -> Result<WorstCaseBound, BoundsError> {
    if grid.resolution == 0 || grid.adversary_targets.is_empty() {
        return Err(BoundsError::EmptyGrid);
    }
    let points: Vec<f64> = if grid.resolution == 1 {
        vec![grid.t]
    } else {
        (0..grid.resolution)
            .map(|i| grid.t * i as f64 / (grid.resolution - 1) as f64)
            .collect()
    };
    let (t1_h, t2_h) = ordered(grid.target1, grid.target2);
    let lambda1 = grid.lambda * t1_h / grid.target1;
    let mut best: Option<WorstCaseBound> = None;
    for &(a, b) in &grid.adversary_targets {
        let (t1_a, t2_a) = ordered(a, b);
        let lambda1_adv = grid.adversary_ratio * lambda1 * t1_a / t1_h;
        for &t1 in &points {
            for &t1_adv in &points {
                let cfg = RaceConfig {
                    lambda1,
                    lambda2: lambda1 * t2_h / t1_h,
                    lambda1_adv,
                    lambda2_adv: lambda1_adv * t2_a / t1_a,
                    target1: t1_h,
                    target2: t2_h,
                    target1_adv: t1_a,
                    target2_adv: t2_a,
                    t: grid.t,
                    t1,
                    t1_adv,
                };
                cfg.validate()?;
                let ln = ln_bound_t(m0_of(&cfg)?, &cfg)?;
                if best.as_ref().is_none_or(|b| ln > b.ln_bound) {
                    best = Some(WorstCaseBound {
                        bound: ln.exp(),
                        ln_bound: ln,
                        argmax: cfg,
                    });
                }
            }
        }
    }
    best.ok_or(BoundsError::EmptyGrid)
}
