//! Exact equal-target race probability and the challenge-period solver.

use serde::{Deserialize, Serialize};

use super::chernoff::{bound_t, m0_of, BoundsError, RaceConfig};

/// Relative truncation error allowed in [`exact_race_failure`].
pub const TRUNCATION_REL_ERR: f64 = 1e-3;

/// `ln Pr{X >= x}` upper bound for `X ~ Poisson(mu)` and `x > mu`.
fn ln_poisson_upper_tail(mu: f64, x: f64) -> f64 {
    if mu <= 0.0 {
        return f64::NEG_INFINITY;
    }
    -mu + x - x * (x / mu).ln()
}

/// Poisson pmf for `0..=n_max`, computed through logarithms.
fn poisson_pmf(mu: f64, n_max: usize) -> Vec<f64> {
    if mu <= 0.0 {
        let mut v = vec![0.0; n_max + 1];
        v[0] = 1.0;
        return v;
    }
    let ln_mu = mu.ln();
    let mut ln_p = -mu;
    let mut out = Vec::with_capacity(n_max + 1);
    out.push(ln_p.exp());
    for n in 1..=n_max {
        ln_p += ln_mu - (n as f64).ln();
        out.push(ln_p.exp());
    }
    out
}

/// `Pr{N' >= N}` for independent `N ~ Poisson(lambda t)`,
/// `N' ~ Poisson(lambda' t)`. Ties count as adversary wins.
///
/// Truncated double sum; the cut-off grows until the Chernoff bound on the
/// discarded mass is below [`TRUNCATION_REL_ERR`] of the result.
pub fn exact_race_failure(lambda: f64, lambda_adv: f64, t: f64) -> f64 {
    let mu = lambda * t;
    let mu_adv = lambda_adv * t;
    if mu <= 0.0 {
        return 1.0;
    }
    let top = mu.max(mu_adv);
    let mut n_max = (top + 12.0 * top.sqrt() + 40.0).ceil() as usize;
    loop {
        let p = poisson_pmf(mu, n_max);
        let p_adv = poisson_pmf(mu_adv, n_max);
        // tail[n] = Pr{n <= N' <= n_max}
        let mut tail = vec![0.0; n_max + 2];
        for n in (0..=n_max).rev() {
            tail[n] = tail[n + 1] + p_adv[n];
        }
        let value: f64 = (0..=n_max).map(|n| p[n] * tail[n]).sum();
        let x = (n_max + 1) as f64;
        let discarded = ln_poisson_upper_tail(mu, x).exp() + ln_poisson_upper_tail(mu_adv, x).exp();
        if discarded <= TRUNCATION_REL_ERR * value || value == 0.0 || n_max > 1 << 22 {
            return value;
        }
        n_max *= 2;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    /// The closed-form bound at `m0`.
    Chernoff,
    /// [`exact_race_failure`].
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChallengePeriod {
    pub method: SolveMethod,
    /// Seconds.
    pub t: f64,
    /// Expected honest headers in the period, `lambda * t`.
    pub expected_headers: f64,
    /// Failure probability at `t` under the chosen method.
    pub failure: f64,
}

/// Failure probability of an equal-target race under `method`.
pub fn race_failure(
    lambda: f64,
    lambda_adv: f64,
    t: f64,
    method: SolveMethod,
) -> Result<f64, BoundsError> {
    match method {
        SolveMethod::Exact => Ok(exact_race_failure(lambda, lambda_adv, t)),
        SolveMethod::Chernoff => {
            if t == 0.0 {
                return Ok(1.0);
            }
            let cfg = RaceConfig::equal_targets(lambda, lambda_adv, t);
            bound_t(m0_of(&cfg)?, &cfg).map(|b| b.min(1.0))
        }
    }
}

/// Smallest `t` (to bisection precision) with failure at most `epsilon`,
/// for equal honest and adversary targets.
pub fn solve_challenge_period(
    epsilon: f64,
    lambda: f64,
    lambda_adv: f64,
    method: SolveMethod,
) -> Result<ChallengePeriod, BoundsError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(BoundsError::Epsilon(epsilon));
    }
    if !(lambda > 0.0 && lambda_adv >= 0.0 && lambda_adv < lambda) {
        return Err(BoundsError::NoHonestMajority);
    }
    let fail = |t: f64| race_failure(lambda, lambda_adv, t, method);
    let mut hi = 1.0 / lambda;
    while fail(hi)? > epsilon {
        hi *= 2.0;
        if hi > 1e12 / lambda {
            return Err(BoundsError::SearchCap(hi as u64));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if fail(mid)? <= epsilon {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(ChallengePeriod {
        method,
        t: hi,
        expected_headers: lambda * hi,
        failure: fail(hi)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Naive double sum with factorials in f64; fine for small means.
    fn brute(mu: f64, mu_adv: f64) -> f64 {
        let pmf = |m: f64, n: u32| {
            let mut f = 1.0;
            for i in 1..=n {
                f *= i as f64;
            }
            (-m).exp() * m.powi(n as i32) / f
        };
        let mut total = 0.0;
        for n in 0..120 {
            for j in n..120 {
                total += pmf(mu, n) * pmf(mu_adv, j);
            }
        }
        total
    }

    #[test]
    fn zero_adversary_closed_form() {
        for lt in [0.5, 3.0, 20.0] {
            let v = exact_race_failure(1.0, 0.0, lt);
            assert!((v - (-lt).exp()).abs() <= 1e-12 * v.max(1e-300) + 1e-300);
        }
    }

    #[test]
    fn small_mu_series() {
        // Pr{N' >= N} = 1 - mu + O(mu^2) for equal rates.
        let mu = 0.01;
        let v = exact_race_failure(1.0, 1.0, mu);
        assert!((v - brute(mu, mu)).abs() < 1e-12);
        assert!((v - (1.0 - mu)).abs() < 2.0 * mu * mu);
    }

    #[test]
    fn matches_brute_force() {
        for (l, lp, t) in [
            (1.0, 0.5, 3.0),
            (2.0, 1.5, 4.0),
            (1.0, 0.1, 10.0),
            (3.0, 0.0, 1.0),
        ] {
            let v = exact_race_failure(l, lp, t);
            let b = brute(l * t, lp * t);
            assert!(
                (v - b).abs() <= 1e-9 * b.max(1e-12),
                "{l} {lp} {t}: {v} vs {b}"
            );
        }
    }

    #[test]
    fn dominated_by_bound() {
        let v = exact_race_failure(1.0, 0.5, 20.0);
        let cfg = RaceConfig::equal_targets(1.0, 0.5, 20.0);
        assert!(v <= bound_t(m0_of(&cfg).unwrap(), &cfg).unwrap());
    }

    #[test]
    fn chernoff_solver_headline() {
        let s = solve_challenge_period(2f64.powi(-20), 1.0, 0.5, SolveMethod::Chernoff).unwrap();
        let analytic = 20.0 * 2f64.ln() / (1.5 - 2f64.sqrt());
        assert!((s.expected_headers - analytic).abs() < 1e-6);
        assert!((s.expected_headers - 161.6).abs() < 0.1);
    }

    #[test]
    fn exact_solver_round_trip() {
        let s = solve_challenge_period(0.5, 1.0, 0.5, SolveMethod::Exact).unwrap();
        assert!(s.failure <= 0.5);
        assert!(exact_race_failure(1.0, 0.5, s.t * (1.0 - 1e-6)) > 0.5);
        assert!(s.t < 5.0);
    }

    #[test]
    fn solver_rejects_bad_inputs() {
        assert!(solve_challenge_period(0.0, 1.0, 0.5, SolveMethod::Exact).is_err());
        assert!(solve_challenge_period(1.0, 1.0, 0.5, SolveMethod::Exact).is_err());
        assert!(solve_challenge_period(0.1, 1.0, 1.0, SolveMethod::Exact).is_err());
    }
}
