use lightsync::bounds::{
    candidates_miss_prob, expected_discovery_headers, invalid_root_vote_tail, solve_alpha,
    solve_beta, solve_challenge_period, SolveMethod,
};
use serde_json::json;

use super::{from_bounds, load_config, parse_epsilon, parse_fraction};
use crate::args::{MethodArg, ParamsArgs};
use crate::{config_err, CliError};

pub fn run(a: &ParamsArgs) -> Result<serde_json::Value, CliError> {
    let file = load_config(a.config.as_deref())?;
    let has_security = file.security.is_some();
    let mut sec = file.security.unwrap_or_default();
    if let Some(e) = &a.epsilon {
        sec.epsilon = parse_epsilon(e)?;
    }
    if let Some(k) = a.k {
        sec.k = k;
    }
    let m_a = match &a.adversary_fraction {
        Some(s) => Some(parse_fraction(s)?),
        None if has_security => Some(
            num_rational::BigRational::from_float(sec.m_a)
                .ok_or_else(|| config_err("M_a is not finite"))?,
        ),
        None => None,
    };
    if let Some(m) = &m_a {
        sec.m_a = lightsync::bounds::to_f64(m);
    }
    sec.validate().map_err(from_bounds)?;
    if !(a.lambda > 0.0 && a.lambda.is_finite()) {
        return Err(config_err("lambda must be positive"));
    }
    if !(0.0..1.0).contains(&a.adversary_ratio) {
        return Err(config_err("adversary ratio must lie in [0, 1)"));
    }

    let methods: &[SolveMethod] = match a.method {
        MethodArg::Chernoff => &[SolveMethod::Chernoff],
        MethodArg::Exact => &[SolveMethod::Exact],
        MethodArg::Both => &[SolveMethod::Chernoff, SolveMethod::Exact],
    };
    let mut periods = Vec::new();
    for &m in methods {
        let p = solve_challenge_period(sec.epsilon, a.lambda, a.adversary_ratio * a.lambda, m)
            .map_err(from_bounds)?;
        let proof_headers = (p.expected_headers.ceil() as u64).max(sec.k as u64 + 1);
        periods.push(json!({
            "method": p.method,
            "t": p.t,
            "expected_headers": p.expected_headers,
            "proof_headers": proof_headers,
            "failure": p.failure,
        }));
    }

    let mut out = json!({
        "command": "params",
        "epsilon": sec.epsilon,
        "lambda": a.lambda,
        "adversary_ratio": a.adversary_ratio,
        "k": sec.k,
        "challenge_period": periods,
    });
    if let Some(m) = m_a {
        let alpha = solve_alpha(sec.epsilon, &m, a.cap).map_err(from_bounds)?;
        let beta = solve_beta(sec.epsilon, &m, a.cap).map_err(from_bounds)?;
        let tail = if sec.m_a > 0.0 {
            Some(invalid_root_vote_tail(&m, alpha).map_err(from_bounds)?)
        } else {
            None
        };
        out["velvet"] = json!({
            "M_a": m.to_string(),
            "alpha": alpha,
            "beta": beta,
            "candidates_miss_prob": candidates_miss_prob(&m, beta).map_err(from_bounds)?,
            "vote_tail": tail,
            "upgraded_fraction": sec.upgraded_fraction,
            "expected_discovery_headers": expected_discovery_headers(alpha, beta, sec.upgraded_fraction),
        });
    }
    Ok(out)
}
