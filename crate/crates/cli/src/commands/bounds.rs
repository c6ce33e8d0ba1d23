use lightsync::bounds::{
    bound_t, candidates_miss_prob_exact, exact_race_failure, invalid_root_vote_tail, m0_of,
    proof_size_table, to_f64, worst_case_race_bound, RaceBoundGrid, RaceConfig, SizeModel,
    PROTOCOL_COMPARISON,
};
use serde_json::json;

use super::{from_bounds, parse_fraction, to_value};
use crate::args::BoundsArgs;
use crate::{config_err, CliError};

fn parse_pair(s: &str) -> Result<(f64, f64), CliError> {
    let bad = || {
        config_err(format!(
            "adversary target pair {s:?} is not of the form a:b"
        ))
    };
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let a: f64 = a.trim().parse().map_err(|_| bad())?;
    let b: f64 = b.trim().parse().map_err(|_| bad())?;
    if !(a > 0.0 && b > 0.0) {
        return Err(bad());
    }
    Ok((a, b))
}

pub fn run(a: &BoundsArgs) -> Result<serde_json::Value, CliError> {
    if !(a.table1 || a.comparison || a.race || a.worst_case || a.candidates || a.votes) {
        return Err(config_err(
            "choose at least one of --table1, --comparison, --race, --worst-case, --candidates, --votes",
        ));
    }
    if a.header_bytes == 0 || a.proof_headers == 0 {
        return Err(config_err(
            "header bytes and proof headers must be positive",
        ));
    }
    if (a.race || a.worst_case) && !(a.lambda_t > 0.0 && (0.0..1.0).contains(&a.adversary_ratio)) {
        return Err(config_err(
            "need lambda_t > 0 and adversary ratio in [0, 1)",
        ));
    }
    let mut out = json!({ "command": "bounds" });

    if a.table1 {
        let model = SizeModel {
            header_bytes: a.header_bytes,
            expected_proof_headers: a.proof_headers,
        };
        out["table1"] = to_value(&proof_size_table(model, &a.chain_lengths))?;
    }
    if a.comparison {
        out["comparison"] = to_value(&PROTOCOL_COMPARISON)?;
    }
    if a.race {
        let cfg = RaceConfig::equal_targets(1.0, a.adversary_ratio, a.lambda_t);
        let exact = exact_race_failure(1.0, a.adversary_ratio, a.lambda_t);
        let (m0, bound) = if a.adversary_ratio > 0.0 {
            let m0 = m0_of(&cfg).map_err(from_bounds)?;
            (Some(m0), bound_t(m0, &cfg).map_err(from_bounds)?)
        } else {
            (None, exact)
        };
        out["race"] = json!({
            "adversary_ratio": a.adversary_ratio,
            "lambda_t": a.lambda_t,
            "m0": m0,
            "bound": bound,
            "exact": exact,
        });
    }
    if a.worst_case {
        let [t1, t2] = a.honest_targets[..] else {
            return Err(config_err("--honest-targets takes exactly two values"));
        };
        let grid = RaceBoundGrid {
            lambda: 1.0,
            target1: t1,
            target2: t2,
            adversary_ratio: a.adversary_ratio,
            adversary_targets: a
                .adversary_targets
                .iter()
                .map(|s| parse_pair(s))
                .collect::<Result<_, _>>()?,
            t: a.lambda_t,
            resolution: a.resolution,
        };
        out["worst_case"] = to_value(&worst_case_race_bound(&grid).map_err(from_bounds)?)?;
    }
    if a.candidates || a.votes {
        let m_a = parse_fraction(&a.adversary_fraction)?;
        if a.candidates {
            let p = candidates_miss_prob_exact(&m_a, a.beta).map_err(from_bounds)?;
            out["candidates"] = json!({
                "M_a": m_a.to_string(),
                "beta": a.beta,
                "probability": to_f64(&p),
                "exact": p.to_string(),
            });
        }
        if a.votes {
            let mut v = to_value(&invalid_root_vote_tail(&m_a, a.alpha).map_err(from_bounds)?)?;
            v["M_a"] = json!(m_a.to_string());
            out["votes"] = v;
        }
    }
    Ok(out)
}
