use std::time::Instant;

use lightsync::bounds::{
    bound_t, candidates_miss_prob, exact_race_failure, invalid_root_vote_tail, m0_of, to_f64,
    RaceConfig,
};
use lightsync::incentive::create_query_transaction;
use lightsync::simnet::{
    run_challenge_race, simulate_races, stream, substream, velvet_discovery_trial,
    DifficultySchedule, MmrStrategy, PopulationConfig, RaceTally, SimConfig, TargetChange,
    VelvetOutcome, VelvetTrial, ADVERSARY_PROVER,
};
use lightsync::Target;
use num_rational::BigRational;
use rayon::prelude::*;
use serde_json::json;

use super::{from_bounds, from_sim, load_config, parse_fraction, to_value};
use crate::args::{SimMode, SimulateArgs, Strategy};
use crate::report::{wilson_interval, RunReport};
use crate::{config_err, CliError, SEED_ENV};

/// Per-trial outcomes are included by default up to this many trials.
const PER_TRIAL_LIMIT: u64 = 1000;
/// Velvet histories are mined at this desk target unless overridden.
const VELVET_TARGET_LOG2: u32 = 252;
const DEFAULT_BETA: u32 = 7;
const QUERY_PAYLOAD: &[u8] = b"light-client query";
const QUERY_SERVICE_FEE: u64 = 1_000;
const QUERY_TX_FEE: u64 = 2_000;

fn env_seed() -> Result<Option<u64>, CliError> {
    match std::env::var(SEED_ENV) {
        Ok(v) => {
            v.trim().parse().map(Some).map_err(|_| {
                config_err(format!("{SEED_ENV} must be an unsigned integer, got {v:?}"))
            })
        }
        Err(_) => Ok(None),
    }
}

fn strategy(s: Strategy) -> MmrStrategy {
    match s {
        Strategy::AlwaysInvalidRoot => MmrStrategy::AlwaysInvalidRoot,
        Strategy::AlwaysValidRoot => MmrStrategy::AlwaysValidRoot,
        Strategy::AcceptOwnRejectHonest => MmrStrategy::AcceptOwnRejectHonest,
    }
}

struct Setup {
    pop: PopulationConfig,
    sim: SimConfig,
    beta: u32,
    m_a: BigRational,
    velvet_target_log2: u32,
}

fn setup(a: &SimulateArgs) -> Result<Setup, CliError> {
    let file = load_config(a.config.as_deref())?;
    let mut pop = file.population.clone().unwrap_or_default();
    let mut sim = file.sim.clone().unwrap_or_default();
    let sec = file.security.clone();

    sim.seed = match (a.seed, file.sim_seed_set, env_seed()?) {
        (Some(s), _, _) => s,
        (None, true, _) => sim.seed,
        (None, false, Some(s)) => s,
        (None, false, None) => 0,
    };

    let mut beta = DEFAULT_BETA;
    let mut m_a = BigRational::new(1.into(), 3.into());
    if let Some(sec) = &sec {
        pop.alpha = sec.alpha;
        beta = sec.beta;
        pop.upgraded_fraction = sec.upgraded_fraction;
        m_a = BigRational::from_float(sec.m_a).ok_or_else(|| config_err("M_a is not finite"))?;
    }
    if let Some(v) = a.lambda {
        pop.lambda_honest = v;
    }
    if let Some(v) = a.adversary_ratio {
        pop.adversary_ratio = v;
    }
    if let Some(v) = a.alpha {
        pop.alpha = v;
    }
    if let Some(v) = a.beta {
        beta = v;
    }
    if let Some(v) = a.upgraded_fraction {
        pop.upgraded_fraction = v;
    }
    if let Some(s) = &a.adversary_fraction {
        m_a = parse_fraction(s)?;
    }
    let pop_sets_honest = file.population.as_ref().is_some_and(|p| {
        p.upgraded_honest_fraction != PopulationConfig::default().upgraded_honest_fraction
    });
    if sec.is_none() && a.adversary_fraction.is_none() && pop_sets_honest {
        m_a = BigRational::from_float(1.0 - pop.upgraded_honest_fraction)
            .ok_or_else(|| config_err("upgraded_honest_fraction is not finite"))?;
    } else {
        pop.upgraded_honest_fraction = 1.0 - to_f64(&m_a);
    }
    if let Some(s) = a.strategy {
        pop.adversary_mmr_strategy = strategy(s);
    }
    if let Some(v) = a.delta {
        sim.delta = v;
    }
    if let Some(v) = a.k {
        sim.k = v;
    }
    if let Some(v) = a.inclusion_delay {
        sim.inclusion_delay = v;
    }
    if let Some(v) = a.challenge_period {
        sim.challenge_period = v;
    }
    if let Some(v) = a.lambda_t {
        if !(v >= 0.0 && v.is_finite()) {
            return Err(config_err("lambda_t must be non-negative"));
        }
        sim.challenge_period = v / pop.lambda_honest;
    }
    let mut velvet_target_log2 = VELVET_TARGET_LOG2;
    if let Some(e) = a.target_log2 {
        sim.difficulty_schedule = DifficultySchedule::constant(e);
        velvet_target_log2 = e;
    }
    pop.validate().map_err(from_sim)?;
    sim.validate().map_err(from_sim)?;
    if a.trials == 0 {
        return Err(config_err("trials must be at least 1"));
    }
    if beta == 0 {
        return Err(config_err("beta must be at least 1"));
    }
    if velvet_target_log2 > 255 {
        return Err(config_err("target exponent above 255"));
    }
    Ok(Setup {
        pop,
        sim,
        beta,
        m_a,
        velvet_target_log2,
    })
}

pub fn run(a: &SimulateArgs) -> Result<serde_json::Value, CliError> {
    let s = setup(a)?;
    let start = Instant::now();
    let mut report = match a.mode {
        SimMode::Race => race(a, &s)?,
        SimMode::Velvet => velvet(&s, a.trials)?,
    };
    let show = a.per_trial || a.trials <= PER_TRIAL_LIMIT;
    if !show {
        report.per_trial = None;
    }
    report.wall_time_s = start.elapsed().as_secs_f64();
    to_value(&report)
}

fn report(
    mode: &'static str,
    config: serde_json::Value,
    trials: u64,
    failures: u64,
    analytic: serde_json::Value,
    breakdown: serde_json::Value,
    per_trial: serde_json::Value,
) -> RunReport {
    RunReport {
        command: "simulate",
        version: env!("CARGO_PKG_VERSION"),
        mode,
        config,
        trials,
        failures,
        failure_rate: failures as f64 / trials as f64,
        ci95: wilson_interval(failures, trials),
        analytic,
        breakdown,
        per_trial: Some(per_trial),
        wall_time_s: 0.0,
    }
}

/// Relative target of a schedule entry against the honest starting target.
fn relative(c: &TargetChange, reference: u32) -> f64 {
    2f64.powi(c.target_log2 as i32 - reference as i32)
}

/// Bound on the race the provers actually run: the period up to the proof
/// cut-off, with rates scaled by target so mining power stays constant.
fn race_analytic(pop: &PopulationConfig, sim: &SimConfig) -> Result<serde_json::Value, CliError> {
    let t = (sim.challenge_period - 2.0 * sim.delta).max(0.0);
    if pop.adversary_ratio == 0.0 || t == 0.0 {
        return Ok(json!({ "t_effective": t, "bound": null, "exact": null }));
    }
    let sched = &sim.difficulty_schedule;
    let reference = sched.honest[0].target_log2;
    let lambda = pop.lambda_honest;
    let lambda_adv = pop.adversary_ratio * lambda;
    let split = |side: &[TargetChange], base: f64| {
        let first = &side[0];
        let second = side.get(1).unwrap_or(first);
        let change = side.get(1).map_or(t, |c| c.start.min(t));
        let (r1, r2) = (relative(first, reference), relative(second, reference));
        (base * r1, base * r2, r1, r2, change)
    };
    let (l1, l2, tt1, tt2, t1) = split(&sched.honest, lambda);
    let (a1, a2, ta1, ta2, t1a) = split(&sched.adversary, lambda_adv);
    let cfg = RaceConfig {
        lambda1: l1,
        lambda2: l2,
        lambda1_adv: a1,
        lambda2_adv: a2,
        target1: tt1,
        target2: tt2,
        target1_adv: ta1,
        target2_adv: ta2,
        t,
        t1,
        t1_adv: t1a,
    };
    let constant =
        sched.honest.len() == 1 && sched.adversary.len() == 1 && sched.honest == sched.adversary;
    let exact = constant.then(|| exact_race_failure(lambda, lambda_adv, t));
    let bound = match m0_of(&cfg) {
        Ok(m0) => Some(bound_t(m0, &cfg).map_err(from_bounds)?.min(1.0)),
        Err(_) => None,
    };
    Ok(json!({ "t_effective": t, "bound": bound, "exact": exact }))
}

fn race(a: &SimulateArgs, s: &Setup) -> Result<RunReport, CliError> {
    let tallies: Vec<RaceTally> = if a.full {
        let mut qrng = substream(s.sim.seed, 0, stream::QUERY);
        let query = create_query_transaction(
            QUERY_PAYLOAD,
            QUERY_SERVICE_FEE,
            QUERY_TX_FEE,
            s.sim.challenge_period,
            &mut qrng,
        )
        .map_err(|e| CliError::Internal(e.to_string()))?
        .tx;
        let races: Vec<_> = (0..a.trials)
            .into_par_iter()
            .map(|t| run_challenge_race(&s.pop, &s.sim, &query, t))
            .collect::<Result<_, _>>()
            .map_err(from_sim)?;
        if let Some(path) = &a.transcript {
            std::fs::write(path, races[0].transcript.to_jsonl())
                .map_err(|e| config_err(format!("cannot write {}: {e}", path.display())))?;
        }
        races.into_iter().map(|r| r.outcome).collect()
    } else {
        simulate_races(&s.pop, &s.sim, 0, a.trials).map_err(from_sim)?
    };
    let failures = tallies.iter().filter(|t| t.adversary_won).count() as u64;
    let adversary_wins = tallies
        .iter()
        .filter(|t| !t.tie && t.winner == Some(ADVERSARY_PROVER))
        .count();
    let ties = tallies.iter().filter(|t| t.tie).count();
    let no_proof = tallies
        .iter()
        .filter(|t| t.winner.is_none() && !t.tie)
        .count();
    let config = json!({
        "population": s.pop,
        "sim": s.sim,
        "full": a.full,
    });
    Ok(report(
        "race",
        config,
        a.trials,
        failures,
        race_analytic(&s.pop, &s.sim)?,
        json!({ "adversary_wins": adversary_wins, "ties": ties, "no_proof": no_proof }),
        to_value(&tallies)?,
    ))
}

fn velvet(s: &Setup, trials: u64) -> Result<RunReport, CliError> {
    let target =
        Target::pow2(s.velvet_target_log2).ok_or_else(|| config_err("bad target exponent"))?;
    let results: Vec<VelvetTrial> = (0..trials)
        .into_par_iter()
        .map(|t| velvet_discovery_trial(&s.pop, s.beta, target, s.sim.seed, t))
        .collect::<Result<_, _>>()
        .map_err(from_sim)?;
    let count = |o: VelvetOutcome| results.iter().filter(|r| r.outcome == o).count();
    let failures = results
        .iter()
        .filter(|r| r.outcome != VelvetOutcome::Found)
        .count() as u64;

    let miss = candidates_miss_prob(&s.m_a, s.beta).map_err(from_bounds)?;
    let tail = match s.pop.adversary_mmr_strategy {
        MmrStrategy::AlwaysValidRoot => None,
        _ => invalid_root_vote_tail(&s.m_a, s.pop.alpha).ok(),
    };
    let union = tail
        .as_ref()
        .map(|t| (miss + 2.0 * s.beta as f64 * t.exact_f64).min(1.0));
    let config = json!({
        "population": s.pop,
        "seed": s.sim.seed,
        "beta": s.beta,
        "M_a": s.m_a.to_string(),
        "target_log2": s.velvet_target_log2,
    });
    Ok(report(
        "velvet",
        config,
        trials,
        failures,
        json!({ "candidates_miss": miss, "vote_tail": tail, "union_bound": union }),
        json!({
            "found": count(VelvetOutcome::Found),
            "no_honest_candidate": count(VelvetOutcome::NoHonestCandidate),
            "vote_overwhelm": count(VelvetOutcome::VoteOverwhelm),
        }),
        to_value(&results)?,
    ))
}
