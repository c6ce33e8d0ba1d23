//! The challenge-period race between an honest prover on the public chain
//! and an adversary extending a private fork.
//!
//! Two paths share one arrival schedule. [`race_tally`] only counts blocks
//! and scores them, which is enough for large Monte-Carlo runs.
//! [`run_challenge_race`] mines every block, builds real finality proofs,
//! delivers them through the event loop and lets the verifier decide.

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    event_loop, mine_genesis, mine_next, sample_poisson_times, seconds_to_ns, stream, substream,
    BlockTemplate, Event, EventHandler, Phase, PopulationConfig, Scheduler, SimConfig, SimError,
    SimRng, TargetChange, Transcript,
};
use crate::chain::{CoinbaseData, FullChain};
use crate::digest::Target;
use crate::protocol::{
    create_proof, pick_winner, select_winner, sum_inverse_targets, Decision, FinalityProof,
    ProofError, ProverId, QueryTransaction,
};

pub const HONEST_PROVER: ProverId = ProverId(0);
pub const ADVERSARY_PROVER: ProverId = ProverId(1);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Side {
    Honest,
    Adversary,
}

impl Side {
    fn prover(self) -> ProverId {
        match self {
            Side::Honest => HONEST_PROVER,
            Side::Adversary => ADVERSARY_PROVER,
        }
    }

    fn idx(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Arrival {
    pub time_ns: u64,
    pub target: Target,
}

/// Block arrivals of both sides within the challenge period, which starts
/// at time zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RaceSchedule {
    pub honest: Vec<Arrival>,
    pub adversary: Vec<Arrival>,
    /// When provers freeze their proofs: `2 delta` before the deadline.
    pub cutoff_ns: u64,
    pub deadline_ns: u64,
    pub delta_ns: u64,
}

impl RaceSchedule {
    fn side(&self, side: Side) -> &[Arrival] {
        match side {
            Side::Honest => &self.honest,
            Side::Adversary => &self.adversary,
        }
    }

    /// Blocks a prover has when it builds its proof.
    pub fn blocks_by_cutoff(&self, side: Side) -> usize {
        self.side(side)
            .iter()
            .take_while(|a| a.time_ns <= self.cutoff_ns)
            .count()
    }
}

/// Arrivals under a piecewise-constant target. Mining power is fixed, so
/// the rate scales with the target: `rate(T) = base_rate * T / reference`.
fn side_arrivals(
    changes: &[TargetChange],
    base_rate: f64,
    reference_log2: u32,
    period: f64,
    rng: &mut SimRng,
) -> Result<Vec<Arrival>, SimError> {
    let mut out = Vec::new();
    for (i, c) in changes.iter().enumerate() {
        let end = changes.get(i + 1).map_or(period, |n| n.start);
        let rate = base_rate * 2f64.powi(c.target_log2 as i32 - reference_log2 as i32);
        let target = c.target();
        for s in sample_poisson_times(rate, (end - c.start).max(0.0), rng)? {
            out.push(Arrival {
                time_ns: seconds_to_ns(c.start + s),
                target,
            });
        }
    }
    Ok(out)
}

pub fn race_schedule(
    pop: &PopulationConfig,
    sim: &SimConfig,
    trial: u64,
) -> Result<RaceSchedule, SimError> {
    pop.validate()?;
    sim.validate()?;
    let sched = &sim.difficulty_schedule;
    let reference = sched.honest[0].target_log2;
    let period = sim.challenge_period;
    let honest = side_arrivals(
        &sched.honest,
        pop.lambda_honest,
        reference,
        period,
        &mut substream(sim.seed, trial, stream::HONEST_ARRIVALS),
    )?;
    let adversary = side_arrivals(
        &sched.adversary,
        pop.adversary_ratio * pop.lambda_honest,
        reference,
        period,
        &mut substream(sim.seed, trial, stream::ADVERSARY_ARRIVALS),
    )?;
    let deadline_ns = seconds_to_ns(period);
    let delta_ns = seconds_to_ns(sim.delta);
    Ok(RaceSchedule {
        honest,
        adversary,
        cutoff_ns: deadline_ns.saturating_sub(2 * delta_ns),
        deadline_ns,
        delta_ns,
    })
}

/// Per-trial result, identical between the fast and the full path.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RaceTally {
    pub trial: u64,
    /// Blocks mined in the period up to the proof cut-off.
    pub honest_blocks: u32,
    pub adversary_blocks: u32,
    pub winner: Option<ProverId>,
    pub tie: bool,
    /// The honest prover did not win outright: the adversary won, the top
    /// score was tied, or nobody delivered a valid proof.
    pub adversary_won: bool,
}

impl RaceTally {
    fn from_decision(
        trial: u64,
        schedule: &RaceSchedule,
        winner: Option<ProverId>,
        tie: bool,
    ) -> Self {
        RaceTally {
            trial,
            honest_blocks: schedule.blocks_by_cutoff(Side::Honest) as u32,
            adversary_blocks: schedule.blocks_by_cutoff(Side::Adversary) as u32,
            winner,
            tie,
            adversary_won: tie || winner != Some(HONEST_PROVER),
        }
    }
}

/// The block index within the period that carries the query transaction.
fn inclusion_index(side: Side, sim: &SimConfig) -> usize {
    match side {
        Side::Honest => sim.inclusion_delay as usize,
        Side::Adversary => 0,
    }
}

/// Score each side as a valid proof would: `Σ 1/T` from the inclusion
/// block to the last block before the cut-off. A side with no inclusion
/// sends no proof.
pub fn race_tally(
    pop: &PopulationConfig,
    sim: &SimConfig,
    trial: u64,
) -> Result<RaceTally, SimError> {
    let schedule = race_schedule(pop, sim, trial)?;
    let mut scores: Vec<(ProverId, BigRational)> = Vec::with_capacity(2);
    for side in [Side::Honest, Side::Adversary] {
        let n = schedule.blocks_by_cutoff(side);
        let q = inclusion_index(side, sim);
        if n > q {
            let arrivals = &schedule.side(side)[q..n];
            scores.push((
                side.prover(),
                sum_inverse_targets(arrivals.iter().map(|a| &a.target)),
            ));
        }
    }
    let (winner, tie) = pick_winner(&scores);
    Ok(RaceTally::from_decision(trial, &schedule, winner, tie))
}

/// Fast-path tallies for `trials` consecutive trial ids, in order.
pub fn simulate_races(
    pop: &PopulationConfig,
    sim: &SimConfig,
    first_trial: u64,
    trials: u64,
) -> Result<Vec<RaceTally>, SimError> {
    (first_trial..first_trial + trials)
        .into_par_iter()
        .map(|t| race_tally(pop, sim, t))
        .collect()
}

#[derive(Debug, Clone)]
pub struct FullRace {
    pub outcome: RaceTally,
    pub decision: Decision,
    /// Proofs that reached the verifier in time.
    pub proofs: Vec<(ProverId, FinalityProof)>,
    pub honest_chain: FullChain,
    pub adversary_chain: FullChain,
    pub transcript: Transcript,
}

#[derive(Debug, Clone)]
enum RaceEvent {
    Block {
        side: Side,
        index: usize,
    },
    Cutoff {
        side: Side,
    },
    Deliver {
        side: Side,
        proof: Box<FinalityProof>,
    },
    Deadline,
}

struct RaceActors<'a> {
    sim: &'a SimConfig,
    schedule: &'a RaceSchedule,
    query: &'a QueryTransaction,
    query_bytes: Vec<u8>,
    chains: [FullChain; 2],
    grind: SimRng,
    received: Vec<(ProverId, FinalityProof)>,
    closed: bool,
    decision: Option<Decision>,
    error: Option<SimError>,
}

impl RaceActors<'_> {
    fn mine(
        &mut self,
        side: Side,
        index: usize,
        now: u64,
        transcript: &mut Transcript,
    ) -> Result<(), SimError> {
        let arrival = self.schedule.side(side)[index];
        let chain = &self.chains[side.idx()];
        let height = chain.len() as u64;
        let label = match side {
            Side::Honest => "honest",
            Side::Adversary => "adversary",
        };
        let mut txs = vec![format!("{label}:{height}").into_bytes()];
        let includes = index == inclusion_index(side, self.sim);
        if includes {
            txs.push(self.query_bytes.clone());
        }
        let coinbase = CoinbaseData::plain(0);
        let header = mine_next(
            chain.tip().expect("prefix present"),
            &BlockTemplate {
                txs: &txs,
                coinbase: &coinbase,
                target: arrival.target,
                timestamp: now,
            },
            &mut self.grind,
            self.sim.grind_budget,
        )?;
        transcript.record(
            now,
            "block-mined",
            serde_json::json!({
                "chain": label,
                "height": height,
                "digest": header.digest(),
                "includes_query": includes,
            }),
        );
        self.chains[side.idx()].push(header, txs, coinbase);
        Ok(())
    }

    fn cutoff(
        &mut self,
        side: Side,
        scheduler: &mut Scheduler<RaceEvent>,
        transcript: &mut Transcript,
    ) -> Result<(), SimError> {
        let now = scheduler.now_ns();
        match create_proof(&self.chains[side.idx()], self.query, self.sim.k as usize) {
            Ok(proof) => {
                transcript.record(
                    now,
                    "message-sent",
                    serde_json::json!({
                        "from": side.prover().0,
                        "headers": proof.headers.len(),
                        "tx_block_offset": proof.tx_block_offset,
                    }),
                );
                scheduler.after(
                    self.schedule.delta_ns,
                    Phase::Delivery,
                    RaceEvent::Deliver {
                        side,
                        proof: Box::new(proof),
                    },
                );
                Ok(())
            }
            Err(ProofError::NoInclusion) => {
                transcript.record(
                    now,
                    "no-proof",
                    serde_json::json!({ "from": side.prover().0, "reason": "query not included" }),
                );
                Ok(())
            }
            Err(e) => Err(e.into()),
        }
    }
}

impl EventHandler<RaceEvent> for RaceActors<'_> {
    fn handle(
        &mut self,
        event: Event<RaceEvent>,
        scheduler: &mut Scheduler<RaceEvent>,
        transcript: &mut Transcript,
    ) {
        if self.error.is_some() {
            return;
        }
        let now = event.time_ns;
        let result = match event.payload {
            RaceEvent::Block { side, index } => self.mine(side, index, now, transcript),
            RaceEvent::Cutoff { side } => self.cutoff(side, scheduler, transcript),
            RaceEvent::Deliver { side, proof } => {
                let on_time = !self.closed;
                transcript.record(
                    now,
                    "message-delivered",
                    serde_json::json!({ "from": side.prover().0, "included": on_time }),
                );
                if on_time {
                    self.received.push((side.prover(), *proof));
                }
                Ok(())
            }
            RaceEvent::Deadline => {
                self.closed = true;
                let decision = select_winner(&self.received, self.query, self.sim.k as usize);
                transcript.record(
                    now,
                    "timer-fired",
                    serde_json::json!({ "timer": "deadline", "decision": decision }),
                );
                self.decision = Some(decision);
                Ok(())
            }
        };
        if let Err(e) = result {
            self.error = Some(e);
        }
    }
}

/// Shared history: genesis plus `k + 1` honest blocks at the first honest
/// target, so either prover can pad a short proof.
fn mine_prefix(sim: &SimConfig, grind: &mut SimRng) -> Result<FullChain, SimError> {
    let target = sim.difficulty_schedule.honest[0].target();
    let coinbase = CoinbaseData::plain(0);
    let mut chain = FullChain::default();
    for height in 0..=sim.k as u64 + 1 {
        let txs = vec![format!("prefix:{height}").into_bytes()];
        let template = BlockTemplate {
            txs: &txs,
            coinbase: &coinbase,
            target,
            timestamp: 0,
        };
        let header = match chain.tip() {
            None => mine_genesis(&template, grind, sim.grind_budget)?,
            Some(tip) => mine_next(tip, &template, grind, sim.grind_budget)?,
        };
        chain.push(header, txs, coinbase.clone());
    }
    Ok(chain)
}

pub fn run_challenge_race(
    pop: &PopulationConfig,
    sim: &SimConfig,
    query: &QueryTransaction,
    trial: u64,
) -> Result<FullRace, SimError> {
    let schedule = race_schedule(pop, sim, trial)?;
    let mut grind = substream(sim.seed, trial, stream::GRIND);
    let prefix = mine_prefix(sim, &mut grind)?;

    let mut scheduler = Scheduler::new();
    for side in [Side::Honest, Side::Adversary] {
        for (index, a) in schedule.side(side).iter().enumerate() {
            scheduler.at(a.time_ns, Phase::Block, RaceEvent::Block { side, index });
        }
    }
    for side in [Side::Honest, Side::Adversary] {
        scheduler.at(
            schedule.cutoff_ns,
            Phase::Cutoff,
            RaceEvent::Cutoff { side },
        );
    }
    scheduler.at(schedule.deadline_ns, Phase::Deadline, RaceEvent::Deadline);

    let mut actors = RaceActors {
        sim,
        schedule: &schedule,
        query,
        query_bytes: query.serialize(),
        chains: [prefix.clone(), prefix],
        grind,
        received: Vec::new(),
        closed: false,
        decision: None,
        error: None,
    };
    let transcript = event_loop(scheduler, &mut actors);
    if let Some(e) = actors.error {
        return Err(e);
    }
    let decision = actors.decision.expect("deadline always fires");
    let [honest_chain, adversary_chain] = actors.chains;
    Ok(FullRace {
        outcome: RaceTally::from_decision(trial, &schedule, decision.winner, decision.tie),
        decision,
        proofs: actors.received,
        honest_chain,
        adversary_chain,
        transcript,
    })
}
