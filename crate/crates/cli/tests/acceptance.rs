//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so the lines are always shown.
//! Values labelled "oracle" are recomputed here from first principles
//! rather than taken from the library under test.

use std::panic::{self, AssertUnwindSafe};
use std::time::{Duration, Instant};

use lightsync::bounds::{
    bound_exponents, bound_t, candidates_miss_prob, candidates_miss_prob_exact, exact_race_failure,
    invalid_root_vote_tail, ln_bound_t, m0_of, proof_size_table, solve_challenge_period,
    vote_tail_exact, RaceConfig, SizeModel, SolveMethod,
};
use lightsync::chain::{CoinbaseData, FullChain};
use lightsync::mmr::{mmr_append, mmr_extend_root, mmr_remove_last, mmr_verify_inclusion};
use lightsync::protocol::{create_proof, select_winner, validate_proof, FinalityProof};
use lightsync::simnet::{
    mine_genesis, mine_next, sample_candidates_missed, stream, substream, BlockTemplate,
    PopulationConfig,
};
use lightsync::{Hash32, MmrAccumulator, MmrStore, ProverId, QueryTransaction, Target};
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;
use serde_json::Value;
use sha2::{Digest, Sha256};

type Check = fn() -> Result<String, String>;

fn main() {
    let criteria: [(&str, Duration, Check); 10] = [
        (
            "proof-size table",
            Duration::from_secs(1),
            proof_size_table_check,
        ),
        (
            "headline challenge period",
            Duration::from_secs(10),
            headline_period,
        ),
        (
            "race Monte-Carlo vs bound",
            Duration::from_secs(300),
            race_monte_carlo,
        ),
        (
            "candidate miss probability",
            Duration::from_secs(60),
            candidate_miss,
        ),
        ("vote tail", Duration::from_secs(10), vote_tail),
        (
            "end-to-end velvet discovery",
            Duration::from_secs(300),
            velvet_discovery,
        ),
        (
            "proof soundness fuzz",
            Duration::from_secs(300),
            proof_soundness,
        ),
        (
            "MMR oracle equivalence",
            Duration::from_secs(30),
            mmr_oracle,
        ),
        ("bound structure", Duration::from_secs(120), bound_structure),
        ("determinism", Duration::from_secs(120), determinism),
    ];
    let mut failed = 0;
    for (i, (name, limit, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result =
            panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| Err(panic_message(&e)));
        let elapsed = start.elapsed();
        let result = match result {
            Ok(d) if elapsed > *limit => Err(format!("{d}; over time limit {limit:?}")),
            r => r,
        };
        let secs = elapsed.as_secs_f64();
        match result {
            Ok(detail) => println!(
                "criterion {:>2} {name}: PASS ({detail}) [{secs:.2}s]",
                i + 1
            ),
            Err(detail) => {
                failed += 1;
                println!(
                    "criterion {:>2} {name}: FAIL ({detail}) [{secs:.2}s]",
                    i + 1
                );
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

fn panic_message(e: &Box<dyn std::any::Any + Send>) -> String {
    e.downcast_ref::<String>()
        .cloned()
        .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
        .unwrap_or_else(|| "panic".into())
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn cli(args: &[&str]) -> Result<Value, String> {
    let out = lightsync_cli::run(std::iter::once("lightsync").chain(args.iter().copied()));
    if out.code != 0 {
        return Err(format!(
            "`{}` exited {}: {}",
            args.join(" "),
            out.code,
            out.stderr.trim()
        ));
    }
    serde_json::from_str(&out.stdout)
        .map_err(|e| format!("bad JSON from `{}`: {e}", args.join(" ")))
}

fn num(v: &Value, path: &str) -> Result<f64, String> {
    v.pointer(path)
        .and_then(Value::as_f64)
        .ok_or_else(|| format!("missing number at {path}"))
}

fn third() -> BigRational {
    BigRational::new(1.into(), 3.into())
}

// ---------------------------------------------------------------- 1

fn proof_size_table_check() -> Result<String, String> {
    let v = cli(&["bounds", "--table1", "--header-bytes", "508"])?;
    let rows = v
        .pointer("/table1/rows")
        .and_then(Value::as_array)
        .ok_or("no table rows")?;
    let size = |proto: &str, n: u64| {
        rows.iter()
            .find(|r| r["protocol"] == proto && r["chain_length"] == n)
            .and_then(|r| r["proof_MB"].as_f64())
            .ok_or_else(|| format!("no {proto} row for {n}"))
    };
    for (n, mb) in [
        (1_000_000, 508.0),
        (10_000_000, 5080.0),
        (100_000_000, 50800.0),
    ] {
        let got = size("SPV", n)?;
        ensure(got == mb, || format!("SPV at {n}: {got} MB, want {mb}"))?;
    }
    let light: Vec<f64> = [1_000_000, 10_000_000, 100_000_000]
        .iter()
        .map(|&n| size("LightSync", n))
        .collect::<Result<_, _>>()?;
    ensure(light.windows(2).all(|w| w[0] == w[1]), || {
        format!("constant-size proof varies with n: {light:?}")
    })?;
    for headers in 130..=160 {
        let t = proof_size_table(
            SizeModel {
                header_bytes: 508,
                expected_proof_headers: headers,
            },
            &[1_000_000, 100_000_000],
        );
        for r in t.rows.iter().filter(|r| r.protocol == "LightSync") {
            ensure((0.065..=0.085).contains(&r.proof_mb), || {
                format!("{headers} headers give {} MB", r.proof_mb)
            })?;
        }
    }
    Ok(format!(
        "SPV 508/5080/50800 MB, constant proof {} MB",
        light[0]
    ))
}

// ---------------------------------------------------------------- 2

fn headline_period() -> Result<String, String> {
    let v = cli(&[
        "params",
        "--epsilon",
        "2^-20",
        "--adversary-ratio",
        "0.5",
        "--method",
        "both",
    ])?;
    let periods = v["challenge_period"].as_array().ok_or("no periods")?;
    let headers = |m: &str| {
        periods
            .iter()
            .find(|p| p["method"] == m)
            .and_then(|p| p["expected_headers"].as_f64())
            .ok_or_else(|| format!("no {m} result"))
    };
    let exact = headers("exact")?;
    let chernoff = headers("chernoff")?;
    ensure((exact - 140.0).abs() <= 0.25 * 140.0, || {
        format!("exact {exact} not within 25% of 140")
    })?;
    ensure((chernoff - 162.0).abs() <= 2.0, || {
        format!("chernoff {chernoff} not 162 +- 2")
    })?;
    Ok(format!("exact {exact:.2}, chernoff {chernoff:.2} headers"))
}

// ---------------------------------------------------------------- 3

fn race_at(bound: f64, trials: u64, seed: u64) -> Result<String, String> {
    let period = solve_challenge_period(bound, 1.0, 0.5, SolveMethod::Chernoff)
        .map_err(|e| e.to_string())?;
    let lt = format!("{}", period.t);
    let trials_s = trials.to_string();
    let seed_s = seed.to_string();
    let v = cli(&[
        "simulate",
        "--mode",
        "race",
        "--trials",
        &trials_s,
        "--seed",
        &seed_s,
        "--lambda-t",
        &lt,
        "--adversary-ratio",
        "0.5",
    ])?;
    let analytic = num(&v, "/analytic/bound")?;
    ensure((analytic - bound).abs() <= 1e-6 * bound, || {
        format!("reported bound {analytic} != {bound}")
    })?;
    let rate = num(&v, "/failure_rate")?;
    let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
    ensure(rate <= bound + 3.0 * sigma, || {
        format!("win rate {rate} above {bound} + 3 sigma at lambda*t {lt}")
    })?;
    Ok(format!(
        "{rate:.5} <= {bound:.5} at lambda*t {:.2}",
        period.t
    ))
}

fn race_monte_carlo() -> Result<String, String> {
    let a = race_at(2f64.powi(-7), 1_000_000, 3)?;
    let b = race_at(2f64.powi(-4), 100_000, 4)?;
    Ok(format!("{a}; {b}"))
}

// ---------------------------------------------------------------- 4

fn candidate_miss() -> Result<String, String> {
    let exact = candidates_miss_prob_exact(&third(), 7).map_err(|e| e.to_string())?;
    ensure(exact == BigRational::new(1.into(), 2187.into()), || {
        format!("exact {exact} != 1/2187")
    })?;
    let p = candidates_miss_prob(&third(), 7).map_err(|e| e.to_string())?;
    ensure(p < 0.0005, || format!("{p} not below 0.0005"))?;
    ensure((p - 4.572e-4).abs() <= 1e-6, || {
        format!("{p} not 4.572e-4 +- 1e-6")
    })?;

    let pop = PopulationConfig {
        upgraded_honest_fraction: 2.0 / 3.0,
        ..PopulationConfig::default()
    };
    let n = 1_000_000u64;
    let mut rng = substream(4, 0, stream::VELVET_ORIGINS);
    let misses = (0..n)
        .filter(|_| sample_candidates_missed(&pop, 7, &mut rng))
        .count();
    let est = misses as f64 / n as f64;
    let sigma = (p * (1.0 - p) / n as f64).sqrt();
    ensure((est - p).abs() <= 3.0 * sigma, || {
        format!("Monte-Carlo {est} vs {p} beyond 3 sigma ({sigma})")
    })?;
    Ok(format!("exact {p:.4e}, Monte-Carlo {est:.4e} over {n}"))
}

// ---------------------------------------------------------------- 5

/// Oracle: enumerate every voter pattern with exact weights.
fn brute_tail(m_a: &BigRational, alpha: u32) -> BigRational {
    let m_h = BigRational::one() - m_a;
    let need = alpha.div_ceil(2);
    let mut total = BigRational::zero();
    for pattern in 0u32..1 << alpha {
        if pattern.count_ones() >= need {
            let mut w = BigRational::one();
            for bit in 0..alpha {
                w *= if pattern >> bit & 1 == 1 { m_a } else { &m_h };
            }
            total += w;
        }
    }
    total
}

fn vote_tail() -> Result<String, String> {
    let t = invalid_root_vote_tail(&third(), 80).map_err(|e| e.to_string())?;
    let exact = vote_tail_exact(&third(), 80);
    let closed = BigRational::from_float(t.closed_form).ok_or("closed form not finite")?;
    ensure(exact <= closed, || {
        format!("exact {} above closed form {}", t.exact_f64, t.closed_form)
    })?;
    ensure(t.closed_form <= 0.01, || {
        format!("closed form {} above 0.01", t.closed_form)
    })?;
    let mut cases = 0;
    for (n, d) in [(1, 3), (1, 4), (2, 5), (3, 7), (49, 100)] {
        let m = BigRational::new(n.into(), d.into());
        for alpha in 1..=12 {
            let lib = vote_tail_exact(&m, alpha);
            let oracle = brute_tail(&m, alpha);
            ensure(lib == oracle, || {
                format!("alpha {alpha}, M_a {m}: {lib} != {oracle}")
            })?;
            cases += 1;
        }
    }
    Ok(format!(
        "exact {:.3e} <= closed form {:.5} <= 0.01; {cases} brute-force matches",
        t.exact_f64, t.closed_form
    ))
}

// ---------------------------------------------------------------- 6

fn velvet_discovery() -> Result<String, String> {
    let v = cli(&[
        "simulate",
        "--mode",
        "velvet",
        "--trials",
        "1000",
        "--seed",
        "6",
        "--alpha",
        "80",
        "--beta",
        "7",
        "--adversary-fraction",
        "1/3",
    ])?;
    let trials = v["per_trial"].as_array().ok_or("no per-trial outcomes")?;
    ensure(trials.len() == 1000, || {
        format!("{} trials reported", trials.len())
    })?;
    let mut found = 0;
    for t in trials {
        let valid: Vec<bool> = t["candidate_valid"]
            .as_array()
            .ok_or("no candidate flags")?
            .iter()
            .map(|b| b.as_bool().unwrap_or(false))
            .collect();
        match t["outcome"].as_str() {
            Some("found") => found += 1,
            Some("no-honest-candidate") => ensure(!valid.contains(&true), || {
                format!(
                    "trial {} misclassified: a valid candidate exists",
                    t["trial"]
                )
            })?,
            Some("vote-overwhelm") => ensure(valid.contains(&true), || {
                format!("trial {} misclassified: no valid candidate", t["trial"])
            })?,
            other => return Err(format!("unclassified outcome {other:?}")),
        }
    }
    let rate = found as f64 / trials.len() as f64;
    ensure(rate >= 0.99, || format!("honest root found in only {rate}"))?;
    Ok(format!("honest root in {found}/1000, failures classified"))
}

// ---------------------------------------------------------------- 7

const FUZZ_TARGET_LOG2: u32 = 248;

fn sha256d_oracle(bytes: &[u8]) -> [u8; 32] {
    Sha256::digest(Sha256::digest(bytes)).into()
}

fn hash_pair_oracle(l: &[u8; 32], r: &[u8; 32]) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update(l);
    h.update(r);
    h.finalize().into()
}

struct Cursor<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let s = self.buf.get(self.at..self.at.checked_add(n)?)?;
        self.at += n;
        Some(s)
    }

    fn u64(&mut self) -> Option<u64> {
        self.take(8)
            .map(|b| u64::from_be_bytes(b.try_into().unwrap()))
    }

    fn len(&mut self) -> Option<usize> {
        self.u64().and_then(|n| usize::try_from(n).ok())
    }
}

/// Oracle: decode the wire bytes by hand and apply every validity check.
fn oracle_accepts(bytes: &[u8], query: &[u8], k: usize) -> bool {
    oracle_decode_and_check(bytes, query, k).unwrap_or(false)
}

fn oracle_decode_and_check(bytes: &[u8], query: &[u8], k: usize) -> Option<bool> {
    const HL: usize = 152;
    let mut c = Cursor { buf: bytes, at: 0 };
    let n = c.len()?;
    if n.checked_mul(HL)? > bytes.len() {
        return None;
    }
    let headers: Vec<&[u8]> = (0..n).map(|_| c.take(HL)).collect::<Option<_>>()?;
    let q = c.u64()?;
    let index = c.u64()?;
    let leaf_len = c.len()?;
    let leaf = c.take(leaf_len)?;
    let sib_count = c.len()?;
    if sib_count > bytes.len() / 32 {
        return None;
    }
    let siblings: Vec<[u8; 32]> = (0..sib_count)
        .map(|_| c.take(32).map(|s| s.try_into().unwrap()))
        .collect::<Option<_>>()?;
    if c.at != bytes.len() {
        return None;
    }

    if n < k + 1 {
        return Some(false);
    }
    let field = |h: &[u8], from: usize| <[u8; 32]>::try_from(&h[from..from + 32]).unwrap();
    let height = |h: &[u8]| u64::from_be_bytes(h[0..8].try_into().unwrap());
    let mut prev_digest: Option<([u8; 32], u64)> = None;
    for h in &headers {
        let target = field(h, 72);
        if target == [0; 32] {
            return Some(false);
        }
        let digest = sha256d_oracle(h);
        if digest >= target {
            return Some(false);
        }
        if let Some((pd, ph)) = prev_digest {
            if ph.checked_add(1) != Some(height(h)) || field(h, 8) != pd {
                return Some(false);
            }
        }
        prev_digest = Some((digest, height(h)));
    }

    let Some(block) = usize::try_from(q).ok().and_then(|q| headers.get(q)) else {
        return Some(false);
    };
    if leaf != query {
        return Some(false);
    }
    let depth = siblings.len();
    if depth < 64 && index >> depth != 0 {
        return Some(false);
    }
    let mut cur: [u8; 32] = Sha256::digest(leaf).into();
    for (level, sib) in siblings.iter().enumerate() {
        cur = if index >> level & 1 == 1 {
            if *sib == cur {
                return Some(false);
            }
            hash_pair_oracle(sib, &cur)
        } else {
            hash_pair_oracle(&cur, sib)
        };
    }
    Some(cur == field(block, 40))
}

struct Scenario {
    query: QueryTransaction,
    chain: FullChain,
    k: usize,
    padded: bool,
}

fn mine_scenario(id: u64, k: usize, padded: bool) -> Scenario {
    let mut rng = substream(7, id, stream::QUERY);
    let mut grind = substream(7, id, stream::GRIND);
    let query = QueryTransaction::new(
        format!("query {id}").into_bytes(),
        Hash32::ZERO,
        10,
        20,
        600.0,
    );
    let (len, q) = if padded {
        let len = rng.random_range(k + 2..k + 12);
        let tail = rng.random_range(1..=k);
        (len, len - tail)
    } else {
        let len = rng.random_range(k + 2..k + 14);
        (len, rng.random_range(1..=len - (k + 1)))
    };
    let target = Target::pow2(FUZZ_TARGET_LOG2).unwrap();
    let cb = CoinbaseData::plain(0);
    let mut chain = FullChain::default();
    for h in 0..len {
        let n_tx = rng.random_range(1..7usize);
        let mut txs: Vec<Vec<u8>> = (0..n_tx)
            .map(|i| format!("tx {id}.{h}.{i}").into_bytes())
            .collect();
        if h == q {
            let at = rng.random_range(0..=txs.len());
            txs.insert(at, query.serialize());
        }
        let template = BlockTemplate {
            txs: &txs,
            coinbase: &cb,
            target,
            timestamp: h as u64 * 600,
        };
        let header = match chain.tip() {
            None => mine_genesis(&template, &mut grind, 1 << 24),
            Some(p) => mine_next(p, &template, &mut grind, 1 << 24),
        }
        .expect("grind budget");
        chain.push(header, txs, cb.clone());
    }
    Scenario {
        query,
        chain,
        k,
        padded,
    }
}

fn proof_soundness() -> Result<String, String> {
    const SCENARIOS: u64 = 1000;
    const MUTATIONS_PER: usize = 12;
    let (mut padded_count, mut mutations, mut still_valid) = (0, 0, 0);
    for id in 0..SCENARIOS {
        let (k, padded) = match id % 4 {
            0 => (0, false),
            1 => (6, false),
            _ => (6, true),
        };
        let s = mine_scenario(id, k, padded);
        let proof =
            create_proof(&s.chain, &s.query, s.k).map_err(|e| format!("scenario {id}: {e}"))?;
        ensure((proof.tx_block_offset > 0) == s.padded, || {
            format!("scenario {id}: padding branch not taken as planned")
        })?;
        padded_count += usize::from(s.padded);
        let query_bytes = s.query.serialize();
        let bytes = proof.to_bytes();
        ensure(validate_proof(&proof, &s.query, s.k), || {
            format!("honest proof {id} rejected")
        })?;
        ensure(oracle_accepts(&bytes, &query_bytes, s.k), || {
            format!("oracle rejects honest proof {id}")
        })?;

        let mut rng = substream(7, id, stream::HONEST_ARRIVALS);
        for _ in 0..MUTATIONS_PER {
            let bit = rng.random_range(0..bytes.len() * 8);
            let mut m = bytes.clone();
            m[bit / 8] ^= 1 << (bit % 8);
            mutations += 1;
            let decoded = FinalityProof::from_bytes(&m).ok();
            let lib_ok = decoded
                .as_ref()
                .is_some_and(|p| validate_proof(p, &s.query, s.k));
            let oracle_ok = oracle_accepts(&m, &query_bytes, s.k);
            ensure(lib_ok == oracle_ok, || {
                format!("scenario {id} bit {bit}: verifier {lib_ok}, oracle {oracle_ok}")
            })?;
            if let Some(p) = decoded.filter(|_| lib_ok) {
                // A flip that still yields a genuinely valid proof (a lucky
                // nonce, or a larger target on the tip) must not outscore the
                // original.
                still_valid += 1;
                let d = select_winner(
                    &[(ProverId(0), proof.clone()), (ProverId(1), p)],
                    &s.query,
                    s.k,
                );
                ensure(d.winner == Some(ProverId(0)), || {
                    format!("scenario {id} bit {bit}: mutated proof won")
                })?;
            }
        }
    }
    ensure(mutations >= 10_000, || {
        format!("only {mutations} mutations")
    })?;
    Ok(format!(
        "{SCENARIOS} scenarios ({padded_count} padded), {mutations} mutations, \
         {still_valid} still-valid flips never outscored the original"
    ))
}

// ---------------------------------------------------------------- 8

fn leaf_digest(i: u64) -> Hash32 {
    Hash32(Sha256::digest(format!("leaf {i}")).into())
}

/// Oracle: split the leaves into perfect subtrees by the binary expansion of
/// the count, hash each from scratch, bag right to left, bind the count.
fn oracle_root(leaves: &[Hash32]) -> [u8; 32] {
    fn subtree(leaves: &[Hash32]) -> [u8; 32] {
        if leaves.len() == 1 {
            return Sha256::digest(leaves[0].0).into();
        }
        let (l, r) = leaves.split_at(leaves.len() / 2);
        hash_pair_oracle(&subtree(l), &subtree(r))
    }
    let n = leaves.len();
    let mut peaks = Vec::new();
    let mut start = 0;
    for bit in (0..64).rev() {
        let size = 1usize << bit;
        if n & size != 0 {
            peaks.push(subtree(&leaves[start..start + size]));
            start += size;
        }
    }
    let mut fold = *peaks.last().unwrap();
    for p in peaks.iter().rev().skip(1) {
        fold = hash_pair_oracle(p, &fold);
    }
    let mut h = Sha256::new();
    h.update(fold);
    h.update((n as u64).to_be_bytes());
    h.finalize().into()
}

fn mmr_oracle() -> Result<String, String> {
    let leaves: Vec<Hash32> = (0..64).map(leaf_digest).collect();
    let store = MmrStore::from_leaves(&leaves);
    let mut acc = MmrAccumulator::new();
    let mut proofs = 0;
    for n in 1..=64usize {
        acc = mmr_append(&acc, &leaves[n - 1]);
        let expected = Hash32(oracle_root(&leaves[..n]));
        let root = acc.root().map_err(|e| e.to_string())?;
        ensure(root == expected, || {
            format!("append root differs at {n} leaves")
        })?;
        ensure(store.root_at(n as u64) == Ok(expected), || {
            format!("store root differs at {n}")
        })?;
        for (i, leaf) in leaves[..n].iter().enumerate() {
            let p = store.prove(i as u64, n as u64).map_err(|e| e.to_string())?;
            ensure(mmr_verify_inclusion(&expected, leaf, &p), || {
                format!("proof of leaf {i} in {n} fails")
            })?;
            ensure(
                !mmr_verify_inclusion(&expected, &leaf_digest(1000), &p),
                || format!("proof of leaf {i} in {n} accepts a foreign leaf"),
            )?;
            proofs += 1;
        }
        for v in 0..=n {
            let at_v = store.accumulator_at(v as u64).map_err(|e| e.to_string())?;
            let ext = mmr_extend_root(at_v.peaks(), v as u64, &leaves[v..n])
                .map_err(|e| e.to_string())?;
            ensure(ext == expected, || {
                format!("extend from {v} to {n} differs")
            })?;
        }
        let back = mmr_remove_last(&acc, &store).map_err(|e| e.to_string())?;
        ensure(
            back == MmrAccumulator::from_leaves(&leaves[..n - 1]),
            || format!("remove_last at {n} is not the {}-leaf accumulator", n - 1),
        )?;
        ensure(mmr_append(&back, &leaves[n - 1]) == acc, || {
            format!("round trip at {n} differs")
        })?;
    }
    let mut popped = store.clone();
    for n in (1..=64u64).rev() {
        popped.pop().map_err(|e| e.to_string())?;
        let mut again = popped.clone();
        again.append(&leaves[n as usize - 1]);
        ensure(
            again.accumulator() == MmrAccumulator::from_leaves(&leaves[..n as usize]),
            || format!("store pop/append round trip differs at {n}"),
        )?;
    }
    Ok(format!(
        "roots for 1..=64 leaves, {proofs} inclusion proofs, all splits"
    ))
}

// ---------------------------------------------------------------- 9

/// Oracle: `Pr{N' >= N}` for independent Poisson counts, summed directly.
fn race_oracle(mu: f64, mu_adv: f64) -> f64 {
    let top = (mu.max(mu_adv) + 40.0 * mu.max(mu_adv).sqrt() + 100.0) as usize;
    let pmf = |m: f64| {
        let mut p = vec![(-m).exp()];
        for n in 1..=top {
            let prev = p[n - 1];
            p.push(prev * m / n as f64);
        }
        p
    };
    let (p, pa) = (pmf(mu), pmf(mu_adv));
    let mut tail = 0.0;
    let mut total = 0.0;
    for n in (0..=top).rev() {
        tail += pa[n];
        total += p[n] * tail;
    }
    total
}

fn bound_structure() -> Result<String, String> {
    let ratios = [0.1, 0.2, 0.3, 0.4, 0.45, 0.49];
    let err = |e: lightsync::bounds::BoundsError| e.to_string();
    let mut checks = 0;
    for &r in &ratios {
        for lt in 1..=200 {
            let lt = lt as f64;
            let cfg = RaceConfig::equal_targets(1.0, r, lt);
            let bound = bound_t(m0_of(&cfg).map_err(err)?, &cfg).map_err(err)?;
            let exact = exact_race_failure(1.0, r, lt);
            let oracle = race_oracle(lt, r * lt);
            ensure(
                (exact - oracle).abs() <= 1e-9 * oracle.max(1e-300) + 1e-300,
                || format!("ratio {r}, lambda*t {lt}: exact {exact} vs oracle {oracle}"),
            )?;
            ensure(oracle <= bound, || {
                format!("ratio {r}, lambda*t {lt}: {oracle} > bound {bound}")
            })?;
            checks += 1;
        }
        let mut prev = f64::INFINITY;
        for i in 1..=400 {
            let cfg = RaceConfig::equal_targets(1.0, r, i as f64 * 0.5);
            let ln = ln_bound_t(m0_of(&cfg).map_err(err)?, &cfg).map_err(err)?;
            ensure(ln < 0.0 && ln < prev, || {
                format!("ratio {r}: bound not decreasing at step {i}")
            })?;
            prev = ln;
            checks += 1;
        }
        let cfg = RaceConfig::equal_targets(1.0, r, 50.0);
        let m0 = m0_of(&cfg).map_err(err)?;
        let steps = 30_000;
        let mut best = (0.0, f64::INFINITY);
        for i in 1..=steps {
            let m = 3.0 * m0 * i as f64 / steps as f64;
            let v = ln_bound_t(m, &cfg).map_err(err)?;
            if v < best.1 {
                best = (m, v);
            }
        }
        ensure((best.0 - m0).abs() <= 1e-3, || {
            format!("ratio {r}: grid minimum {} vs m0 {m0}", best.0)
        })?;
        checks += 1;
    }
    let mut rng = substream(9, 0, 0);
    for _ in 0..20_000 {
        let t1: f64 = rng.random_range(0.1..10.0);
        let t2 = t1 * rng.random_range(1.0..8.0);
        let t1a: f64 = rng.random_range(0.1..10.0);
        let t2a = t1a * rng.random_range(1.0..8.0);
        let lambda1: f64 = rng.random_range(0.01..5.0);
        let lambda1a = lambda1 * t1a / t1 * rng.random_range(0.01..0.99);
        let cfg = RaceConfig {
            lambda1,
            lambda2: lambda1 * t2 / t1,
            lambda1_adv: lambda1a,
            lambda2_adv: lambda1a * t2a / t1a,
            target1: t1,
            target2: t2,
            target1_adv: t1a,
            target2_adv: t2a,
            t: 1.0,
            t1: rng.random_range(0.0..1.0),
            t1_adv: rng.random_range(0.0..1.0),
        };
        let m: f64 = rng.random_range(1e-4..3.0);
        let (f1, f2, _) = bound_exponents(m, &cfg);
        let tol = 1e-12 * (lambda1 + lambda1a) * (1.0 + m.exp());
        ensure(f1 >= -tol && f2 >= -tol, || {
            format!("{cfg:?} m={m}: f1 {f1}, f2 {f2}")
        })?;
        checks += 1;
    }
    Ok(format!("{checks} checks, zero violations"))
}

// ---------------------------------------------------------------- 10

fn strip_wall_time(s: &str) -> String {
    let key = "\"wall_time_s\":";
    match s.find(key) {
        Some(at) => {
            let rest = &s[at + key.len()..];
            let end = rest.find([',', '}']).unwrap_or(rest.len());
            format!("{}{}", &s[..at], &rest[end..])
        }
        None => s.to_string(),
    }
}

fn determinism() -> Result<String, String> {
    let runs: [&[&str]; 4] = [
        &[
            "simulate",
            "--trials",
            "5000",
            "--seed",
            "10",
            "--lambda-t",
            "30",
        ],
        &[
            "simulate",
            "--trials",
            "10",
            "--seed",
            "10",
            "--lambda-t",
            "8",
            "--target-log2",
            "252",
            "--full",
        ],
        &[
            "simulate", "--mode", "velvet", "--trials", "50", "--seed", "10", "--alpha", "12",
            "--beta", "3",
        ],
        &[
            "simulate",
            "--trials",
            "2000",
            "--per-trial",
            "--seed",
            "11",
            "--delta",
            "30",
            "--lambda-t",
            "20",
        ],
    ];
    for args in runs {
        let run = || {
            let o = lightsync_cli::run(std::iter::once("lightsync").chain(args.iter().copied()));
            if o.code == 0 {
                Ok(strip_wall_time(&o.stdout))
            } else {
                Err(format!("`{}` failed: {}", args.join(" "), o.stderr.trim()))
            }
        };
        let (a, b) = (run()?, run()?);
        ensure(a == b, || {
            format!("`{}` is not reproducible", args.join(" "))
        })?;
    }
    let a = cli(&[
        "simulate",
        "--trials",
        "500",
        "--seed",
        "1",
        "--lambda-t",
        "10",
    ])?;
    let b = cli(&[
        "simulate",
        "--trials",
        "500",
        "--seed",
        "2",
        "--lambda-t",
        "10",
    ])?;
    ensure(a["per_trial"] != b["per_trial"], || {
        "different seeds gave identical trials".into()
    })?;
    Ok(format!("{} invocations byte-identical", runs.len()))
}
