//! Seeded substreams and Poisson arrival sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::SimError;
use crate::digest::sha256;

pub type SimRng = ChaCha8Rng;

/// Stream ids. Each actor draws from its own ChaCha stream, so adding an
/// actor never shifts the draws of another.
pub mod stream {
    pub const HONEST_ARRIVALS: u64 = 0;
    pub const ADVERSARY_ARRIVALS: u64 = 1;
    pub const GRIND: u64 = 2;
    pub const VELVET_ORIGINS: u64 = 3;
    pub const QUERY: u64 = 4;
}

/// The generator for `(seed, trial, actor)`. The key is
/// `sha256(seed || trial)`; the actor selects the ChaCha stream.
pub fn substream(seed: u64, trial: u64, actor: u64) -> SimRng {
    let mut key = [0u8; 16];
    key[..8].copy_from_slice(&seed.to_be_bytes());
    key[8..].copy_from_slice(&trial.to_be_bytes());
    let mut rng = ChaCha8Rng::from_seed(sha256(&key).0);
    rng.set_stream(actor);
    rng
}

/// Arrival times of a rate-`rate` Poisson process on `[0, horizon)`.
pub fn sample_poisson_times(
    rate: f64,
    horizon: f64,
    rng: &mut impl Rng,
) -> Result<Vec<f64>, SimError> {
    if !(rate >= 0.0 && rate.is_finite()) || !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(SimError::InvalidConfig(format!(
            "poisson sampling needs rate >= 0 and horizon >= 0, got {rate} and {horizon}"
        )));
    }
    let mut out = Vec::new();
    if rate == 0.0 {
        return Ok(out);
    }
    let mut t = 0.0;
    loop {
        let gap: f64 = rng.sample(Exp1);
        let next = t + gap / rate;
        if next >= horizon {
            return Ok(out);
        }
        // A zero gap would break strict ordering; it has probability zero
        // but float rounding can produce it at large t.
        if next > t || out.is_empty() {
            out.push(next);
        }
        t = next;
    }
}

pub fn seconds_to_ns(s: f64) -> u64 {
    (s * 1e9).round() as u64
}

pub fn ns_to_seconds(ns: u64) -> f64 {
    ns as f64 / 1e9
}
