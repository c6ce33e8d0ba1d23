//! Finding the last valid MMR root under a velvet fork.
//!
//! The prover returns the shortest suffix ending at the last finalized
//! header that holds exactly `alpha + beta` upgraded headers. The first
//! `beta` upgraded headers are candidates; each is voted on by the `alpha`
//! upgraded headers that follow it. The verifier keeps candidates with more
//! than `floor(alpha / 2)` accept votes, takes the highest one, checks the
//! prover-supplied peaks against its root and extends it to the tip.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{validate_links, BlockHeader, CoinbaseData, FullChain};
use crate::digest::Hash32;
use crate::mmr::{bag_peaks, mmr_extend_root, MmrError, MmrStore};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmrDiscoveryProof {
    pub headers: Vec<BlockHeader>,
    pub coinbase_list: Vec<CoinbaseData>,
    pub upgraded_count: u64,
    /// MMR peaks over `[0, v)` for each candidate at height `v`, in
    /// candidate order, so the verifier can extend whichever root it picks.
    pub candidate_peaks: Vec<Vec<Hash32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiscoveryError {
    #[error("last finalized header is not in the prover's chain")]
    UnknownAnchor,
    #[error("only {found} upgraded headers up to the anchor, {needed} needed")]
    InsufficientUpgraded { found: usize, needed: usize },
    #[error("structural check {step} failed: {reason}")]
    Structural { step: u8, reason: String },
    #[error("no candidate received more than floor(alpha/2) accept votes")]
    NoValidCandidate,
    #[error("supplied peaks do not bag to the chosen root at height {height}")]
    PeakMismatch { height: u64 },
    #[error(transparent)]
    Mmr(#[from] MmrError),
}

impl DiscoveryError {
    fn step(step: u8, reason: impl Into<String>) -> Self {
        DiscoveryError::Structural {
            step,
            reason: reason.into(),
        }
    }
}

/// Build the discovery proof from an honest full node's chain and MMR store.
pub fn build_mmr_discovery(
    chain: &FullChain,
    store: &MmrStore,
    last_finalized: &BlockHeader,
    alpha: usize,
    beta: usize,
) -> Result<MmrDiscoveryProof, DiscoveryError> {
    let needed = alpha + beta;
    let f = chain
        .headers
        .get(last_finalized.height as usize)
        .filter(|h| *h == last_finalized)
        .map(|_| last_finalized.height as usize)
        .or_else(|| chain.headers.iter().position(|h| h == last_finalized))
        .ok_or(DiscoveryError::UnknownAnchor)?;

    let mut found = 0;
    let mut start = None;
    for i in (0..=f).rev() {
        if chain.coinbases[i].is_upgraded() {
            found += 1;
            if found == needed {
                start = Some(i);
                break;
            }
        }
    }
    let start = start.ok_or(DiscoveryError::InsufficientUpgraded { found, needed })?;

    let headers = chain.headers[start..=f].to_vec();
    let coinbase_list = chain.coinbases[start..=f].to_vec();
    let candidate_peaks = headers
        .iter()
        .zip(&coinbase_list)
        .filter(|(_, cb)| cb.is_upgraded())
        .take(beta)
        .map(|(h, _)| store.accumulator_at(h.height).map(|a| a.peaks().to_vec()))
        .collect::<Result<Vec<_>, _>>()?;

    Ok(MmrDiscoveryProof {
        headers,
        coinbase_list,
        upgraded_count: needed as u64,
        candidate_peaks,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateTally {
    pub height: u64,
    pub accept_votes: u32,
    pub valid: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscoveredRoot {
    /// MMR root over headers `[0, f]`.
    pub root: Hash32,
    /// Height of the candidate whose root was extended.
    pub anchor_height: u64,
    pub tallies: Vec<CandidateTally>,
}

/// Run the verifier's root search over a discovery proof.
///
/// Steps: (1) tail equals `last_finalized`; (2) exactly `alpha + beta`
/// upgraded headers; (3) linkage; (4) every coinbase matches its header's
/// commitment; then candidate selection, vote tally, peak check and
/// extension.
pub fn find_last_mmr(
    proof: &MmrDiscoveryProof,
    last_finalized: &BlockHeader,
    alpha: usize,
    beta: usize,
) -> Result<DiscoveredRoot, DiscoveryError> {
    let headers = &proof.headers;
    if headers.last() != Some(last_finalized) {
        return Err(DiscoveryError::step(
            1,
            "tail is not the last finalized header",
        ));
    }

    if proof.coinbase_list.len() != headers.len() {
        return Err(DiscoveryError::step(
            2,
            "coinbase list is not aligned with headers",
        ));
    }
    let upgraded: Vec<usize> = proof
        .coinbase_list
        .iter()
        .enumerate()
        .filter(|(_, cb)| cb.is_upgraded())
        .map(|(i, _)| i)
        .collect();
    if upgraded.len() != alpha + beta || proof.upgraded_count != (alpha + beta) as u64 {
        return Err(DiscoveryError::step(
            2,
            format!(
                "{} upgraded headers, expected {}",
                upgraded.len(),
                alpha + beta
            ),
        ));
    }

    if let Err(e) = validate_links(headers) {
        return Err(DiscoveryError::step(3, e.to_string()));
    }

    for (h, cb) in headers.iter().zip(&proof.coinbase_list) {
        if cb.commitment() != h.coinbase_commitment {
            return Err(DiscoveryError::step(
                4,
                format!(
                    "coinbase at height {} does not match its commitment",
                    h.height
                ),
            ));
        }
    }
    for &i in &upgraded {
        if proof.coinbase_list[i].alpha() != alpha {
            return Err(DiscoveryError::step(
                4,
                "vote buffer length differs from alpha",
            ));
        }
    }

    // Candidate c is voted on by upgraded headers c+1..=c+alpha; voter p
    // keeps that vote at bit alpha - (p - c).
    let threshold = (alpha / 2) as u32;
    let tallies: Vec<CandidateTally> = (0..beta)
        .map(|c| {
            let accept_votes = (c + 1..=c + alpha)
                .filter(|&p| proof.coinbase_list[upgraded[p]].vote_buffer[alpha - (p - c)])
                .count() as u32;
            CandidateTally {
                height: headers[upgraded[c]].height,
                accept_votes,
                valid: accept_votes > threshold,
            }
        })
        .collect();

    let chosen = (0..beta)
        .filter(|&c| tallies[c].valid)
        .max_by_key(|&c| tallies[c].height)
        .ok_or(DiscoveryError::NoValidCandidate)?;
    let v = upgraded[chosen];
    let anchor = &headers[v];
    let valid_root = proof.coinbase_list[v].mmr_root;

    let peaks = proof
        .candidate_peaks
        .get(chosen)
        .ok_or(DiscoveryError::PeakMismatch {
            height: anchor.height,
        })?;
    // The root inside block v commits to headers [0, v).
    match bag_peaks(peaks, anchor.height) {
        Ok(r) if r == valid_root => {}
        _ => {
            return Err(DiscoveryError::PeakMismatch {
                height: anchor.height,
            })
        }
    }

    let new_leaves: Vec<Hash32> = headers[v..].iter().map(BlockHeader::digest).collect();
    let root = mmr_extend_root(peaks, anchor.height, &new_leaves)?;
    Ok(DiscoveredRoot {
        root,
        anchor_height: anchor.height,
        tallies,
    })
}

/// Hard/soft-fork deployments: every finalized header's coinbase already
/// carries the root over all previous headers, so no vote search is needed.
pub fn native_root(
    last_finalized: &BlockHeader,
    coinbase: &CoinbaseData,
) -> Result<Hash32, DiscoveryError> {
    if coinbase.commitment() != last_finalized.coinbase_commitment {
        return Err(DiscoveryError::step(
            4,
            "coinbase does not match its commitment",
        ));
    }
    if !coinbase.is_upgraded() {
        return Err(DiscoveryError::step(
            2,
            "finalized header carries no MMR root",
        ));
    }
    Ok(coinbase.mmr_root)
}
