//! Staying up to date after a completed run: the verifier keeps a short
//! window of headers (the last finalized header, the k headers above it and
//! any live forks) plus an MMR accumulator over everything finalized.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{BlockHeader, LinkFailureKind};
use crate::digest::Hash32;
use crate::mmr::MmrAccumulator;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum SyncRejection {
    #[error("parent is not in the verifier's window")]
    UnknownParent,
    #[error("header height does not follow its parent")]
    BadHeight,
    #[error("header digest does not meet its target")]
    BadPow,
    #[error("header already in the window")]
    Duplicate,
}

impl From<SyncRejection> for LinkFailureKind {
    fn from(r: SyncRejection) -> Self {
        match r {
            SyncRejection::BadPow => LinkFailureKind::Pow,
            SyncRejection::BadHeight => LinkFailureKind::Height,
            _ => LinkFailureKind::Linkage,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifierState {
    k: u64,
    /// Window headers, always including `last_finalized` first.
    window: Vec<BlockHeader>,
    accumulator: MmrAccumulator,
    last_finalized: BlockHeader,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyncOutcome {
    pub state: VerifierState,
    pub rejected: Option<SyncRejection>,
    /// Headers finalized by this step, oldest first.
    pub finalized: Vec<BlockHeader>,
}

impl VerifierState {
    /// `accumulator` must cover headers `[0, last_finalized.height]`.
    pub fn new(k: u64, last_finalized: BlockHeader, accumulator: MmrAccumulator) -> Self {
        VerifierState {
            k,
            window: vec![last_finalized],
            accumulator,
            last_finalized,
        }
    }

    /// Seed from a finality proof's tail: the header `k` below the tip is
    /// finalized and the rest of the slice stays in the window.
    pub fn from_window(
        k: u64,
        headers: &[BlockHeader],
        accumulator: MmrAccumulator,
    ) -> Option<Self> {
        let fin = headers.len().checked_sub(k as usize + 1)?;
        Some(VerifierState {
            k,
            window: headers[fin..].to_vec(),
            accumulator,
            last_finalized: headers[fin],
        })
    }

    pub fn window(&self) -> &[BlockHeader] {
        &self.window
    }

    pub fn accumulator(&self) -> &MmrAccumulator {
        &self.accumulator
    }

    pub fn last_finalized(&self) -> &BlockHeader {
        &self.last_finalized
    }

    /// Number of window headers not on the best branch.
    pub fn fork_headers(&self) -> usize {
        self.window.len() - self.best_branch().len()
    }

    fn find(&self, digest: &Hash32) -> Option<&BlockHeader> {
        self.window.iter().find(|h| h.digest() == *digest)
    }

    /// Best tip: greatest height, earliest arrival on ties.
    fn best_tip(&self) -> &BlockHeader {
        let mut best = &self.window[0];
        for h in &self.window[1..] {
            if h.height > best.height {
                best = h;
            }
        }
        best
    }

    /// Headers from `last_finalized` to the best tip.
    pub fn best_branch(&self) -> Vec<BlockHeader> {
        let mut branch = vec![*self.best_tip()];
        while branch.last().unwrap().height > self.last_finalized.height {
            let parent = self
                .find(&branch.last().unwrap().prev_hash)
                .expect("window headers descend from the finalized header");
            branch.push(*parent);
        }
        branch.reverse();
        branch
    }

    fn descends_from(&self, header: &BlockHeader, ancestor: &Hash32) -> bool {
        let mut cur = *header;
        loop {
            if cur.digest() == *ancestor {
                return true;
            }
            match self.find(&cur.prev_hash) {
                Some(p) => cur = *p,
                None => return false,
            }
        }
    }
}

/// Accept one header. Rejections leave the state unchanged.
pub fn sync_step(state: &VerifierState, new_header: &BlockHeader) -> SyncOutcome {
    let reject = |r| SyncOutcome {
        state: state.clone(),
        rejected: Some(r),
        finalized: Vec::new(),
    };
    if state.window.contains(new_header) {
        return reject(SyncRejection::Duplicate);
    }
    let Some(parent) = state.find(&new_header.prev_hash) else {
        return reject(SyncRejection::UnknownParent);
    };
    if parent.height + 1 != new_header.height {
        return reject(SyncRejection::BadHeight);
    }
    if !new_header.meets_target() {
        return reject(SyncRejection::BadPow);
    }

    let mut next = state.clone();
    next.window.push(*new_header);
    let mut finalized = Vec::new();
    loop {
        let branch = next.best_branch();
        // branch[0] is already finalized; depth-k finalization of branch[1].
        if branch.len() <= next.k as usize + 1 {
            break;
        }
        let newly = branch[1];
        next.accumulator.push(&newly.digest());
        next.last_finalized = newly;
        finalized.push(newly);
        let anchor = newly.digest();
        let snapshot = next.clone();
        next.window
            .retain(|h| h.height >= newly.height && snapshot.descends_from(h, &anchor));
    }
    SyncOutcome {
        state: next,
        rejected: None,
        finalized,
    }
}
