//! Merkle Mountain Range over block-header digests.
//!
//! Leaves are header digests; a leaf node is `SHA-256(leaf)` and an interior
//! node is `SHA-256(left ‖ right)`. The accumulator keeps one peak per set
//! bit of the leaf count, left to right (tallest first). The root bags the
//! peaks right to left and then binds the leaf count:
//!
//! ```text
//! fold = H(p0 ‖ H(p1 ‖ … H(p[m-2] ‖ p[m-1])))
//! root = H(fold ‖ leaf_count as u64 BE)
//! ```
//!
//! A light verifier only ever holds an [`MmrAccumulator`]. Provers keep an
//! [`MmrStore`] with every interior node so they can produce inclusion
//! proofs and roll back the last leaf.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::digest::{hash_pair, sha256, Hash32};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MmrError {
    #[error("accumulator is empty")]
    Empty,
    #[error("leaf index {index} out of range for {count} leaves")]
    IndexOutOfRange { index: u64, count: u64 },
    #[error("{peaks} peaks do not match leaf count {count} (expected {expected})")]
    PeakCount {
        peaks: usize,
        count: u64,
        expected: u32,
    },
    #[error("accumulator does not match the node store at {0} leaves")]
    StoreMismatch(u64),
    #[error("malformed binary proof encoding")]
    Encoding,
}

pub fn leaf_node(leaf: &Hash32) -> Hash32 {
    sha256(leaf.as_bytes())
}

/// Right-to-left bagging with size binding. `peaks` must be non-empty.
pub fn bag_peaks(peaks: &[Hash32], leaf_count: u64) -> Result<Hash32, MmrError> {
    check_peaks(peaks, leaf_count)?;
    let mut iter = peaks.iter().rev();
    let mut acc = *iter.next().ok_or(MmrError::Empty)?;
    for p in iter {
        acc = hash_pair(p, &acc);
    }
    let mut h = Sha256::new();
    h.update(acc.0);
    h.update(leaf_count.to_be_bytes());
    Ok(Hash32(h.finalize().into()))
}

fn check_peaks(peaks: &[Hash32], leaf_count: u64) -> Result<(), MmrError> {
    let expected = leaf_count.count_ones();
    if peaks.len() != expected as usize {
        return Err(MmrError::PeakCount {
            peaks: peaks.len(),
            count: leaf_count,
            expected,
        });
    }
    Ok(())
}

/// Heights of the peaks for `leaf_count` leaves, left to right.
pub fn peak_heights(leaf_count: u64) -> Vec<u32> {
    (0..64u32)
        .rev()
        .filter(|h| leaf_count >> h & 1 == 1)
        .collect()
}

/// The verifier-side accumulator: leaf count plus peaks.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmrAccumulator {
    leaf_count: u64,
    peaks: Vec<Hash32>,
}

impl MmrAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_peaks(peaks: Vec<Hash32>, leaf_count: u64) -> Result<Self, MmrError> {
        check_peaks(&peaks, leaf_count)?;
        Ok(MmrAccumulator { leaf_count, peaks })
    }

    pub fn from_leaves<'a>(leaves: impl IntoIterator<Item = &'a Hash32>) -> Self {
        let mut acc = Self::new();
        for leaf in leaves {
            acc.push(leaf);
        }
        acc
    }

    pub fn leaf_count(&self) -> u64 {
        self.leaf_count
    }

    pub fn peaks(&self) -> &[Hash32] {
        &self.peaks
    }

    pub fn is_empty(&self) -> bool {
        self.leaf_count == 0
    }

    pub fn push(&mut self, leaf: &Hash32) {
        let mut node = leaf_node(leaf);
        // Each trailing one bit of the old count is a same-height peak to merge.
        for _ in 0..self.leaf_count.trailing_ones() {
            let left = self.peaks.pop().expect("peak count tracks popcount");
            node = hash_pair(&left, &node);
        }
        self.peaks.push(node);
        self.leaf_count += 1;
    }

    pub fn root(&self) -> Result<Hash32, MmrError> {
        if self.leaf_count == 0 {
            return Err(MmrError::Empty);
        }
        bag_peaks(&self.peaks, self.leaf_count)
    }
}

pub fn mmr_append(acc: &MmrAccumulator, leaf: &Hash32) -> MmrAccumulator {
    let mut next = acc.clone();
    next.push(leaf);
    next
}

pub fn mmr_root(acc: &MmrAccumulator) -> Result<Hash32, MmrError> {
    acc.root()
}

/// Inverse of the most recent append. Needs the prover's node store because
/// the accumulator alone has already discarded the merged children.
pub fn mmr_remove_last(acc: &MmrAccumulator, store: &MmrStore) -> Result<MmrAccumulator, MmrError> {
    if acc.leaf_count == 0 {
        return Err(MmrError::Empty);
    }
    if acc.leaf_count > store.leaf_count() || store.accumulator_at(acc.leaf_count)? != *acc {
        return Err(MmrError::StoreMismatch(acc.leaf_count));
    }
    store.accumulator_at(acc.leaf_count - 1)
}

/// Root after appending `new_leaves` to the accumulator given by
/// `(peaks_at_v, leaf_count_at_v)`.
pub fn mmr_extend_root(
    peaks_at_v: &[Hash32],
    leaf_count_at_v: u64,
    new_leaves: &[Hash32],
) -> Result<Hash32, MmrError> {
    let mut acc = MmrAccumulator::from_peaks(peaks_at_v.to_vec(), leaf_count_at_v)?;
    for leaf in new_leaves {
        acc.push(leaf);
    }
    acc.root()
}

/// Full node store: `levels[h][i]` is the i-th node of height h.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MmrStore {
    levels: Vec<Vec<Hash32>>,
}

impl MmrStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_leaves<'a>(leaves: impl IntoIterator<Item = &'a Hash32>) -> Self {
        let mut s = Self::new();
        for leaf in leaves {
            s.append(leaf);
        }
        s
    }

    pub fn leaf_count(&self) -> u64 {
        self.levels.first().map_or(0, |l| l.len() as u64)
    }

    pub fn append(&mut self, leaf: &Hash32) {
        let mut node = leaf_node(leaf);
        let mut h = 0;
        loop {
            if self.levels.len() == h {
                self.levels.push(Vec::new());
            }
            self.levels[h].push(node);
            let len = self.levels[h].len();
            if len % 2 == 1 {
                break;
            }
            node = hash_pair(&self.levels[h][len - 2], &self.levels[h][len - 1]);
            h += 1;
        }
    }

    /// Drop the last leaf and every node that depended on it.
    pub fn pop(&mut self) -> Result<(), MmrError> {
        let n = self.leaf_count();
        if n == 0 {
            return Err(MmrError::Empty);
        }
        // Nodes of height h that exist at n leaves: n >> h.
        for (h, level) in self.levels.iter_mut().enumerate() {
            level.truncate(((n - 1) >> h) as usize);
        }
        while self.levels.last().is_some_and(|l| l.is_empty()) {
            self.levels.pop();
        }
        Ok(())
    }

    /// The accumulator as it stood after the first `leaf_count` appends.
    pub fn accumulator_at(&self, leaf_count: u64) -> Result<MmrAccumulator, MmrError> {
        if leaf_count > self.leaf_count() {
            return Err(MmrError::IndexOutOfRange {
                index: leaf_count,
                count: self.leaf_count(),
            });
        }
        let mut peaks = Vec::new();
        let mut covered = 0u64;
        for h in peak_heights(leaf_count) {
            peaks.push(self.levels[h as usize][(covered >> h) as usize]);
            covered += 1 << h;
        }
        Ok(MmrAccumulator { leaf_count, peaks })
    }

    pub fn accumulator(&self) -> MmrAccumulator {
        self.accumulator_at(self.leaf_count())
            .expect("current size")
    }

    pub fn root_at(&self, leaf_count: u64) -> Result<Hash32, MmrError> {
        self.accumulator_at(leaf_count)?.root()
    }

    pub fn prove(&self, leaf_index: u64, leaf_count: u64) -> Result<MmrInclusionProof, MmrError> {
        mmr_prove_inclusion(self, leaf_index, leaf_count)
    }
}

/// Locate the mountain holding `leaf_index`: (peak position, height, first leaf).
fn mountain_of(leaf_index: u64, leaf_count: u64) -> Option<(usize, u32, u64)> {
    let mut start = 0u64;
    for (pos, h) in peak_heights(leaf_count).into_iter().enumerate() {
        let size = 1u64 << h;
        if leaf_index < start + size {
            return Some((pos, h, start));
        }
        start += size;
    }
    None
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MmrInclusionProof {
    pub leaf_index: u64,
    pub leaf_count_at_proof: u64,
    /// Siblings inside the leaf's mountain, bottom-up.
    pub path: Vec<Hash32>,
    /// The other peaks, left to right.
    pub peak_context: Vec<Hash32>,
}

impl MmrInclusionProof {
    /// `leaf_index ‖ leaf_count ‖ path_len ‖ path ‖ context_len ‖ context`,
    /// counts as u64 big-endian.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(32 + 32 * (self.path.len() + self.peak_context.len()));
        out.extend_from_slice(&self.leaf_index.to_be_bytes());
        out.extend_from_slice(&self.leaf_count_at_proof.to_be_bytes());
        for list in [&self.path, &self.peak_context] {
            out.extend_from_slice(&(list.len() as u64).to_be_bytes());
            for d in list {
                out.extend_from_slice(&d.0);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, MmrError> {
        let mut r = crate::codec::Reader::new(bytes);
        let leaf_index = r.u64().ok_or(MmrError::Encoding)?;
        let leaf_count_at_proof = r.u64().ok_or(MmrError::Encoding)?;
        let path = r.digests().ok_or(MmrError::Encoding)?;
        let peak_context = r.digests().ok_or(MmrError::Encoding)?;
        if !r.is_done() {
            return Err(MmrError::Encoding);
        }
        Ok(MmrInclusionProof {
            leaf_index,
            leaf_count_at_proof,
            path,
            peak_context,
        })
    }
}

pub fn mmr_prove_inclusion(
    store: &MmrStore,
    leaf_index: u64,
    leaf_count: u64,
) -> Result<MmrInclusionProof, MmrError> {
    if leaf_index >= leaf_count {
        return Err(MmrError::IndexOutOfRange {
            index: leaf_index,
            count: leaf_count,
        });
    }
    let acc = store.accumulator_at(leaf_count)?;
    let (pos, height, _) = mountain_of(leaf_index, leaf_count).expect("index below count");
    let mut path = Vec::with_capacity(height as usize);
    let mut idx = leaf_index;
    for h in 0..height {
        path.push(store.levels[h as usize][(idx ^ 1) as usize]);
        idx >>= 1;
    }
    let mut peak_context = acc.peaks.clone();
    peak_context.remove(pos);
    Ok(MmrInclusionProof {
        leaf_index,
        leaf_count_at_proof: leaf_count,
        path,
        peak_context,
    })
}

pub fn mmr_verify_inclusion(root: &Hash32, leaf: &Hash32, proof: &MmrInclusionProof) -> bool {
    let Some((pos, height, start)) = mountain_of(proof.leaf_index, proof.leaf_count_at_proof)
    else {
        return false;
    };
    if proof.path.len() != height as usize
        || proof.peak_context.len() + 1 != proof.leaf_count_at_proof.count_ones() as usize
    {
        return false;
    }
    let mut node = leaf_node(leaf);
    let local = proof.leaf_index - start;
    for (h, sib) in proof.path.iter().enumerate() {
        node = if local >> h & 1 == 0 {
            hash_pair(&node, sib)
        } else {
            hash_pair(sib, &node)
        };
    }
    let mut peaks = proof.peak_context.clone();
    peaks.insert(pos, node);
    bag_peaks(&peaks, proof.leaf_count_at_proof).is_ok_and(|r| r == *root)
}
