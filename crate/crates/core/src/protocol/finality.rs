//! Finding the last finalized header: proof creation, validation, overall
//! difficulty and winner selection.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::chain::{
    tx_merkle_prove, tx_merkle_verify, validate_linkage, BlockHeader, ChainError, FullChain,
    LinkFailure, TxMerkleProof, HEADER_LEN,
};
use crate::codec::{put_bytes, put_digests, put_u64, Reader};
use crate::digest::{sha256, Hash32, Target};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProverId(pub u32);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryTransaction {
    pub id: Hash32,
    #[serde(with = "hex_vec")]
    pub payload: Vec<u8>,
    pub script_hash: Hash32,
    pub service_fee: u64,
    pub tx_fee: u64,
    /// Seconds.
    pub challenge_period: f64,
}

impl QueryTransaction {
    pub fn new(
        payload: Vec<u8>,
        script_hash: Hash32,
        service_fee: u64,
        tx_fee: u64,
        challenge_period: f64,
    ) -> Self {
        let mut tx = QueryTransaction {
            id: Hash32::ZERO,
            payload,
            script_hash,
            service_fee,
            tx_fee,
            challenge_period,
        };
        tx.id = sha256(&tx.serialize());
        tx
    }

    /// The bytes miners place in a block:
    /// `payload_len ‖ payload ‖ script_hash ‖ service_fee ‖ tx_fee ‖ period_bits`.
    pub fn serialize(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + self.payload.len());
        put_bytes(&mut out, &self.payload);
        out.extend_from_slice(&self.script_hash.0);
        put_u64(&mut out, self.service_fee);
        put_u64(&mut out, self.tx_fee);
        put_u64(&mut out, self.challenge_period.to_bits());
        out
    }

    pub fn id_is_consistent(&self) -> bool {
        self.id == sha256(&self.serialize())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProofError {
    #[error("query transaction is not included in the prover's chain")]
    NoInclusion,
    #[error(
        "chain has {available} headers before the inclusion block, {needed} needed for padding"
    )]
    InsufficientHistory { available: usize, needed: usize },
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error("malformed proof encoding")]
    Encoding,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinalityProof {
    pub headers: Vec<BlockHeader>,
    /// Offset of the header whose block includes the query transaction.
    pub tx_block_offset: u64,
    pub tx_inclusion: TxMerkleProof,
}

impl FinalityProof {
    /// `n ‖ headers ‖ q ‖ tx index ‖ leaf_len ‖ leaf ‖ sibling_count ‖ siblings`.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.headers.len() * HEADER_LEN + 64);
        put_u64(&mut out, self.headers.len() as u64);
        for h in &self.headers {
            out.extend_from_slice(&h.serialize());
        }
        put_u64(&mut out, self.tx_block_offset);
        put_u64(&mut out, self.tx_inclusion.index);
        put_bytes(&mut out, &self.tx_inclusion.leaf);
        put_digests(&mut out, &self.tx_inclusion.siblings);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, ProofError> {
        let mut r = Reader::new(bytes);
        let n = r.u64().ok_or(ProofError::Encoding)?;
        if n > (r.remaining() / HEADER_LEN) as u64 {
            return Err(ProofError::Encoding);
        }
        let headers = (0..n)
            .map(|_| {
                let raw = r.take(HEADER_LEN).ok_or(ProofError::Encoding)?;
                BlockHeader::parse(raw).map_err(|_| ProofError::Encoding)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let tx_block_offset = r.u64().ok_or(ProofError::Encoding)?;
        let index = r.u64().ok_or(ProofError::Encoding)?;
        let leaf = r.bytes().ok_or(ProofError::Encoding)?.to_vec();
        let siblings = r.digests().ok_or(ProofError::Encoding)?;
        if !r.is_done() {
            return Err(ProofError::Encoding);
        }
        Ok(FinalityProof {
            headers,
            tx_block_offset,
            tx_inclusion: TxMerkleProof {
                leaf,
                index,
                siblings,
            },
        })
    }
}

/// Seconds into the challenge period at which a prover freezes its proof:
/// `2δ` before the deadline, leaving `δ` for delivery plus `δ` of slack.
pub fn proof_cutoff(challenge_period: f64, delta: f64) -> f64 {
    challenge_period - 2.0 * delta
}

/// Build a finality proof from the prover's chain as it stands at the cutoff.
///
/// With `m` headers from the inclusion block to the tip, the proof is
/// `B[q..]` when `m >= k + 1`, otherwise the last `k + 1` headers, reaching
/// back before the inclusion block.
pub fn create_proof(
    chain: &FullChain,
    query_tx: &QueryTransaction,
    k: usize,
) -> Result<FinalityProof, ProofError> {
    let tx_bytes = query_tx.serialize();
    let (q, tx_index) = chain.find_tx(&tx_bytes).ok_or(ProofError::NoInclusion)?;
    let tx_inclusion = tx_merkle_prove(&chain.txs[q], tx_index)?;
    let m = chain.len() - q;
    let (start, offset) = if m > k {
        (q, 0)
    } else {
        let back = k + 1 - m;
        if q < back {
            return Err(ProofError::InsufficientHistory {
                available: q,
                needed: back,
            });
        }
        (q - back, back)
    };
    Ok(FinalityProof {
        headers: chain.headers[start..].to_vec(),
        tx_block_offset: offset as u64,
        tx_inclusion,
    })
}

/// Which check of [`validate_proof`] failed first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "check")]
pub enum ProofRejection {
    TooShort { len: usize },
    TxInclusion,
    Chain(LinkFailure),
}

/// The four checks in order: length, tx inclusion, linkage, PoW.
pub fn check_proof(
    proof: &FinalityProof,
    query_tx: &QueryTransaction,
    k: usize,
) -> Result<(), ProofRejection> {
    if proof.headers.len() < k + 1 {
        return Err(ProofRejection::TooShort {
            len: proof.headers.len(),
        });
    }
    let q = proof.tx_block_offset as usize;
    let included = proof.headers.get(q).is_some_and(|h| {
        proof.tx_inclusion.leaf == query_tx.serialize()
            && tx_merkle_verify(&h.tx_root, &proof.tx_inclusion)
    });
    if !included {
        return Err(ProofRejection::TxInclusion);
    }
    validate_linkage(&proof.headers).map_err(ProofRejection::Chain)
}

pub fn validate_proof(proof: &FinalityProof, query_tx: &QueryTransaction, k: usize) -> bool {
    check_proof(proof, query_tx, k).is_ok()
}

/// Exact `Σ 1/T` over a sequence of targets.
pub fn sum_inverse_targets<'a>(targets: impl IntoIterator<Item = &'a Target>) -> BigRational {
    // Group equal targets so the rational sum does one addition per target.
    let mut groups: Vec<(Target, u64)> = Vec::new();
    for t in targets {
        match groups.iter_mut().find(|(g, _)| g == t) {
            Some((_, n)) => *n += 1,
            None => groups.push((*t, 1)),
        }
    }
    groups.into_iter().fold(BigRational::zero(), |acc, (t, n)| {
        acc + BigRational::new(BigUint::from(n).into(), t.to_biguint().into())
    })
}

/// Sum of `1/T` from the inclusion block to the last header. Headers before
/// the inclusion block (padding) contribute nothing.
pub fn overall_difficulty(proof: &FinalityProof) -> BigRational {
    let q = (proof.tx_block_offset as usize).min(proof.headers.len());
    sum_inverse_targets(proof.headers[q..].iter().map(|h| &h.target))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProofVerdict {
    pub prover: ProverId,
    pub valid: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection: Option<ProofRejection>,
    /// Exact rational `num/den`, only for valid proofs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub overall_difficulty: Option<String>,
}

/// The verifier's report after the challenge period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub winner: Option<ProverId>,
    /// More than one valid proof shared the maximal difficulty.
    pub tie: bool,
    pub proofs: Vec<ProofVerdict>,
}

/// Highest difficulty wins; ties go to the lowest prover id and are flagged.
pub fn pick_winner(scores: &[(ProverId, BigRational)]) -> (Option<ProverId>, bool) {
    let Some(best) = scores.iter().map(|(_, d)| d).max() else {
        return (None, false);
    };
    let mut top: Vec<ProverId> = scores
        .iter()
        .filter(|(_, d)| d == best)
        .map(|(p, _)| *p)
        .collect();
    top.sort();
    (top.first().copied(), top.len() > 1)
}

pub fn select_winner(
    proofs: &[(ProverId, FinalityProof)],
    query_tx: &QueryTransaction,
    k: usize,
) -> Decision {
    let mut scores = Vec::new();
    let mut verdicts = Vec::new();
    for (prover, proof) in proofs {
        match check_proof(proof, query_tx, k) {
            Ok(()) => {
                let d = overall_difficulty(proof);
                verdicts.push(ProofVerdict {
                    prover: *prover,
                    valid: true,
                    rejection: None,
                    overall_difficulty: Some(d.to_string()),
                });
                scores.push((*prover, d));
            }
            Err(r) => verdicts.push(ProofVerdict {
                prover: *prover,
                valid: false,
                rejection: Some(r),
                overall_difficulty: None,
            }),
        }
    }
    let (winner, tie) = pick_winner(&scores);
    Decision {
        winner,
        tie,
        proofs: verdicts,
    }
}

mod hex_vec {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        hex::decode(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}
