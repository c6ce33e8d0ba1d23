//! Block headers, PoW validity, chain linkage, transaction Merkle trees and
//! the velvet-fork coinbase commitment layout.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::{hash_pair, sha256, sha256d, Hash32, Target};

/// Serialized header size: 8 + 32 + 32 + 32 + 8 + 8 + 32.
pub const HEADER_LEN: usize = 152;

/// Coinbase flag byte marking an upgraded (MMR-committing) block.
pub const UPGRADED_FLAG: u8 = 0x4C;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ChainError {
    #[error("header encoding must be {HEADER_LEN} bytes, got {0}")]
    HeaderLength(usize),
    #[error("header target is zero")]
    ZeroTarget,
    #[error("transaction list is empty")]
    EmptyTransactions,
    #[error("transaction index {index} out of range for {count} leaves")]
    TxIndexOutOfRange { index: usize, count: usize },
    #[error("coinbase encoding is malformed")]
    CoinbaseEncoding,
    #[error("chain is empty")]
    EmptyChain,
}

/// Why [`validate_linkage`] rejected a chain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkFailureKind {
    /// `prev_hash` does not match the predecessor's digest.
    Linkage,
    /// Heights are not consecutive.
    Height,
    /// Digest is not below the header's target.
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize, Deserialize)]
#[error("{kind:?} failure at height {height}")]
pub struct LinkFailure {
    pub height: u64,
    pub kind: LinkFailureKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockHeader {
    pub height: u64,
    pub prev_hash: Hash32,
    pub tx_root: Hash32,
    pub target: Target,
    pub nonce: u64,
    pub timestamp: u64,
    /// Hash of the block's coinbase data; all-zero when absent.
    pub coinbase_commitment: Hash32,
}

impl BlockHeader {
    /// Fixed 152-byte big-endian layout:
    /// `height ‖ prev_hash ‖ tx_root ‖ target ‖ nonce ‖ timestamp ‖ coinbase_commitment`.
    pub fn serialize(&self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[0..8].copy_from_slice(&self.height.to_be_bytes());
        out[8..40].copy_from_slice(&self.prev_hash.0);
        out[40..72].copy_from_slice(&self.tx_root.0);
        out[72..104].copy_from_slice(&self.target.to_be_bytes());
        out[104..112].copy_from_slice(&self.nonce.to_be_bytes());
        out[112..120].copy_from_slice(&self.timestamp.to_be_bytes());
        out[120..152].copy_from_slice(&self.coinbase_commitment.0);
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, ChainError> {
        if bytes.len() != HEADER_LEN {
            return Err(ChainError::HeaderLength(bytes.len()));
        }
        let u64_at = |at: usize| u64::from_be_bytes(bytes[at..at + 8].try_into().unwrap());
        let h32_at = |at: usize| Hash32(bytes[at..at + 32].try_into().unwrap());
        let target = Target::from_be_bytes(bytes[72..104].try_into().unwrap())
            .ok_or(ChainError::ZeroTarget)?;
        Ok(BlockHeader {
            height: u64_at(0),
            prev_hash: h32_at(8),
            tx_root: h32_at(40),
            target,
            nonce: u64_at(104),
            timestamp: u64_at(112),
            coinbase_commitment: h32_at(120),
        })
    }

    /// Double SHA-256 of the serialized header.
    pub fn digest(&self) -> Hash32 {
        sha256d(&self.serialize())
    }

    pub fn meets_target(&self) -> bool {
        self.target.is_met_by(&self.digest())
    }
}

pub fn serialize_header(header: &BlockHeader) -> [u8; HEADER_LEN] {
    header.serialize()
}

pub fn header_digest(header: &BlockHeader) -> Hash32 {
    header.digest()
}

pub fn meets_target(header: &BlockHeader) -> bool {
    header.meets_target()
}

/// Check consecutive heights and `prev_hash` links only, without PoW.
pub fn validate_links(headers: &[BlockHeader]) -> Result<(), LinkFailure> {
    for pair in headers.windows(2) {
        let (prev, cur) = (&pair[0], &pair[1]);
        if prev.height.checked_add(1) != Some(cur.height) {
            return Err(LinkFailure {
                height: cur.height,
                kind: LinkFailureKind::Height,
            });
        }
        if cur.prev_hash != prev.digest() {
            return Err(LinkFailure {
                height: cur.height,
                kind: LinkFailureKind::Linkage,
            });
        }
    }
    Ok(())
}

/// Linkage plus PoW for every header. Reports the first offending height;
/// at a given height a linkage failure is reported before a PoW failure.
pub fn validate_linkage(headers: &[BlockHeader]) -> Result<(), LinkFailure> {
    let Some(first) = headers.first() else {
        return Ok(());
    };
    if !first.meets_target() {
        return Err(LinkFailure {
            height: first.height,
            kind: LinkFailureKind::Pow,
        });
    }
    for pair in headers.windows(2) {
        validate_links(pair)?;
        if !pair[1].meets_target() {
            return Err(LinkFailure {
                height: pair[1].height,
                kind: LinkFailureKind::Pow,
            });
        }
    }
    Ok(())
}

/// Coinbase payload carried by velvet-upgraded blocks.
///
/// Bit `alpha - 1` of `vote_buffer` votes on the most recent preceding
/// upgraded block, bit `alpha - 2` on the one before it, and so on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoinbaseData {
    pub upgraded_flag: u8,
    pub mmr_root: Hash32,
    pub vote_buffer: Vec<bool>,
}

impl CoinbaseData {
    /// Coinbase of a non-upgraded miner: flag 0x00 and an all-zero buffer.
    pub fn plain(alpha: usize) -> Self {
        CoinbaseData {
            upgraded_flag: 0,
            mmr_root: Hash32::ZERO,
            vote_buffer: vec![false; alpha],
        }
    }

    pub fn upgraded(mmr_root: Hash32, vote_buffer: Vec<bool>) -> Self {
        CoinbaseData {
            upgraded_flag: UPGRADED_FLAG,
            mmr_root,
            vote_buffer,
        }
    }

    pub fn is_upgraded(&self) -> bool {
        self.upgraded_flag == UPGRADED_FLAG
    }

    pub fn alpha(&self) -> usize {
        self.vote_buffer.len()
    }

    /// `flag(1) ‖ mmr_root(32) ‖ alpha(4, BE) ‖ votes packed MSB-first, zero-padded`.
    pub fn serialize(&self) -> Vec<u8> {
        let alpha = self.vote_buffer.len();
        let mut out = Vec::with_capacity(37 + alpha.div_ceil(8));
        out.push(self.upgraded_flag);
        out.extend_from_slice(&self.mmr_root.0);
        out.extend_from_slice(&(alpha as u32).to_be_bytes());
        let mut packed = vec![0u8; alpha.div_ceil(8)];
        for (i, bit) in self.vote_buffer.iter().enumerate() {
            if *bit {
                packed[i / 8] |= 0x80 >> (i % 8);
            }
        }
        out.extend_from_slice(&packed);
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, ChainError> {
        if bytes.len() < 37 {
            return Err(ChainError::CoinbaseEncoding);
        }
        let alpha = u32::from_be_bytes(bytes[33..37].try_into().unwrap()) as usize;
        let packed = &bytes[37..];
        if packed.len() != alpha.div_ceil(8) {
            return Err(ChainError::CoinbaseEncoding);
        }
        // Padding bits must be zero so the encoding stays injective.
        if !alpha.is_multiple_of(8) {
            let last = packed[packed.len() - 1];
            if last & (0xffu8 >> (alpha % 8)) != 0 {
                return Err(ChainError::CoinbaseEncoding);
            }
        }
        let vote_buffer = (0..alpha)
            .map(|i| packed[i / 8] & (0x80 >> (i % 8)) != 0)
            .collect();
        Ok(CoinbaseData {
            upgraded_flag: bytes[0],
            mmr_root: Hash32::from_slice(&bytes[1..33]).unwrap(),
            vote_buffer,
        })
    }

    /// The value a header stores in `coinbase_commitment`.
    pub fn commitment(&self) -> Hash32 {
        sha256d(&self.serialize())
    }
}

fn leaf_hash(tx: &[u8]) -> Hash32 {
    sha256(tx)
}

/// Binary Merkle root over SHA-256 leaf hashes; odd levels duplicate their
/// last node.
pub fn tx_merkle_root<T: AsRef<[u8]>>(txs: &[T]) -> Result<Hash32, ChainError> {
    if txs.is_empty() {
        return Err(ChainError::EmptyTransactions);
    }
    let mut level: Vec<Hash32> = txs.iter().map(|t| leaf_hash(t.as_ref())).collect();
    while level.len() > 1 {
        level = next_level(&level);
    }
    Ok(level[0])
}

fn next_level(level: &[Hash32]) -> Vec<Hash32> {
    level
        .chunks(2)
        .map(|pair| hash_pair(&pair[0], pair.get(1).unwrap_or(&pair[0])))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TxMerkleProof {
    #[serde(with = "hex_bytes")]
    pub leaf: Vec<u8>,
    pub index: u64,
    /// Sibling hashes, bottom-up.
    pub siblings: Vec<Hash32>,
}

pub fn tx_merkle_prove<T: AsRef<[u8]>>(
    txs: &[T],
    index: usize,
) -> Result<TxMerkleProof, ChainError> {
    if index >= txs.len() {
        return Err(ChainError::TxIndexOutOfRange {
            index,
            count: txs.len(),
        });
    }
    let mut level: Vec<Hash32> = txs.iter().map(|t| leaf_hash(t.as_ref())).collect();
    let mut siblings = Vec::new();
    let mut pos = index;
    while level.len() > 1 {
        let sib = pos ^ 1;
        siblings.push(*level.get(sib).unwrap_or(&level[pos]));
        level = next_level(&level);
        pos /= 2;
    }
    Ok(TxMerkleProof {
        leaf: txs[index].as_ref().to_vec(),
        index: index as u64,
        siblings,
    })
}

pub fn tx_merkle_verify(root: &Hash32, proof: &TxMerkleProof) -> bool {
    let depth = proof.siblings.len();
    if depth < 64 && proof.index >> depth != 0 {
        return false;
    }
    let mut cur = leaf_hash(&proof.leaf);
    for (level, sib) in proof.siblings.iter().enumerate() {
        if (proof.index >> level) & 1 == 1 {
            // A right child equal to its sibling only arises from padding
            // duplication, never from a real leaf position.
            if *sib == cur {
                return false;
            }
            cur = hash_pair(sib, &cur);
        } else {
            cur = hash_pair(&cur, sib);
        }
    }
    cur == *root
}

/// A full node's local view: headers plus the block bodies needed to answer
/// queries (transactions and coinbase data).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FullChain {
    pub headers: Vec<BlockHeader>,
    #[serde(with = "hex_nested")]
    pub txs: Vec<Vec<Vec<u8>>>,
    pub coinbases: Vec<CoinbaseData>,
}

impl FullChain {
    pub fn len(&self) -> usize {
        self.headers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.headers.is_empty()
    }

    pub fn tip(&self) -> Option<&BlockHeader> {
        self.headers.last()
    }

    pub fn push(&mut self, header: BlockHeader, txs: Vec<Vec<u8>>, coinbase: CoinbaseData) {
        self.headers.push(header);
        self.txs.push(txs);
        self.coinbases.push(coinbase);
    }

    /// Index of the first block whose transaction list contains `tx`.
    pub fn find_tx(&self, tx: &[u8]) -> Option<(usize, usize)> {
        self.txs
            .iter()
            .enumerate()
            .find_map(|(b, list)| list.iter().position(|t| t.as_slice() == tx).map(|i| (b, i)))
    }

    /// Prefix of the first `len` blocks.
    pub fn truncated(&self, len: usize) -> FullChain {
        FullChain {
            headers: self.headers[..len].to_vec(),
            txs: self.txs[..len].to_vec(),
            coinbases: self.coinbases[..len].to_vec(),
        }
    }
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[u8], s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&hex::encode(v))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        hex::decode(s).map_err(serde::de::Error::custom)
    }
}

mod hex_nested {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<Vec<u8>>], s: S) -> Result<S::Ok, S::Error> {
        let strs: Vec<Vec<String>> = v
            .iter()
            .map(|block| block.iter().map(hex::encode).collect())
            .collect();
        strs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Vec<u8>>>, D::Error> {
        let strs: Vec<Vec<String>> = Vec::deserialize(d)?;
        strs.into_iter()
            .map(|block| {
                block
                    .into_iter()
                    .map(|t| hex::decode(t).map_err(serde::de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn zero_header() -> BlockHeader {
        // Target zero is unrepresentable; parse the all-zero encoding's
        // fields manually for the serialization check.
        BlockHeader {
            height: 0,
            prev_hash: Hash32::ZERO,
            tx_root: Hash32::ZERO,
            target: Target::MAX,
            nonce: 0,
            timestamp: 0,
            coinbase_commitment: Hash32::ZERO,
        }
    }

    #[test]
    fn zero_fields_serialize_to_zero_bytes() {
        let bytes = zero_header().serialize();
        assert_eq!(bytes.len(), HEADER_LEN);
        assert!(bytes[..72].iter().all(|b| *b == 0));
        assert!(bytes[72..104].iter().all(|b| *b == 0xff));
        assert!(bytes[104..].iter().all(|b| *b == 0));
        assert_eq!(sha256d(&[0u8; HEADER_LEN]).to_hex(), ZERO_152_SHA256D);
    }

    const ZERO_152_SHA256D: &str =
        "962e42baac3ef885deb9883e6154f55f2c82155123e6d95719931ff3761b340e";

    #[test]
    fn height_is_big_endian() {
        let mut h = zero_header();
        h.height = 1;
        let bytes = h.serialize();
        assert_eq!(bytes[7], 1);
        assert!(bytes[..7].iter().all(|b| *b == 0));
    }

    #[test]
    fn zero_target_does_not_parse() {
        assert_eq!(
            BlockHeader::parse(&[0u8; HEADER_LEN]),
            Err(ChainError::ZeroTarget)
        );
        assert_eq!(
            BlockHeader::parse(&[0u8; 10]),
            Err(ChainError::HeaderLength(10))
        );
    }

    #[test]
    fn minimal_target_needs_zero_digest() {
        let mut h = zero_header();
        h.target = Target::pow2(0).unwrap();
        for nonce in 0..64 {
            h.nonce = nonce;
            assert!(!h.meets_target());
        }
    }

    #[test]
    fn digest_is_deterministic() {
        let h = zero_header();
        assert_eq!(h.digest(), h.digest());
    }

    #[test]
    fn merkle_small_trees() {
        let one = [b"a".to_vec()];
        assert_eq!(tx_merkle_root(&one).unwrap(), sha256(b"a"));
        let two = [b"a".to_vec(), b"b".to_vec()];
        assert_eq!(
            tx_merkle_root(&two).unwrap(),
            hash_pair(&sha256(b"a"), &sha256(b"b"))
        );
        assert_eq!(
            tx_merkle_root::<Vec<u8>>(&[]),
            Err(ChainError::EmptyTransactions)
        );
    }

    /// Independent builder: pad each level by duplicating its last node.
    fn brute_root(txs: &[Vec<u8>]) -> Hash32 {
        let mut nodes: Vec<Hash32> = txs.iter().map(|t| sha256(t)).collect();
        while nodes.len() > 1 {
            if nodes.len() % 2 == 1 {
                nodes.push(*nodes.last().unwrap());
            }
            let mut up = Vec::new();
            for i in (0..nodes.len()).step_by(2) {
                let mut buf = nodes[i].0.to_vec();
                buf.extend_from_slice(&nodes[i + 1].0);
                up.push(sha256(&buf));
            }
            nodes = up;
        }
        nodes[0]
    }

    #[test]
    fn merkle_matches_brute_force() {
        for n in 1..=17 {
            let txs: Vec<Vec<u8>> = (0..n).map(|i| vec![i as u8; 3]).collect();
            assert_eq!(tx_merkle_root(&txs).unwrap(), brute_root(&txs), "n={n}");
        }
    }

    #[test]
    fn merkle_proofs_exhaustive() {
        for n in 1..=16usize {
            let txs: Vec<Vec<u8>> = (0..n).map(|i| format!("tx{i}").into_bytes()).collect();
            let root = tx_merkle_root(&txs).unwrap();
            for i in 0..n {
                let p = tx_merkle_prove(&txs, i).unwrap();
                assert_eq!(p.siblings.len(), (n as f64).log2().ceil() as usize);
                assert!(tx_merkle_verify(&root, &p), "n={n} i={i}");
                // Every other index with the same path is rejected.
                for j in 0..(1u64 << p.siblings.len()) {
                    if j != i as u64 {
                        let mut q = p.clone();
                        q.index = j;
                        assert!(!tx_merkle_verify(&root, &q), "n={n} i={i} j={j}");
                    }
                }
            }
            assert!(tx_merkle_prove(&txs, n).is_err());
        }
    }

    #[test]
    fn merkle_leaf_mutation_rejected() {
        let txs: Vec<Vec<u8>> = (0..8).map(|i| vec![i; 4]).collect();
        let root = tx_merkle_root(&txs).unwrap();
        let mut p = tx_merkle_prove(&txs, 5).unwrap();
        assert_eq!(p.siblings.len(), 3);
        p.leaf[0] ^= 1;
        assert!(!tx_merkle_verify(&root, &p));
    }

    #[test]
    fn single_leaf_proof_is_empty() {
        let txs = [b"only".to_vec()];
        let p = tx_merkle_prove(&txs, 0).unwrap();
        assert!(p.siblings.is_empty());
        assert!(tx_merkle_verify(&tx_merkle_root(&txs).unwrap(), &p));
    }

    #[test]
    fn coinbase_round_trip_and_flag() {
        let cb = CoinbaseData::upgraded(sha256(b"r"), vec![true, false, true]);
        assert!(cb.is_upgraded());
        assert_eq!(CoinbaseData::parse(&cb.serialize()).unwrap(), cb);
        assert!(!CoinbaseData::plain(4).is_upgraded());
        let mut bytes = cb.serialize();
        *bytes.last_mut().unwrap() |= 1;
        assert!(CoinbaseData::parse(&bytes).is_err());
    }

    fn arb_header() -> impl Strategy<Value = BlockHeader> {
        (
            any::<u64>(),
            any::<[u8; 32]>(),
            any::<[u8; 32]>(),
            any::<[u8; 32]>(),
            any::<u64>(),
            any::<u64>(),
            any::<[u8; 32]>(),
        )
            .prop_filter_map("nonzero target", |(h, p, r, t, n, ts, c)| {
                Some(BlockHeader {
                    height: h,
                    prev_hash: Hash32(p),
                    tx_root: Hash32(r),
                    target: Target::from_be_bytes(t)?,
                    nonce: n,
                    timestamp: ts,
                    coinbase_commitment: Hash32(c),
                })
            })
    }

    proptest! {
        #[test]
        fn header_round_trip(h in arb_header()) {
            prop_assert_eq!(BlockHeader::parse(&h.serialize()).unwrap(), h);
        }

        #[test]
        fn nonce_changes_digest(h in arb_header(), other in any::<u64>()) {
            prop_assume!(other != h.nonce);
            let mut g = h;
            g.nonce = other;
            prop_assert_ne!(h.digest(), g.digest());
        }
    }
}
