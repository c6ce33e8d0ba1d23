//! 32-byte digests, SHA-256 helpers and 256-bit PoW targets.

use std::fmt;

use num_bigint::BigUint;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

/// A 32-byte hash value, displayed and serialized as lowercase hex.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Hash32(pub [u8; 32]);

impl Hash32 {
    pub const ZERO: Hash32 = Hash32([0u8; 32]);

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self, hex::FromHexError> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s.trim(), &mut out)?;
        Ok(Hash32(out))
    }

    pub fn from_slice(bytes: &[u8]) -> Option<Self> {
        <[u8; 32]>::try_from(bytes).ok().map(Hash32)
    }
}

impl fmt::Debug for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hash32({})", self.to_hex())
    }
}

impl fmt::Display for Hash32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Hash32 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Hash32 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Hash32::from_hex(&s).map_err(de::Error::custom)
    }
}

pub fn sha256(data: &[u8]) -> Hash32 {
    Hash32(Sha256::digest(data).into())
}

/// SHA-256 applied twice.
pub fn sha256d(data: &[u8]) -> Hash32 {
    sha256(sha256(data).as_bytes())
}

/// SHA-256 over the concatenation `left ‖ right`.
pub fn hash_pair(left: &Hash32, right: &Hash32) -> Hash32 {
    let mut h = Sha256::new();
    h.update(left.0);
    h.update(right.0);
    Hash32(h.finalize().into())
}

/// A non-zero 256-bit PoW target, stored big-endian.
///
/// A header is valid PoW when its digest, read as a big-endian integer, is
/// strictly below the target. Comparing big-endian byte arrays
/// lexicographically is the same as comparing the integers.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Target([u8; 32]);

impl Target {
    /// 2^256 - 1, the easiest representable target.
    pub const MAX: Target = Target([0xff; 32]);

    pub fn from_be_bytes(bytes: [u8; 32]) -> Option<Self> {
        if bytes.iter().all(|b| *b == 0) {
            None
        } else {
            Some(Target(bytes))
        }
    }

    /// `2^exp` for `exp` in `0..=255`.
    pub fn pow2(exp: u32) -> Option<Self> {
        if exp > 255 {
            return None;
        }
        let mut bytes = [0u8; 32];
        let byte = 31 - (exp / 8) as usize;
        bytes[byte] = 1 << (exp % 8);
        Some(Target(bytes))
    }

    pub fn to_be_bytes(&self) -> [u8; 32] {
        self.0
    }

    pub fn to_biguint(&self) -> BigUint {
        BigUint::from_bytes_be(&self.0)
    }

    pub fn from_biguint(v: &BigUint) -> Option<Self> {
        let bytes = v.to_bytes_be();
        if bytes.len() > 32 {
            return None;
        }
        let mut out = [0u8; 32];
        out[32 - bytes.len()..].copy_from_slice(&bytes);
        Target::from_be_bytes(out)
    }

    /// `digest < target` as 256-bit big-endian integers.
    pub fn is_met_by(&self, digest: &Hash32) -> bool {
        digest.0 < self.0
    }

    /// log2 of the target as a float; exact for powers of two.
    pub fn log2(&self) -> f64 {
        let v = self.to_biguint();
        let bits = v.bits();
        if bits <= 53 {
            return (self.to_f64()).log2();
        }
        let shift = bits - 53;
        let top: BigUint = &v >> shift;
        let mantissa: f64 = top.to_u64_digits().first().copied().unwrap_or(0) as f64;
        mantissa.log2() + shift as f64
    }

    pub fn to_f64(&self) -> f64 {
        self.0
            .iter()
            .fold(0.0, |acc, b| acc * 256.0 + f64::from(*b))
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Option<Self> {
        let mut out = [0u8; 32];
        hex::decode_to_slice(s.trim(), &mut out).ok()?;
        Target::from_be_bytes(out)
    }
}

impl fmt::Debug for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Target(2^{:.3})", self.log2())
    }
}

impl Serialize for Target {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> Deserialize<'de> for Target {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Target::from_hex(&s).ok_or_else(|| de::Error::custom("invalid or zero target"))
    }
}
