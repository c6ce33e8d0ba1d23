//! Constant-size light-client verification for proof-of-work chains.
//!
//! A verifier posts a query transaction and accepts the heaviest finality
//! proof returned within a challenge period. Ancestor headers are checked
//! through a Merkle mountain range whose root is carried in the coinbase of
//! upgraded blocks and confirmed by miner votes.

pub mod bounds;
pub mod chain;
mod codec;
pub mod digest;
pub mod incentive;
pub mod mmr;
pub mod protocol;
pub mod simnet;

pub use chain::{BlockHeader, CoinbaseData, FullChain, TxMerkleProof};
pub use digest::{sha256, sha256d, Hash32, Target};
pub use mmr::{MmrAccumulator, MmrInclusionProof, MmrStore};
pub use protocol::{FinalityProof, ProverId, QueryTransaction};
