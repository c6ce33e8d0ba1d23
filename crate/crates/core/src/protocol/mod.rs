//! Prover and verifier procedures.

mod discovery;
mod finality;
mod sync;

pub use discovery::{
    build_mmr_discovery, find_last_mmr, native_root, CandidateTally, DiscoveredRoot,
    DiscoveryError, MmrDiscoveryProof,
};
pub use finality::{
    check_proof, create_proof, overall_difficulty, pick_winner, proof_cutoff, select_winner,
    sum_inverse_targets, validate_proof, Decision, FinalityProof, ProofError, ProofRejection,
    ProofVerdict, ProverId, QueryTransaction,
};
pub use sync::{sync_step, SyncOutcome, SyncRejection, VerifierState};
