//! Puzzle environments with exact solvers, open-loop commitment execution
//! under a decision budget, and tools for studying how far ahead a policy
//! should commit.
//!
//! Two clocks run side by side: the primitive clock `t` counts executed
//! actions and the decision clock `k` counts policy queries. A decision at
//! `k` commits to `h_k` actions from the depth set, so `t_{k+1} = t_k + h_k`
//! unless the goal is reached mid-commitment.

pub mod datagen;
pub mod episode;
pub mod harness;
pub mod mdp;
pub mod oracle;
pub mod sliding;
pub mod sokoban;
pub mod theory;

pub use episode::{
    execute_commitment, run_episode, EpisodeTranscript, Observation, Policy, PolicyError,
};
pub use mdp::{
    Action, Budget, BudgetPreset, BudgetSpec, Clocks, Commitment, DepthSet, Environment, Instance,
    PuzzleState, Task,
};
pub use oracle::{Distance, DistanceOracle};

/// Lowercase hex SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
