//! Episode reward with a dense progress term, and group-relative advantages.

use serde::{Deserialize, Serialize};

use super::DatagenError;
use crate::episode::EpisodeTranscript;

pub const DEFAULT_LAMBDA: f64 = 0.20;
pub const STD_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    pub lambda: f64,
}

impl Default for RewardParams {
    fn default() -> Self {
        RewardParams {
            lambda: DEFAULT_LAMBDA,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardResult {
    pub solved: u8,
    pub mean_delta: f64,
    pub total: f64,
}

/// `1[solved] + λ·tanh(mean Δd)`, the mean taken over executed primitive
/// steps (zero for an episode with none).
pub fn reward_from_deltas(solved: bool, deltas: &[i64], params: RewardParams) -> RewardResult {
    assert!(params.lambda >= 0.0, "lambda must be non-negative");
    let mean_delta = if deltas.is_empty() {
        0.0
    } else {
        deltas.iter().map(|&d| d as f64).sum::<f64>() / deltas.len() as f64
    };
    let solved = solved as u8;
    RewardResult {
        solved,
        mean_delta,
        total: solved as f64 + params.lambda * mean_delta.tanh(),
    }
}

pub fn episode_reward(transcript: &EpisodeTranscript, params: RewardParams) -> RewardResult {
    reward_from_deltas(transcript.solved, &transcript.deltas(), params)
}

/// `(r_i - mean) / std` with the population standard deviation. Groups whose
/// spread is below the floor get all-zero advantages.
pub fn group_advantage(rewards: &[f64]) -> Result<Vec<f64>, DatagenError> {
    if rewards.len() < 2 {
        return Err(DatagenError::GroupTooSmall(rewards.len()));
    }
    let g = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / g;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / g;
    let std = var.sqrt();
    if std < STD_FLOOR {
        return Ok(vec![0.0; rewards.len()]);
    }
    Ok(rewards.iter().map(|r| (r - mean) / std).collect())
}
