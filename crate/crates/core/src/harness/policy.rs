//! Built-in depth policies and the textual policy specification.
//!
//! Built-in baselines take their actions from the exact solver, re-solved at
//! each decision, so runs compare depth choices rather than action quality.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_xoshiro::SplitMix64;
use serde::{Deserialize, Serialize};

use super::external::{ExternalConfig, ExternalPolicy};
use crate::episode::{Observation, Policy, PolicyError};
use crate::mdp::{Action, Commitment, DepthSet, DepthSetError, Instance, PuzzleState};
use crate::oracle::{oracle_depth_sequence, solver_prefix, DistanceOracle};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthSource {
    Fixed(u32),
    Random,
    Oracle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyKind {
    /// Constant depth; may lie outside the run's depth set for descriptive sweeps.
    FixedDepth(u32),
    /// Uniform over the depth set, independent of the state.
    RandomDepth,
    Oracle,
    /// Depth from `source`; each action is the solver's first move from the
    /// imagined state, replaced by a uniform random action with probability
    /// `noise`.
    Greedy {
        source: DepthSource,
        noise: f64,
    },
    External {
        command: String,
        args: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    pub seed: u64,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind, seed: u64) -> Self {
        PolicySpec { kind, seed }
    }

    /// Depth set the episodes run under: `base`, plus the fixed depth if it
    /// is not already a member.
    pub fn run_depths(&self, base: &DepthSet) -> Result<DepthSet, DepthSetError> {
        match self.kind {
            PolicyKind::FixedDepth(h)
            | PolicyKind::Greedy {
                source: DepthSource::Fixed(h),
                ..
            } => base.with(h),
            _ => Ok(base.clone()),
        }
    }

    /// Builds a fresh policy for one episode on `instance`.
    pub fn instantiate(
        &self,
        instance: &Instance,
        oracle: &Arc<DistanceOracle>,
        external: &ExternalConfig,
    ) -> Box<dyn Policy> {
        let seed = episode_seed(self.seed, instance.seed());
        let solver = |depth, noise| -> Box<dyn Policy> {
            Box::new(SolverPolicy::new(depth, noise, seed, Arc::clone(oracle)))
        };
        match &self.kind {
            PolicyKind::FixedDepth(h) => solver(DepthSource::Fixed(*h), 0.0),
            PolicyKind::RandomDepth => solver(DepthSource::Random, 0.0),
            PolicyKind::Oracle => solver(DepthSource::Oracle, 0.0),
            PolicyKind::Greedy { source, noise } => solver(*source, *noise),
            PolicyKind::External { command, args } => Box::new(ExternalPolicy::new(
                command.clone(),
                args.clone(),
                seed,
                external.clone(),
            )),
        }
    }
}

/// Per-episode seed shared by the built-in random policies and the seed sent
/// to external policies.
pub fn episode_seed(policy_seed: u64, instance_seed: u64) -> u64 {
    SplitMix64::seed_from_u64(policy_seed ^ instance_seed.rotate_left(32)).next_u64()
}

impl fmt::Display for DepthSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DepthSource::Fixed(h) => write!(f, "{h}"),
            DepthSource::Random => f.write_str("random"),
            DepthSource::Oracle => f.write_str("oracle"),
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicyKind::FixedDepth(h) => write!(f, "fixed:{h}"),
            PolicyKind::RandomDepth => f.write_str("random"),
            PolicyKind::Oracle => f.write_str("oracle"),
            PolicyKind::Greedy { source, noise } => write!(f, "greedy:{source}:{noise}"),
            PolicyKind::External { command, args } => {
                write!(f, "external:{command}")?;
                args.iter().try_for_each(|a| write!(f, " {a}"))
            }
        }
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    /// `fixed:H`, `random`, `oracle`, `greedy:SOURCE:NOISE` with SOURCE one
    /// of `H`, `random`, `oracle`, or `external:COMMAND [ARGS...]`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let depth = |v: &str| {
            v.parse::<u32>()
                .map_err(|_| format!("bad depth {v:?} in policy {s:?}"))
        };
        let (head, rest) = s.split_once(':').unwrap_or((s, ""));
        match head {
            "fixed" => Ok(PolicyKind::FixedDepth(depth(rest)?)),
            "random" if rest.is_empty() => Ok(PolicyKind::RandomDepth),
            "oracle" if rest.is_empty() => Ok(PolicyKind::Oracle),
            "greedy" => {
                let (src, noise) = rest.split_once(':').unwrap_or((rest, "0"));
                let source = match src {
                    "random" => DepthSource::Random,
                    "oracle" => DepthSource::Oracle,
                    h => DepthSource::Fixed(depth(h)?),
                };
                let noise: f64 = noise
                    .parse()
                    .map_err(|_| format!("bad noise {noise:?} in policy {s:?}"))?;
                if !(0.0..=1.0).contains(&noise) {
                    return Err(format!("noise {noise} outside [0, 1]"));
                }
                Ok(PolicyKind::Greedy { source, noise })
            }
            "external" => {
                let mut words = rest.split_whitespace().map(str::to_string);
                let command = words
                    .next()
                    .ok_or_else(|| format!("policy {s:?} names no command"))?;
                Ok(PolicyKind::External {
                    command,
                    args: words.collect(),
                })
            }
            _ => Err(format!("unknown policy {s:?}")),
        }
    }
}

/// Solver-backed policy with a pluggable depth rule.
pub struct SolverPolicy {
    depth: DepthSource,
    noise: f64,
    depth_rng: SplitMix64,
    action_rng: ChaCha8Rng,
    oracle: Arc<DistanceOracle>,
}

impl SolverPolicy {
    pub fn new(depth: DepthSource, noise: f64, seed: u64, oracle: Arc<DistanceOracle>) -> Self {
        SolverPolicy {
            depth,
            noise,
            depth_rng: SplitMix64::seed_from_u64(seed),
            action_rng: ChaCha8Rng::seed_from_u64(seed),
            oracle,
        }
    }

    fn path(&self, state: &PuzzleState) -> Result<Arc<[Action]>, PolicyError> {
        self.oracle
            .solution(state)
            .map_err(|e| PolicyError::Solver(e.to_string()))?
            .ok_or_else(|| PolicyError::Solver("state has no solution".into()))
    }

    fn noisy_actions(&mut self, state: &PuzzleState, h: u32) -> Vec<Action> {
        let mut current = state.clone();
        let mut actions = Vec::with_capacity(h as usize);
        for _ in 0..h {
            let greedy = match self.oracle.solution(&current) {
                Ok(Some(path)) => path.first().copied(),
                _ => None,
            };
            let action = match greedy {
                Some(a) if !self.action_rng.gen_bool(self.noise) => a,
                _ => *Action::ALL
                    .choose(&mut self.action_rng)
                    .expect("four actions"),
            };
            current = current.step(action).0;
            actions.push(action);
        }
        actions
    }
}

impl Policy for SolverPolicy {
    fn commit(&mut self, obs: &Observation<'_>) -> Result<Commitment, PolicyError> {
        let path = self.path(obs.state)?;
        let h = match self.depth {
            DepthSource::Fixed(h) => h,
            DepthSource::Random => {
                let hs = obs.depths.depths();
                hs[(self.depth_rng.next_u64() % hs.len() as u64) as usize]
            }
            DepthSource::Oracle => {
                if path.is_empty() {
                    return Err(PolicyError::Solver("state is already solved".into()));
                }
                oracle_depth_sequence(path.len() as u32, obs.depths)[0]
            }
        };
        let actions = if self.noise > 0.0 {
            self.noisy_actions(obs.state, h)
        } else {
            solver_prefix(&path, h)
        };
        Ok(Commitment { h, actions })
    }
}
