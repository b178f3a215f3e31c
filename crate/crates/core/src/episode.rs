//! Open-loop commitment execution and the budgeted decision loop.
//!
//! The policy is queried only at decision boundaries. Between two queries
//! the executor applies the committed actions on the primitive clock with no
//! feedback to the policy. An episode ends when the goal is reached (possibly
//! mid-commitment, in which case the remaining actions are dropped) or when
//! the decision budget is spent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::{
    Action, Budget, Clocks, Commitment, CommitmentError, DepthSet, Environment, PuzzleState, Task,
};
use crate::oracle::{Distance, DistanceOracle, ProgressRecord};

/// What a policy sees at a decision point.
#[derive(Debug, Clone, Copy)]
pub struct Observation<'a> {
    pub instance_id: &'a str,
    pub task: Task,
    pub k: u32,
    pub remaining_budget: u32,
    pub state: &'a PuzzleState,
    pub depths: &'a DepthSet,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum PolicyError {
    /// An external policy broke the wire protocol.
    #[error("policy protocol error: {0}")]
    Protocol(String),
    #[error("policy solver error: {0}")]
    Solver(String),
}

/// Anything that maps an observed state to a commitment.
pub trait Policy {
    fn commit(&mut self, obs: &Observation<'_>) -> Result<Commitment, PolicyError>;

    /// Called once when the episode is over.
    fn finish(&mut self, _solved: bool) {}
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub action: Action,
    pub moved: bool,
    pub state_after: PuzzleState,
    /// Filled by [`run_episode`]; `None` straight out of [`execute_commitment`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub progress: Option<ProgressRecord>,
}

/// Applies a commitment open-loop. Stops early, dropping the rest, once a
/// step lands on the goal.
pub fn execute_commitment<E: Environment + ?Sized>(
    env: &E,
    state: &PuzzleState,
    commitment: &Commitment,
    depths: &DepthSet,
) -> Result<(PuzzleState, Vec<StepRecord>), CommitmentError> {
    commitment.validate(depths)?;
    let mut current = state.clone();
    let mut steps = Vec::with_capacity(commitment.actions.len());
    for &action in &commitment.actions {
        let (next, moved) = env.transition(&current, action);
        steps.push(StepRecord {
            action,
            moved,
            state_after: next.clone(),
            progress: None,
        });
        current = next;
        if env.is_goal(&current) {
            break;
        }
    }
    Ok((current, steps))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub k: u32,
    pub t_k: u64,
    pub state_before: PuzzleState,
    pub commitment: Commitment,
    pub steps: Vec<StepRecord>,
    pub d_before: Distance,
    pub d_after: Distance,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeTranscript {
    pub instance_id: String,
    pub task: Task,
    pub decisions: Vec<DecisionRecord>,
    pub solved: bool,
    pub clocks_final: Clocks,
    pub budget_final: Budget,
    /// Why the episode was cut short by the policy, if it was.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

impl EpisodeTranscript {
    pub fn steps(&self) -> impl Iterator<Item = &StepRecord> {
        self.decisions.iter().flat_map(|d| d.steps.iter())
    }

    /// Per-step `Δd` values in execution order.
    pub fn deltas(&self) -> Vec<i64> {
        self.steps()
            .filter_map(|s| s.progress.map(|p| p.delta))
            .collect()
    }

    pub fn actions(&self) -> u64 {
        self.clocks_final.t
    }

    pub fn depths_used(&self) -> Vec<u32> {
        self.decisions.iter().map(|d| d.commitment.h).collect()
    }
}

/// Runs one budgeted episode of `policy` on `env`, annotating every
/// primitive step with its progress `Δd` from `oracle`.
pub fn run_episode<E: Environment + ?Sized>(
    env: &E,
    policy: &mut dyn Policy,
    mut budget: Budget,
    depths: &DepthSet,
    oracle: &DistanceOracle,
) -> EpisodeTranscript {
    assert!(budget.limit >= 1, "decision budget must be positive");
    let instance_id = env.id();
    let task = env.task();
    let mut state = env.reset();
    let mut clocks = Clocks::default();
    let mut decisions = Vec::new();
    let mut failure = None;
    let mut d_state = oracle.distance(&state);

    while !env.is_goal(&state) && !budget.exhausted() {
        let obs = Observation {
            instance_id: &instance_id,
            task,
            k: clocks.k,
            remaining_budget: budget.remaining(),
            state: &state,
            depths,
        };
        let decided = policy.commit(&obs);
        // a query happened, even if its answer is unusable
        budget.consume();
        clocks.t_k = clocks.t;
        let commitment = match decided {
            Ok(c) => c,
            Err(e) => {
                failure = Some(e.to_string());
                clocks.k += 1;
                break;
            }
        };
        let (next, mut steps) = match execute_commitment(env, &state, &commitment, depths) {
            Ok(r) => r,
            Err(e) => {
                failure = Some(format!("invalid commitment: {e}"));
                clocks.k += 1;
                break;
            }
        };
        let d_before = d_state;
        let mut d_prev = d_state;
        for step in &mut steps {
            let d_next = oracle.distance(&step.state_after);
            step.progress = Some(ProgressRecord::new(d_prev, d_next));
            d_prev = d_next;
        }
        clocks.t += steps.len() as u64;
        decisions.push(DecisionRecord {
            k: clocks.k,
            t_k: clocks.t_k,
            state_before: state,
            commitment,
            steps,
            d_before,
            d_after: d_prev,
        });
        clocks.k += 1;
        state = next;
        d_state = d_prev;
    }

    let solved = env.is_goal(&state);
    policy.finish(solved);
    EpisodeTranscript {
        instance_id,
        task,
        decisions,
        solved,
        clocks_final: clocks,
        budget_final: budget,
        failure,
    }
}
