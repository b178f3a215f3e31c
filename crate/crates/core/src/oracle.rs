//! Exact progress signal and the solver-grounded within-depth-set oracle.
//!
//! `d(s)` is the optimal number of primitive actions to the goal (infinite
//! for unsolvable Sokoban states). Per-step progress is `d(s) - d(s')`, with
//! transitions into unsolvable states clamped to zero so the signal stays
//! bounded.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::episode::{run_episode, Observation, Policy, PolicyError};
use crate::mdp::{
    Action, Budget, BudgetSpec, Commitment, DepthSet, Environment, Instance, PuzzleState,
};
use crate::sliding::{sliding_solve, SlidingError};
use crate::sokoban::{sokoban_solve, SokobanError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Distance {
    Finite(u32),
    Infinite,
}

impl Distance {
    pub fn is_finite(self) -> bool {
        matches!(self, Distance::Finite(_))
    }

    pub fn finite(self) -> Option<u32> {
        match self {
            Distance::Finite(d) => Some(d),
            Distance::Infinite => None,
        }
    }
}

impl PartialOrd for Distance {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Distance {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Distance::Finite(a), Distance::Finite(b)) => a.cmp(b),
            (Distance::Finite(_), Distance::Infinite) => Ordering::Less,
            (Distance::Infinite, Distance::Finite(_)) => Ordering::Greater,
            (Distance::Infinite, Distance::Infinite) => Ordering::Equal,
        }
    }
}

impl fmt::Display for Distance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Distance::Finite(d) => write!(f, "{d}"),
            Distance::Infinite => f.write_str("inf"),
        }
    }
}

// Finite distances are JSON numbers, infinity is the string "inf".
impl Serialize for Distance {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Distance::Finite(d) => serializer.serialize_u32(*d),
            Distance::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Distance {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            N(u32),
            S(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::N(d) => Ok(Distance::Finite(d)),
            Raw::S(s) if s == "inf" => Ok(Distance::Infinite),
            Raw::S(s) => Err(serde::de::Error::custom(format!("bad distance {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProgressRecord {
    pub d_before: Distance,
    pub d_after: Distance,
    pub delta: i64,
}

impl ProgressRecord {
    pub fn new(d_before: Distance, d_after: Distance) -> Self {
        ProgressRecord {
            d_before,
            d_after,
            delta: delta_of(d_before, d_after),
        }
    }
}

/// `d_before - d_after`, or 0 when the step lands in an unsolvable state.
pub fn delta_of(d_before: Distance, d_after: Distance) -> i64 {
    match (d_before, d_after) {
        (Distance::Finite(a), Distance::Finite(b)) => a as i64 - b as i64,
        _ => 0,
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("state has no solution")]
    Unsolvable,
    #[error("solver failed: {0}")]
    Failed(String),
}

/// Optimal solution from any puzzle state.
pub fn solve(state: &PuzzleState) -> Result<Vec<Action>, SolveError> {
    match state {
        PuzzleState::Sliding(s) => sliding_solve(s).map_err(|e| match e {
            SlidingError::Unsolvable => SolveError::Unsolvable,
            other => SolveError::Failed(other.to_string()),
        }),
        PuzzleState::Sokoban(s) => sokoban_solve(s).map_err(|e| match e {
            SokobanError::Unsolvable => SolveError::Unsolvable,
            other => SolveError::Failed(other.to_string()),
        }),
    }
}

/// Memoised exact solver shared across episodes and workers.
///
/// Solutions are cached only under the state they were computed from, so a
/// lookup always returns the same path regardless of which episodes ran
/// first. Distances along a returned path are filled in as a side effect.
#[derive(Debug, Default)]
pub struct DistanceOracle {
    solutions: Mutex<HashMap<PuzzleState, Option<Arc<[Action]>>>>,
    distances: Mutex<HashMap<PuzzleState, Distance>>,
}

impl DistanceOracle {
    pub fn new() -> Self {
        Self::default()
    }

    /// Optimal path from `state`, `None` if no solution exists.
    pub fn solution(&self, state: &PuzzleState) -> Result<Option<Arc<[Action]>>, SolveError> {
        if let Some(hit) = self.solutions.lock().expect("cache poisoned").get(state) {
            return Ok(hit.clone());
        }
        let solved = match solve(state) {
            Ok(path) => Some(Arc::<[Action]>::from(path)),
            Err(SolveError::Unsolvable) => None,
            Err(e) => return Err(e),
        };
        {
            let mut distances = self.distances.lock().expect("cache poisoned");
            match &solved {
                Some(path) => {
                    let mut s = state.clone();
                    let len = path.len() as u32;
                    distances.insert(s.clone(), Distance::Finite(len));
                    for (i, &a) in path.iter().enumerate() {
                        s = s.step(a).0;
                        distances.insert(s.clone(), Distance::Finite(len - i as u32 - 1));
                    }
                }
                None => {
                    distances.insert(state.clone(), Distance::Infinite);
                }
            }
        }
        self.solutions
            .lock()
            .expect("cache poisoned")
            .insert(state.clone(), solved.clone());
        Ok(solved)
    }

    /// `d(s)`. A solver that gives up is reported as unreachable.
    pub fn distance(&self, state: &PuzzleState) -> Distance {
        if let Some(&d) = self.distances.lock().expect("cache poisoned").get(state) {
            return d;
        }
        if let PuzzleState::Sokoban(s) = state {
            if crate::sokoban::sokoban_deadlock(s) {
                return Distance::Infinite;
            }
        }
        match self.solution(state) {
            Ok(Some(path)) => Distance::Finite(path.len() as u32),
            Ok(None) | Err(_) => Distance::Infinite,
        }
    }

    pub fn delta(&self, state: &PuzzleState, next: &PuzzleState) -> i64 {
        delta_of(self.distance(state), self.distance(next))
    }
}

/// Uncached `d(s)`.
pub fn distance(state: &PuzzleState) -> Distance {
    match solve(state) {
        Ok(path) => Distance::Finite(path.len() as u32),
        Err(_) => Distance::Infinite,
    }
}

/// Uncached `Δd` for one transition.
pub fn delta(state: &PuzzleState, next: &PuzzleState) -> i64 {
    delta_of(distance(state), distance(next))
}

/// Splits `remaining` primitive actions into the fewest commitments drawn
/// from `depths`, preferring larger depths first among minimal schedules.
///
/// If `remaining` cannot be written as an exact sum of depths, the final
/// commitment overshoots (the episode stops at the goal anyway).
pub fn oracle_depth_sequence(remaining: u32, depths: &DepthSet) -> Vec<u32> {
    let r = remaining as usize;
    if r == 0 {
        return Vec::new();
    }
    // fewest[x] = minimal number of depths summing exactly to x
    let mut fewest = vec![u32::MAX; r + 1];
    fewest[0] = 0;
    for x in 1..=r {
        for &h in depths.depths() {
            let h = h as usize;
            if h <= x && fewest[x - h] != u32::MAX {
                fewest[x] = fewest[x].min(fewest[x - h] + 1);
            }
        }
    }
    if fewest[r] == u32::MAX {
        let hmax = depths.max();
        let mut out = vec![hmax; (remaining / hmax) as usize];
        let rest = remaining % hmax;
        if rest > 0 {
            let last = depths
                .depths()
                .iter()
                .copied()
                .find(|&h| h >= rest)
                .unwrap_or(hmax);
            out.push(last);
        }
        return out;
    }
    let mut out = Vec::with_capacity(fewest[r] as usize);
    let mut x = r;
    while x > 0 {
        let h = depths
            .depths()
            .iter()
            .rev()
            .map(|&h| h as usize)
            .find(|&h| h <= x && fewest[x - h] != u32::MAX && fewest[x - h] + 1 == fewest[x])
            .expect("a minimal step exists");
        out.push(h as u32);
        x -= h;
    }
    out
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("oracle invoked on a state with no solution")]
    Unsolvable,
    #[error("oracle invoked on a goal state")]
    AlreadySolved,
    #[error(transparent)]
    Solver(#[from] SolveError),
}

/// The oracle's commitment at `state`: the first depth of the minimal
/// schedule for `d(state)`, filled with the first optimal actions.
pub fn oracle_policy(
    state: &PuzzleState,
    depths: &DepthSet,
    oracle: &DistanceOracle,
) -> Result<Commitment, OracleError> {
    let path = oracle.solution(state)?.ok_or(OracleError::Unsolvable)?;
    if path.is_empty() {
        return Err(OracleError::AlreadySolved);
    }
    let h = oracle_depth_sequence(path.len() as u32, depths)[0];
    Ok(Commitment {
        h,
        actions: solver_prefix(&path, h),
    })
}

/// First `h` actions of `path`, padded when the path is shorter. Padding is
/// never executed because the episode ends at the goal.
pub fn solver_prefix(path: &[Action], h: u32) -> Vec<Action> {
    let h = h as usize;
    let mut actions: Vec<Action> = path.iter().copied().take(h).collect();
    let pad = path.last().copied().unwrap_or(Action::Up);
    actions.resize(h, pad);
    actions
}

/// [`Policy`] adapter around [`oracle_policy`].
pub struct OraclePolicy {
    oracle: Arc<DistanceOracle>,
}

impl OraclePolicy {
    pub fn new(oracle: Arc<DistanceOracle>) -> Self {
        OraclePolicy { oracle }
    }
}

impl Policy for OraclePolicy {
    fn commit(&mut self, obs: &Observation<'_>) -> Result<Commitment, PolicyError> {
        oracle_policy(obs.state, obs.depths, &self.oracle)
            .map_err(|e| PolicyError::Solver(e.to_string()))
    }
}

/// Empirical frequency of each depth across all oracle decisions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthHistogram {
    pub h: Vec<u32>,
    pub freq: Vec<f64>,
    pub decisions: u64,
    pub counts: Vec<u64>,
    pub episodes: usize,
    pub solve_rate: f64,
    pub mean_actions: f64,
}

impl DepthHistogram {
    pub fn from_counts(
        depths: &DepthSet,
        counts: &BTreeMap<u32, u64>,
        episodes: usize,
        solved: usize,
        actions: u64,
    ) -> Self {
        let decisions: u64 = counts.values().sum();
        let h = depths.depths().to_vec();
        let counts: Vec<u64> = h
            .iter()
            .map(|h| counts.get(h).copied().unwrap_or(0))
            .collect();
        let freq = counts
            .iter()
            .map(|&c| {
                if decisions == 0 {
                    0.0
                } else {
                    c as f64 / decisions as f64
                }
            })
            .collect();
        let per_episode = |x: f64| {
            if episodes == 0 {
                0.0
            } else {
                x / episodes as f64
            }
        };
        DepthHistogram {
            h,
            freq,
            decisions,
            counts,
            episodes,
            solve_rate: per_episode(solved as f64),
            mean_actions: per_episode(actions as f64),
        }
    }
}

/// Runs the oracle on every instance (budget per task preset, or an explicit
/// limit) and tallies the depths it picked.
pub fn oracle_distribution(
    instances: &[Instance],
    budget: BudgetSpec,
    depths: &DepthSet,
    oracle: &Arc<DistanceOracle>,
) -> DepthHistogram {
    let mut counts = BTreeMap::new();
    let (mut solved, mut actions) = (0, 0);
    for inst in instances {
        let limit = budget.limit(inst.task());
        let mut policy = OraclePolicy::new(Arc::clone(oracle));
        let transcript = run_episode(inst, &mut policy, Budget::new(limit), depths, oracle);
        for d in &transcript.decisions {
            *counts.entry(d.commitment.h).or_insert(0u64) += 1;
        }
        solved += transcript.solved as usize;
        actions += transcript.clocks_final.t;
    }
    DepthHistogram::from_counts(depths, &counts, instances.len(), solved, actions)
}
