//! The deterministic puzzle MDP: primitive actions, depth sets, commitments,
//! budgets, the two clocks and the environment contract every task implements.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::sliding::{SlidingInstance, SlidingState};
use crate::sokoban::{SokobanInstance, SokobanState};

/// Largest commitment the action decoder can emit.
pub const MAX_DEPTH: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Left, Action::Right];

    pub fn inverse(self) -> Action {
        match self {
            Action::Up => Action::Down,
            Action::Down => Action::Up,
            Action::Left => Action::Right,
            Action::Right => Action::Left,
        }
    }

    /// Row/column offset of the motion, `(drow, dcol)`.
    pub fn offset(self) -> (isize, isize) {
        match self {
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
            Action::Left => (0, -1),
            Action::Right => (0, 1),
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Action::Up => 'U',
            Action::Down => 'D',
            Action::Left => 'L',
            Action::Right => 'R',
        }
    }

    pub fn from_char(c: char) -> Option<Action> {
        match c {
            'U' => Some(Action::Up),
            'D' => Some(Action::Down),
            'L' => Some(Action::Left),
            'R' => Some(Action::Right),
            _ => None,
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

impl FromStr for Action {
    type Err = ParseActionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        match (chars.next(), chars.next()) {
            (Some(c), None) => Action::from_char(c).ok_or_else(|| ParseActionError(s.to_string())),
            _ => Err(ParseActionError(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("invalid action {0:?}, expected one of U, D, L, R")]
pub struct ParseActionError(pub String);

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut buf = [0u8; 4];
        serializer.serialize_str(self.as_char().encode_utf8(&mut buf))
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Renders an action sequence as a compact string such as `"UULR"`.
pub fn actions_to_string(actions: &[Action]) -> String {
    actions.iter().map(|a| a.as_char()).collect()
}

pub fn parse_actions(s: &str) -> Result<Vec<Action>, ParseActionError> {
    s.chars()
        .filter(|c| !c.is_whitespace() && *c != ',')
        .map(|c| Action::from_char(c).ok_or_else(|| ParseActionError(c.to_string())))
        .collect()
}

/// The admissible commitment depths of a run, strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct DepthSet(Vec<u32>);

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum DepthSetError {
    #[error("depth set is empty")]
    Empty,
    #[error("depths must be strictly increasing, got {0:?}")]
    NotIncreasing(Vec<u32>),
    #[error("depth {0} outside 1..={MAX_DEPTH}")]
    OutOfRange(u32),
}

impl DepthSet {
    pub fn new(mut depths: Vec<u32>) -> Result<Self, DepthSetError> {
        if depths.is_empty() {
            return Err(DepthSetError::Empty);
        }
        if let Some(&bad) = depths.iter().find(|&&h| h == 0 || h > MAX_DEPTH) {
            return Err(DepthSetError::OutOfRange(bad));
        }
        if depths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DepthSetError::NotIncreasing(depths));
        }
        depths.shrink_to_fit();
        Ok(DepthSet(depths))
    }

    pub fn depths(&self) -> &[u32] {
        &self.0
    }

    pub fn contains(&self, h: u32) -> bool {
        self.0.binary_search(&h).is_ok()
    }

    pub fn max(&self) -> u32 {
        *self.0.last().expect("non-empty")
    }

    pub fn min(&self) -> u32 {
        self.0[0]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Returns this set with `h` added (used for descriptive fixed-depth sweeps).
    pub fn with(&self, h: u32) -> Result<DepthSet, DepthSetError> {
        let mut v = self.0.clone();
        if !self.contains(h) {
            v.push(h);
            v.sort_unstable();
        }
        DepthSet::new(v)
    }
}

impl FromStr for DepthSet {
    type Err = String;

    /// Comma-separated depths, e.g. `1,2,4,8`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let depths = s
            .split(',')
            .map(|p| {
                p.trim()
                    .parse::<u32>()
                    .map_err(|_| format!("bad depth {p:?}"))
            })
            .collect::<Result<Vec<_>, _>>()?;
        DepthSet::new(depths).map_err(|e| e.to_string())
    }
}

impl fmt::Display for DepthSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl Default for DepthSet {
    fn default() -> Self {
        DepthSet(vec![1, 2, 4, 8])
    }
}

impl<'de> Deserialize<'de> for DepthSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = Vec::<u32>::deserialize(deserializer)?;
        DepthSet::new(v).map_err(serde::de::Error::custom)
    }
}

/// A depth and the open-loop action sequence of exactly that length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Commitment {
    pub h: u32,
    pub actions: Vec<Action>,
}

impl Commitment {
    pub fn new(actions: Vec<Action>) -> Self {
        Commitment {
            h: actions.len() as u32,
            actions,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CommitmentError {
    #[error("depth {0} is not in the run's depth set")]
    InvalidDepth(u32),
    #[error("commitment declares h={h} but carries {len} actions")]
    LengthMismatch { h: u32, len: usize },
}

impl Commitment {
    pub fn validate(&self, depths: &DepthSet) -> Result<(), CommitmentError> {
        if !depths.contains(self.h) {
            return Err(CommitmentError::InvalidDepth(self.h));
        }
        if self.actions.len() != self.h as usize {
            return Err(CommitmentError::LengthMismatch {
                h: self.h,
                len: self.actions.len(),
            });
        }
        Ok(())
    }
}

/// Decision budget: at most `limit` decisions per episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budget {
    pub limit: u32,
    pub used: u32,
}

impl Budget {
    pub fn new(limit: u32) -> Self {
        Budget { limit, used: 0 }
    }

    pub fn remaining(&self) -> u32 {
        self.limit - self.used
    }

    pub fn exhausted(&self) -> bool {
        self.used >= self.limit
    }

    pub(crate) fn consume(&mut self) {
        debug_assert!(self.used < self.limit);
        self.used += 1;
    }
}

/// Named budget regimes per task.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BudgetPreset {
    Tight,
    Loose,
}

impl BudgetPreset {
    pub fn limit(self, task: Task) -> u32 {
        match (task, self) {
            (Task::Sliding, BudgetPreset::Tight) => 10,
            (Task::Sliding, BudgetPreset::Loose) => 15,
            (Task::Sokoban, BudgetPreset::Tight) => 4,
            (Task::Sokoban, BudgetPreset::Loose) => 6,
        }
    }
}

impl FromStr for BudgetPreset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tight" => Ok(BudgetPreset::Tight),
            "loose" => Ok(BudgetPreset::Loose),
            other => Err(format!("unknown budget preset {other:?}")),
        }
    }
}

/// A named per-task preset or an explicit decision budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BudgetSpec {
    Preset(BudgetPreset),
    Limit(u32),
}

impl BudgetSpec {
    pub fn limit(self, task: Task) -> u32 {
        match self {
            BudgetSpec::Preset(p) => p.limit(task),
            BudgetSpec::Limit(k) => k,
        }
    }
}

impl FromStr for BudgetSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.parse::<u32>() {
            Ok(0) => Err("decision budget must be positive".into()),
            Ok(k) => Ok(BudgetSpec::Limit(k)),
            Err(_) => s.parse().map(BudgetSpec::Preset),
        }
    }
}

impl fmt::Display for BudgetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BudgetSpec::Preset(BudgetPreset::Tight) => f.write_str("tight"),
            BudgetSpec::Preset(BudgetPreset::Loose) => f.write_str("loose"),
            BudgetSpec::Limit(k) => write!(f, "{k}"),
        }
    }
}

/// Primitive clock `t`, decision clock `k`, and `t_k`, the primitive time at
/// which the latest decision was taken.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Clocks {
    pub t: u64,
    pub k: u32,
    pub t_k: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Sliding,
    Sokoban,
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Sliding => "sliding",
            Task::Sokoban => "sokoban",
        })
    }
}

impl FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sliding" => Ok(Task::Sliding),
            "sokoban" => Ok(Task::Sokoban),
            other => Err(format!("unknown task {other:?}")),
        }
    }
}

/// The MDP state `s`: one of the two puzzle families.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum PuzzleState {
    Sliding(SlidingState),
    Sokoban(SokobanState),
}

impl PuzzleState {
    pub fn task(&self) -> Task {
        match self {
            PuzzleState::Sliding(_) => Task::Sliding,
            PuzzleState::Sokoban(_) => Task::Sokoban,
        }
    }

    /// Deterministic transition; blocked moves return the state unchanged
    /// with `moved == false`.
    pub fn step(&self, action: Action) -> (PuzzleState, bool) {
        match self {
            PuzzleState::Sliding(s) => {
                let (next, moved) = s.step(action);
                (PuzzleState::Sliding(next), moved)
            }
            PuzzleState::Sokoban(s) => {
                let (next, moved) = s.step(action);
                (PuzzleState::Sokoban(next), moved)
            }
        }
    }

    pub fn is_goal(&self) -> bool {
        match self {
            PuzzleState::Sliding(s) => s.is_goal(),
            PuzzleState::Sokoban(s) => s.is_solved(),
        }
    }

    /// Grid `(width, height)` in cells.
    pub fn dimensions(&self) -> (usize, usize) {
        match self {
            PuzzleState::Sliding(s) => (s.n(), s.n()),
            PuzzleState::Sokoban(s) => (s.width(), s.height()),
        }
    }
}

impl fmt::Display for PuzzleState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PuzzleState::Sliding(s) => write!(f, "{s}"),
            PuzzleState::Sokoban(s) => write!(f, "{s}"),
        }
    }
}

/// What every task environment exposes to the executor and the harness.
pub trait Environment {
    fn id(&self) -> String;
    fn task(&self) -> Task;
    /// Initial state of the episode.
    fn reset(&self) -> PuzzleState;
    fn transition(&self, state: &PuzzleState, action: Action) -> (PuzzleState, bool) {
        state.step(action)
    }
    fn is_goal(&self, state: &PuzzleState) -> bool {
        state.is_goal()
    }
    fn grid_dimensions(&self) -> (usize, usize) {
        self.reset().dimensions()
    }
    fn render(&self, state: &PuzzleState) -> Vec<u8> {
        crate::datagen::render_state(state)
    }
}

/// A generated, solver-verified problem instance of either task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum Instance {
    Sliding(SlidingInstance),
    Sokoban(SokobanInstance),
}

impl Instance {
    pub fn id(&self) -> String {
        match self {
            Instance::Sliding(i) => i.id(),
            Instance::Sokoban(i) => i.id(),
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Instance::Sliding(i) => i.seed,
            Instance::Sokoban(i) => i.seed,
        }
    }

    /// `H*`, the optimal solution length from the start state.
    pub fn optimal_length(&self) -> u32 {
        match self {
            Instance::Sliding(i) => i.depth,
            Instance::Sokoban(i) => i.optimal_length,
        }
    }

    pub fn start(&self) -> PuzzleState {
        self.reset()
    }
}

impl Environment for Instance {
    fn id(&self) -> String {
        Instance::id(self)
    }

    fn task(&self) -> Task {
        match self {
            Instance::Sliding(_) => Task::Sliding,
            Instance::Sokoban(_) => Task::Sokoban,
        }
    }

    fn reset(&self) -> PuzzleState {
        match self {
            Instance::Sliding(i) => PuzzleState::Sliding(i.start.clone()),
            Instance::Sokoban(i) => PuzzleState::Sokoban(i.start.clone()),
        }
    }
}
