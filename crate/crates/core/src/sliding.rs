//! Sliding Puzzle: an `n x n` grid of tiles `1..n²-1` and one blank (0).
//!
//! An action names the direction the blank moves, i.e. the neighbouring tile
//! on that side slides into the empty cell. Moves toward an edge are no-ops.
//! The solver is A* with Manhattan distance plus the linear-conflict term,
//! and instances are generated by non-backtracking random walks from the goal
//! that are accepted only when the solver confirms the requested depth.

use std::cmp::Reverse;
use std::collections::hash_map::Entry;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::Action;

/// Largest supported side length (tiles are stored as `u8`).
pub const MAX_N: usize = 15;

pub const DEFAULT_RETRY_CAP: u32 = 10_000;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SlidingError {
    #[error("grid side {0} outside 2..={MAX_N}")]
    BadSize(usize),
    #[error("tiles are not a permutation of 0..{0}")]
    NotPermutation(usize),
    #[error("state is not reachable from the goal (odd parity)")]
    Unsolvable,
    #[error("depth must be at least 1")]
    ZeroDepth,
    #[error("no walk of depth {depth} verified after {attempts} attempts")]
    GenerationExhausted { depth: u32, attempts: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SlidingWire", into = "SlidingWire")]
pub struct SlidingState {
    n: usize,
    tiles: Vec<u8>,
    blank: usize,
}

#[derive(Serialize, Deserialize)]
struct SlidingWire {
    n: usize,
    tiles: Vec<u8>,
}

impl TryFrom<SlidingWire> for SlidingState {
    type Error = SlidingError;

    fn try_from(w: SlidingWire) -> Result<Self, Self::Error> {
        SlidingState::new(w.n, w.tiles)
    }
}

impl From<SlidingState> for SlidingWire {
    fn from(s: SlidingState) -> Self {
        SlidingWire {
            n: s.n,
            tiles: s.tiles,
        }
    }
}

impl SlidingState {
    pub fn new(n: usize, tiles: Vec<u8>) -> Result<Self, SlidingError> {
        if !(2..=MAX_N).contains(&n) {
            return Err(SlidingError::BadSize(n));
        }
        let cells = n * n;
        if tiles.len() != cells {
            return Err(SlidingError::NotPermutation(cells));
        }
        let mut seen = vec![false; cells];
        for &t in &tiles {
            let t = t as usize;
            if t >= cells || seen[t] {
                return Err(SlidingError::NotPermutation(cells));
            }
            seen[t] = true;
        }
        let blank = tiles
            .iter()
            .position(|&t| t == 0)
            .expect("permutation has a blank");
        Ok(SlidingState { n, tiles, blank })
    }

    /// Canonical row-major goal with the blank in the bottom-right corner.
    pub fn goal(n: usize) -> Result<Self, SlidingError> {
        if !(2..=MAX_N).contains(&n) {
            return Err(SlidingError::BadSize(n));
        }
        let cells = n * n;
        let mut tiles: Vec<u8> = (1..cells).map(|t| t as u8).collect();
        tiles.push(0);
        Ok(SlidingState {
            n,
            tiles,
            blank: cells - 1,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn tiles(&self) -> &[u8] {
        &self.tiles
    }

    pub fn blank(&self) -> usize {
        self.blank
    }

    pub fn is_goal(&self) -> bool {
        let last = self.tiles.len() - 1;
        self.blank == last
            && self.tiles[..last]
                .iter()
                .enumerate()
                .all(|(i, &t)| t as usize == i + 1)
    }

    /// Index the blank would move to, or `None` at an edge.
    fn target(&self, action: Action) -> Option<usize> {
        let n = self.n as isize;
        let (r, c) = (
            (self.blank / self.n) as isize,
            (self.blank % self.n) as isize,
        );
        let (dr, dc) = action.offset();
        let (nr, nc) = (r + dr, c + dc);
        if nr < 0 || nr >= n || nc < 0 || nc >= n {
            None
        } else {
            Some((nr * n + nc) as usize)
        }
    }

    pub fn can_move(&self, action: Action) -> bool {
        self.target(action).is_some()
    }

    pub fn step(&self, action: Action) -> (SlidingState, bool) {
        match self.target(action) {
            None => (self.clone(), false),
            Some(to) => {
                let mut next = self.clone();
                next.tiles.swap(self.blank, to);
                next.blank = to;
                (next, true)
            }
        }
    }

    fn step_in_place(&mut self, action: Action) -> bool {
        match self.target(action) {
            None => false,
            Some(to) => {
                self.tiles.swap(self.blank, to);
                self.blank = to;
                true
            }
        }
    }

    /// Reachability from the goal. For odd `n` the tile permutation (blank
    /// removed) must be even; for even `n` the inversion count plus the
    /// blank's row distance from the bottom must be even.
    pub fn is_solvable(&self) -> bool {
        let seq: Vec<u8> = self.tiles.iter().copied().filter(|&t| t != 0).collect();
        let mut inversions = 0usize;
        for i in 0..seq.len() {
            for j in i + 1..seq.len() {
                if seq[i] > seq[j] {
                    inversions += 1;
                }
            }
        }
        if self.n % 2 == 1 {
            inversions.is_multiple_of(2)
        } else {
            let rows_from_bottom = self.n - 1 - self.blank / self.n;
            (inversions + rows_from_bottom).is_multiple_of(2)
        }
    }

    pub fn manhattan(&self) -> u32 {
        let n = self.n;
        let mut sum = 0;
        for (i, &t) in self.tiles.iter().enumerate() {
            if t == 0 {
                continue;
            }
            let g = t as usize - 1;
            sum += (i / n).abs_diff(g / n) + (i % n).abs_diff(g % n);
        }
        sum as u32
    }

    /// Extra moves forced by tiles that sit in their goal row (or column)
    /// in the wrong relative order. Per line this is twice the number of
    /// tiles that must leave the line, i.e. the line length minus the longest
    /// increasing run of goal positions, which keeps the bound admissible even
    /// when three or more tiles are mutually reversed.
    pub fn linear_conflict(&self) -> u32 {
        let n = self.n;
        let mut extra = 0;
        let mut line: Vec<usize> = Vec::with_capacity(n);
        for r in 0..n {
            line.clear();
            for c in 0..n {
                let t = self.tiles[r * n + c];
                if t != 0 && (t as usize - 1) / n == r {
                    line.push((t as usize - 1) % n);
                }
            }
            extra += line.len() - longest_increasing(&line);
        }
        for c in 0..n {
            line.clear();
            for r in 0..n {
                let t = self.tiles[r * n + c];
                if t != 0 && (t as usize - 1) % n == c {
                    line.push((t as usize - 1) / n);
                }
            }
            extra += line.len() - longest_increasing(&line);
        }
        2 * extra as u32
    }

    /// Admissible A* heuristic.
    pub fn heuristic(&self) -> u32 {
        self.manhattan() + self.linear_conflict()
    }
}

fn longest_increasing(seq: &[usize]) -> usize {
    let mut tails: Vec<usize> = Vec::with_capacity(seq.len());
    for &x in seq {
        match tails.binary_search(&x) {
            Ok(_) => {}
            Err(pos) if pos == tails.len() => tails.push(x),
            Err(pos) => tails[pos] = x,
        }
    }
    tails.len()
}

impl fmt::Display for SlidingState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = if self.n * self.n > 10 { 3 } else { 2 };
        for r in 0..self.n {
            for c in 0..self.n {
                match self.tiles[r * self.n + c] {
                    0 => write!(f, "{:>width$}", ".")?,
                    t => write!(f, "{t:>width$}")?,
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn sliding_goal(n: usize) -> Result<SlidingState, SlidingError> {
    SlidingState::goal(n)
}

pub fn sliding_step(state: &SlidingState, action: Action) -> (SlidingState, bool) {
    state.step(action)
}

pub fn sliding_solvable(state: &SlidingState) -> bool {
    state.is_solvable()
}

struct Node {
    state: SlidingState,
    parent: u32,
    action: Option<Action>,
    g: u32,
}

/// Shortest action sequence from `state` to the goal.
pub fn sliding_solve(state: &SlidingState) -> Result<Vec<Action>, SlidingError> {
    if !state.is_solvable() {
        return Err(SlidingError::Unsolvable);
    }
    if state.is_goal() {
        return Ok(Vec::new());
    }

    let mut nodes = vec![Node {
        state: state.clone(),
        parent: u32::MAX,
        action: None,
        g: 0,
    }];
    let mut best_g: HashMap<Vec<u8>, u32> = HashMap::new();
    best_g.insert(state.tiles.clone(), 0);
    // (f, h, insertion order) keeps pops deterministic
    let mut open: BinaryHeap<Reverse<(u32, u32, u32)>> = BinaryHeap::new();
    let h0 = state.heuristic();
    open.push(Reverse((h0, h0, 0)));

    while let Some(Reverse((_, _, idx))) = open.pop() {
        let (g, current) = {
            let node = &nodes[idx as usize];
            (node.g, node.state.clone())
        };
        if best_g.get(&current.tiles).is_some_and(|&b| b < g) {
            continue;
        }
        if current.is_goal() {
            let mut path = Vec::with_capacity(g as usize);
            let mut i = idx;
            while let Some(a) = nodes[i as usize].action {
                path.push(a);
                i = nodes[i as usize].parent;
            }
            path.reverse();
            return Ok(path);
        }
        let came_from = nodes[idx as usize].action.map(Action::inverse);
        for action in Action::ALL {
            if Some(action) == came_from {
                continue;
            }
            let mut child = current.clone();
            if !child.step_in_place(action) {
                continue;
            }
            let cg = g + 1;
            match best_g.entry(child.tiles.clone()) {
                Entry::Occupied(mut e) => {
                    if *e.get() <= cg {
                        continue;
                    }
                    e.insert(cg);
                }
                Entry::Vacant(e) => {
                    e.insert(cg);
                }
            }
            let h = child.heuristic();
            let child_idx = nodes.len() as u32;
            nodes.push(Node {
                state: child,
                parent: idx,
                action: Some(action),
                g: cg,
            });
            open.push(Reverse((cg + h, h, child_idx)));
        }
    }
    // A solvable state always reaches the goal; the parity check above
    // guarantees we never get here.
    Err(SlidingError::Unsolvable)
}

/// A verified Sliding Puzzle instance whose optimal solution length is `depth`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "SlidingInstanceWire", into = "SlidingInstanceWire")]
pub struct SlidingInstance {
    pub start: SlidingState,
    pub depth: u32,
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct SlidingInstanceWire {
    n: usize,
    tiles: Vec<u8>,
    depth: u32,
    seed: u64,
}

impl TryFrom<SlidingInstanceWire> for SlidingInstance {
    type Error = SlidingError;

    fn try_from(w: SlidingInstanceWire) -> Result<Self, Self::Error> {
        Ok(SlidingInstance {
            start: SlidingState::new(w.n, w.tiles)?,
            depth: w.depth,
            seed: w.seed,
        })
    }
}

impl From<SlidingInstance> for SlidingInstanceWire {
    fn from(i: SlidingInstance) -> Self {
        SlidingInstanceWire {
            n: i.start.n,
            tiles: i.start.tiles,
            depth: i.depth,
            seed: i.seed,
        }
    }
}

impl SlidingInstance {
    pub fn id(&self) -> String {
        format!("sliding-n{}-d{}-s{}", self.start.n, self.depth, self.seed)
    }
}

pub fn sliding_generate(n: usize, depth: u32, seed: u64) -> Result<SlidingInstance, SlidingError> {
    sliding_generate_with_cap(n, depth, seed, DEFAULT_RETRY_CAP)
}

pub fn sliding_generate_with_cap(
    n: usize,
    depth: u32,
    seed: u64,
    retry_cap: u32,
) -> Result<SlidingInstance, SlidingError> {
    if depth == 0 {
        return Err(SlidingError::ZeroDepth);
    }
    let goal = SlidingState::goal(n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut options = Vec::with_capacity(4);
    for _ in 0..retry_cap {
        let mut state = goal.clone();
        let mut prev: Option<Action> = None;
        for _ in 0..depth {
            options.clear();
            options.extend(
                Action::ALL
                    .into_iter()
                    .filter(|&a| Some(a.inverse()) != prev && state.can_move(a)),
            );
            let &a = options
                .choose(&mut rng)
                .expect("every cell has a non-backtracking move");
            state.step_in_place(a);
            prev = Some(a);
        }
        let solution = sliding_solve(&state)?;
        if solution.len() == depth as usize {
            return Ok(SlidingInstance {
                start: state,
                depth,
                seed,
            });
        }
    }
    Err(SlidingError::GenerationExhausted {
        depth,
        attempts: retry_cap,
    })
}
