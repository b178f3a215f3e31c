//! Reverse-pull level generation.
//!
//! Boxes start on their goals and the player walks backwards, dragging boxes
//! behind it (a pull is the time reversal of a push), so every scrambled
//! state is solvable by construction. Interior walls are then added greedily
//! at shuffled free cells, each kept only if the level stays solvable.

use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    sokoban_deadlock, sokoban_solve_with_limit, Board, SokobanError, SokobanState, SokobanWire,
};
use crate::mdp::Action;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    /// Inclusive range the number of scramble steps is drawn from.
    pub scramble_min: u32,
    pub scramble_max: u32,
    /// Probability of dragging an adjacent box along on a backward step.
    pub pull_probability: f64,
    /// Fraction of free cells tried as extra walls.
    pub wall_fraction: f64,
    pub retry_cap: u32,
    /// Per-solve node budget used while generating.
    pub node_limit: u64,
    /// Accepted range of optimal solution lengths; other levels are retried.
    pub min_length: u32,
    pub max_length: u32,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            scramble_min: 4,
            scramble_max: 24,
            pull_probability: 0.75,
            wall_fraction: 0.2,
            retry_cap: 1_000,
            node_limit: 2_000_000,
            min_length: 1,
            max_length: u32::MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InstanceWire", into = "InstanceWire")]
pub struct SokobanInstance {
    pub start: SokobanState,
    pub boxes_count: usize,
    pub seed: u64,
    pub optimal_length: u32,
}

#[derive(Serialize, Deserialize)]
struct InstanceWire {
    #[serde(flatten)]
    state: SokobanWire,
    seed: u64,
    optimal_length: u32,
}

impl TryFrom<InstanceWire> for SokobanInstance {
    type Error = SokobanError;

    fn try_from(w: InstanceWire) -> Result<Self, Self::Error> {
        let start = SokobanState::try_from(w.state)?;
        Ok(SokobanInstance {
            boxes_count: start.boxes.len(),
            start,
            seed: w.seed,
            optimal_length: w.optimal_length,
        })
    }
}

impl From<SokobanInstance> for InstanceWire {
    fn from(i: SokobanInstance) -> Self {
        InstanceWire {
            state: i.start.into(),
            seed: i.seed,
            optimal_length: i.optimal_length,
        }
    }
}

impl SokobanInstance {
    pub fn id(&self) -> String {
        format!(
            "sokoban-{}x{}-b{}-s{}",
            self.start.width(),
            self.start.height(),
            self.boxes_count,
            self.seed
        )
    }
}

pub fn sokoban_generate(
    width: usize,
    height: usize,
    boxes: usize,
    seed: u64,
) -> Result<SokobanInstance, SokobanError> {
    sokoban_generate_with(width, height, boxes, seed, &GenConfig::default())
}

pub fn sokoban_generate_with(
    width: usize,
    height: usize,
    boxes: usize,
    seed: u64,
    config: &GenConfig,
) -> Result<SokobanInstance, SokobanError> {
    let exhausted = |attempts| SokobanError::GenerationExhausted {
        width,
        height,
        boxes,
        attempts,
    };
    if width < 3 || height < 3 || boxes == 0 || (width - 2) * (height - 2) < boxes + 1 {
        return Err(exhausted(0));
    }

    let mut walls = vec![false; width * height];
    let mut interior = Vec::new();
    for y in 0..height {
        for x in 0..width {
            let c = y * width + x;
            if x == 0 || y == 0 || x == width - 1 || y == height - 1 {
                walls[c] = true;
            } else {
                interior.push(c);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..config.retry_cap {
        let mut cells = interior.clone();
        cells.shuffle(&mut rng);
        let goals = cells[..boxes].to_vec();
        let board = Arc::new(Board::new(width, height, walls.clone(), goals.clone())?);
        let mut state = SokobanState::on_board(board, goals, cells[boxes])?;

        let steps =
            rng.gen_range(config.scramble_min..=config.scramble_max.max(config.scramble_min));
        pull_scramble(&mut state, steps, config.pull_probability, &mut rng);
        if state.is_solved() || sokoban_deadlock(&state) {
            continue;
        }
        if !matches!(sokoban_solve_with_limit(&state, config.node_limit), Ok(ref s) if !s.is_empty())
        {
            continue;
        }

        let state = add_walls(state, config, &mut rng)?;
        match sokoban_solve_with_limit(&state, config.node_limit) {
            Ok(solution)
                if (config.min_length.max(1)..=config.max_length)
                    .contains(&(solution.len() as u32)) =>
            {
                return Ok(SokobanInstance {
                    boxes_count: boxes,
                    start: state,
                    seed,
                    optimal_length: solution.len() as u32,
                });
            }
            _ => continue,
        }
    }
    Err(exhausted(config.retry_cap))
}

/// Walks the player backwards for `steps` moves. Blocked moves are redrawn;
/// after `8 * steps` draws the scramble stops where it is.
fn pull_scramble(
    state: &mut SokobanState,
    steps: u32,
    pull_probability: f64,
    rng: &mut ChaCha8Rng,
) {
    let board = Arc::clone(&state.board);
    let mut done = 0;
    let mut draws = 0;
    while done < steps && draws < steps * 8 {
        draws += 1;
        let action = *Action::ALL.choose(rng).expect("four actions");
        let target = board.neighbor(state.player, action);
        if board.is_wall(target) || state.has_box(target) {
            continue;
        }
        let behind = board.neighbor(state.player, action.inverse());
        if let Ok(i) = state.boxes.binary_search(&behind) {
            if rng.gen_bool(pull_probability) {
                state.boxes.remove(i);
                let j = state.boxes.binary_search(&state.player).unwrap_err();
                state.boxes.insert(j, state.player);
            }
        }
        state.player = target;
        done += 1;
    }
}

fn add_walls(
    state: SokobanState,
    config: &GenConfig,
    rng: &mut ChaCha8Rng,
) -> Result<SokobanState, SokobanError> {
    let board = &state.board;
    let mut free: Vec<usize> = (0..board.walls.len())
        .filter(|&c| {
            !board.is_wall(c) && !board.is_goal(c) && !state.has_box(c) && c != state.player
        })
        .collect();
    free.shuffle(rng);
    let attempts = (free.len() as f64 * config.wall_fraction).round() as usize;

    let mut current = state;
    for &cell in free.iter().take(attempts) {
        let mut walls = current.board.walls.clone();
        walls[cell] = true;
        let board = Board::new(
            current.width(),
            current.height(),
            walls,
            current.board.goals.clone(),
        )?;
        let candidate =
            SokobanState::on_board(Arc::new(board), current.boxes.clone(), current.player)?;
        if !sokoban_deadlock(&candidate)
            && sokoban_solve_with_limit(&candidate, config.node_limit).is_ok()
        {
            current = candidate;
        }
    }
    Ok(current)
}
