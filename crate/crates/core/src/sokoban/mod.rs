//! Sokoban: push every box onto a goal. There is no pull action, so pushes
//! are irreversible and boxes can become permanently stuck.

mod generate;
mod solver;

use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mdp::Action;

pub use generate::{sokoban_generate, sokoban_generate_with, GenConfig, SokobanInstance};
pub use solver::{sokoban_solve, sokoban_solve_with_limit, DEFAULT_NODE_LIMIT};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SokobanError {
    #[error("invalid board: {0}")]
    InvalidBoard(String),
    #[error("no solution exists")]
    Unsolvable,
    #[error("search gave up after {0} nodes")]
    SearchLimit(u64),
    #[error("no {width}x{height} instance with {boxes} boxes after {attempts} attempts")]
    GenerationExhausted {
        width: usize,
        height: usize,
        boxes: usize,
        attempts: u32,
    },
}

/// Static part of a level: walls, goals and precomputed per-cell tables.
#[derive(Debug)]
pub struct Board {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    goals: Vec<usize>,
    is_goal: Vec<bool>,
    dead: Vec<bool>,
    goal_dist: Vec<u32>,
}

impl PartialEq for Board {
    fn eq(&self, other: &Self) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.walls == other.walls
            && self.goals == other.goals
    }
}

impl Eq for Board {}

impl Hash for Board {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.width.hash(state);
        self.walls.hash(state);
        self.goals.hash(state);
    }
}

impl Board {
    fn new(
        width: usize,
        height: usize,
        walls: Vec<bool>,
        mut goals: Vec<usize>,
    ) -> Result<Board, SokobanError> {
        if width < 3 || height < 3 || width * height > u16::MAX as usize {
            return Err(SokobanError::InvalidBoard(format!(
                "unsupported size {width}x{height}"
            )));
        }
        if walls.len() != width * height {
            return Err(SokobanError::InvalidBoard("wall mask size mismatch".into()));
        }
        for y in 0..height {
            for x in 0..width {
                let border = x == 0 || y == 0 || x == width - 1 || y == height - 1;
                if border && !walls[y * width + x] {
                    return Err(SokobanError::InvalidBoard(format!(
                        "boundary cell ({x},{y}) is not a wall"
                    )));
                }
            }
        }
        goals.sort_unstable();
        goals.dedup();
        let mut is_goal = vec![false; walls.len()];
        for &g in &goals {
            if walls[g] {
                return Err(SokobanError::InvalidBoard("goal on a wall".into()));
            }
            is_goal[g] = true;
        }
        let mut board = Board {
            width,
            height,
            walls,
            goals,
            is_goal,
            dead: Vec::new(),
            goal_dist: Vec::new(),
        };
        board.dead = (0..board.walls.len())
            .map(|c| board.statically_dead(c))
            .collect();
        board.goal_dist = (0..board.walls.len())
            .map(|c| {
                board
                    .goals
                    .iter()
                    .map(|&g| board.manhattan(c, g))
                    .min()
                    .unwrap_or(0)
            })
            .collect();
        Ok(board)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn is_wall(&self, cell: usize) -> bool {
        self.walls[cell]
    }

    pub fn is_goal(&self, cell: usize) -> bool {
        self.is_goal[cell]
    }

    pub fn goals(&self) -> &[usize] {
        &self.goals
    }

    pub fn is_dead(&self, cell: usize) -> bool {
        self.dead[cell]
    }

    pub(crate) fn goal_dist(&self, cell: usize) -> u32 {
        self.goal_dist[cell]
    }

    fn manhattan(&self, a: usize, b: usize) -> u32 {
        ((a % self.width).abs_diff(b % self.width) + (a / self.width).abs_diff(b / self.width))
            as u32
    }

    /// Neighbour of `cell` in direction `action`. Boundary cells are walls, so
    /// this is only called on interior cells and never leaves the grid.
    pub(crate) fn neighbor(&self, cell: usize, action: Action) -> usize {
        match action {
            Action::Up => cell - self.width,
            Action::Down => cell + self.width,
            Action::Left => cell - 1,
            Action::Right => cell + 1,
        }
    }

    fn wall_toward(&self, cell: usize, action: Action) -> bool {
        self.walls[self.neighbor(cell, action)]
    }

    /// A box on this cell can never reach a goal: either a non-goal corner, or
    /// a stretch along a wall that is closed at both ends and holds no goal.
    fn statically_dead(&self, cell: usize) -> bool {
        if self.walls[cell] || self.is_goal[cell] {
            return false;
        }
        let vertical = self.wall_toward(cell, Action::Up) || self.wall_toward(cell, Action::Down);
        let horizontal =
            self.wall_toward(cell, Action::Left) || self.wall_toward(cell, Action::Right);
        if vertical && horizontal {
            return true;
        }
        let sides = [
            (Action::Up, [Action::Left, Action::Right]),
            (Action::Down, [Action::Left, Action::Right]),
            (Action::Left, [Action::Up, Action::Down]),
            (Action::Right, [Action::Up, Action::Down]),
        ];
        sides.iter().any(|&(side, along)| {
            self.wall_toward(cell, side)
                && along
                    .iter()
                    .all(|&dir| self.closed_segment(cell, side, dir))
        })
    }

    /// Walks from `cell` in direction `dir` while the wall on `side` persists.
    /// True if the walk ends at a wall without passing a goal or an opening.
    fn closed_segment(&self, cell: usize, side: Action, dir: Action) -> bool {
        let mut c = cell;
        loop {
            if self.walls[c] {
                return true;
            }
            if self.is_goal[c] || !self.wall_toward(c, side) {
                return false;
            }
            c = self.neighbor(c, dir);
        }
    }

    pub fn cell(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    pub fn coords(&self, cell: usize) -> [usize; 2] {
        [cell % self.width, cell / self.width]
    }
}

/// A Sokoban configuration: shared static board plus box and player cells.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SokobanWire", into = "SokobanWire")]
pub struct SokobanState {
    board: Arc<Board>,
    boxes: Vec<usize>,
    player: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub(crate) struct SokobanWire {
    pub width: usize,
    pub height: usize,
    pub walls: Vec<[usize; 2]>,
    pub boxes: Vec<[usize; 2]>,
    pub goals: Vec<[usize; 2]>,
    pub player: [usize; 2],
}

impl TryFrom<SokobanWire> for SokobanState {
    type Error = SokobanError;

    fn try_from(w: SokobanWire) -> Result<Self, Self::Error> {
        let (width, height) = (w.width, w.height);
        let cell = |p: [usize; 2]| -> Result<usize, SokobanError> {
            if p[0] < width && p[1] < height {
                Ok(p[1] * width + p[0])
            } else {
                Err(SokobanError::InvalidBoard(format!(
                    "cell {p:?} out of bounds"
                )))
            }
        };
        if width == 0 || height == 0 {
            return Err(SokobanError::InvalidBoard("empty board".into()));
        }
        let mut walls = vec![false; width * height];
        for &p in &w.walls {
            walls[cell(p)?] = true;
        }
        let goals = w
            .goals
            .iter()
            .map(|&p| cell(p))
            .collect::<Result<Vec<_>, _>>()?;
        let boxes = w
            .boxes
            .iter()
            .map(|&p| cell(p))
            .collect::<Result<Vec<_>, _>>()?;
        SokobanState::new(width, height, walls, goals, boxes, cell(w.player)?)
    }
}

impl From<SokobanState> for SokobanWire {
    fn from(s: SokobanState) -> Self {
        let b = &s.board;
        SokobanWire {
            width: b.width,
            height: b.height,
            walls: (0..b.walls.len())
                .filter(|&c| b.walls[c])
                .map(|c| b.coords(c))
                .collect(),
            boxes: s.boxes.iter().map(|&c| b.coords(c)).collect(),
            goals: b.goals.iter().map(|&c| b.coords(c)).collect(),
            player: b.coords(s.player),
        }
    }
}

impl SokobanState {
    pub fn new(
        width: usize,
        height: usize,
        walls: Vec<bool>,
        goals: Vec<usize>,
        boxes: Vec<usize>,
        player: usize,
    ) -> Result<Self, SokobanError> {
        let board = Arc::new(Board::new(width, height, walls, goals)?);
        SokobanState::on_board(board, boxes, player)
    }

    pub(crate) fn on_board(
        board: Arc<Board>,
        mut boxes: Vec<usize>,
        player: usize,
    ) -> Result<Self, SokobanError> {
        let cells = board.walls.len();
        boxes.sort_unstable();
        if boxes.windows(2).any(|w| w[0] == w[1]) {
            return Err(SokobanError::InvalidBoard("two boxes share a cell".into()));
        }
        if boxes.len() != board.goals.len() || boxes.is_empty() {
            return Err(SokobanError::InvalidBoard(format!(
                "{} boxes but {} goals",
                boxes.len(),
                board.goals.len()
            )));
        }
        if boxes
            .iter()
            .chain(std::iter::once(&player))
            .any(|&c| c >= cells || board.walls[c])
        {
            return Err(SokobanError::InvalidBoard("box or player on a wall".into()));
        }
        if boxes.binary_search(&player).is_ok() {
            return Err(SokobanError::InvalidBoard("player on a box".into()));
        }
        Ok(SokobanState {
            board,
            boxes,
            player,
        })
    }

    pub fn board(&self) -> &Arc<Board> {
        &self.board
    }

    pub fn width(&self) -> usize {
        self.board.width
    }

    pub fn height(&self) -> usize {
        self.board.height
    }

    pub fn boxes(&self) -> &[usize] {
        &self.boxes
    }

    pub fn player(&self) -> usize {
        self.player
    }

    pub fn has_box(&self, cell: usize) -> bool {
        self.boxes.binary_search(&cell).is_ok()
    }

    pub fn is_solved(&self) -> bool {
        self.boxes.iter().all(|&b| self.board.is_goal[b])
    }

    pub fn step(&self, action: Action) -> (SokobanState, bool) {
        let mut next = self.clone();
        let moved = next.step_in_place(action);
        (next, moved)
    }

    pub(crate) fn step_in_place(&mut self, action: Action) -> bool {
        let target = self.board.neighbor(self.player, action);
        if self.board.walls[target] {
            return false;
        }
        if let Ok(i) = self.boxes.binary_search(&target) {
            let beyond = self.board.neighbor(target, action);
            if self.board.walls[beyond] || self.has_box(beyond) {
                return false;
            }
            self.boxes.remove(i);
            let j = self.boxes.binary_search(&beyond).unwrap_err();
            self.boxes.insert(j, beyond);
        }
        self.player = target;
        true
    }

    /// Parses the usual text format: `#` wall, `$` box, `.` goal, `@` player,
    /// `*` box on goal, `+` player on goal; space, `-` or `_` for floor.
    pub fn from_ascii(text: &str) -> Result<Self, SokobanError> {
        let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
        let height = rows.len();
        let width = rows.iter().map(|r| r.chars().count()).max().unwrap_or(0);
        let mut walls = vec![false; width * height];
        let (mut goals, mut boxes, mut player) = (Vec::new(), Vec::new(), None);
        for (y, row) in rows.iter().enumerate() {
            let mut chars: Vec<char> = row.chars().collect();
            chars.resize(width, ' ');
            for (x, ch) in chars.into_iter().enumerate() {
                let c = y * width + x;
                match ch {
                    '#' => walls[c] = true,
                    ' ' | '-' | '_' => {}
                    '$' => boxes.push(c),
                    '.' => goals.push(c),
                    '*' => {
                        boxes.push(c);
                        goals.push(c);
                    }
                    '@' => player = Some(c),
                    '+' => {
                        player = Some(c);
                        goals.push(c);
                    }
                    other => {
                        return Err(SokobanError::InvalidBoard(format!(
                            "unexpected character {other:?}"
                        )))
                    }
                }
            }
        }
        let player = player.ok_or_else(|| SokobanError::InvalidBoard("no player".into()))?;
        SokobanState::new(width, height, walls, goals, boxes, player)
    }

    pub fn to_ascii(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for SokobanState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let b = &self.board;
        for y in 0..b.height {
            for x in 0..b.width {
                let c = y * b.width + x;
                let ch = match (b.walls[c], self.has_box(c), b.is_goal[c], self.player == c) {
                    (true, ..) => '#',
                    (_, true, true, _) => '*',
                    (_, true, false, _) => '$',
                    (_, _, true, true) => '+',
                    (_, _, false, true) => '@',
                    (_, _, true, false) => '.',
                    _ => ' ',
                };
                write!(f, "{ch}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

pub fn sokoban_step(state: &SokobanState, action: Action) -> (SokobanState, bool) {
    state.step(action)
}

/// True when some box sits on a statically dead cell; such states have no
/// solution.
pub fn sokoban_deadlock(state: &SokobanState) -> bool {
    state.boxes.iter().any(|&b| state.board.dead[b])
}

#[cfg(test)]
mod tests {
    use super::*;
    use Action::*;

    fn parse(s: &str) -> SokobanState {
        SokobanState::from_ascii(s).unwrap()
    }

    #[test]
    fn corridor_push_to_goal() {
        let s = parse("######\n#@$ .#\n######\n");
        let (s1, moved) = s.step(Right);
        assert!(moved);
        assert_eq!(s1.player(), s1.board().cell(2, 1));
        assert_eq!(s1.boxes(), &[s1.board().cell(3, 1)]);
        assert!(!s1.is_solved());
        let (s2, moved) = s1.step(Right);
        assert!(moved);
        assert!(s2.is_solved());
    }

    #[test]
    fn blocked_moves_are_noops() {
        let s = parse("#####\n#@ .#\n# $ #\n#####\n");
        let (same, moved) = s.step(Up);
        assert!(!moved);
        assert_eq!(same, s);
        // box against the right wall
        let s = parse("#####\n# @$#\n#.  #\n#####\n");
        let (same, moved) = s.step(Right);
        assert!(!moved);
        assert_eq!(same, s);
        // box blocked by another box
        let s = parse("######\n#@$$ #\n#..  #\n######\n");
        assert!(!s.step(Right).1);
    }

    #[test]
    fn ascii_round_trip() {
        let text = "#######\n#  .  #\n# $*$ #\n#. @  #\n#######\n";
        let s = parse(text);
        assert_eq!(s.to_ascii(), text);
        let on_goal = parse("#####\n#+$ #\n#####\n");
        assert!(on_goal.board().is_goal(on_goal.player()));
    }

    #[test]
    fn rejects_invalid_boards() {
        assert!(SokobanState::from_ascii("#####\n#@$ .\n#####\n").is_err());
        assert!(SokobanState::from_ascii("#####\n#@$$.#\n######\n").is_err());
        assert!(SokobanState::from_ascii("#####\n# $.#\n#####\n").is_err());
        assert!(SokobanState::from_ascii("#####\n#@x.#\n#####\n").is_err());
    }

    #[test]
    fn corner_and_segment_deadlocks() {
        // box in a non-goal corner
        assert!(sokoban_deadlock(&parse(
            "#####\n#$  #\n#  .#\n# @ #\n#####\n"
        )));
        // box on a goal in a corner is fine
        assert!(!sokoban_deadlock(&parse(
            "#####\n#*  #\n#   #\n# @ #\n#####\n"
        )));
        // box against the top wall with no goal along it
        assert!(sokoban_deadlock(&parse(
            "######\n# $  #\n#    #\n#.  @#\n######\n"
        )));
        // same wall but a goal lies along it
        assert!(!sokoban_deadlock(&parse(
            "######\n# $ .#\n#    #\n#   @#\n######\n"
        )));
        // wall with an opening above: the box can still leave along the gap
        let open = parse("#######\n### ###\n# $   #\n#    .#\n#    @#\n#######\n");
        assert!(!sokoban_deadlock(&open));
    }

    #[test]
    fn wire_round_trip() {
        let s = parse("######\n#@$ .#\n######\n");
        let json = serde_json::to_string(&s).unwrap();
        assert!(json.starts_with(r#"{"width":6,"height":3,"walls":"#));
        assert!(json.contains(r#""boxes":[[2,1]],"goals":[[4,1]],"player":[1,1]"#));
        let back: SokobanState = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
