//! Optimal Sokoban solver: IDA* over player moves (walks and pushes both
//! cost one), with a per-iteration transposition table and static deadlock
//! pruning. The heuristic sums each box's Manhattan distance to its nearest
//! goal; every push moves one box one cell, so it never overestimates.

use std::collections::HashMap;

use super::{Board, SokobanError, SokobanState};
use crate::mdp::Action;

pub const DEFAULT_NODE_LIMIT: u64 = 50_000_000;

pub fn sokoban_solve(state: &SokobanState) -> Result<Vec<Action>, SokobanError> {
    sokoban_solve_with_limit(state, DEFAULT_NODE_LIMIT)
}

/// Like [`sokoban_solve`] but gives up with [`SokobanError::SearchLimit`]
/// after expanding `node_limit` nodes.
pub fn sokoban_solve_with_limit(
    state: &SokobanState,
    node_limit: u64,
) -> Result<Vec<Action>, SokobanError> {
    if state.is_solved() {
        return Ok(Vec::new());
    }
    if super::sokoban_deadlock(state) {
        return Err(SokobanError::Unsolvable);
    }
    let board = state.board.as_ref();
    let h = state.boxes.iter().map(|&b| board.goal_dist(b)).sum();
    let mut search = Search {
        board,
        player: state.player,
        boxes: state.boxes.clone(),
        h,
        path: Vec::new(),
        seen: HashMap::new(),
        nodes: 0,
        limit: node_limit,
        next_bound: u32::MAX,
    };
    let mut bound = h;
    loop {
        search.next_bound = u32::MAX;
        search.seen.clear();
        if search.dfs(0, bound)? {
            return Ok(search.path);
        }
        if search.next_bound == u32::MAX {
            return Err(SokobanError::Unsolvable);
        }
        bound = search.next_bound;
    }
}

struct Search<'a> {
    board: &'a Board,
    player: usize,
    boxes: Vec<usize>,
    h: u32,
    path: Vec<Action>,
    seen: HashMap<Box<[u16]>, u32>,
    nodes: u64,
    limit: u64,
    next_bound: u32,
}

impl Search<'_> {
    fn key(&self) -> Box<[u16]> {
        std::iter::once(self.player as u16)
            .chain(self.boxes.iter().map(|&b| b as u16))
            .collect()
    }

    fn dfs(&mut self, g: u32, bound: u32) -> Result<bool, SokobanError> {
        let f = g + self.h;
        if f > bound {
            self.next_bound = self.next_bound.min(f);
            return Ok(false);
        }
        if self.h == 0 {
            return Ok(true);
        }
        match self.seen.get_mut(&self.key()) {
            Some(prev) if *prev <= g => return Ok(false),
            Some(prev) => *prev = g,
            None => {
                let key = self.key();
                self.seen.insert(key, g);
            }
        }
        self.nodes += 1;
        if self.nodes > self.limit {
            return Err(SokobanError::SearchLimit(self.limit));
        }

        for action in Action::ALL {
            let target = self.board.neighbor(self.player, action);
            if self.board.is_wall(target) {
                continue;
            }
            let pushed = match self.boxes.binary_search(&target) {
                Ok(i) => {
                    let beyond = self.board.neighbor(target, action);
                    if self.board.is_wall(beyond)
                        || self.boxes.binary_search(&beyond).is_ok()
                        || self.board.is_dead(beyond)
                    {
                        continue;
                    }
                    self.boxes.remove(i);
                    let j = self.boxes.binary_search(&beyond).unwrap_err();
                    self.boxes.insert(j, beyond);
                    self.h = self.h - self.board.goal_dist(target) + self.board.goal_dist(beyond);
                    Some((target, beyond))
                }
                Err(_) => None,
            };
            let from = self.player;
            self.player = target;
            self.path.push(action);

            if self.dfs(g + 1, bound)? {
                return Ok(true);
            }

            self.path.pop();
            self.player = from;
            if let Some((origin, beyond)) = pushed {
                let j = self
                    .boxes
                    .binary_search(&beyond)
                    .expect("pushed box present");
                self.boxes.remove(j);
                let i = self.boxes.binary_search(&origin).unwrap_err();
                self.boxes.insert(i, origin);
                self.h = self.h + self.board.goal_dist(origin) - self.board.goal_dist(beyond);
            }
        }
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sokoban::sokoban_step;
    use Action::*;

    fn parse(s: &str) -> SokobanState {
        SokobanState::from_ascii(s).unwrap()
    }

    fn replay(state: &SokobanState, actions: &[Action]) -> SokobanState {
        actions
            .iter()
            .fold(state.clone(), |s, &a| sokoban_step(&s, a).0)
    }

    #[test]
    fn trivial_cases() {
        assert_eq!(
            sokoban_solve(&parse("#####\n#@* #\n#####\n")).unwrap(),
            vec![]
        );
        assert_eq!(
            sokoban_solve(&parse("#####\n#@$.#\n#####\n")).unwrap(),
            vec![Right]
        );
        assert_eq!(
            sokoban_solve(&parse("######\n#@$ .#\n######\n")).unwrap(),
            vec![Right, Right]
        );
    }

    #[test]
    fn counts_walking_moves() {
        // player must walk around to push the box left
        let s = parse("######\n#.$ @#\n#    #\n######\n");
        let sol = sokoban_solve(&s).unwrap();
        assert_eq!(sol, vec![Left, Left]);
        let s = parse("######\n#. $ #\n#  @ #\n######\n");
        let sol = sokoban_solve(&s).unwrap();
        assert!(replay(&s, &sol).is_solved());
        assert_eq!(sol.len(), 4);
    }

    #[test]
    fn unsolvable_cases() {
        assert_eq!(
            sokoban_solve(&parse("#####\n#$  #\n#  .#\n# @ #\n#####\n")),
            Err(SokobanError::Unsolvable)
        );
        // player cannot reach the pushing side
        let s = parse("#######\n#@#$ .#\n#######\n");
        assert_eq!(sokoban_solve(&s), Err(SokobanError::Unsolvable));
    }

    #[test]
    fn node_limit() {
        let s = parse("########\n#.    @#\n#  $   #\n#      #\n########\n");
        assert!(matches!(
            sokoban_solve_with_limit(&s, 2),
            Err(SokobanError::SearchLimit(2))
        ));
        let sol = sokoban_solve(&s).unwrap();
        assert!(replay(&s, &sol).is_solved());
    }
}
