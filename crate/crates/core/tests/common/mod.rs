#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::OnceLock;

use commitgym::sliding::SlidingState;
use commitgym::sokoban::SokobanState;

fn pack(tiles: &[u8]) -> u64 {
    tiles.iter().fold(0u64, |acc, &t| acc << 4 | t as u64)
}

/// Exact distance to the goal of every reachable 3×3 arrangement, by
/// breadth-first search backwards from the goal.
pub fn sliding3_table() -> &'static HashMap<u64, u8> {
    static TABLE: OnceLock<HashMap<u64, u8>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let goal: Vec<u8> = vec![1, 2, 3, 4, 5, 6, 7, 8, 0];
        let mut dist = HashMap::with_capacity(181_440);
        dist.insert(pack(&goal), 0u8);
        let mut queue = VecDeque::from([goal]);
        while let Some(tiles) = queue.pop_front() {
            let d = dist[&pack(&tiles)];
            let b = tiles.iter().position(|&t| t == 0).unwrap();
            let (r, c) = (b / 3, b % 3);
            let mut neighbours = Vec::new();
            if r > 0 {
                neighbours.push(b - 3);
            }
            if r < 2 {
                neighbours.push(b + 3);
            }
            if c > 0 {
                neighbours.push(b - 1);
            }
            if c < 2 {
                neighbours.push(b + 1);
            }
            for nb in neighbours {
                let mut next = tiles.clone();
                next.swap(b, nb);
                let key = pack(&next);
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(key) {
                    e.insert(d + 1);
                    queue.push_back(next);
                }
            }
        }
        dist
    })
}

pub fn sliding3_distance(s: &SlidingState) -> Option<u32> {
    assert_eq!(s.n(), 3);
    sliding3_table().get(&pack(s.tiles())).map(|&d| d as u32)
}

/// Solvability by inversion parity, with the blank-row correction on even sizes.
pub fn sliding_parity_ok(s: &SlidingState) -> bool {
    let n = s.n();
    let tiles: Vec<u8> = s.tiles().iter().copied().filter(|&t| t != 0).collect();
    let mut inversions = 0usize;
    for i in 0..tiles.len() {
        for j in i + 1..tiles.len() {
            if tiles[i] > tiles[j] {
                inversions += 1;
            }
        }
    }
    if n % 2 == 1 {
        inversions.is_multiple_of(2)
    } else {
        let blank_row = s.tiles().iter().position(|&t| t == 0).unwrap() / n;
        (inversions + (n - 1 - blank_row)).is_multiple_of(2)
    }
}

/// Shortest solution length of a Sokoban state counting every player move,
/// by plain breadth-first search over (player, boxes).
pub fn sokoban_bfs(s: &SokobanState) -> Option<u32> {
    let board = s.board();
    let (w, h) = (board.width(), board.height());
    let wall = |c: usize| board.is_wall(c);
    let goals: HashSet<usize> = board.goals().iter().copied().collect();
    let start = (s.player(), s.boxes().to_vec());
    let solved = |boxes: &[usize]| boxes.iter().all(|b| goals.contains(b));
    if solved(&start.1) {
        return Some(0);
    }
    let offsets: [(isize, isize); 4] = [(0, -1), (0, 1), (-1, 0), (1, 0)];
    let shift = |c: usize, (dx, dy): (isize, isize)| -> Option<usize> {
        let (x, y) = ((c % w) as isize + dx, (c / w) as isize + dy);
        (x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h)
            .then(|| y as usize * w + x as usize)
    };
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([(start, 0u32)]);
    while let Some(((player, boxes), d)) = queue.pop_front() {
        for off in offsets {
            let Some(target) = shift(player, off) else {
                continue;
            };
            if wall(target) {
                continue;
            }
            let mut next_boxes = boxes.clone();
            if let Some(i) = boxes.iter().position(|&b| b == target) {
                let Some(beyond) = shift(target, off) else {
                    continue;
                };
                if wall(beyond) || boxes.contains(&beyond) {
                    continue;
                }
                next_boxes[i] = beyond;
                next_boxes.sort_unstable();
            }
            if solved(&next_boxes) {
                return Some(d + 1);
            }
            let key = (target, next_boxes);
            if seen.insert(key.clone()) {
                queue.push_back((key, d + 1));
            }
        }
    }
    None
}
