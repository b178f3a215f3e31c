//! Binary PPM (P6) rendering of puzzle states.

use crate::mdp::PuzzleState;
use crate::sliding::SlidingState;
use crate::sokoban::SokobanState;

pub const CELL: usize = 32;

type Rgb = [u8; 3];

const GRID_LINE: Rgb = [40, 40, 40];
const BLANK: Rgb = [24, 24, 24];
const INK: Rgb = [16, 16, 16];

const TILE_PALETTE: [Rgb; 16] = [
    [230, 25, 75],
    [60, 180, 75],
    [255, 225, 25],
    [67, 99, 216],
    [245, 130, 49],
    [145, 30, 180],
    [70, 240, 240],
    [240, 50, 230],
    [188, 246, 12],
    [250, 190, 190],
    [0, 128, 128],
    [230, 190, 255],
    [154, 99, 36],
    [255, 250, 200],
    [170, 255, 195],
    [169, 169, 169],
];

const WALL: Rgb = [90, 60, 40];
const FLOOR: Rgb = [220, 220, 210];
const GOAL: Rgb = [80, 200, 120];
const BOX: Rgb = [200, 140, 40];
const BOX_ON_GOAL: Rgb = [60, 120, 200];
const PLAYER: Rgb = [200, 40, 40];

/// 3×5 digit glyphs, one row per entry, most significant bit on the left.
const DIGITS: [[u8; 5]; 10] = [
    [0b111, 0b101, 0b101, 0b101, 0b111],
    [0b010, 0b110, 0b010, 0b010, 0b111],
    [0b111, 0b001, 0b111, 0b100, 0b111],
    [0b111, 0b001, 0b111, 0b001, 0b111],
    [0b101, 0b101, 0b111, 0b001, 0b001],
    [0b111, 0b100, 0b111, 0b001, 0b111],
    [0b111, 0b100, 0b111, 0b101, 0b111],
    [0b111, 0b001, 0b010, 0b010, 0b010],
    [0b111, 0b101, 0b111, 0b101, 0b111],
    [0b111, 0b101, 0b111, 0b001, 0b111],
];

struct Canvas {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Canvas {
    fn new(cols: usize, rows: usize) -> Self {
        let (width, height) = (cols * CELL, rows * CELL);
        Canvas {
            width,
            height,
            pixels: vec![0; width * height * 3],
        }
    }

    fn rect(&mut self, x0: usize, y0: usize, w: usize, h: usize, color: Rgb) {
        for y in y0..(y0 + h).min(self.height) {
            for x in x0..(x0 + w).min(self.width) {
                let i = (y * self.width + x) * 3;
                self.pixels[i..i + 3].copy_from_slice(&color);
            }
        }
    }

    fn cell(&mut self, col: usize, row: usize, color: Rgb) {
        self.rect(col * CELL, row * CELL, CELL, CELL, GRID_LINE);
        self.rect(col * CELL + 1, row * CELL + 1, CELL - 2, CELL - 2, color);
    }

    fn inset(&mut self, col: usize, row: usize, margin: usize, color: Rgb) {
        let side = CELL - 2 * margin;
        self.rect(col * CELL + margin, row * CELL + margin, side, side, color);
    }

    fn number(&mut self, col: usize, row: usize, value: u32) {
        let text = value.to_string();
        let scale = if text.len() <= 2 { 3 } else { 2 };
        let glyph_w = 3 * scale;
        let gap = scale;
        let total_w = text.len() * glyph_w + (text.len() - 1) * gap;
        let x0 = col * CELL + (CELL - total_w) / 2;
        let y0 = row * CELL + (CELL - 5 * scale) / 2;
        for (i, ch) in text.bytes().enumerate() {
            let glyph = &DIGITS[(ch - b'0') as usize];
            let gx = x0 + i * (glyph_w + gap);
            for (gy, bits) in glyph.iter().enumerate() {
                for bx in 0..3 {
                    if bits & (0b100 >> bx) != 0 {
                        self.rect(gx + bx * scale, y0 + gy * scale, scale, scale, INK);
                    }
                }
            }
        }
    }

    fn into_ppm(self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

fn render_sliding(s: &SlidingState) -> Vec<u8> {
    let n = s.n();
    let mut canvas = Canvas::new(n, n);
    for (i, &tile) in s.tiles().iter().enumerate() {
        let (row, col) = (i / n, i % n);
        if tile == 0 {
            canvas.cell(col, row, BLANK);
        } else {
            canvas.cell(
                col,
                row,
                TILE_PALETTE[(tile as usize - 1) % TILE_PALETTE.len()],
            );
            canvas.number(col, row, tile as u32);
        }
    }
    canvas.into_ppm()
}

fn render_sokoban(s: &SokobanState) -> Vec<u8> {
    let board = s.board();
    let mut canvas = Canvas::new(board.width(), board.height());
    for cell in 0..board.width() * board.height() {
        let [col, row] = board.coords(cell);
        if board.is_wall(cell) {
            canvas.cell(col, row, WALL);
            continue;
        }
        canvas.cell(col, row, FLOOR);
        if board.is_goal(cell) {
            canvas.inset(col, row, 4, GOAL);
        }
        if s.has_box(cell) {
            canvas.inset(
                col,
                row,
                7,
                if board.is_goal(cell) {
                    BOX_ON_GOAL
                } else {
                    BOX
                },
            );
        }
        if s.player() == cell {
            canvas.inset(col, row, 10, PLAYER);
        }
    }
    canvas.into_ppm()
}

/// Deterministic P6 image of a state, `CELL` pixels per grid cell.
pub fn render_state(state: &PuzzleState) -> Vec<u8> {
    match state {
        PuzzleState::Sliding(s) => render_sliding(s),
        PuzzleState::Sokoban(s) => render_sokoban(s),
    }
}
