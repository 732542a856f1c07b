//! 4x4 frozen lake. Holes at (1,1), (1,3), (2,3), (3,0); goal at (3,3).

use rand::Rng;

use super::GridCell;

pub const ROWS: usize = 4;
pub const COLS: usize = 4;
pub const START: GridCell = GridCell::new(0, 0);
pub const GOAL: GridCell = GridCell::new(3, 3);
pub const HOLES: [GridCell; 4] = [
    GridCell::new(1, 1),
    GridCell::new(1, 3),
    GridCell::new(2, 3),
    GridCell::new(3, 0),
];

pub const LEFT: usize = 0;
pub const DOWN: usize = 1;
pub const RIGHT: usize = 2;
pub const UP: usize = 3;

pub fn is_hole(cell: GridCell) -> bool {
    HOLES.contains(&cell)
}

/// Move one cell in `dir`; off-grid moves leave the position unchanged.
pub fn apply_move(cell: GridCell, dir: usize) -> GridCell {
    let GridCell { row, col } = cell;
    match dir {
        LEFT => GridCell::new(row, col.saturating_sub(1)),
        DOWN => GridCell::new((row + 1).min(ROWS - 1), col),
        RIGHT => GridCell::new(row, (col + 1).min(COLS - 1)),
        UP => GridCell::new(row.saturating_sub(1), col),
        _ => cell,
    }
}

/// Realized direction on slippery ice: intended or either perpendicular,
/// each with probability 1/3.
pub fn slip<R: Rng + ?Sized>(intended: usize, rng: &mut R) -> usize {
    (intended + 3 + rng.random_range(0..3)) % 4
}

/// Deterministic move; returns `(next, reward, terminated)`.
pub fn transition(cell: GridCell, dir: usize) -> (GridCell, f64, bool) {
    let next = apply_move(cell, dir);
    if next == GOAL {
        (next, 1.0, true)
    } else if is_hole(next) {
        (next, 0.0, true)
    } else {
        (next, 0.0, false)
    }
}
