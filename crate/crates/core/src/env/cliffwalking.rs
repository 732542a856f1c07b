//! 4x12 cliff walk. Start (3,0), goal (3,11), cliff (3,1)..(3,10).

use super::GridCell;

pub const ROWS: usize = 4;
pub const COLS: usize = 12;
pub const START: GridCell = GridCell::new(3, 0);
pub const GOAL: GridCell = GridCell::new(3, 11);
pub const STEP_REWARD: f64 = -1.0;
pub const CLIFF_REWARD: f64 = -100.0;

pub const UP: usize = 0;
pub const RIGHT: usize = 1;
pub const DOWN: usize = 2;
pub const LEFT: usize = 3;

pub fn is_cliff(cell: GridCell) -> bool {
    cell.row == ROWS - 1 && cell.col >= 1 && cell.col <= COLS - 2
}

/// Returns `(next, reward, terminated)`. Falling off the cliff teleports the
/// agent back to the start without ending the episode.
pub fn transition(cell: GridCell, action: usize) -> (GridCell, f64, bool) {
    let GridCell { row, col } = cell;
    let target = match action {
        UP => GridCell::new(row.saturating_sub(1), col),
        RIGHT => GridCell::new(row, (col + 1).min(COLS - 1)),
        DOWN => GridCell::new((row + 1).min(ROWS - 1), col),
        LEFT => GridCell::new(row, col.saturating_sub(1)),
        _ => cell,
    };
    if is_cliff(target) {
        (START, CLIFF_REWARD, false)
    } else {
        (target, STEP_REWARD, target == GOAL)
    }
}
