//! Coarse-grid action simplification for scatter environments.
//!
//! A grid cell is translated to a pixel placement by scanning the cell for the
//! first position where the object fits, snapping it against a nearly touching
//! neighbour. Removal picks the object with the largest overlap with the cell.

use serde::{Deserialize, Serialize};

use super::config::EnvConfig;
use crate::scene::{ObjectSpec, Rect, Scene};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub col: u32,
    pub row: u32,
}

/// Result of a successful grid placement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPlacement {
    pub x: i32,
    pub y: i32,
    /// First fitting scan position, before snapping.
    pub candidate: (i32, i32),
    /// Object the placement was snapped against.
    pub snapped_to: Option<u32>,
}

/// Pixel rectangle covered by a grid cell.
pub fn cell_rect(config: &EnvConfig, cell: Cell) -> Option<Rect> {
    let (cw, ch) = config.cell_size()?;
    let (cols, rows) = config.grid_dims()?;
    if cell.col >= cols || cell.row >= rows {
        return None;
    }
    let x0 = cell.col as i32 * cw;
    let y0 = cell.row as i32 * ch;
    Some(Rect::new(x0, y0, x0 + cw, y0 + ch))
}

/// Signed shift along one axis that closes a positive gap between
/// `[a0, a1)` and `[b0, b1)`; zero if the intervals already touch or overlap.
fn closing_shift(a0: i32, a1: i32, b0: i32, b1: i32) -> i32 {
    if b0 > a1 {
        b0 - a1
    } else if a0 > b1 {
        -(a0 - b1)
    } else {
        0
    }
}

/// Finds where an object added at `cell` lands, or `None` if nothing fits.
///
/// Candidates are scanned row-major, one pixel at a time, from the cell's
/// upper-left corner. At the first fitting candidate, if the nearest object in
/// the same box is at a gap within `[1, snap_threshold]`, the candidate is
/// translated to touch it; if the snapped position does not fit, scanning
/// continues.
pub fn grid_place(scene: &Scene, cell: Cell, spec: ObjectSpec, config: &EnvConfig) -> Option<GridPlacement> {
    let area = cell_rect(config, cell)?;
    let layout = &scene.layout;
    for y in area.y0..area.y1 {
        for x in area.x0..area.x1 {
            if !scene.fits(x, y, spec.size) {
                continue;
            }
            let rect = layout.rect_at(x, y, spec.size);
            let Some(b) = layout.containing_box(&rect) else {
                continue;
            };
            let nearest = scene
                .objects_in_box(b)
                .map(|o| (rect.gap(&o.bounding_box(layout)), o.id, o.bounding_box(layout)))
                .filter(|(g, _, _)| (1..=config.snap_threshold).contains(g))
                .min_by_key(|(g, id, _)| (*g, *id));
            let Some((_, id, target)) = nearest else {
                return Some(GridPlacement {
                    x,
                    y,
                    candidate: (x, y),
                    snapped_to: None,
                });
            };
            let sx = x + closing_shift(rect.x0, rect.x1, target.x0, target.x1);
            let sy = y + closing_shift(rect.y0, rect.y1, target.y0, target.y1);
            if scene.fits(sx, sy, spec.size) {
                return Some(GridPlacement {
                    x: sx,
                    y: sy,
                    candidate: (x, y),
                    snapped_to: Some(id),
                });
            }
        }
    }
    None
}

/// Object with the largest bounding-box intersection with the cell; ties go to
/// the lowest id.
pub fn grid_remove_target(scene: &Scene, cell: Cell, config: &EnvConfig) -> Option<u32> {
    let area = cell_rect(config, cell)?;
    scene
        .objects()
        .iter()
        .map(|o| (scene.bounding_box(o).intersection_area(&area), o.id))
        .filter(|(a, _)| *a > 0)
        .max_by(|(a1, id1), (a2, id2)| a1.cmp(a2).then(id2.cmp(id1)))
        .map(|(_, id)| id)
}

/// A cell whose removal target is `id`, scanning cells row-major.
pub fn removal_cell(scene: &Scene, id: u32, config: &EnvConfig) -> Option<Cell> {
    let (cols, rows) = config.grid_dims()?;
    (0..rows)
        .flat_map(|row| (0..cols).map(move |col| Cell { col, row }))
        .find(|&c| grid_remove_target(scene, c, config) == Some(id))
}
