//! Descriptor matching and grid-motion-statistics filtering.
//!
//! [`brute_force_match`] pairs descriptors by exhaustive Hamming search with
//! optional cross-checking. [`gms_filter`] partitions a raw match set into
//! kept/rejected by counting how much local support each cell-to-cell motion
//! has: both images are divided into grids, every frame cell is paired with
//! the template cell it sends most matches to, and the 3x3 neighborhood
//! count around that cell pair is thresholded against the mean cell
//! occupancy. Four half-cell grid offsets catch matches that straddle cell
//! boundaries, and rotated neighborhood kernels keep the statistic valid
//! under in-plane rotation.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::features::{BinaryDescriptor, Keypoint};
use crate::math;

/// One correspondence: `query_idx` into the frame keypoints, `train_idx`
/// into the template keypoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchPair {
    pub query_idx: usize,
    pub train_idx: usize,
    pub distance: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchError {
    /// Descriptors of different bit lengths cannot be compared.
    LengthMismatch { a: usize, b: usize },
}

impl fmt::Display for MatchError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchError::LengthMismatch { a, b } => {
                write!(f, "descriptor length mismatch: {a} vs {b}")
            }
        }
    }
}

impl core::error::Error for MatchError {}

/// Hamming distance between two equal-length descriptors.
pub fn hamming(a: &BinaryDescriptor, b: &BinaryDescriptor) -> Result<u32, MatchError> {
    if a.len() != b.len() {
        return Err(MatchError::LengthMismatch { a: a.len(), b: b.len() });
    }
    Ok(a.words()
        .iter()
        .zip(b.words().iter())
        .map(|(x, y)| (x ^ y).count_ones())
        .sum())
}

/// Exhaustive nearest-neighbor matching from `query` into `train`.
///
/// Each query index appears at most once; nearest-neighbor ties go to the
/// lowest train index. With `cross_check`, a pair survives only when the
/// train descriptor's nearest query is the same pair (ties to the lowest
/// query index). Empty inputs give an empty match list.
pub fn brute_force_match(
    query: &[BinaryDescriptor],
    train: &[BinaryDescriptor],
    cross_check: bool,
) -> Result<Vec<MatchPair>, MatchError> {
    if query.is_empty() || train.is_empty() {
        return Ok(Vec::new());
    }
    // Best train per query and best query per train, filled in one pass.
    let mut best_for_query: Vec<(u32, usize)> = vec![(u32::MAX, usize::MAX); query.len()];
    let mut best_for_train: Vec<(u32, usize)> = vec![(u32::MAX, usize::MAX); train.len()];
    for (qi, q) in query.iter().enumerate() {
        for (ti, t) in train.iter().enumerate() {
            let d = hamming(q, t)?;
            if d < best_for_query[qi].0 {
                best_for_query[qi] = (d, ti);
            }
            if d < best_for_train[ti].0 {
                best_for_train[ti] = (d, qi);
            }
        }
    }
    let mut out = Vec::new();
    for (qi, &(d, ti)) in best_for_query.iter().enumerate() {
        if cross_check && best_for_train[ti].1 != qi {
            continue;
        }
        out.push(MatchPair { query_idx: qi, train_idx: ti, distance: d });
    }
    Ok(out)
}

/// Grid-filter configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmsConfig {
    pub grid_rows: usize,
    pub grid_cols: usize,
    /// Acceptance threshold factor: a cell pair passes when its neighborhood
    /// score exceeds `alpha * sqrt(mean matches per non-empty cell)`.
    pub alpha: f64,
    /// Score each cell pair under rotated neighborhood kernels and keep the
    /// best, making the statistic rotation-tolerant.
    pub with_rotation: bool,
}

impl Default for GmsConfig {
    fn default() -> Self {
        Self {
            grid_rows: 20,
            grid_cols: 20,
            alpha: 6.0,
            with_rotation: true,
        }
    }
}

/// The 8 circular permutations of the 3x3 neighborhood (identity first),
/// applied on the template side; 1-indexed cell numbering flattened
/// row-major.
const ROTATION_PATTERNS: [[usize; 9]; 8] = [
    [1, 2, 3, 4, 5, 6, 7, 8, 9],
    [4, 1, 2, 7, 5, 3, 8, 9, 6],
    [7, 4, 1, 8, 5, 2, 9, 6, 3],
    [8, 7, 4, 9, 5, 1, 6, 3, 2],
    [9, 8, 7, 6, 5, 4, 3, 2, 1],
    [6, 9, 8, 3, 5, 7, 2, 1, 4],
    [3, 6, 9, 2, 5, 8, 1, 4, 7],
    [2, 3, 6, 1, 5, 9, 4, 7, 8],
];

/// Half-cell grid shifts (in cell units) applied on the frame side.
const GRID_OFFSETS: [(f64, f64); 4] = [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)];

#[derive(Clone, Copy)]
struct Grid {
    rows: usize,
    cols: usize,
    cell_w: f64,
    cell_h: f64,
}

impl Grid {
    fn new(dims: (u32, u32), rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            cell_w: dims.0 as f64 / cols as f64,
            cell_h: dims.1 as f64 / rows as f64,
        }
    }

    /// Cell index under a half-cell shift; `None` when the point falls off
    /// the shifted grid.
    fn cell(&self, kp: &Keypoint, shift: (f64, f64)) -> Option<usize> {
        let cx = math::floor(kp.position.x / self.cell_w - shift.0);
        let cy = math::floor(kp.position.y / self.cell_h - shift.1);
        if cx < 0.0 || cy < 0.0 {
            return None;
        }
        let cx = (cx as usize).min(self.cols - 1);
        let cy = (cy as usize).min(self.rows - 1);
        Some(cy * self.cols + cx)
    }

    /// The 9 neighborhood cells of `cell` in row-major kernel order;
    /// `None` entries fall outside the grid.
    fn neighborhood(&self, cell: usize) -> [Option<usize>; 9] {
        let (cy, cx) = (cell / self.cols, cell % self.cols);
        let mut out = [None; 9];
        for dy in -1i64..=1 {
            for dx in -1i64..=1 {
                let (ny, nx) = (cy as i64 + dy, cx as i64 + dx);
                if ny >= 0 && nx >= 0 && (ny as usize) < self.rows && (nx as usize) < self.cols {
                    out[((dy + 1) * 3 + dx + 1) as usize] = Some(ny as usize * self.cols + nx as usize);
                }
            }
        }
        out
    }
}

/// Per-offset view of the match set on the two grids.
struct OffsetView {
    /// Frame cell of each match under the shift; `None` = off-grid.
    frame_cell: Vec<Option<usize>>,
    /// Template cell of each match (unshifted).
    template_cell: Vec<usize>,
    /// Dense (frame cell, template cell) match counts.
    counts: Vec<u32>,
    /// Matches grouped under their frame cell.
    cell_members: Vec<Vec<usize>>,
    /// Threshold tau for this offset.
    tau: f64,
    template_cells: usize,
}

fn build_offset_view(
    matches: &[MatchPair],
    frame_kps: &[Keypoint],
    template_kps: &[Keypoint],
    frame_grid: &Grid,
    template_grid: &Grid,
    shift: (f64, f64),
    alpha: f64,
) -> OffsetView {
    let frame_cells = frame_grid.rows * frame_grid.cols;
    let template_cells = template_grid.rows * template_grid.cols;
    let mut frame_cell = Vec::with_capacity(matches.len());
    let mut template_cell = Vec::with_capacity(matches.len());
    let mut counts = vec![0u32; frame_cells * template_cells];
    let mut cell_members: Vec<Vec<usize>> = vec![Vec::new(); frame_cells];
    let mut in_range = 0usize;
    for (mi, m) in matches.iter().enumerate() {
        let tc = template_grid
            .cell(&template_kps[m.train_idx], (0.0, 0.0))
            .expect("unshifted cell is always in range");
        template_cell.push(tc);
        let fc = frame_grid.cell(&frame_kps[m.query_idx], shift);
        frame_cell.push(fc);
        if let Some(fc) = fc {
            counts[fc * template_cells + tc] += 1;
            cell_members[fc].push(mi);
            in_range += 1;
        }
    }
    let non_empty = cell_members.iter().filter(|c| !c.is_empty()).count();
    let tau = if non_empty == 0 {
        0.0
    } else {
        alpha * math::sqrt(in_range as f64 / non_empty as f64)
    };
    OffsetView {
        frame_cell,
        template_cell,
        counts,
        cell_members,
        tau,
        template_cells,
    }
}

/// Neighborhood score of the cell pair (frame `fc`, template `tc`): total
/// matches between the 3x3 neighborhoods, under the best rotation kernel
/// when enabled.
fn neighborhood_score(
    view: &OffsetView,
    frame_grid: &Grid,
    template_grid: &Grid,
    fc: usize,
    tc: usize,
    with_rotation: bool,
) -> f64 {
    let fn_cells = frame_grid.neighborhood(fc);
    let tn_cells = template_grid.neighborhood(tc);
    let patterns: &[[usize; 9]] = if with_rotation {
        &ROTATION_PATTERNS
    } else {
        &ROTATION_PATTERNS[..1]
    };
    let mut best = 0.0f64;
    for pattern in patterns {
        let mut s = 0u32;
        for (t, &perm) in pattern.iter().enumerate() {
            if let (Some(f), Some(tt)) = (fn_cells[t], tn_cells[perm - 1]) {
                s += view.counts[f * view.template_cells + tt];
            }
        }
        if (s as f64) > best {
            best = s as f64;
        }
    }
    best
}

/// Partition matches into (kept, rejected) by grid motion statistics.
///
/// Both outputs are sorted by `(query_idx, train_idx)`; together they hold
/// exactly the input set.
pub fn gms_filter(
    matches: &[MatchPair],
    frame_kps: &[Keypoint],
    template_kps: &[Keypoint],
    frame_dims: (u32, u32),
    template_dims: (u32, u32),
    cfg: &GmsConfig,
) -> (Vec<MatchPair>, Vec<MatchPair>) {
    if matches.is_empty() {
        return (Vec::new(), Vec::new());
    }
    let frame_grid = Grid::new(frame_dims, cfg.grid_rows, cfg.grid_cols);
    let template_grid = Grid::new(template_dims, cfg.grid_rows, cfg.grid_cols);

    let mut accepted = vec![false; matches.len()];
    for shift in GRID_OFFSETS {
        let view = build_offset_view(
            matches,
            frame_kps,
            template_kps,
            &frame_grid,
            &template_grid,
            shift,
            cfg.alpha,
        );
        for (fc, members) in view.cell_members.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            // Template cell receiving the most matches from this frame cell;
            // ties go to the lowest template cell index.
            let mut best_tc = 0usize;
            let mut best_count = 0u32;
            for &mi in members {
                let tc = view.template_cell[mi];
                let c = view.counts[fc * view.template_cells + tc];
                if c > best_count || (c == best_count && tc < best_tc) {
                    best_count = c;
                    best_tc = tc;
                }
            }
            let score = neighborhood_score(
                &view,
                &frame_grid,
                &template_grid,
                fc,
                best_tc,
                cfg.with_rotation,
            );
            if score > view.tau {
                for &mi in members {
                    if view.template_cell[mi] == best_tc {
                        accepted[mi] = true;
                    }
                }
            }
        }
    }

    let mut kept = Vec::new();
    let mut rejected = Vec::new();
    for (mi, m) in matches.iter().enumerate() {
        if accepted[mi] {
            kept.push(*m);
        } else {
            rejected.push(*m);
        }
    }
    let key = |m: &MatchPair| (m.query_idx, m.train_idx);
    kept.sort_by_key(key);
    rejected.sort_by_key(key);
    (kept, rejected)
}

/// Diagnostic: the unshifted-grid neighborhood score of every match's own
/// cell pair. Exposes the statistic the filter thresholds, for analyses of
/// how well it separates correct from incorrect matches.
pub fn gms_cell_pair_scores(
    matches: &[MatchPair],
    frame_kps: &[Keypoint],
    template_kps: &[Keypoint],
    frame_dims: (u32, u32),
    template_dims: (u32, u32),
    cfg: &GmsConfig,
) -> Vec<f64> {
    if matches.is_empty() {
        return Vec::new();
    }
    let frame_grid = Grid::new(frame_dims, cfg.grid_rows, cfg.grid_cols);
    let template_grid = Grid::new(template_dims, cfg.grid_rows, cfg.grid_cols);
    let view = build_offset_view(
        matches,
        frame_kps,
        template_kps,
        &frame_grid,
        &template_grid,
        (0.0, 0.0),
        cfg.alpha,
    );
    matches
        .iter()
        .enumerate()
        .map(|(mi, _)| {
            let fc = view.frame_cell[mi].expect("unshifted grid covers all points");
            neighborhood_score(
                &view,
                &frame_grid,
                &template_grid,
                fc,
                view.template_cell[mi],
                cfg.with_rotation,
            )
        })
        .collect()
}
