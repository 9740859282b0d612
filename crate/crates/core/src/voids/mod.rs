//! Inter-layer gap detection and void characterization.
//!
//! A candidate void is a 4-connected patch of cells where an epoch's
//! surface sits at least `min_gap` above the next epoch's surface.

mod connectivity;
mod summary;

use std::collections::VecDeque;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::surface::{EpochStack, GridSpec};

pub use connectivity::{connectivity, footprint_distance, Components};
pub use summary::{summarize, SummaryStats};

#[derive(Debug, Error, PartialEq)]
pub enum VoidError {
    #[error("gap detection needs at least two layers")]
    SingleLayerStack,
    #[error("void footprint is empty")]
    EmptyFootprint,
    #[error("removed slab thickness {0} is negative")]
    NegativeThickness(f64),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
}

pub type Result<T> = std::result::Result<T, VoidError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Cause {
    Natural,
    Excavation,
    Indeterminate,
}

impl Cause {
    /// Wording used in the void table.
    pub fn table_label(self) -> &'static str {
        match self {
            Cause::Natural => "Naturally Formed",
            Cause::Excavation => "Excavation",
            Cause::Indeterminate => "Indeterminate",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CauseSource {
    Heuristic,
    Human,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionParams {
    /// Smallest earlier-minus-later elevation that counts as a gap, meters.
    pub min_gap: f64,
    /// Components with fewer cells are discarded.
    pub min_footprint_cells: usize,
}

impl Default for DetectionParams {
    fn default() -> Self {
        Self {
            min_gap: 0.15,
            min_footprint_cells: 16,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoidCandidate {
    pub id: u32,
    /// Cells `(i, j)` in row-major order.
    pub footprint: Vec<(usize, usize)>,
    /// Earlier minus later elevation per footprint cell.
    pub gap_heights: Vec<f64>,
    /// Later-epoch elevation per footprint cell (the gap floor).
    pub floor_elevations: Vec<f64>,
    pub epoch_pair: (DateTime<Utc>, DateTime<Utc>),
    /// Stack indices of the two layers.
    pub layer_pair: (usize, usize),
    /// Footprint centroid in XY, mean mid-gap elevation in Z.
    pub centroid: [f64; 3],
    /// Whether the footprint borders the pile edge (grid edge, a data hole,
    /// or ground-level surface) in the later epoch.
    pub open_boundary: bool,
}

impl VoidCandidate {
    pub fn footprint_area(&self, grid: &GridSpec) -> f64 {
        self.footprint.len() as f64 * grid.cell_area()
    }

    /// `[lowest floor, highest ceiling]` over the footprint.
    pub fn z_interval(&self) -> [f64; 2] {
        let lo = self.floor_elevations.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self
            .floor_elevations
            .iter()
            .zip(&self.gap_heights)
            .map(|(f, g)| f + g)
            .fold(f64::NEG_INFINITY, f64::max);
        [lo, hi]
    }

    /// `(min, max)` cell corners in site XY.
    pub fn bounds_xy(&self, grid: &GridSpec) -> ([f64; 2], [f64; 2]) {
        let (i0, i1, j0, j1) = index_bounds(&self.footprint);
        let cs = grid.cell_size;
        (
            [grid.origin[0] + i0 as f64 * cs, grid.origin[1] + j0 as f64 * cs],
            [grid.origin[0] + (i1 + 1) as f64 * cs, grid.origin[1] + (j1 + 1) as f64 * cs],
        )
    }
}

fn index_bounds(cells: &[(usize, usize)]) -> (usize, usize, usize, usize) {
    cells.iter().fold((usize::MAX, 0, usize::MAX, 0), |(i0, i1, j0, j1), &(i, j)| {
        (i0.min(i), i1.max(i), j0.min(j), j1.max(j))
    })
}

/// Table-style characterization of one void.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoidMetrics {
    pub approx_volume: f64,
    pub max_height: f64,
    pub min_height: f64,
    /// Extent along X, the width seen in an XZ cross section.
    pub xz_width: f64,
    /// Extent along Y, the width seen in a YZ cross section.
    pub yz_width: f64,
    pub surface_access: bool,
    pub cause: Cause,
    pub cause_source: CauseSource,
}

/// Finds gap components between every pair of consecutive layers.
pub fn detect_gaps(stack: &EpochStack, params: &DetectionParams) -> Result<Vec<VoidCandidate>> {
    if stack.len() < 2 {
        return Err(VoidError::SingleLayerStack);
    }
    if !(params.min_gap > 0.0) {
        return Err(VoidError::InvalidParams(format!("min_gap {} must be positive", params.min_gap)));
    }
    let grid = *stack.grid();
    let layers = stack.layers();
    let mut out = Vec::new();
    for k in 0..layers.len() - 1 {
        let (earlier, later) = (&layers[k], &layers[k + 1]);
        let gap: Vec<Option<f64>> = (0..grid.len())
            .map(|c| (earlier.occupied[c] && later.occupied[c]).then(|| earlier.elevation[c] - later.elevation[c]))
            .collect();
        let in_gap: Vec<bool> = gap.iter().map(|g| g.is_some_and(|g| g >= params.min_gap)).collect();
        for component in components_4(&grid, &in_gap) {
            if component.len() < params.min_footprint_cells.max(1) {
                continue;
            }
            let gap_heights: Vec<f64> = component.iter().map(|&(i, j)| gap[grid.index(i, j)].unwrap()).collect();
            let floor_elevations: Vec<f64> = component.iter().map(|&(i, j)| later.elevation[grid.index(i, j)]).collect();
            let n = component.len() as f64;
            let (sx, sy) = component.iter().fold((0.0, 0.0), |(sx, sy), &(i, j)| {
                let c = grid.cell_center(i, j);
                (sx + c[0], sy + c[1])
            });
            let mid_z: f64 = floor_elevations.iter().zip(&gap_heights).map(|(f, g)| f + 0.5 * g).sum::<f64>() / n;
            let open_boundary = touches_pile_edge(&component, &in_gap, later, &grid, stack.ground_elevation() + params.min_gap);
            out.push(VoidCandidate {
                id: out.len() as u32 + 1,
                footprint: component,
                gap_heights,
                floor_elevations,
                epoch_pair: (earlier.epoch, later.epoch),
                layer_pair: (k, k + 1),
                centroid: [sx / n, sy / n, mid_z],
                open_boundary,
            });
        }
    }
    Ok(out)
}

fn touches_pile_edge(
    cells: &[(usize, usize)],
    in_gap: &[bool],
    later: &crate::surface::HeightField,
    grid: &GridSpec,
    ground_level: f64,
) -> bool {
    cells.iter().any(|&(i, j)| {
        neighbors_4(grid, i, j).len() < 4
            || neighbors_4(grid, i, j).into_iter().any(|(ni, nj)| {
                let nk = grid.index(ni, nj);
                !in_gap[nk] && (!later.occupied[nk] || later.elevation[nk] <= ground_level)
            })
    })
}

fn neighbors_4(grid: &GridSpec, i: usize, j: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(4);
    if i > 0 {
        v.push((i - 1, j));
    }
    if i + 1 < grid.nx {
        v.push((i + 1, j));
    }
    if j > 0 {
        v.push((i, j - 1));
    }
    if j + 1 < grid.ny {
        v.push((i, j + 1));
    }
    v
}

/// 4-connected components of `mask`, each sorted row-major, ordered by
/// their first cell in row-major order.
pub(crate) fn components_4(grid: &GridSpec, mask: &[bool]) -> Vec<Vec<(usize, usize)>> {
    let mut seen = vec![false; mask.len()];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let k = grid.index(i, j);
            if !mask[k] || seen[k] {
                continue;
            }
            seen[k] = true;
            queue.push_back((i, j));
            let mut cells = Vec::new();
            while let Some((ci, cj)) = queue.pop_front() {
                cells.push((ci, cj));
                for (ni, nj) in neighbors_4(grid, ci, cj) {
                    let nk = grid.index(ni, nj);
                    if mask[nk] && !seen[nk] {
                        seen[nk] = true;
                        queue.push_back((ni, nj));
                    }
                }
            }
            cells.sort_by_key(|&(i, j)| (j, i));
            out.push(cells);
        }
    }
    out
}

/// Integrated volume, height range and axis-aligned widths of a candidate.
///
/// `min_height` is taken over the footprint with one boundary ring eroded
/// (falling back to the whole footprint when nothing survives erosion).
pub fn characterize(v: &VoidCandidate, grid: &GridSpec) -> Result<VoidMetrics> {
    if v.footprint.is_empty() || v.footprint.len() != v.gap_heights.len() {
        return Err(VoidError::EmptyFootprint);
    }
    let cell_area = grid.cell_area();
    let approx_volume: f64 = v.gap_heights.iter().map(|h| h * cell_area).sum();
    let max_height = v.gap_heights.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let (i0, i1, j0, j1) = index_bounds(&v.footprint);
    let (w, h) = (i1 - i0 + 3, j1 - j0 + 3);
    let mut mask = vec![false; w * h];
    let local = |i: usize, j: usize| (j - j0 + 1) * w + (i - i0 + 1);
    for &(i, j) in &v.footprint {
        mask[local(i, j)] = true;
    }
    let interior = |i: usize, j: usize| {
        let k = local(i, j);
        mask[k - 1] && mask[k + 1] && mask[k - w] && mask[k + w]
    };
    let eroded = v
        .footprint
        .iter()
        .zip(&v.gap_heights)
        .filter(|((i, j), _)| interior(*i, *j))
        .map(|(_, g)| *g)
        .fold(f64::INFINITY, f64::min);
    let min_height = if eroded.is_finite() {
        eroded
    } else {
        v.gap_heights.iter().copied().fold(f64::INFINITY, f64::min)
    };

    Ok(VoidMetrics {
        approx_volume,
        max_height,
        min_height,
        xz_width: (i1 - i0 + 1) as f64 * grid.cell_size,
        yz_width: (j1 - j0 + 1) as f64 * grid.cell_size,
        surface_access: v.open_boundary,
        cause: Cause::Indeterminate,
        cause_source: CauseSource::Heuristic,
    })
}

/// Natural if the gap volume exceeds what removing a slab of the given
/// thickness over the whole footprint would explain, with a relative margin.
pub fn classify_cause(approx_volume: f64, footprint_area: f64, removed_slab_thickness: Option<f64>, margin: f64) -> Result<Cause> {
    if !(margin >= 0.0) {
        return Err(VoidError::InvalidParams(format!("margin {margin} must be non-negative")));
    }
    let Some(thickness) = removed_slab_thickness else {
        return Ok(Cause::Indeterminate);
    };
    if thickness < 0.0 {
        return Err(VoidError::NegativeThickness(thickness));
    }
    let expected = thickness * footprint_area;
    Ok(if approx_volume > expected * (1.0 + margin) {
        Cause::Natural
    } else {
        Cause::Excavation
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{build_stack, HeightField, SurfaceRule};
    use chrono::Duration;

    fn epoch(k: i64) -> DateTime<Utc> {
        DateTime::<Utc>::UNIX_EPOCH + Duration::days(k)
    }

    fn two_layer(grid: GridSpec, top: impl Fn(usize, usize) -> f64, bottom: impl Fn(usize, usize) -> f64) -> EpochStack {
        let a = HeightField::from_fn(grid, epoch(0), SurfaceRule::MaxZ, |i, j| Some(top(i, j)));
        let b = HeightField::from_fn(grid, epoch(1), SurfaceRule::MaxZ, |i, j| Some(bottom(i, j)));
        build_stack(vec![a, b], 0.0).unwrap()
    }

    #[test]
    fn identical_layers_have_no_gaps() {
        let g = GridSpec::new([0.0, 0.0], 0.25, 40, 40).unwrap();
        let stack = two_layer(g, |_, _| 5.0, |_, _| 5.0);
        assert!(detect_gaps(&stack, &DetectionParams::default()).unwrap().is_empty());
    }

    #[test]
    fn carved_patch_is_one_candidate() {
        let g = GridSpec::new([0.0, 0.0], 0.25, 40, 40).unwrap();
        // 3m x 3m patch = 12 x 12 cells starting at cell 10
        let carved = |i: usize, j: usize| (10..22).contains(&i) && (10..22).contains(&j);
        let stack = two_layer(g, |_, _| 5.0, |i, j| if carved(i, j) { 4.0 } else { 5.0 });
        let found = detect_gaps(&stack, &DetectionParams::default()).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].footprint.len(), 144);
        assert_eq!(found[0].layer_pair, (0, 1));
        assert!((found[0].centroid[0] - 4.0).abs() < 1e-12);
        assert!((found[0].centroid[2] - 4.5).abs() < 1e-12);
        assert!(!found[0].open_boundary);
    }

    #[test]
    fn sub_threshold_gap_ignored() {
        let g = GridSpec::new([0.0, 0.0], 0.25, 20, 20).unwrap();
        let stack = two_layer(g, |_, _| 5.0, |_, _| 4.9);
        assert!(detect_gaps(&stack, &DetectionParams::default()).unwrap().is_empty());
    }

    #[test]
    fn single_layer_is_an_error() {
        let g = GridSpec::new([0.0, 0.0], 1.0, 2, 2).unwrap();
        let hf = HeightField::from_fn(g, epoch(0), SurfaceRule::MaxZ, |_, _| Some(1.0));
        let stack = build_stack(vec![hf], 0.0).unwrap();
        assert_eq!(detect_gaps(&stack, &DetectionParams::default()), Err(VoidError::SingleLayerStack));
    }

    #[test]
    fn small_components_discarded_and_edges_open() {
        let g = GridSpec::new([0.0, 0.0], 0.25, 20, 20).unwrap();
        // 2x2 speck and a 4x5 strip on the grid edge
        let low = |i: usize, j: usize| ((5..7).contains(&i) && (5..7).contains(&j)) || (i < 4 && (10..15).contains(&j));
        let stack = two_layer(g, |_, _| 3.0, |i, j| if low(i, j) { 2.0 } else { 3.0 });
        let found = detect_gaps(&stack, &DetectionParams::default()).unwrap();
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].footprint.len(), 20);
        assert!(found[0].open_boundary);
    }

    fn candidate(cells: Vec<(usize, usize)>, heights: Vec<f64>) -> VoidCandidate {
        VoidCandidate {
            id: 1,
            floor_elevations: vec![0.0; cells.len()],
            footprint: cells,
            gap_heights: heights,
            epoch_pair: (epoch(0), epoch(1)),
            layer_pair: (0, 1),
            centroid: [0.0; 3],
            open_boundary: false,
        }
    }

    #[test]
    fn box_metrics() {
        let g = GridSpec::new([0.0, 0.0], 0.25, 40, 40).unwrap();
        let cells: Vec<_> = (0..8).flat_map(|j| (0..16).map(move |i| (i + 4, j + 4))).collect();
        let n = cells.len();
        let m = characterize(&candidate(cells, vec![1.0; n]), &g).unwrap();
        assert!((m.approx_volume - 8.0).abs() < 1e-12);
        assert_eq!((m.xz_width, m.yz_width), (4.0, 2.0));
        assert_eq!((m.max_height, m.min_height), (1.0, 1.0));
    }

    #[test]
    fn min_height_skips_boundary_ring() {
        let g = GridSpec::new([0.0, 0.0], 1.0, 10, 10).unwrap();
        let cells: Vec<_> = (0..4).flat_map(|j| (0..4).map(move |i| (i + 2, j + 2))).collect();
        let heights = cells
            .iter()
            .map(|&(i, j)| if (3..5).contains(&i) && (3..5).contains(&j) { 1.0 } else { 0.2 })
            .collect();
        let m = characterize(&candidate(cells, heights), &g).unwrap();
        assert_eq!(m.min_height, 1.0);
        assert_eq!(m.max_height, 1.0);
    }

    #[test]
    fn single_cell_metrics() {
        let g = GridSpec::new([0.0, 0.0], 0.25, 4, 4).unwrap();
        let m = characterize(&candidate(vec![(1, 1)], vec![0.5]), &g).unwrap();
        assert_eq!(m.approx_volume, 0.03125);
        assert_eq!((m.xz_width, m.yz_width), (0.25, 0.25));
        assert_eq!(m.min_height, 0.5);
        assert_eq!(
            characterize(&candidate(vec![], vec![]), &g),
            Err(VoidError::EmptyFootprint)
        );
    }

    #[test]
    fn cause_rule() {
        assert_eq!(classify_cause(20.0, 25.0, Some(0.4), 0.25), Ok(Cause::Natural));
        assert_eq!(classify_cause(10.0, 25.0, Some(0.4), 0.25), Ok(Cause::Excavation));
        assert_eq!(classify_cause(12.5, 25.0, Some(0.4), 0.25), Ok(Cause::Excavation));
        assert_eq!(classify_cause(10.0, 25.0, None, 0.25), Ok(Cause::Indeterminate));
        assert_eq!(classify_cause(10.0, 25.0, Some(-0.1), 0.25), Err(VoidError::NegativeThickness(-0.1)));
    }
}
