//! Digital surface models and the time-ordered epoch stack.

mod export;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::{Aabb, PointCloud};

pub use export::{read_height_field_json, to_pgm, write_height_field_json};

#[derive(Debug, Error)]
pub enum SurfaceError {
    #[error("point cloud contains no points")]
    EmptyCloud,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("height field has no occupied cells")]
    AllUnoccupied,
    #[error("layers do not share one grid: {0}")]
    GridMismatch(String),
    #[error("two layers share epoch {0}")]
    DuplicateEpoch(DateTime<Utc>),
    #[error("stack needs at least one layer")]
    EmptyStack,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, SurfaceError>;

/// Raster frame shared by every layer. Cell `(i, j)` covers
/// `[origin.x + i·cell, origin.x + (i+1)·cell) × [origin.y + j·cell, …)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub origin: [f64; 2],
    pub cell_size: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(origin: [f64; 2], cell_size: f64, nx: usize, ny: usize) -> Result<Self> {
        let g = Self { origin, cell_size, nx, ny };
        g.validate()?;
        Ok(g)
    }

    /// Smallest grid anchored at `min` that covers `[min, max]`.
    pub fn covering(min: [f64; 2], max: [f64; 2], cell_size: f64) -> Result<Self> {
        if !(cell_size > 0.0) {
            return Err(SurfaceError::InvalidGrid(format!("cell_size {cell_size} must be positive")));
        }
        let count = |lo: f64, hi: f64| (((hi - lo) / cell_size) - 1e-9).ceil().max(1.0) as usize;
        Self::new(min, cell_size, count(min[0], max[0]), count(min[1], max[1]))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cell_size > 0.0 && self.cell_size.is_finite()) {
            return Err(SurfaceError::InvalidGrid(format!("cell_size {} must be positive", self.cell_size)));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(SurfaceError::InvalidGrid(format!("{}x{} cells", self.nx, self.ny)));
        }
        if !(self.origin[0].is_finite() && self.origin[1].is_finite()) {
            return Err(SurfaceError::InvalidGrid("non-finite origin".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn cell_area(&self) -> f64 {
        self.cell_size * self.cell_size
    }

    /// Row-major linear index, `j * nx + i`.
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn cell_of(&self, x: f64, y: f64) -> Option<(usize, usize)> {
        let fi = ((x - self.origin[0]) / self.cell_size).floor();
        let fj = ((y - self.origin[1]) / self.cell_size).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }

    pub fn cell_center(&self, i: usize, j: usize) -> [f64; 2] {
        [
            self.origin[0] + (i as f64 + 0.5) * self.cell_size,
            self.origin[1] + (j as f64 + 0.5) * self.cell_size,
        ]
    }

    pub fn max_corner(&self) -> [f64; 2] {
        [
            self.origin[0] + self.nx as f64 * self.cell_size,
            self.origin[1] + self.ny as f64 * self.cell_size,
        ]
    }

    /// XY extent as a box spanning every elevation.
    pub fn bounds(&self) -> Aabb {
        Aabb::from_xy(self.origin, self.max_corner()).expect("validated grid")
    }
}

/// XY overlap of several boxes; `None` if they do not all overlap.
pub fn common_xy_bounds(boxes: &[Aabb]) -> Option<([f64; 2], [f64; 2])> {
    let first = boxes.first()?;
    let mut min = [first.min[0], first.min[1]];
    let mut max = [first.max[0], first.max[1]];
    for b in &boxes[1..] {
        min = [min[0].max(b.min[0]), min[1].max(b.min[1])];
        max = [max[0].min(b.max[0]), max[1].min(b.max[1])];
    }
    (min[0] < max[0] && min[1] < max[1]).then_some((min, max))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SurfaceRule {
    MaxZ,
    MinZ,
}

/// One rasterized epoch. `elevation` is meaningless (zero) where
/// `occupied` is false; `filled` marks cells synthesized by hole filling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeightField {
    pub grid: GridSpec,
    pub elevation: Vec<f64>,
    pub occupied: Vec<bool>,
    pub filled: Vec<bool>,
    pub epoch: DateTime<Utc>,
    pub surface_rule: SurfaceRule,
}

impl HeightField {
    /// Unoccupied field over `grid`.
    pub fn empty(grid: GridSpec, epoch: DateTime<Utc>, surface_rule: SurfaceRule) -> Self {
        let n = grid.len();
        Self {
            grid,
            elevation: vec![0.0; n],
            occupied: vec![false; n],
            filled: vec![false; n],
            epoch,
            surface_rule,
        }
    }

    /// Builds a field from a per-cell function; `None` leaves the cell unoccupied.
    pub fn from_fn(
        grid: GridSpec,
        epoch: DateTime<Utc>,
        surface_rule: SurfaceRule,
        f: impl Fn(usize, usize) -> Option<f64>,
    ) -> Self {
        let mut hf = Self::empty(grid, epoch, surface_rule);
        for j in 0..grid.ny {
            for i in 0..grid.nx {
                if let Some(z) = f(i, j) {
                    let k = grid.index(i, j);
                    hf.elevation[k] = z;
                    hf.occupied[k] = true;
                }
            }
        }
        hf
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let k = self.grid.index(i, j);
        self.occupied[k].then_some(self.elevation[k])
    }

    pub fn occupied_count(&self) -> usize {
        self.occupied.iter().filter(|o| **o).count()
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        let n = self.grid.len();
        if self.elevation.len() != n || self.occupied.len() != n || self.filled.len() != n {
            return Err(SurfaceError::InvalidGrid("array sizes do not match the grid".into()));
        }
        if self.elevation.iter().zip(&self.occupied).any(|(z, o)| *o && !z.is_finite()) {
            return Err(SurfaceError::InvalidGrid("non-finite elevation in an occupied cell".into()));
        }
        Ok(())
    }

    /// Occupied elevations in row-major order.
    pub fn occupied_elevations(&self) -> impl Iterator<Item = f64> + '_ {
        self.elevation.iter().zip(&self.occupied).filter(|(_, o)| **o).map(|(z, _)| *z)
    }
}

/// Per-cell max (or min) elevation of the points falling in each cell.
/// Points outside the grid are ignored.
pub fn rasterize_dsm(cloud: &PointCloud, grid: &GridSpec, rule: SurfaceRule) -> Result<HeightField> {
    if cloud.is_empty() {
        return Err(SurfaceError::EmptyCloud);
    }
    grid.validate()?;
    let mut hf = HeightField::empty(*grid, cloud.epoch, rule);
    let mut outside = 0usize;
    for p in &cloud.points {
        let Some((i, j)) = grid.cell_of(p.x, p.y) else {
            outside += 1;
            continue;
        };
        let k = grid.index(i, j);
        if !hf.occupied[k] {
            hf.occupied[k] = true;
            hf.elevation[k] = p.z;
        } else {
            hf.elevation[k] = match rule {
                SurfaceRule::MaxZ => hf.elevation[k].max(p.z),
                SurfaceRule::MinZ => hf.elevation[k].min(p.z),
            };
        }
    }
    if outside > 0 {
        log::debug!("rasterize: {outside} of {} points fall outside the grid", cloud.len());
    }
    Ok(hf)
}

/// Fills unoccupied cells that have a measured cell within `max_hole_radius`
/// (Euclidean, in cells) by inverse-distance weighting of the measured cells
/// in that radius. Only measured cells (occupied and not previously filled)
/// act as sources, so the operation is idempotent.
pub fn fill_holes(hf: &HeightField, max_hole_radius: usize) -> Result<HeightField> {
    let measured: Vec<bool> = hf.occupied.iter().zip(&hf.filled).map(|(o, f)| *o && !*f).collect();
    if !measured.iter().any(|m| *m) {
        return Err(SurfaceError::AllUnoccupied);
    }
    let mut out = hf.clone();
    if max_hole_radius == 0 {
        return Ok(out);
    }
    let g = hf.grid;
    let r = max_hole_radius as i64;
    let r_sq = r * r;
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = g.index(i, j);
            if hf.occupied[k] {
                continue;
            }
            let mut weight = 0.0;
            let mut acc = 0.0;
            for dj in -r..=r {
                for di in -r..=r {
                    let d_sq = di * di + dj * dj;
                    if d_sq == 0 || d_sq > r_sq {
                        continue;
                    }
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= g.nx as i64 || nj >= g.ny as i64 {
                        continue;
                    }
                    let nk = g.index(ni as usize, nj as usize);
                    if measured[nk] {
                        let w = 1.0 / (d_sq as f64).sqrt();
                        weight += w;
                        acc += w * hf.elevation[nk];
                    }
                }
            }
            if weight > 0.0 {
                out.elevation[k] = acc / weight;
                out.occupied[k] = true;
                out.filled[k] = true;
            }
        }
    }
    Ok(out)
}

/// Co-registered layers on one grid, in strictly increasing epoch order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochStack {
    layers: Vec<HeightField>,
    ground_elevation: f64,
}

pub fn build_stack(mut layers: Vec<HeightField>, ground_elevation: f64) -> Result<EpochStack> {
    let first = layers.first().ok_or(SurfaceError::EmptyStack)?;
    let grid = first.grid;
    for layer in &layers {
        layer.validate()?;
        if layer.grid != grid {
            return Err(SurfaceError::GridMismatch(format!("{:?} vs {:?}", layer.grid, grid)));
        }
    }
    layers.sort_by_key(|l| l.epoch);
    if let Some(w) = layers.windows(2).find(|w| w[0].epoch == w[1].epoch) {
        return Err(SurfaceError::DuplicateEpoch(w[0].epoch));
    }
    Ok(EpochStack {
        layers,
        ground_elevation,
    })
}

impl EpochStack {
    pub fn layers(&self) -> &[HeightField] {
        &self.layers
    }

    pub fn grid(&self) -> &GridSpec {
        &self.layers[0].grid
    }

    pub fn ground_elevation(&self) -> f64 {
        self.ground_elevation
    }

    pub fn epochs(&self) -> Vec<DateTime<Utc>> {
        self.layers.iter().map(|l| l.epoch).collect()
    }

    pub fn len(&self) -> usize {
        self.layers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.layers.is_empty()
    }
}

/// Height of the first epoch's surface above the ground datum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DepthMap {
    pub grid: GridSpec,
    pub depth: Vec<f64>,
    pub occupied: Vec<bool>,
    pub max_depth: f64,
}

pub fn pile_depth(stack: &EpochStack) -> DepthMap {
    let top = &stack.layers[0];
    let depth: Vec<f64> = top
        .elevation
        .iter()
        .zip(&top.occupied)
        .map(|(z, o)| if *o { (z - stack.ground_elevation).max(0.0) } else { 0.0 })
        .collect();
    let max_depth = depth.iter().copied().fold(0.0, f64::max);
    DepthMap {
        grid: top.grid,
        depth,
        occupied: top.occupied.clone(),
        max_depth,
    }
}

/// Ground datum estimate: the 5th percentile of occupied elevations whose
/// cell centers lie outside `pile_footprint` (all cells when `None`).
pub fn estimate_ground(hf: &HeightField, pile_footprint: Option<&Aabb>) -> Option<f64> {
    let g = hf.grid;
    let mut values: Vec<f64> = (0..g.ny)
        .flat_map(|j| (0..g.nx).map(move |i| (i, j)))
        .filter(|&(i, j)| {
            let c = g.cell_center(i, j);
            pile_footprint.is_none_or(|f| !f.contains_xy(c[0], c[1]))
        })
        .filter_map(|(i, j)| hf.get(i, j))
        .collect();
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(percentile_sorted(&values, 0.05))
}

fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}
