use super::{CloudError, Point3, PointCloud, Result};

/// Flat XY bucket grid over a cloud. Each bucket is a column of points with
/// no ordering in Z.
///
/// Buckets are stored densely over the occupied cell range: point ids and
/// coordinates sorted by cell, with one offset per cell.
#[derive(Clone, Debug)]
pub struct GridIndex {
    cell_size: f64,
    origin: [f64; 2],
    /// Cell coordinates of the first dense column and row.
    base: (i64, i64),
    nx: usize,
    ny: usize,
    starts: Vec<u32>,
    ids: Vec<u32>,
    coords: Vec<[f64; 3]>,
}

/// Dense layouts larger than this many cells per point are refused.
const MAX_CELLS_PER_POINT: usize = 64;

/// Indexes `cloud` with buckets anchored at its XY minimum.
pub fn build_index(cloud: &PointCloud, cell_size: f64) -> Result<GridIndex> {
    let origin = cloud.points.iter().fold([f64::INFINITY; 2], |acc, p| [acc[0].min(p.x), acc[1].min(p.y)]);
    let origin = if cloud.is_empty() { [0.0, 0.0] } else { origin };
    GridIndex::with_origin(&cloud.points, cell_size, origin)
}

impl GridIndex {
    pub fn with_origin(points: &[Point3], cell_size: f64, origin: [f64; 2]) -> Result<Self> {
        if !(cell_size > 0.0 && cell_size.is_finite()) {
            return Err(CloudError::NonPositiveCell(cell_size));
        }
        let cell = |p: &Point3| {
            (
                ((p.x - origin[0]) / cell_size).floor() as i64,
                ((p.y - origin[1]) / cell_size).floor() as i64,
            )
        };
        let (mut lo, mut hi) = ((i64::MAX, i64::MAX), (i64::MIN, i64::MIN));
        for p in points {
            let (i, j) = cell(p);
            lo = (lo.0.min(i), lo.1.min(j));
            hi = (hi.0.max(i), hi.1.max(j));
        }
        let (nx, ny) = if points.is_empty() {
            lo = (0, 0);
            (0, 0)
        } else {
            ((hi.0 - lo.0 + 1) as usize, (hi.1 - lo.1 + 1) as usize)
        };
        let dense = nx.checked_mul(ny).filter(|&n| n <= (points.len() * MAX_CELLS_PER_POINT).max(1 << 20));
        let Some(dense) = dense else {
            return Err(CloudError::InvalidBox(format!(
                "a {nx}x{ny} cell index is too sparse for {} points; use a larger cell size",
                points.len()
            )));
        };
        let slot = |p: &Point3| {
            let (i, j) = cell(p);
            (j - lo.1) as usize * nx + (i - lo.0) as usize
        };
        let mut starts = vec![0u32; dense + 1];
        for p in points {
            starts[slot(p) + 1] += 1;
        }
        for k in 0..dense {
            starts[k + 1] += starts[k];
        }
        let mut fill = starts.clone();
        let mut ids = vec![0u32; points.len()];
        let mut coords = vec![[0.0; 3]; points.len()];
        for (id, p) in points.iter().enumerate() {
            let s = slot(p);
            let at = fill[s] as usize;
            ids[at] = id as u32;
            coords[at] = p.xyz();
            fill[s] += 1;
        }
        Ok(GridIndex {
            cell_size,
            origin,
            base: lo,
            nx,
            ny,
            starts,
            ids,
            coords,
        })
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn origin(&self) -> [f64; 2] {
        self.origin
    }

    /// Number of indexed points.
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn cell_of(&self, x: f64, y: f64) -> (i64, i64) {
        (
            ((x - self.origin[0]) / self.cell_size).floor() as i64,
            ((y - self.origin[1]) / self.cell_size).floor() as i64,
        )
    }

    fn range(&self, (i, j): (i64, i64)) -> std::ops::Range<usize> {
        let (di, dj) = (i - self.base.0, j - self.base.1);
        if di < 0 || dj < 0 || di >= self.nx as i64 || dj >= self.ny as i64 {
            return 0..0;
        }
        let s = dj as usize * self.nx + di as usize;
        self.starts[s] as usize..self.starts[s + 1] as usize
    }

    /// Ids of the points in `cell`, in input order.
    pub fn bucket(&self, cell: (i64, i64)) -> &[u32] {
        &self.ids[self.range(cell)]
    }

    /// Number of non-empty buckets.
    pub fn bucket_count(&self) -> usize {
        self.starts.windows(2).filter(|w| w[1] > w[0]).count()
    }

    /// Occupied cells in ascending (i, j) order.
    pub fn cells(&self) -> Vec<(i64, i64)> {
        let mut cells = Vec::new();
        for di in 0..self.nx {
            for dj in 0..self.ny {
                let s = dj * self.nx + di;
                if self.starts[s + 1] > self.starts[s] {
                    cells.push((self.base.0 + di as i64, self.base.1 + dj as i64));
                }
            }
        }
        cells
    }

    /// Nearest indexed point to `query` within `max_distance` (3D Euclidean).
    /// Returns the point id and squared distance; ties go to the lower id.
    pub fn nearest(&self, query: &Point3, max_distance: f64) -> Option<(usize, f64)> {
        if self.is_empty() {
            return None;
        }
        let max_sq = max_distance * max_distance;
        let (ci, cj) = self.cell_of(query.x, query.y);
        let rings = (max_distance / self.cell_size).ceil() as i64;
        // rings beyond the occupied block hold nothing
        let reach = [
            ci - self.base.0,
            cj - self.base.1,
            self.base.0 + self.nx as i64 - 1 - ci,
            self.base.1 + self.ny as i64 - 1 - cj,
        ]
        .into_iter()
        .max()
        .unwrap_or(0);
        let rings = rings.min(reach.max(0));
        let q = query.xyz();
        let mut best: Option<(usize, f64)> = None;
        for r in 0..=rings {
            if r > 0 {
                // every cell of ring r lies at least (r - 1) cells away in XY
                let lower = (r - 1) as f64 * self.cell_size;
                let bound = best.map_or(max_sq, |b| b.1);
                if lower * lower > bound {
                    break;
                }
            }
            for cell in ring_cells(ci, cj, r) {
                let range = self.range(cell);
                for (c, &id) in self.coords[range.clone()].iter().zip(&self.ids[range]) {
                    let d = (c[0] - q[0]).powi(2) + (c[1] - q[1]).powi(2) + (c[2] - q[2]).powi(2);
                    let id = id as usize;
                    if d <= max_sq && best.is_none_or(|b| d < b.1 || (d == b.1 && id < b.0)) {
                        best = Some((id, d));
                    }
                }
            }
        }
        best
    }
}

/// Cells at Chebyshev distance exactly `r` from (ci, cj).
fn ring_cells(ci: i64, cj: i64, r: i64) -> impl Iterator<Item = (i64, i64)> {
    let rows = (-r..=r).flat_map(move |d| [(ci + d, cj - r), (ci + d, cj + r)]);
    let cols = (1 - r..r).flat_map(move |d| [(ci - r, cj + d), (ci + r, cj + d)]);
    // for r = 0 both row entries are the center cell
    rows.chain(cols).take(if r == 0 { 1 } else { usize::MAX })
}
