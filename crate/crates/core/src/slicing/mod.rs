//! Systematic cross-section grid over the stack.
//!
//! A slice is a vertical band of fixed thickness. `X_NORMAL` bands are
//! perpendicular to X, so their profile runs along Y (a YZ cross section);
//! `Y_NORMAL` bands give XZ cross sections.

mod render;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::Aabb;
use crate::surface::EpochStack;

pub use render::{render_profile, render_profile_svg, Raster, RenderStyle};

#[derive(Debug, Error, PartialEq)]
pub enum SliceError {
    #[error("invalid spacing: {0}")]
    InvalidSpacing(String),
    #[error("invalid slice plane: {0}")]
    InvalidPlane(String),
    #[error("slice plane does not intersect the stack grid")]
    PlaneOutsideGrid,
    #[error("profile has no stations")]
    EmptyProfile,
}

pub type Result<T> = std::result::Result<T, SliceError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SliceAxis {
    XNormal,
    YNormal,
}

impl SliceAxis {
    /// Name of the vertical plane the profile shows.
    pub fn section_name(self) -> &'static str {
        match self {
            SliceAxis::XNormal => "YZ",
            SliceAxis::YNormal => "XZ",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlicePlane {
    pub axis: SliceAxis,
    /// Band center along the normal axis, meters.
    pub offset: f64,
    pub thickness: f64,
    /// `[lo, hi]` along the in-plane horizontal axis.
    pub extent: [f64; 2],
}

impl SlicePlane {
    pub fn new(axis: SliceAxis, offset: f64, thickness: f64, extent: [f64; 2]) -> Result<Self> {
        if !(thickness > 0.0) {
            return Err(SliceError::InvalidPlane(format!("thickness {thickness} must be positive")));
        }
        if !(extent[0] < extent[1]) {
            return Err(SliceError::InvalidPlane(format!("extent {extent:?} is empty")));
        }
        if !offset.is_finite() {
            return Err(SliceError::InvalidPlane("non-finite offset".into()));
        }
        Ok(Self {
            axis,
            offset,
            thickness,
            extent,
        })
    }

    /// Normal-axis interval covered by the band.
    pub fn band(&self) -> [f64; 2] {
        [self.offset - 0.5 * self.thickness, self.offset + 0.5 * self.thickness]
    }

    /// Whether the band crosses the XY rectangle `[min, max]`.
    pub fn crosses(&self, min: [f64; 2], max: [f64; 2]) -> bool {
        let (n, h) = match self.axis {
            SliceAxis::XNormal => (0, 1),
            SliceAxis::YNormal => (1, 0),
        };
        let [b0, b1] = self.band();
        b0 <= max[n] && b1 >= min[n] && self.extent[0] <= max[h] && self.extent[1] >= min[h]
    }
}

/// Number of bands along one axis of length `extent`.
pub fn plane_count(extent: f64, spacing: f64) -> usize {
    ((extent / spacing) - 1e-9).ceil().max(1.0) as usize
}

/// Band centers at `origin + spacing·(k + ½)` along each horizontal axis,
/// X-normal planes first. An axis shorter than `spacing` gets one centered
/// plane.
pub fn generate_slice_planes(region: &Aabb, spacing: f64, thickness: f64) -> Result<Vec<SlicePlane>> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(SliceError::InvalidSpacing(format!("spacing {spacing} must be positive")));
    }
    if !(thickness > 0.0) {
        return Err(SliceError::InvalidSpacing(format!("thickness {thickness} must be positive")));
    }
    if spacing < thickness {
        return Err(SliceError::InvalidSpacing(format!(
            "spacing {spacing} is smaller than thickness {thickness}"
        )));
    }
    let mut planes = Vec::new();
    for (axis, n, h) in [(SliceAxis::XNormal, 0, 1), (SliceAxis::YNormal, 1, 0)] {
        let lo = region.min[n];
        let len = region.max[n] - lo;
        let extent = [region.min[h], region.max[h]];
        if len < spacing {
            planes.push(SlicePlane::new(axis, lo + 0.5 * len, thickness, extent)?);
            continue;
        }
        for k in 0..plane_count(len, spacing) {
            planes.push(SlicePlane::new(axis, lo + spacing * (k as f64 + 0.5), thickness, extent)?);
        }
    }
    Ok(planes)
}

/// Grid locations formed by the crossing bands: X-normal count × Y-normal count.
pub fn grid_cell_count(planes: &[SlicePlane]) -> usize {
    let xs = planes.iter().filter(|p| p.axis == SliceAxis::XNormal).count();
    xs * (planes.len() - xs)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileLayer {
    pub epoch: DateTime<Utc>,
    pub elevation: Vec<f64>,
    pub occupied: Vec<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceProfile {
    pub plane: SlicePlane,
    /// In-plane horizontal positions of the raster cell centers, increasing.
    pub stations: Vec<f64>,
    pub layers: Vec<ProfileLayer>,
}

impl SliceProfile {
    pub fn epochs(&self) -> Vec<DateTime<Utc>> {
        self.layers.iter().map(|l| l.epoch).collect()
    }

    pub fn elevation_range(&self) -> Option<(f64, f64)> {
        self.layers
            .iter()
            .flat_map(|l| l.elevation.iter().zip(&l.occupied).filter(|(_, o)| **o).map(|(z, _)| *z))
            .fold(None, |acc, z| match acc {
                None => Some((z, z)),
                Some((lo, hi)) => Some((lo.min(z), hi.max(z))),
            })
    }
}

/// Samples every layer along the band. Each station is one raster row (or
/// column) whose center lies inside the plane extent; its elevation is the
/// median of the occupied cells whose centers fall inside the band.
pub fn extract_profile(stack: &EpochStack, plane: &SlicePlane) -> Result<SliceProfile> {
    let grid = stack.grid();
    let [b0, b1] = plane.band();
    let (n_normal, n_along, normal_axis, along_axis) = match plane.axis {
        SliceAxis::XNormal => (grid.nx, grid.ny, 0, 1),
        SliceAxis::YNormal => (grid.ny, grid.nx, 1, 0),
    };
    let center = |axis: usize, k: usize| grid.origin[axis] + (k as f64 + 0.5) * grid.cell_size;
    let band: Vec<usize> = (0..n_normal)
        .filter(|&k| {
            let c = center(normal_axis, k);
            c >= b0 && c <= b1
        })
        .collect();
    let rows: Vec<usize> = (0..n_along)
        .filter(|&k| {
            let c = center(along_axis, k);
            c >= plane.extent[0] && c <= plane.extent[1]
        })
        .collect();
    if band.is_empty() || rows.is_empty() {
        return Err(SliceError::PlaneOutsideGrid);
    }
    let stations = rows.iter().map(|&k| center(along_axis, k)).collect();
    let cell = |normal: usize, along: usize| match plane.axis {
        SliceAxis::XNormal => (normal, along),
        SliceAxis::YNormal => (along, normal),
    };
    let layers = stack
        .layers()
        .iter()
        .map(|layer| {
            let mut elevation = Vec::with_capacity(rows.len());
            let mut occupied = Vec::with_capacity(rows.len());
            let mut values = Vec::with_capacity(band.len());
            for &r in &rows {
                values.clear();
                values.extend(band.iter().filter_map(|&b| {
                    let (i, j) = cell(b, r);
                    layer.get(i, j)
                }));
                match median(&mut values) {
                    Some(z) => {
                        elevation.push(z);
                        occupied.push(true);
                    }
                    None => {
                        elevation.push(0.0);
                        occupied.push(false);
                    }
                }
            }
            ProfileLayer {
                epoch: layer.epoch,
                elevation,
                occupied,
            }
        })
        .collect();
    Ok(SliceProfile {
        plane: *plane,
        stations,
        layers,
    })
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    Some(if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{build_stack, GridSpec, HeightField, SurfaceRule};

    fn region(w: f64, h: f64) -> Aabb {
        Aabb::new([0.0, 0.0, 0.0], [w, h, 10.0]).unwrap()
    }

    fn flat_stack(levels: &[f64]) -> EpochStack {
        let grid = GridSpec::new([0.0, 0.0], 0.25, 40, 48).unwrap();
        let layers = levels
            .iter()
            .enumerate()
            .map(|(k, z)| {
                let epoch = DateTime::<Utc>::UNIX_EPOCH + chrono::Duration::days(k as i64);
                HeightField::from_fn(grid, epoch, SurfaceRule::MaxZ, |_, _| Some(*z))
            })
            .collect();
        build_stack(layers, 0.0).unwrap()
    }

    #[test]
    fn rectangular_site_plane_counts() {
        let planes = generate_slice_planes(&region(60.0, 64.0), 4.0, 1.0).unwrap();
        let xs: Vec<_> = planes.iter().filter(|p| p.axis == SliceAxis::XNormal).collect();
        assert_eq!(xs.len(), 15);
        assert_eq!(planes.len() - xs.len(), 16);
        assert_eq!(grid_cell_count(&planes), 240);
        assert_eq!(xs[0].offset, 2.0);
        assert_eq!(xs[0].extent, [0.0, 64.0]);
    }

    #[test]
    fn small_region_gets_centered_plane() {
        let planes = generate_slice_planes(&region(3.0, 3.0), 4.0, 1.0).unwrap();
        assert_eq!(planes.len(), 2);
        assert!(planes.iter().all(|p| p.offset == 1.5));
    }

    #[test]
    fn spacing_validation() {
        let r = region(10.0, 10.0);
        assert!(matches!(generate_slice_planes(&r, 0.0, 1.0), Err(SliceError::InvalidSpacing(_))));
        assert!(matches!(generate_slice_planes(&r, 4.0, 0.0), Err(SliceError::InvalidSpacing(_))));
        assert!(matches!(generate_slice_planes(&r, 0.5, 1.0), Err(SliceError::InvalidSpacing(_))));
    }

    #[test]
    fn flat_layers_give_constant_profiles() {
        let stack = flat_stack(&[10.0, 8.0]);
        let plane = SlicePlane::new(SliceAxis::YNormal, 5.5, 1.0, [0.0, 10.0]).unwrap();
        let p = extract_profile(&stack, &plane).unwrap();
        assert_eq!(p.stations.len(), 40);
        assert_eq!(p.stations[0], 0.125);
        assert!(p.stations.windows(2).all(|w| w[0] < w[1]));
        assert!(p.layers[0].elevation.iter().all(|z| *z == 10.0));
        assert!(p.layers[1].elevation.iter().all(|z| *z == 8.0));
        assert!(p.layers[0].epoch < p.layers[1].epoch);
    }

    #[test]
    fn plane_beyond_grid() {
        let stack = flat_stack(&[1.0]);
        let plane = SlicePlane::new(SliceAxis::XNormal, 500.0, 1.0, [0.0, 12.0]).unwrap();
        assert_eq!(extract_profile(&stack, &plane), Err(SliceError::PlaneOutsideGrid));
    }

    #[test]
    fn median_ignores_unoccupied_cells() {
        let grid = GridSpec::new([0.0, 0.0], 1.0, 3, 2).unwrap();
        // band covers columns 0..=2 at row j; one noisy cell and one hole
        let hf = HeightField::from_fn(grid, DateTime::<Utc>::UNIX_EPOCH, SurfaceRule::MaxZ, |i, j| match (i, j) {
            (0, 0) => Some(1.0),
            (1, 0) => Some(50.0),
            (2, 0) => Some(2.0),
            (1, 1) => None,
            (i, _) => Some(i as f64),
        });
        let stack = build_stack(vec![hf], 0.0).unwrap();
        let plane = SlicePlane::new(SliceAxis::XNormal, 1.5, 3.0, [0.0, 2.0]).unwrap();
        let p = extract_profile(&stack, &plane).unwrap();
        assert_eq!(p.layers[0].elevation, vec![2.0, 1.0]);
    }

    #[test]
    fn crossing_test() {
        let plane = SlicePlane::new(SliceAxis::XNormal, 10.0, 1.0, [0.0, 64.0]).unwrap();
        assert!(plane.crosses([9.0, 5.0], [9.6, 8.0]));
        assert!(!plane.crosses([11.0, 5.0], [12.0, 8.0]));
    }
}
