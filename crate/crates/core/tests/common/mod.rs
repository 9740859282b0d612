#![allow(dead_code)]

use chrono::{DateTime, Duration, TimeZone, Utc};
use voidstack::surface::{build_stack, EpochStack, GridSpec, HeightField, SurfaceRule};
use voidstack::PointCloud;

pub fn day(k: i64) -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2021, 6, 27, 15, 0, 0).unwrap() + Duration::days(k)
}

/// Smooth surface with structure in both horizontal directions, so that ICP
/// is well constrained.
pub fn wavy_z(x: f64, y: f64) -> f64 {
    (x * 0.4).sin() * 1.5 + (y * 0.3).cos() * 2.0 + 0.02 * x * y
}

pub fn wavy_grid(n_side: usize, spacing: f64) -> PointCloud {
    let half = n_side as f64 * spacing / 2.0;
    let coords = (0..n_side).flat_map(|i| {
        (0..n_side).map(move |j| {
            let x = i as f64 * spacing - half;
            let y = j as f64 * spacing - half;
            [x, y, wavy_z(x, y)]
        })
    });
    PointCloud::from_xyz(coords).unwrap()
}

/// Two-layer stack over `grid`: the earlier layer is flat at `top`, the
/// later one equals `top - carve(x, y)` at each cell center.
pub fn carved_stack(grid: GridSpec, top: f64, carve: impl Fn(f64, f64) -> f64) -> EpochStack {
    let before = HeightField::from_fn(grid, day(0), SurfaceRule::MaxZ, |_, _| Some(top));
    let after = HeightField::from_fn(grid, day(1), SurfaceRule::MaxZ, |i, j| {
        let [x, y] = grid.cell_center(i, j);
        Some(top - carve(x, y))
    });
    build_stack(vec![before, after], 0.0).unwrap()
}

/// Small two-flight site: one natural box void and one excavation, both
/// opened between the flights.
pub fn small_site(seed: u64) -> voidstack::synthetic::SceneSpec {
    use voidstack::cloud::Rect;
    use voidstack::synthetic::{BaseSurface, Excavation, SceneSpec, VoidShape, VoidSpec};
    SceneSpec {
        scene_spec_version: 1,
        seed,
        footprint: Rect::new([0.0, 0.0], [28.0, 24.0]).unwrap(),
        epochs: vec![day(0), day(1)],
        point_density: 150.0,
        noise_sigma: 0.01,
        base_surface: BaseSurface {
            ground_elevation: 0.0,
            pile_margin: 3.0,
            stair_step: 3.0,
            edge_ramp: 0.5,
            slab_elevations: vec![3.0, 6.0],
        },
        voids: vec![VoidSpec {
            name: Some("Cavity".into()),
            shape: VoidShape::Box,
            center: [11.0, 12.0],
            size: [4.0, 3.0],
            height: 1.2,
            slab_thickness: 0.3,
            exposed_epoch: 2,
        }],
        excavations: vec![Excavation {
            name: Some("dig".into()),
            region: Rect::new([16.0, 9.0], [20.0, 12.0]).unwrap(),
            thickness: 0.4,
            epoch: 2,
        }],
    }
}
