//! Finds gaps between two flights of a synthetic site, measures them, and
//! labels each with the volume heuristic given the true slab thicknesses.
//!
//! ```text
//! cargo run --release --example detect_voids
//! ```

use voidstack::surface::{build_stack, fill_holes, rasterize_dsm};
use voidstack::synthetic::{generate_scene, SceneSpec};
use voidstack::voids::{characterize, classify_cause, connectivity, detect_gaps, summarize, DetectionParams};
use voidstack::{GridSpec, SurfaceRule};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = SceneSpec::collapse_site();
    spec.point_density = 120.0;
    spec.noise_sigma = 0.01;
    let (clouds, truth) = generate_scene(&spec)?;
    let grid = GridSpec::covering(spec.footprint.min, spec.footprint.max, 0.25)?;
    let layers = clouds
        .iter()
        .map(|c| rasterize_dsm(c, &grid, SurfaceRule::MaxZ).and_then(|h| fill_holes(&h, 2)))
        .collect::<Result<Vec<_>, _>>()?;
    let stack = build_stack(layers, spec.base_surface.ground_elevation)?;

    let candidates = detect_gaps(&stack, &DetectionParams::default())?;
    let mut metrics = Vec::new();
    println!("{:>3} {:>8} {:>6} {:>6} {:>6} {:>6}  cause", "id", "m3", "hmax", "hmin", "xz", "yz");
    for v in &candidates {
        let mut m = characterize(v, &grid)?;
        let [x, y, _] = v.centroid;
        let thickness = truth.removed_thickness(2, x, y);
        m.cause = classify_cause(m.approx_volume, v.footprint_area(&grid), Some(thickness), 0.25)?;
        println!(
            "{:>3} {:>8.2} {:>6.2} {:>6.2} {:>6.2} {:>6.2}  {} (slab {thickness} m)",
            v.id,
            m.approx_volume,
            m.max_height,
            m.min_height,
            m.xz_width,
            m.yz_width,
            m.cause.table_label()
        );
        metrics.push(m);
    }
    let components = connectivity(&candidates, grid.cell_size, 0.5)?;
    let s = summarize(&metrics, spec.base_surface.slab_elevations.last().copied().unwrap_or(0.0), components.count);
    println!("{}", serde_json::to_string_pretty(&s)?);
    for f in &truth.features {
        println!("truth {:10} {:?} volume {:.2}", f.label, f.cause, f.volume);
    }
    Ok(())
}
