//! Rasterizes two flights of a synthetic pile into surface models, closes
//! small holes and stacks them in time order.
//!
//! ```text
//! cargo run --release --example surface_stack [-- <output dir>]
//! ```

use voidstack::surface::{build_stack, estimate_ground, fill_holes, pile_depth, rasterize_dsm, to_pgm};
use voidstack::synthetic::{generate_scene, SceneSpec};
use voidstack::{GridSpec, SurfaceRule};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("voidstack-stack"));
    std::fs::create_dir_all(&out)?;

    let mut spec = SceneSpec::collapse_site();
    spec.point_density = 40.0;
    let (clouds, _) = generate_scene(&spec)?;
    let grid = GridSpec::covering(spec.footprint.min, spec.footprint.max, 0.25)?;
    println!("grid {} x {} cells of {} m", grid.nx, grid.ny, grid.cell_size);

    let mut layers = Vec::new();
    for cloud in &clouds {
        let raw = rasterize_dsm(cloud, &grid, SurfaceRule::MaxZ)?;
        let filled = fill_holes(&raw, 2)?;
        println!(
            "{}: {} points, {} of {} cells hit, {} after filling",
            cloud.epoch.format("%Y-%m-%d"),
            cloud.len(),
            raw.occupied_count(),
            grid.len(),
            filled.occupied_count()
        );
        layers.push(filled);
    }

    // ground is sampled outside the pile
    let pile = spec.base_surface.pile_rect(&spec.footprint);
    let ground = estimate_ground(&layers[0], pile.map(|r| r.to_aabb()).as_ref()).unwrap_or(0.0);
    let stack = build_stack(layers, ground)?;
    let depth = pile_depth(&stack);
    println!("ground datum {ground:.2} m, deepest pile point {:.2} m", depth.max_depth);
    for (k, layer) in stack.layers().iter().enumerate() {
        let path = out.join(format!("epoch-{}.pgm", k + 1));
        std::fs::write(&path, to_pgm(layer))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
