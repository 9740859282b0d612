//! Lays the 4 m section grid over a stacked site and renders a few
//! cross sections as PPM and SVG.
//!
//! ```text
//! cargo run --release --example slice_grid [-- <output dir>]
//! ```

use voidstack::slicing::{extract_profile, generate_slice_planes, grid_cell_count, render_profile, render_profile_svg, RenderStyle};
use voidstack::surface::{build_stack, rasterize_dsm};
use voidstack::synthetic::{generate_scene, SceneSpec};
use voidstack::{GridSpec, SliceAxis, SurfaceRule};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("voidstack-slices"));
    std::fs::create_dir_all(&out)?;

    let mut spec = SceneSpec::collapse_site();
    spec.point_density = 40.0;
    let (clouds, _) = generate_scene(&spec)?;
    let grid = GridSpec::covering(spec.footprint.min, spec.footprint.max, 0.25)?;
    let layers = clouds.iter().map(|c| rasterize_dsm(c, &grid, SurfaceRule::MaxZ)).collect::<Result<Vec<_>, _>>()?;
    let stack = build_stack(layers, 0.0)?;

    let planes = generate_slice_planes(&grid.bounds(), 4.0, 1.0)?;
    let xs = planes.iter().filter(|p| p.axis == SliceAxis::XNormal).count();
    println!("{} planes ({xs} X-normal, {} Y-normal), {} grid locations", planes.len(), planes.len() - xs, grid_cell_count(&planes));

    let style = RenderStyle::default();
    // the Yellow void sits under x = 18..22, y = 20..23
    for plane in planes.iter().filter(|p| p.crosses([18.0, 20.0], [22.0, 23.0])) {
        let profile = extract_profile(&stack, plane)?;
        let name = format!("{}-{:05.1}", plane.axis.section_name().to_lowercase(), plane.offset);
        std::fs::write(out.join(format!("{name}.ppm")), render_profile(&profile, &style)?.to_ppm())?;
        std::fs::write(out.join(format!("{name}.svg")), render_profile_svg(&profile, &style)?)?;
        let (lo, hi) = profile.elevation_range().unwrap_or((0.0, 0.0));
        println!("{name}: {} stations, z {lo:.2}..{hi:.2} m", profile.stations.len());
    }
    println!("images in {}", out.display());
    Ok(())
}
