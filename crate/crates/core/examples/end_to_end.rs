//! Generates the demonstration collapse site, runs the whole pipeline on it
//! and compares every recovered void with the ground truth.
//!
//! ```text
//! cargo run --release --example end_to_end [-- <output dir>]
//! ```

use std::time::Instant;

use voidstack::pipeline::{run, write_scene};
use voidstack::synthetic::SceneSpec;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let dir = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("voidstack-demo"));

    let t = Instant::now();
    let spec = SceneSpec::collapse_site();
    let (config, truth) = write_scene(&spec, &dir)?;
    println!("scene written to {} in {:.1?}", dir.display(), t.elapsed());

    let t = Instant::now();
    let report = run(&config)?;
    println!("pipeline finished in {:.1?}", t.elapsed());

    for e in &report.epochs {
        println!(
            "epoch {} ({} points): mean NN distance {:.4} m",
            e.index, e.point_count, e.alignment.mean_nn_distance
        );
    }
    println!("{:>4} {:>9} {:>9} {:>9} {:>7} {:>7}  cause", "id", "gap m3", "net m3", "truth m3", "x", "y");
    for v in &report.voids {
        let g = v.geometry.as_ref().unwrap();
        let truth_match = truth.features.iter().find(|f| f.region.contains(g.centroid[0], g.centroid[1]));
        println!(
            "{:>4} {:>9.2} {:>9.2} {:>9} {:>7.2} {:>7.2}  {:?} (truth {})",
            v.id,
            v.metrics.approx_volume,
            v.net_volume.unwrap_or(f64::NAN),
            truth_match.map_or("-".into(), |t| format!("{:.2}", t.volume)),
            g.centroid[0],
            g.centroid[1],
            v.metrics.cause,
            truth_match.map_or("none".into(), |t| format!("{:?} {}", t.cause, t.label)),
        );
    }
    println!("report: {}", config.output_path().join("report.json").display());
    Ok(())
}
