//! Builds a scene spec in code, saves it as TOML, and generates the seeded
//! flights and their ground truth from the saved file.
//!
//! ```text
//! cargo run --example synthetic_scene [-- <output dir>]
//! ```

use voidstack::cloud::Rect;
use voidstack::pipeline::write_scene;
use voidstack::synthetic::{BaseSurface, Excavation, SceneSpec, VoidShape, VoidSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("voidstack-scene"));
    let t0 = chrono::DateTime::parse_from_rfc3339("2021-06-27T15:00:00Z")?.with_timezone(&chrono::Utc);
    let spec = SceneSpec {
        scene_spec_version: 1,
        seed: 7,
        footprint: Rect::new([0.0, 0.0], [30.0, 24.0])?,
        epochs: vec![t0, t0 + chrono::Duration::days(2)],
        point_density: 200.0,
        noise_sigma: 0.02,
        base_surface: BaseSurface {
            ground_elevation: 0.0,
            pile_margin: 3.0,
            stair_step: 3.0,
            edge_ramp: 0.5,
            slab_elevations: vec![3.0, 6.0],
        },
        voids: vec![VoidSpec {
            name: Some("lens".into()),
            shape: VoidShape::Lens,
            center: [12.0, 12.0],
            size: [5.0, 4.0],
            height: 1.4,
            slab_thickness: 0.3,
            exposed_epoch: 2,
        }],
        excavations: vec![Excavation {
            name: Some("cut".into()),
            region: Rect::new([19.0, 9.0], [23.0, 13.0])?,
            thickness: 0.4,
            epoch: 2,
        }],
    };
    std::fs::create_dir_all(&out)?;
    let spec_path = out.join("site.toml");
    std::fs::write(&spec_path, spec.to_toml())?;

    let loaded = SceneSpec::load(&spec_path)?;
    let (config, truth) = write_scene(&loaded, &out)?;
    println!("spec {} -> {} input clouds", spec_path.display(), config.inputs.len());
    for input in &config.inputs {
        println!("  {}", out.join(&input.path).display());
    }
    println!("{}", serde_json::to_string_pretty(&truth)?);
    Ok(())
}
