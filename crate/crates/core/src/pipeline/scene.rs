use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use super::config::{ClassificationConfig, GroundConfig, InputCloud, SlabRegion};
use super::{PipelineConfig, PipelineError, Result};
use crate::cloud::{write_cloud, CloudFormat};
use crate::synthetic::{generate_scene, GroundTruth, SceneSpec};

/// Generates `spec` into `dir`: one binary PLY per epoch, `scene.toml`,
/// `truth.json`, and a `pipeline.toml` that analyzes the scene with the
/// true slab thicknesses and writes its report to `dir/report`.
pub fn write_scene(spec: &SceneSpec, dir: &Path) -> Result<(PipelineConfig, GroundTruth)> {
    let (clouds, truth) = generate_scene(spec)?;
    fs::create_dir_all(dir).map_err(PipelineError::io(dir))?;
    let mut inputs = Vec::with_capacity(clouds.len());
    for (k, cloud) in clouds.iter().enumerate() {
        let name = format!("epoch-{}.ply", k + 1);
        let path = dir.join(&name);
        let file = fs::File::create(&path).map_err(PipelineError::io(&path))?;
        write_cloud(cloud, CloudFormat::PlyBinaryLe, BufWriter::new(file))
            .map_err(|source| PipelineError::Cloud { path: path.clone(), source })?;
        inputs.push(InputCloud {
            path: PathBuf::from(name),
            epoch: None,
            format: None,
            tie_points: None,
        });
    }

    let mut config = PipelineConfig::new("report", inputs);
    config.grid.region = Some(spec.footprint);
    config.ground = GroundConfig {
        elevation: None,
        pile_footprint: spec.base_surface.pile_rect(&spec.footprint),
    };
    config.classification = ClassificationConfig {
        slab_regions: truth
            .removals
            .iter()
            .map(|r| SlabRegion {
                region: r.region,
                thickness: r.thickness,
            })
            .collect(),
        ..ClassificationConfig::default()
    };
    config.base_dir = dir.to_path_buf();

    let write = |name: &str, text: String| {
        let path = dir.join(name);
        fs::write(&path, text).map_err(PipelineError::io(&path))
    };
    write("scene.toml", spec.to_toml())?;
    write("truth.json", serde_json::to_string_pretty(&truth)?)?;
    write("pipeline.toml", config.to_toml())?;
    Ok((config, truth))
}
