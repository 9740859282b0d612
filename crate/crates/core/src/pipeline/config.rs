use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{PipelineError, Result};
use crate::cloud::{CloudFormat, Rect};
use crate::registration::IcpParams;
use crate::slicing::RenderStyle;
use crate::surface::SurfaceRule;
use crate::voids::DetectionParams;

/// One flight's cloud.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputCloud {
    pub path: PathBuf,
    /// Overrides the timestamp stored in the file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epoch: Option<DateTime<Utc>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<CloudFormat>,
    /// Tie points mapping this cloud onto the reference (earliest) cloud,
    /// used as the ICP starting pose.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tie_points: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RegistrationConfig {
    /// When false, clouds are taken as already co-registered (tie points
    /// still apply).
    pub enabled: bool,
    /// Source clouds are thinned to at most this many points for ICP.
    pub max_points: usize,
    pub icp: IcpParams,
    /// Pair cutoff of a second ICP pass started from the first pass's
    /// pose. Surfaces that changed between flights pull the first pass off;
    /// the short cutoff drops them.
    pub fine_pair_distance: Option<f64>,
}

impl Default for RegistrationConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            max_points: 100_000,
            icp: IcpParams::default(),
            fine_pair_distance: Some(0.25),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub cell_size: f64,
    /// Analysis region; defaults to the XY overlap of all clouds. Its
    /// minimum corner anchors the raster.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub region: Option<Rect>,
    pub surface_rule: SurfaceRule,
    /// Largest hole, in cells, closed by interpolation.
    pub fill_radius: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            cell_size: 0.25,
            region: None,
            surface_rule: SurfaceRule::MaxZ,
            fill_radius: 2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GroundConfig {
    /// Known datum; estimated from the first epoch when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elevation: Option<f64>,
    /// Pile outline; cells outside it are used for the ground estimate.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pile_footprint: Option<Rect>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SlicingConfig {
    pub spacing: f64,
    pub thickness: f64,
    pub render: RenderStyle,
}

impl Default for SlicingConfig {
    fn default() -> Self {
        Self {
            spacing: 4.0,
            thickness: 1.0,
            render: RenderStyle::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectionConfig {
    #[serde(flatten)]
    pub params: DetectionParams,
    /// XY distance within which overlapping-in-Z voids count as connected.
    pub adjacency_distance: f64,
    /// Embed each void's per-cell gap heights in the report.
    pub embed_gap_maps: bool,
}

impl Default for DetectionConfig {
    fn default() -> Self {
        Self {
            params: DetectionParams::default(),
            adjacency_distance: 0.5,
            embed_gap_maps: false,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlabRegion {
    pub region: Rect,
    pub thickness: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassificationConfig {
    pub margin: f64,
    /// Estimated thickness of slabs removed over each region. A void takes
    /// the first region containing its centroid.
    pub slab_regions: Vec<SlabRegion>,
    /// Used where no region matches; unknown when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub default_slab_thickness: Option<f64>,
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        Self {
            margin: 0.25,
            slab_regions: Vec::new(),
            default_slab_thickness: None,
        }
    }
}

impl ClassificationConfig {
    pub fn slab_thickness_at(&self, x: f64, y: f64) -> Option<f64> {
        self.slab_regions
            .iter()
            .find(|r| r.region.contains(x, y))
            .map(|r| r.thickness)
            .or(self.default_slab_thickness)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    pub inputs: Vec<InputCloud>,
    #[serde(default)]
    pub registration: RegistrationConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub ground: GroundConfig,
    #[serde(default)]
    pub slicing: SlicingConfig,
    #[serde(default)]
    pub detection: DetectionConfig,
    #[serde(default)]
    pub classification: ClassificationConfig,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl PipelineConfig {
    pub fn new(output_dir: impl Into<PathBuf>, inputs: Vec<InputCloud>) -> Self {
        Self {
            output_dir: output_dir.into(),
            inputs,
            registration: RegistrationConfig::default(),
            grid: GridConfig::default(),
            ground: GroundConfig::default(),
            slicing: SlicingConfig::default(),
            detection: DetectionConfig::default(),
            classification: ClassificationConfig::default(),
            base_dir: PathBuf::new(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| PipelineError::Validation(format!("config: {e}")))
    }

    /// Reads a TOML config; relative paths in it are taken relative to the
    /// file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| PipelineError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        let mut config = Self::from_toml(&text)?;
        config.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }

    /// SHA-256 of the canonical TOML form, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(toml::to_string(self).expect("config serializes").as_bytes()))
    }

    /// Parameter checks plus existence of every referenced file.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(PipelineError::Validation(m));
        if self.inputs.is_empty() {
            return bad("at least one input cloud is required".into());
        }
        for input in &self.inputs {
            let p = self.resolve(&input.path);
            if !p.is_file() {
                return bad(format!("input cloud {} does not exist", p.display()));
            }
            if let Some(t) = &input.tie_points {
                let t = self.resolve(t);
                if !t.is_file() {
                    return bad(format!("tie-point file {} does not exist", t.display()));
                }
            }
        }
        if !(self.grid.cell_size > 0.0 && self.grid.cell_size.is_finite()) {
            return bad(format!("grid.cell_size {} must be positive", self.grid.cell_size));
        }
        if let Some(r) = &self.grid.region {
            r.validate().map_err(|e| PipelineError::Validation(format!("grid.region: {e}")))?;
        }
        if !(self.slicing.spacing > 0.0 && self.slicing.thickness > 0.0 && self.slicing.thickness <= self.slicing.spacing) {
            return bad("slicing needs 0 < thickness <= spacing".into());
        }
        if !(self.detection.params.min_gap > 0.0) {
            return bad("detection.min_gap must be positive".into());
        }
        if !(self.detection.adjacency_distance >= 0.0) {
            return bad("detection.adjacency_distance must be non-negative".into());
        }
        if !(self.classification.margin >= 0.0) {
            return bad("classification.margin must be non-negative".into());
        }
        let thicknesses = self
            .classification
            .slab_regions
            .iter()
            .map(|r| r.thickness)
            .chain(self.classification.default_slab_thickness);
        for t in thicknesses {
            if !(t >= 0.0) {
                return bad(format!("slab thickness {t} must be non-negative"));
            }
        }
        if self.registration.fine_pair_distance.is_some_and(|d| !(d > 0.0)) {
            return bad("registration.fine_pair_distance must be positive".into());
        }
        if self.registration.max_points < 3 {
            return bad("registration.max_points must be at least 3".into());
        }
        Ok(())
    }
}
