//! Seeded synthetic collapse scenes with known voids.
//!
//! A scene is a stepped "pancake" pile on flat ground. Between flights,
//! slabs are lifted off: either plain excavations, which lower the surface by
//! the slab thickness, or slabs that roofed a cavity, which expose the cavity
//! floor. Every random draw comes from ChaCha8 (`rand_chacha`), a
//! counter-based generator whose output is fixed by its seed and stream
//! number on every platform. Epoch `k` uses stream `k` of the scene seed.

mod generate;

use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::Rect;
use crate::voids::Cause;

pub use generate::{generate_scene, perturb_epoch, surface_elevation};

pub const SCENE_SPEC_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum SyntheticError {
    #[error("unsupported scene_spec_version {0}, expected {SCENE_SPEC_VERSION}")]
    UnsupportedVersion(u32),
    #[error("invalid scene: {0}")]
    InvalidSpec(String),
    #[error("void `{0}` is not inside the scene footprint")]
    VoidOutsideFootprint(String),
    #[error("`{0}` overlaps `{1}`")]
    OverlappingVoids(String, String),
    #[error("scene file: {0}")]
    Parse(#[from] toml::de::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SyntheticError>;

/// Stepped pile: slab `k` covers the footprint inset by
/// `pile_margin + k * stair_step` and tops out `slab_elevations[k]` above
/// the ground. Edges rise linearly over `edge_ramp` meters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaseSurface {
    pub ground_elevation: f64,
    pub pile_margin: f64,
    pub stair_step: f64,
    #[serde(default = "default_ramp")]
    pub edge_ramp: f64,
    pub slab_elevations: Vec<f64>,
}

fn default_ramp() -> f64 {
    0.5
}

impl BaseSurface {
    /// Outline of the lowest slab.
    pub fn pile_rect(&self, footprint: &Rect) -> Option<Rect> {
        if self.slab_elevations.is_empty() {
            return None;
        }
        footprint.inset(self.pile_margin)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VoidShape {
    /// Flat floor, constant height.
    Box,
    /// Elliptic footprint inscribed in the void rectangle; height falls off
    /// as `h (1 - r²)`.
    Lens,
}

/// A cavity under a slab of `slab_thickness`, roofed until the slab is
/// lifted off at epoch `exposed_epoch` (1-based).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoidSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub shape: VoidShape,
    pub center: [f64; 2],
    /// Full extents along X and Y.
    pub size: [f64; 2],
    pub height: f64,
    pub slab_thickness: f64,
    pub exposed_epoch: usize,
}

impl VoidSpec {
    pub fn rect(&self) -> Result<Rect> {
        Rect::from_center(self.center, self.size).map_err(|e| SyntheticError::InvalidSpec(e.to_string()))
    }

    /// Cavity depth below the slab underside at (x, y), zero outside.
    pub fn depth_at(&self, x: f64, y: f64) -> f64 {
        let u = (x - self.center[0]) / (0.5 * self.size[0]);
        let v = (y - self.center[1]) / (0.5 * self.size[1]);
        match self.shape {
            VoidShape::Box => {
                let inside = Rect::from_center(self.center, self.size).is_ok_and(|r| r.contains(x, y));
                if inside {
                    self.height
                } else {
                    0.0
                }
            }
            VoidShape::Lens => (self.height * (1.0 - u * u - v * v)).max(0.0),
        }
    }

    pub fn volume(&self) -> f64 {
        match self.shape {
            VoidShape::Box => self.size[0] * self.size[1] * self.height,
            VoidShape::Lens => std::f64::consts::PI * (0.5 * self.size[0]) * (0.5 * self.size[1]) * self.height / 2.0,
        }
    }
}

/// A slab lifted off a region at epoch `epoch` (1-based) with nothing
/// underneath.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Excavation {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub region: Rect,
    pub thickness: f64,
    pub epoch: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneSpec {
    pub scene_spec_version: u32,
    pub seed: u64,
    pub footprint: Rect,
    /// One flight per entry, strictly increasing.
    pub epochs: Vec<DateTime<Utc>>,
    /// Points per square meter of footprint, per epoch.
    pub point_density: f64,
    /// Standard deviation of the vertical noise, meters.
    pub noise_sigma: f64,
    pub base_surface: BaseSurface,
    #[serde(default)]
    pub voids: Vec<VoidSpec>,
    #[serde(default)]
    pub excavations: Vec<Excavation>,
}

impl SceneSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        let spec: SceneSpec = toml::from_str(text)?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scene spec serializes")
    }

    pub fn void_label(&self, k: usize) -> String {
        self.voids[k].name.clone().unwrap_or_else(|| format!("void-{}", k + 1))
    }

    pub fn excavation_label(&self, k: usize) -> String {
        self.excavations[k]
            .name
            .clone()
            .unwrap_or_else(|| format!("excavation-{}", k + 1))
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |m: String| Err(SyntheticError::InvalidSpec(m));
        if self.scene_spec_version != SCENE_SPEC_VERSION {
            return Err(SyntheticError::UnsupportedVersion(self.scene_spec_version));
        }
        self.footprint
            .validate()
            .map_err(|e| SyntheticError::InvalidSpec(format!("footprint: {e}")))?;
        if self.epochs.is_empty() {
            return invalid("at least one epoch is required".into());
        }
        if self.epochs.windows(2).any(|w| w[0] >= w[1]) {
            return invalid("epochs must be strictly increasing".into());
        }
        if !(self.point_density >= 0.0 && self.point_density.is_finite()) {
            return invalid(format!("point_density {} must be non-negative", self.point_density));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return invalid(format!("noise_sigma {} must be non-negative", self.noise_sigma));
        }
        let b = &self.base_surface;
        if !(b.pile_margin >= 0.0 && b.stair_step >= 0.0 && b.edge_ramp >= 0.0) {
            return invalid("pile_margin, stair_step and edge_ramp must be non-negative".into());
        }
        if b.slab_elevations.windows(2).any(|w| w[0] >= w[1]) || b.slab_elevations.first().is_some_and(|z| *z <= 0.0) {
            return invalid("slab_elevations must be positive and increasing".into());
        }
        let n = self.epochs.len();
        let mut regions: Vec<(String, Rect)> = Vec::new();
        for (k, v) in self.voids.iter().enumerate() {
            let label = self.void_label(k);
            if !(v.size[0] > 0.0 && v.size[1] > 0.0 && v.height > 0.0) {
                return invalid(format!("void `{label}` dimensions must be positive"));
            }
            if !(v.slab_thickness >= 0.0) {
                return invalid(format!("void `{label}` slab_thickness must be non-negative"));
            }
            if !(2..=n).contains(&v.exposed_epoch) {
                return invalid(format!("void `{label}` exposed_epoch must be in 2..={n}"));
            }
            let r = v.rect()?;
            if !self.footprint.encloses(&r) {
                return Err(SyntheticError::VoidOutsideFootprint(label));
            }
            regions.push((label, r));
        }
        for (k, e) in self.excavations.iter().enumerate() {
            let label = self.excavation_label(k);
            e.region
                .validate()
                .map_err(|err| SyntheticError::InvalidSpec(format!("`{label}`: {err}")))?;
            if !(e.thickness > 0.0) {
                return invalid(format!("`{label}` thickness must be positive"));
            }
            if !(1..=n).contains(&e.epoch) {
                return invalid(format!("`{label}` epoch must be in 1..={n}"));
            }
            if !self.footprint.encloses(&e.region) {
                return Err(SyntheticError::VoidOutsideFootprint(label));
            }
            regions.push((label, e.region));
        }
        for a in 0..regions.len() {
            for b in a + 1..regions.len() {
                if regions[a].1.overlaps(&regions[b].1) {
                    return Err(SyntheticError::OverlappingVoids(regions[a].0.clone(), regions[b].0.clone()));
                }
            }
        }
        Ok(())
    }

    /// Site-scale demonstration scene: a 60 m x 64 m four-slab pile flown
    /// twice, with three roofed voids and two excavations opened between
    /// the flights. About two million points per flight.
    pub fn collapse_site() -> Self {
        let t0 = DateTime::parse_from_rfc3339("2021-06-27T15:00:00Z").unwrap().with_timezone(&Utc);
        let footprint = Rect::new([0.0, 0.0], [60.0, 64.0]).unwrap();
        let void = |name: &str, min: [f64; 2], max: [f64; 2], height: f64, slab: f64| {
            let r = Rect::new(min, max).unwrap();
            VoidSpec {
                name: Some(name.into()),
                shape: VoidShape::Box,
                center: r.center(),
                size: r.size(),
                height,
                slab_thickness: slab,
                exposed_epoch: 2,
            }
        };
        let dig = |name: &str, min: [f64; 2], max: [f64; 2], thickness: f64| Excavation {
            name: Some(name.into()),
            region: Rect::new(min, max).unwrap(),
            thickness,
            epoch: 2,
        };
        SceneSpec {
            scene_spec_version: SCENE_SPEC_VERSION,
            seed: 20210627,
            footprint,
            epochs: vec![t0, t0 + chrono::Duration::days(1)],
            point_density: 521.0,
            noise_sigma: 0.02,
            base_surface: BaseSurface {
                ground_elevation: 0.0,
                pile_margin: 4.0,
                stair_step: 4.0,
                edge_ramp: 0.5,
                slab_elevations: vec![3.0, 6.0, 9.0, 12.0],
            },
            voids: vec![
                void("Yellow", [18.0, 20.0], [22.0, 23.0], 1.2, 0.3),
                void("Blue", [30.0, 36.0], [35.0, 38.5], 2.2, 0.35),
                void("Green", [49.0, 20.0], [51.5, 24.0], 0.4, 0.25),
            ],
            excavations: vec![
                dig("dig-north", [24.0, 26.0], [28.0, 30.0], 0.5),
                dig("dig-east", [36.0, 12.5], [42.0, 15.5], 0.3),
            ],
        }
    }
}

/// One known feature of a generated scene.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthVoid {
    pub label: String,
    pub cause: Cause,
    pub region: Rect,
    /// XY center; Z at the cavity's mid-height (slab underside for
    /// excavations).
    pub centroid: [f64; 3],
    /// Cavity volume; for excavations, the removed slab volume.
    pub volume: f64,
    pub max_height: f64,
    pub min_height: f64,
    pub xz_width: f64,
    pub yz_width: f64,
    /// Thickness of the slab lifted off above the feature.
    pub removed_thickness: f64,
    /// 1-based epochs whose surfaces differ over the feature.
    pub epoch_pair: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Removal {
    pub region: Rect,
    pub thickness: f64,
    pub epoch: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    /// Natural voids in spec order, then excavations.
    pub features: Vec<TruthVoid>,
    pub removals: Vec<Removal>,
}

impl GroundTruth {
    pub fn from_spec(spec: &SceneSpec) -> Result<Self> {
        spec.validate()?;
        let mut features = Vec::new();
        let mut removals = Vec::new();
        for (k, v) in spec.voids.iter().enumerate() {
            let region = v.rect()?;
            let [cx, cy] = v.center;
            let top = surface_elevation(spec, 0, cx, cy);
            features.push(TruthVoid {
                label: spec.void_label(k),
                cause: Cause::Natural,
                region,
                centroid: [cx, cy, top - v.slab_thickness - 0.5 * v.height],
                volume: v.volume(),
                max_height: v.height,
                min_height: match v.shape {
                    VoidShape::Box => v.height,
                    VoidShape::Lens => 0.0,
                },
                xz_width: v.size[0],
                yz_width: v.size[1],
                removed_thickness: v.slab_thickness,
                epoch_pair: (v.exposed_epoch - 1, v.exposed_epoch),
            });
            removals.push(Removal {
                region,
                thickness: v.slab_thickness,
                epoch: v.exposed_epoch,
            });
        }
        for (k, e) in spec.excavations.iter().enumerate() {
            let [cx, cy] = e.region.center();
            let [w, h] = e.region.size();
            features.push(TruthVoid {
                label: spec.excavation_label(k),
                cause: Cause::Excavation,
                region: e.region,
                centroid: [cx, cy, surface_elevation(spec, 0, cx, cy) - 0.5 * e.thickness],
                volume: e.region.area() * e.thickness,
                max_height: e.thickness,
                min_height: e.thickness,
                xz_width: w,
                yz_width: h,
                removed_thickness: e.thickness,
                epoch_pair: (e.epoch.saturating_sub(1), e.epoch),
            });
            removals.push(Removal {
                region: e.region,
                thickness: e.thickness,
                epoch: e.epoch,
            });
        }
        Ok(Self { features, removals })
    }

    pub fn natural(&self) -> impl Iterator<Item = &TruthVoid> {
        self.features.iter().filter(|f| f.cause == Cause::Natural)
    }

    /// Total slab thickness lifted off at (x, y) up to and including the
    /// 1-based `epoch`.
    pub fn removed_thickness(&self, epoch: usize, x: f64, y: f64) -> f64 {
        self.removals
            .iter()
            .filter(|r| r.epoch <= epoch && r.region.contains(x, y))
            .map(|r| r.thickness)
            .sum()
    }
}
