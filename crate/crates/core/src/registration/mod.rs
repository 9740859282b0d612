//! Rigid transforms between epoch frames and the shared site frame.

mod icp;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cloud::{CloudError, Point3, PointCloud};

pub use icp::{alignment_error, icp_refine, AlignmentReport, ErrorStats, IcpParams};

#[derive(Debug, Error)]
pub enum RegistrationError {
    #[error("invalid rotation: {0}")]
    InvalidRotation(String),
    #[error("degenerate correspondences: {0}")]
    DegenerateCorrespondences(String),
    #[error("point cloud contains no points")]
    EmptyCloud,
    #[error("no point pairs within the distance cutoff")]
    NoOverlap,
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Cloud(#[from] CloudError),
}

pub type Result<T> = std::result::Result<T, RegistrationError>;

const ORTHONORMAL_TOL: f64 = 1e-9;

/// Proper rotation plus translation: `p -> R p + t`.
///
/// Serialized as 12 row-major numbers (rotation rows, then translation).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "[f64; 12]", try_from = "[f64; 12]")]
pub struct RigidTransform {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Validates `RᵀR = I` and `det R = 1` to within 1e-9.
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let t = Self { rotation, translation };
        t.validate()?;
        Ok(t)
    }

    pub fn from_translation(t: [f64; 3]) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::from(t),
        }
    }

    /// Rotation by `angle` radians about `axis` (normalized here), then translation.
    pub fn from_axis_angle(axis: [f64; 3], angle: f64, translation: [f64; 3]) -> Self {
        let axis = nalgebra::Unit::new_normalize(Vector3::from(axis));
        let rotation = nalgebra::Rotation3::from_axis_angle(&axis, angle).into_inner();
        Self {
            rotation,
            translation: Vector3::from(translation),
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> [f64; 3] {
        [self.translation.x, self.translation.y, self.translation.z]
    }

    pub fn validate(&self) -> Result<()> {
        if self.rotation.iter().chain(self.translation.iter()).any(|v| !v.is_finite()) {
            return Err(RegistrationError::InvalidRotation("non-finite entry".into()));
        }
        let err = (self.rotation.transpose() * self.rotation - Matrix3::identity()).abs().max();
        if err > ORTHONORMAL_TOL {
            return Err(RegistrationError::InvalidRotation(format!("RᵀR deviates from I by {err:e}")));
        }
        let det = self.rotation.determinant();
        if (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(RegistrationError::InvalidRotation(format!("determinant {det}")));
        }
        Ok(())
    }

    pub fn apply(&self, p: &Point3) -> Point3 {
        let v = self.rotation * Vector3::new(p.x, p.y, p.z) + self.translation;
        Point3 {
            x: v.x,
            y: v.y,
            z: v.z,
            color: p.color,
        }
    }

    pub fn apply_array(&self, p: [f64; 3]) -> [f64; 3] {
        let v = self.rotation * Vector3::from(p) + self.translation;
        [v.x, v.y, v.z]
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn inverse(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// Rotation angle in radians, in `[0, π]`.
    pub fn rotation_angle(&self) -> f64 {
        // atan2 of sin and cos stays accurate near zero, where acos does not
        let r = &self.rotation;
        let sin = 0.5 * (r[(2, 1)] - r[(1, 2)]).hypot(r[(0, 2)] - r[(2, 0)]).hypot(r[(1, 0)] - r[(0, 1)]);
        let cos = 0.5 * (r.trace() - 1.0);
        sin.atan2(cos)
    }

    pub fn to_row_major(&self) -> [f64; 12] {
        let r = &self.rotation;
        let t = &self.translation;
        [
            r[(0, 0)], r[(0, 1)], r[(0, 2)],
            r[(1, 0)], r[(1, 1)], r[(1, 2)],
            r[(2, 0)], r[(2, 1)], r[(2, 2)],
            t.x, t.y, t.z,
        ]
    }

    pub fn from_row_major(v: [f64; 12]) -> Result<Self> {
        Self::new(Matrix3::from_row_slice(&v[..9]), Vector3::new(v[9], v[10], v[11]))
    }
}

impl From<RigidTransform> for [f64; 12] {
    fn from(t: RigidTransform) -> Self {
        t.to_row_major()
    }
}

impl TryFrom<[f64; 12]> for RigidTransform {
    type Error = RegistrationError;

    fn try_from(v: [f64; 12]) -> Result<Self> {
        Self::from_row_major(v)
    }
}

pub fn apply_transform(cloud: &PointCloud, t: &RigidTransform) -> Result<PointCloud> {
    t.validate()?;
    Ok(PointCloud {
        points: cloud.points.iter().map(|p| t.apply(p)).collect(),
        epoch: cloud.epoch,
        source_label: cloud.source_label.clone(),
    })
}

/// Tie points: each pair maps a source-frame point onto its target-frame match.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CorrespondenceSet {
    pub pairs: Vec<(Point3, Point3)>,
}

impl CorrespondenceSet {
    pub fn new(pairs: Vec<(Point3, Point3)>) -> Self {
        Self { pairs }
    }

    /// Parses `sx sy sz tx ty tz` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> std::result::Result<Self, CloudError> {
        let mut pairs = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| CloudError::InvalidRecord {
                    record: lineno + 1,
                    message: e.to_string(),
                })?;
            if v.len() != 6 {
                return Err(CloudError::InvalidRecord {
                    record: lineno + 1,
                    message: format!("expected 6 values, found {}", v.len()),
                });
            }
            let (s, t) = (Point3::new(v[0], v[1], v[2]), Point3::new(v[3], v[4], v[5]));
            if !s.is_finite() || !t.is_finite() {
                return Err(CloudError::NonFiniteValue { record: lineno + 1 });
            }
            pairs.push((s, t));
        }
        Ok(Self { pairs })
    }
}

/// Closed-form least-squares rigid fit (SVD of the cross-covariance with a
/// reflection fix).
pub fn fit_rigid(c: &CorrespondenceSet) -> Result<RigidTransform> {
    if c.pairs.len() < 3 {
        return Err(RegistrationError::DegenerateCorrespondences(format!(
            "{} pairs, need at least 3",
            c.pairs.len()
        )));
    }
    let src: Vec<Vector3<f64>> = c.pairs.iter().map(|(s, _)| Vector3::new(s.x, s.y, s.z)).collect();
    let dst: Vec<Vector3<f64>> = c.pairs.iter().map(|(_, t)| Vector3::new(t.x, t.y, t.z)).collect();
    check_spread(&src)?;
    Ok(kabsch(&src, &dst))
}

/// Rejects point sets whose spread is (numerically) confined to a line.
fn check_spread(points: &[Vector3<f64>]) -> Result<()> {
    let centroid = mean(points);
    let mut cov = Matrix3::zeros();
    for p in points {
        let d = p - centroid;
        cov += d * d.transpose();
    }
    let mut eig: Vec<f64> = cov.symmetric_eigenvalues().iter().copied().collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    if eig[0] <= 0.0 || eig[1] <= 1e-12 * eig[0] {
        return Err(RegistrationError::DegenerateCorrespondences(
            "source points are collinear or coincident".into(),
        ));
    }
    Ok(())
}

fn mean(points: &[Vector3<f64>]) -> Vector3<f64> {
    points.iter().fold(Vector3::zeros(), |acc, p| acc + p) / points.len() as f64
}

/// Unweighted Kabsch; callers guarantee ≥ 3 non-collinear source points.
pub(crate) fn kabsch(src: &[Vector3<f64>], dst: &[Vector3<f64>]) -> RigidTransform {
    let cs = mean(src);
    let cd = mean(dst);
    let mut h = Matrix3::zeros();
    for (s, d) in src.iter().zip(dst) {
        h += (s - cs) * (d - cd).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u.expect("requested U");
    let v = svd.v_t.expect("requested Vᵀ").transpose();
    let d = (v * u.transpose()).determinant().signum();
    let correction = Matrix3::from_diagonal(&Vector3::new(1.0, 1.0, if d == 0.0 { 1.0 } else { d }));
    let rotation = v * correction * u.transpose();
    RigidTransform {
        rotation,
        translation: cd - rotation * cs,
    }
}
