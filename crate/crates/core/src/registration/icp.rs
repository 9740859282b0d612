//! Point-to-point ICP over the XY grid index.

use nalgebra::Vector3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{kabsch, RegistrationError, Result, RigidTransform};
use crate::cloud::{bounding_box, GridIndex, Point3, PointCloud};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IcpParams {
    pub max_iterations: usize,
    /// Meters; largest displacement of the source bounding box under the last
    /// incremental update.
    pub convergence_eps: f64,
    /// Pairs farther apart than this are rejected.
    pub max_pair_distance: f64,
    pub initial: RigidTransform,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iterations: 100,
            convergence_eps: 1e-4,
            max_pair_distance: 2.0,
            initial: RigidTransform::identity(),
        }
    }
}

impl IcpParams {
    fn validate(&self) -> Result<()> {
        if self.max_iterations == 0 {
            return Err(RegistrationError::InvalidParams("max_iterations must be at least 1".into()));
        }
        if !(self.convergence_eps > 0.0) {
            return Err(RegistrationError::InvalidParams("convergence_eps must be positive".into()));
        }
        if !(self.max_pair_distance > 0.0 && self.max_pair_distance.is_finite()) {
            return Err(RegistrationError::InvalidParams("max_pair_distance must be positive".into()));
        }
        self.initial.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub transform: RigidTransform,
    pub mean_nn_distance: f64,
    pub rms_nn_distance: f64,
    pub iterations: usize,
    pub converged: bool,
    pub accepted_pairs: usize,
    /// Truncated mean squared error, one entry for the initial pose and one
    /// per iteration. Each source point contributes `min(d², cutoff²)`.
    #[serde(default)]
    pub objective_history: Vec<f64>,
}

impl AlignmentReport {
    /// Report for a cloud that defines the reference frame.
    pub fn reference() -> Self {
        Self {
            transform: RigidTransform::identity(),
            mean_nn_distance: 0.0,
            rms_nn_distance: 0.0,
            iterations: 0,
            converged: true,
            accepted_pairs: 0,
            objective_history: Vec::new(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mean: f64,
    pub rms: f64,
    pub pairs: usize,
}

/// Bucket size for nearest-neighbor search: about two mean point spacings,
/// bounded by the pair cutoff.
fn search_cell_size(cloud: &PointCloud, cutoff: f64) -> f64 {
    let area = bounding_box(cloud)
        .map(|b| {
            let e = b.extent();
            e[0] * e[1]
        })
        .unwrap_or(0.0);
    let spacing = (area / cloud.len().max(1) as f64).sqrt();
    if spacing > 0.0 {
        (2.0 * spacing).clamp(cutoff / 32.0, cutoff)
    } else {
        cutoff
    }
}

struct Matcher<'a> {
    target: &'a [Point3],
    index: GridIndex,
    cutoff: f64,
}

impl<'a> Matcher<'a> {
    fn new(target: &'a PointCloud, cutoff: f64) -> Result<Self> {
        let index = crate::cloud::build_index(target, search_cell_size(target, cutoff))?;
        Ok(Self {
            target: &target.points,
            index,
            cutoff,
        })
    }

    /// Nearest target id and squared distance for each query point.
    fn match_all(&self, queries: &[Point3]) -> Vec<Option<(usize, f64)>> {
        queries
            .par_iter()
            .map(|q| self.index.nearest(q, self.cutoff))
            .collect()
    }
}

fn truncated_objective(matches: &[Option<(usize, f64)>], cutoff_sq: f64) -> f64 {
    let sum: f64 = matches.iter().map(|m| m.map_or(cutoff_sq, |(_, d)| d.min(cutoff_sq))).sum();
    sum / matches.len() as f64
}

fn distance_stats(matches: &[Option<(usize, f64)>]) -> Option<ErrorStats> {
    let mut n = 0usize;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for (_, d2) in matches.iter().flatten() {
        n += 1;
        sum += d2.sqrt();
        sum_sq += d2;
    }
    (n > 0).then(|| ErrorStats {
        mean: sum / n as f64,
        rms: (sum_sq / n as f64).sqrt(),
        pairs: n,
    })
}

/// Refines the pose of `source` against `target`.
///
/// Each iteration pairs every posed source point with its nearest target
/// point within the cutoff, fits the best rigid update to the accepted
/// pairs, and stops once that update moves the source bounding box by less
/// than `convergence_eps`.
pub fn icp_refine(source: &PointCloud, target: &PointCloud, params: &IcpParams) -> Result<AlignmentReport> {
    if source.is_empty() || target.is_empty() {
        return Err(RegistrationError::EmptyCloud);
    }
    params.validate()?;
    let matcher = Matcher::new(target, params.max_pair_distance)?;
    let cutoff_sq = params.max_pair_distance * params.max_pair_distance;
    let corners = box_corners(source);

    let mut pose = params.initial;
    let mut posed: Vec<Point3> = source.points.iter().map(|p| pose.apply(p)).collect();
    let mut matches = matcher.match_all(&posed);
    if matches.iter().all(Option::is_none) {
        return Err(RegistrationError::NoOverlap);
    }
    let mut history = vec![truncated_objective(&matches, cutoff_sq)];
    let mut iterations = 0;
    let mut converged = false;

    while iterations < params.max_iterations {
        let (src, dst): (Vec<Vector3<f64>>, Vec<Vector3<f64>>) = posed
            .iter()
            .zip(&matches)
            .filter_map(|(p, m)| {
                m.map(|(id, _)| {
                    let q = &matcher.target[id];
                    (Vector3::new(p.x, p.y, p.z), Vector3::new(q.x, q.y, q.z))
                })
            })
            .unzip();
        if src.len() < 3 || super::check_spread(&src).is_err() {
            log::warn!("ICP stopped after {iterations} iterations: accepted pairs are degenerate");
            break;
        }
        iterations += 1;
        let delta = kabsch(&src, &dst);
        let change = corners
            .iter()
            .map(|c| {
                let before = pose.apply_array(*c);
                let after = delta.apply_array(before);
                (0..3).map(|k| (after[k] - before[k]).powi(2)).sum::<f64>().sqrt()
            })
            .fold(0.0, f64::max);
        let next_pose = delta.compose(&pose);
        let next_posed: Vec<Point3> = source.points.iter().map(|p| next_pose.apply(p)).collect();
        let next_matches = matcher.match_all(&next_posed);
        let objective = truncated_objective(&next_matches, cutoff_sq);
        if objective > *history.last().expect("seeded with the initial objective") {
            // only rounding can raise the objective; keep the better pose
            converged = change < params.convergence_eps;
            break;
        }
        pose = next_pose;
        posed = next_posed;
        matches = next_matches;
        history.push(objective);
        if change < params.convergence_eps {
            converged = true;
            break;
        }
    }

    let stats = distance_stats(&matches).ok_or(RegistrationError::NoOverlap)?;
    Ok(AlignmentReport {
        transform: pose,
        mean_nn_distance: stats.mean,
        rms_nn_distance: stats.rms,
        iterations,
        converged,
        accepted_pairs: stats.pairs,
        objective_history: history,
    })
}

fn box_corners(cloud: &PointCloud) -> Vec<[f64; 3]> {
    let b = bounding_box(cloud).expect("non-empty cloud");
    (0..8)
        .map(|k| {
            [
                if k & 1 == 0 { b.min[0] } else { b.max[0] },
                if k & 2 == 0 { b.min[1] } else { b.max[1] },
                if k & 4 == 0 { b.min[2] } else { b.max[2] },
            ]
        })
        .collect()
}

/// Mean and RMS nearest-neighbor distance from `a` to `b` over pairs within
/// `max_pair_distance`.
pub fn alignment_error(a: &PointCloud, b: &PointCloud, max_pair_distance: f64) -> Result<ErrorStats> {
    if a.is_empty() || b.is_empty() {
        return Err(RegistrationError::EmptyCloud);
    }
    if !(max_pair_distance > 0.0) {
        return Err(RegistrationError::InvalidParams("max_pair_distance must be positive".into()));
    }
    let matcher = Matcher::new(b, max_pair_distance)?;
    distance_stats(&matcher.match_all(&a.points)).ok_or(RegistrationError::NoOverlap)
}
