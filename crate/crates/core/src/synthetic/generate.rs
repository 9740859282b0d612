use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::{GroundTruth, Result, SceneSpec};
use crate::cloud::{Point3, PointCloud};
use crate::registration::RigidTransform;

/// Noise-free surface of the scene at 0-based epoch `k`.
pub fn surface_elevation(spec: &SceneSpec, k: usize, x: f64, y: f64) -> f64 {
    let b = &spec.base_surface;
    let mut z = b.ground_elevation;
    let mut below = 0.0;
    for (level, &top) in b.slab_elevations.iter().enumerate() {
        let Some(r) = spec.footprint.inset(b.pile_margin + level as f64 * b.stair_step) else {
            break;
        };
        let d = r.inner_distance(x, y);
        let rise = if b.edge_ramp > 0.0 {
            (d / b.edge_ramp).clamp(0.0, 1.0)
        } else if r.contains(x, y) {
            1.0
        } else {
            0.0
        };
        z += (top - below) * rise;
        below = top;
    }
    let epoch = k + 1;
    for e in &spec.excavations {
        if e.epoch <= epoch && e.region.contains(x, y) {
            z -= e.thickness;
        }
    }
    for v in &spec.voids {
        if v.exposed_epoch <= epoch && v.rect().is_ok_and(|r| r.contains(x, y)) {
            z -= v.slab_thickness + v.depth_at(x, y);
        }
    }
    z
}

fn epoch_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Samples every epoch of the scene: `round(point_density * area)` points
/// uniform over the footprint, each lifted to the epoch surface plus
/// Gaussian vertical noise.
pub fn generate_scene(spec: &SceneSpec) -> Result<(Vec<PointCloud>, GroundTruth)> {
    let truth = GroundTruth::from_spec(spec)?;
    let n = (spec.point_density * spec.footprint.area()).round() as usize;
    let noise = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
    let [x0, y0] = spec.footprint.min;
    let [w, h] = spec.footprint.size();
    let clouds = spec
        .epochs
        .par_iter()
        .enumerate()
        .map(|(k, &epoch)| {
            let mut rng = epoch_rng(spec.seed, k as u64);
            let points = (0..n)
                .map(|_| {
                    let x = x0 + w * rng.random::<f64>();
                    let y = y0 + h * rng.random::<f64>();
                    let z = surface_elevation(spec, k, x, y) + noise.sample(&mut rng);
                    Point3::new(x, y, z)
                })
                .collect();
            PointCloud {
                points,
                epoch,
                source_label: format!("synthetic-{}-e{}", spec.seed, k + 1),
            }
        })
        .collect();
    Ok((clouds, truth))
}

/// Moves `cloud` by `rigid`, then adds isotropic Gaussian jitter of
/// `jitter_sigma` to every coordinate. A non-positive sigma adds none.
pub fn perturb_epoch(cloud: &PointCloud, rigid: &RigidTransform, jitter_sigma: f64, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = (jitter_sigma > 0.0).then(|| Normal::new(0.0, jitter_sigma).expect("positive sigma"));
    let points = cloud
        .points
        .iter()
        .map(|p| {
            let mut q = rigid.apply(p);
            if let Some(j) = &jitter {
                q.x += j.sample(&mut rng);
                q.y += j.sample(&mut rng);
                q.z += j.sample(&mut rng);
            }
            q
        })
        .collect();
    PointCloud {
        points,
        epoch: cloud.epoch,
        source_label: cloud.source_label.clone(),
    }
}
