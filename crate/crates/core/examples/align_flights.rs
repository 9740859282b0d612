//! Aligns a second flight to the first: a tie-point fit gives the starting
//! pose, two ICP passes refine it.
//!
//! ```text
//! cargo run --release --example align_flights
//! ```

use voidstack::pipeline::{align_clouds, RegistrationConfig};
use voidstack::registration::{fit_rigid, icp_refine};
use voidstack::synthetic::{generate_scene, perturb_epoch, SceneSpec};
use voidstack::{CorrespondenceSet, IcpParams, Point3, RigidTransform};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut spec = SceneSpec::collapse_site();
    spec.point_density = 60.0;
    let (clouds, _) = generate_scene(&spec)?;
    let target = &clouds[0];

    // the second flight drifted: 3 degrees of yaw and most of a meter
    let drift = RigidTransform::from_axis_angle([0.05, -0.02, 1.0], 3f64.to_radians(), [0.6, -0.4, 0.2]);
    let source = perturb_epoch(&clouds[1], &drift, 0.01, 7);

    // four surveyed markers seen in both flights
    let markers = [[4.0, 4.0, 0.0], [56.0, 4.0, 0.0], [56.0, 60.0, 0.0], [4.0, 60.0, 0.0]];
    let ties = CorrespondenceSet::new(
        markers
            .iter()
            .map(|m| (Point3::from_array(drift.apply_array(*m)), Point3::from_array(*m)))
            .collect(),
    );
    let initial = fit_rigid(&ties)?;
    println!("tie-point fit residual vs truth: {:.2e} rad", initial.compose(&drift).rotation_angle());

    let plain = icp_refine(&source, target, &IcpParams::default())?;
    println!(
        "ICP from identity: {} iterations, mean NN {:.4} m, converged {}",
        plain.iterations, plain.mean_nn_distance, plain.converged
    );

    let report = align_clouds(&source, target, Some(&ties), &RegistrationConfig::default())?;
    let residual = report.transform.compose(&drift);
    let t = residual.translation();
    println!(
        "tie points + two passes: mean NN {:.4} m, rms {:.4} m, residual {:.4} m / {:.4} deg",
        report.mean_nn_distance,
        report.rms_nn_distance,
        (t[0] * t[0] + t[1] * t[1] + t[2] * t[2]).sqrt(),
        residual.rotation_angle().to_degrees()
    );
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}
