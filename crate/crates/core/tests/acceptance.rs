//! Acceptance run: one PASS/FAIL line per criterion.
//!
//! ```text
//! cargo test --test acceptance
//! ```

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use voidstack::pipeline::{align_clouds, export_table, run, write_scene, RegistrationConfig, ReportBundle, VoidRecord};
use voidstack::registration::{apply_transform, fit_rigid, icp_refine};
use voidstack::slicing::{generate_slice_planes, grid_cell_count};
use voidstack::synthetic::{perturb_epoch, SceneSpec};
use voidstack::voids::{characterize, connectivity, detect_gaps, summarize, DetectionParams};
use voidstack::{
    Aabb, Cause, CauseSource, CorrespondenceSet, GridSpec, IcpParams, Point3, PointCloud, RigidTransform, SliceAxis,
    VoidCandidate, VoidMetrics,
};

mod common;
use common::{carved_stack, day};

type Suite = fn() -> Result<(), String>;
type Criterion = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(elapsed: Duration, limit: Duration) -> bool {
    elapsed < limit
}

// ---------------------------------------------------------------- reference void table

const TABLE: [(&str, f64, f64, f64, f64, f64, Cause); 6] = [
    ("Yellow", 29.10, 2.28, 0.37, 4.23, 2.87, Cause::Excavation),
    ("Cyan", 34.53, 1.88, 0.33, 4.25, 6.25, Cause::Excavation),
    ("Orange", 41.71, 1.45, 0.15, 5.03, 6.91, Cause::Excavation),
    ("Purple", 28.71, 1.19, 0.20, 6.37, 5.06, Cause::Excavation),
    ("Pink", 10.94, 1.14, 0.26, 3.41, 5.73, Cause::Natural),
    ("Green", 10.33, 0.82, 0.23, 2.69, 5.91, Cause::Natural),
];

fn table_records() -> Vec<VoidRecord> {
    TABLE
        .iter()
        .enumerate()
        .map(|(k, &(name, volume, hmax, hmin, xz, yz, cause))| {
            let m = VoidMetrics {
                approx_volume: volume,
                max_height: hmax,
                min_height: hmin,
                xz_width: xz,
                yz_width: yz,
                surface_access: false,
                cause,
                cause_source: CauseSource::Human,
            };
            VoidRecord::from_metrics(k as u32 + 1, Some(name.into()), m)
        })
        .collect()
}

fn table_summary() -> Outcome {
    let t = Instant::now();
    let metrics: Vec<VoidMetrics> = table_records().iter().map(|r| r.metrics).collect();
    let s = summarize(&metrics, 0.0, metrics.len());
    let elapsed = t.elapsed();
    let got = [s.mean_max_height, s.mean_min_height, s.mean_cross_width].map(|v| v.unwrap_or(f64::NAN));
    let want = [1.46, 0.26, 4.89];
    let ok = got.iter().zip(want).all(|(g, w)| (g - w).abs() <= 0.005);
    outcome(
        ok && within(elapsed, Duration::from_secs(1)),
        format!("means {:.4}/{:.4}/{:.4} m vs 1.46/0.26/4.89 ±0.005, {elapsed:.1?}", got[0], got[1], got[2]),
    )
}

fn table_export() -> Outcome {
    let t = Instant::now();
    let csv = export_table(&ReportBundle::from_records(table_records(), 0.0));
    let elapsed = t.elapsed();
    let expected = "\
void_id,approx_volume_m3,max_height_m,min_height_m,xz_width_m,yz_width_m,cause
Yellow,29.10,2.28,0.37,4.23,2.87,Excavation
Cyan,34.53,1.88,0.33,4.25,6.25,Excavation
Orange,41.71,1.45,0.15,5.03,6.91,Excavation
Purple,28.71,1.19,0.20,6.37,5.06,Excavation
Pink,10.94,1.14,0.26,3.41,5.73,Naturally Formed
Green,10.33,0.82,0.23,2.69,5.91,Naturally Formed
";
    let rows = csv.lines().skip(1).zip(expected.lines().skip(1));
    let (mut values, mut labels) = (0, 0);
    for (got, want) in rows {
        let g: Vec<&str> = got.split(',').collect();
        let w: Vec<&str> = want.split(',').collect();
        values += (1..6).filter(|&k| g.get(k) == w.get(k)).count();
        labels += usize::from(g.get(6) == w.get(6));
    }
    outcome(
        csv == expected && within(elapsed, Duration::from_secs(1)),
        format!("{values}/30 numeric cells and {labels}/6 cause labels match, {elapsed:.1?}"),
    )
}

// ---------------------------------------------------------------- end to end

fn collapse_site() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let spec = SceneSpec::collapse_site();
    let t = Instant::now();
    let (config, truth) = write_scene(&spec, dir.path()).unwrap();
    let generated = t.elapsed();
    let t = Instant::now();
    let report = run(&config).unwrap();
    let elapsed = t.elapsed();

    let naturals = truth.features.iter().filter(|f| f.cause == Cause::Natural).count();
    let mut found = 0;
    let mut labels_ok = true;
    let mut worst_volume: f64 = 0.0;
    let mut worst_centroid: f64 = 0.0;
    let mut matched = BTreeSet::new();
    for f in &truth.features {
        let hit = report.voids.iter().find(|v| {
            let c = v.geometry.as_ref().unwrap().centroid;
            f.region.contains(c[0], c[1])
        });
        let Some(v) = hit else {
            labels_ok = false;
            continue;
        };
        matched.insert(v.id);
        labels_ok &= v.metrics.cause == f.cause;
        if f.cause == Cause::Natural {
            found += 1;
            let c = v.geometry.as_ref().unwrap().centroid;
            let net = v.net_volume.unwrap_or(f64::NAN);
            worst_volume = worst_volume.max((net - f.volume).abs() / f.volume);
            worst_centroid = worst_centroid.max((c[0] - f.centroid[0]).hypot(c[1] - f.centroid[1]));
        }
    }
    let points: Vec<usize> = report.epochs.iter().map(|e| e.point_count).collect();
    let nn: Vec<String> = report.epochs.iter().skip(1).map(|e| format!("{:.4}", e.alignment.mean_nn_distance)).collect();
    let pass = found == naturals
        && naturals == 3
        && labels_ok
        && worst_volume <= 0.10
        && worst_centroid <= 0.5
        && within(elapsed, Duration::from_secs(60));
    outcome(
        pass,
        format!(
            "recall {found}/{naturals}, causes {}, max net-volume error {:.1}%, max centroid error {:.3} m, {} unmatched detections, \
             points/epoch {points:?}, mean NN {} m, run {elapsed:.1?} (scene written in {generated:.1?})",
            if labels_ok { "all correct" } else { "WRONG" },
            100.0 * worst_volume,
            worst_centroid,
            report.voids.len() - matched.len(),
            nn.join("/"),
        ),
    )
}

// ---------------------------------------------------------------- slice grid

fn grid_count() -> Outcome {
    let square = Aabb::from_xy([0.0, 0.0], [60.0, 60.0]).unwrap();
    let planes = generate_slice_planes(&square, 4.0, 1.0).unwrap();
    let xs = planes.iter().filter(|p| p.axis == SliceAxis::XNormal).count();
    let ys = planes.len() - xs;
    let cells = grid_cell_count(&planes);
    outcome(xs == 15 && ys == 15 && cells == 225, format!("{xs} x {ys} planes, {cells} grid cells"))
}

// ---------------------------------------------------------------- registration

fn surface_sample(rng: &mut ChaCha8Rng, n: usize, half: f64) -> PointCloud {
    PointCloud::from_xyz((0..n).map(|_| {
        let (x, y) = (rng.random_range(-half..half), rng.random_range(-half..half));
        [x, y, common::wavy_z(x, y)]
    }))
    .unwrap()
}

fn unit_vector(rng: &mut ChaCha8Rng) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if n > 1e-3 && n <= 1.0 {
            return v.map(|c| c / n);
        }
    }
}

fn registration_recovery() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_210_624);
    let config = RegistrationConfig::default();
    let mut ok = 0;
    let mut lines = Vec::new();
    for trial in 0..20u64 {
        // independent samples of one surface for the two flights
        let target = perturb_epoch(&surface_sample(&mut rng, 100_000, 20.0), &RigidTransform::identity(), 0.01, 2 * trial);
        let angle = rng.random_range(0.0..5.0f64).to_radians();
        let dir = unit_vector(&mut rng);
        let shift = rng.random_range(0.0..1.0);
        let motion = RigidTransform::from_axis_angle(unit_vector(&mut rng), angle, dir.map(|c| c * shift));
        let source = perturb_epoch(&surface_sample(&mut rng, 100_000, 20.0), &motion, 0.01, 2 * trial + 1);
        let report = align_clouds(&source, &target, None, &config).unwrap();
        // the recovered pose should undo the motion
        let residual = report.transform.compose(&motion);
        let dt = residual.translation().iter().map(|c| c * c).sum::<f64>().sqrt();
        let dr = residual.rotation_angle().to_degrees();
        let good = dt <= 0.05 && dr <= 0.2;
        ok += usize::from(good);
        lines.push(format!(
            "    trial {trial:2}: applied {:.2}° {:.2} m, residual {:.4} m {:.4}°, mean_nn_distance {:.4} m{}",
            angle.to_degrees(),
            shift,
            dt,
            dr,
            report.mean_nn_distance,
            if good { "" } else { "  MISS" }
        ));
    }
    let elapsed = t.elapsed();
    println!("{}", lines.join("\n"));
    outcome(ok >= 19 && within(elapsed, Duration::from_secs(120)), format!("{ok}/20 within 5 cm and 0.2°, {elapsed:.1?}"))
}

// ---------------------------------------------------------------- box convergence

fn box_convergence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let sizes = [0.5, 0.25, 0.125];
    let boxes: Vec<([f64; 2], [f64; 2], f64)> = (0..12)
        .map(|_| {
            let min = [rng.random_range(2.0..10.0), rng.random_range(2.0..10.0)];
            let size = [rng.random_range(2.0..8.0), rng.random_range(2.0..8.0)];
            (min, size, rng.random_range(0.3..2.3))
        })
        .collect();
    let mut within_ring = true;
    let mut per_box_decreasing = 0;
    let mut mean_err = [0.0; 3];
    for &(min, size, h) in &boxes {
        let max = [min[0] + size[0], min[1] + size[1]];
        let mut errs = [0.0; 3];
        for (k, &cell) in sizes.iter().enumerate() {
            let n = (24.0 / cell) as usize;
            let g = GridSpec::new([0.0, 0.0], cell, n, n).unwrap();
            let stack = carved_stack(g, 10.0, |x, y| {
                if x >= min[0] && x < max[0] && y >= min[1] && y < max[1] {
                    h
                } else {
                    0.0
                }
            });
            let found = detect_gaps(&stack, &DetectionParams::default()).unwrap();
            if found.len() != 1 {
                return outcome(false, format!("box at {min:?} gave {} candidates at cell {cell}", found.len()));
            }
            let m = characterize(&found[0], &g).unwrap();
            let truth = size[0] * size[1] * h;
            let ring = h * ((size[0] + 2.0 * cell) * (size[1] + 2.0 * cell) - size[0] * size[1]);
            errs[k] = (m.approx_volume - truth).abs();
            within_ring &= errs[k] <= ring;
            mean_err[k] += errs[k] / boxes.len() as f64;
        }
        per_box_decreasing += usize::from(errs[0] > errs[1] && errs[1] > errs[2]);
    }
    let decreasing = mean_err[0] > mean_err[1] && mean_err[1] > mean_err[2];
    outcome(
        within_ring && decreasing,
        format!(
            "{} boxes within one ring: {within_ring}; mean |error| {:.4}/{:.4}/{:.4} m3 at 0.5/0.25/0.125 m; \
             {per_box_decreasing}/{} boxes strictly decreasing individually",
            boxes.len(),
            mean_err[0],
            mean_err[1],
            mean_err[2],
            boxes.len()
        ),
    )
}

// ---------------------------------------------------------------- invariants

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn rigid() -> impl Strategy<Value = RigidTransform> {
    (
        (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64),
        -std::f64::consts::PI..std::f64::consts::PI,
        (-100.0..100.0f64, -100.0..100.0f64, -20.0..20.0f64),
    )
        .prop_filter("axis needs a direction", |(a, _, _)| a.0.hypot(a.1).hypot(a.2) > 1e-3)
        .prop_map(|(a, angle, t)| RigidTransform::from_axis_angle([a.0, a.1, a.2], angle, [t.0, t.1, t.2]))
}

fn points() -> impl Strategy<Value = Vec<[f64; 3]>> {
    prop::collection::vec((-50.0..50.0f64, -50.0..50.0f64, -10.0..10.0f64).prop_map(|(x, y, z)| [x, y, z]), 4..40)
}

fn transform_round_trip() -> Result<(), String> {
    runner(128)
        .run(&(rigid(), points()), |(t, pts)| {
            let c = PointCloud::from_xyz(pts).unwrap();
            let back = apply_transform(&apply_transform(&c, &t).unwrap(), &t.inverse()).unwrap();
            for (p, q) in c.points.iter().zip(&back.points) {
                prop_assert!(p.distance(q) < 1e-9);
            }
            prop_assert!(t.compose(&t.inverse()).rotation_angle() < 1e-9);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn fit_rigid_exact() -> Result<(), String> {
    runner(128)
        .run(&(rigid(), points()), |(t, pts)| {
            let pairs: Vec<(Point3, Point3)> = pts.iter().map(|p| (Point3::from_array(*p), t.apply(&Point3::from_array(*p)))).collect();
            let Ok(fit) = fit_rigid(&CorrespondenceSet::new(pairs)) else {
                // collinear samples are rejected, not mis-fit
                return Ok(());
            };
            let residual = fit.compose(&t.inverse());
            prop_assert!(residual.rotation_angle() < 1e-7);
            prop_assert!(residual.translation().iter().all(|c| c.abs() < 1e-6));
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn icp_monotone() -> Result<(), String> {
    let source = common::wavy_grid(40, 0.5);
    let motion = (-0.05..0.05f64, -0.6..0.6f64, -0.6..0.6f64, -0.3..0.3f64, any::<u64>());
    runner(16)
        .run(&motion, |(angle, tx, ty, tz, seed)| {
            let target = perturb_epoch(&source, &RigidTransform::from_axis_angle([0.1, -0.2, 1.0], angle, [tx, ty, tz]), 0.01, seed);
            let report = icp_refine(&source, &target, &IcpParams::default()).unwrap();
            for w in report.objective_history.windows(2) {
                prop_assert!(w[1] <= w[0], "{:?}", report.objective_history);
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn threshold_monotone() -> Result<(), String> {
    let g = GridSpec::new([0.0, 0.0], 0.25, 80, 80).unwrap();
    let bumps = prop::collection::vec(((3.0..17.0f64, 3.0..17.0f64), 1.0..4.0f64, 0.3..2.5f64), 1..5);
    runner(32)
        .run(&(bumps, 0.05..1.0f64, 0.05..1.0f64), |(bumps, lo, step)| {
            let stack = carved_stack(g, 10.0, |x, y| {
                bumps
                    .iter()
                    .map(|&((cx, cy), r, h)| {
                        let d = (x - cx).hypot(y - cy) / r;
                        (h * (1.0 - d * d)).max(0.0)
                    })
                    .sum()
            });
            let at = |t: f64| detect_gaps(&stack, &DetectionParams { min_gap: t, min_footprint_cells: 4 }).unwrap();
            let low: BTreeSet<(usize, usize)> = at(lo).iter().flat_map(|v| v.footprint.iter().copied()).collect();
            for v in at(lo + step) {
                prop_assert!(v.footprint.iter().all(|c| low.contains(c)));
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    // separated cones: the candidate count never grows with the threshold
    runner(16)
        .run(&prop::collection::vec(0.3..2.5f64, 9), |heights| {
            let stack = carved_stack(g, 10.0, |x, y| {
                heights
                    .iter()
                    .enumerate()
                    .map(|(k, &h)| {
                        let (cx, cy) = (2.0 + 8.0 * (k % 3) as f64, 2.0 + 8.0 * (k / 3) as f64);
                        let d = (x - cx).hypot(y - cy) / 1.8;
                        (h * (1.0 - d * d)).max(0.0)
                    })
                    .sum()
            });
            let counts: Vec<usize> = [0.1, 0.3, 0.6, 1.0, 1.5, 2.0]
                .iter()
                .map(|&t| detect_gaps(&stack, &DetectionParams { min_gap: t, min_footprint_cells: 4 }).unwrap().len())
                .collect();
            prop_assert!(counts.windows(2).all(|w| w[1] <= w[0]), "{:?}", counts);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn metric(hmax: f64, hmin: f64, xz: f64, yz: f64) -> VoidMetrics {
    VoidMetrics {
        approx_volume: 0.0,
        max_height: hmax,
        min_height: hmin,
        xz_width: xz,
        yz_width: yz,
        surface_access: false,
        cause: Cause::Indeterminate,
        cause_source: CauseSource::Heuristic,
    }
}

fn summarize_brute_force() -> Result<(), String> {
    let rows = prop::collection::vec((0.0..5.0f64, 0.0..1.0f64, 0.1..10.0f64, 0.1..10.0f64), 1..30);
    runner(128)
        .run(&rows, |rows| {
            let s = summarize(&rows.iter().map(|&(a, b, c, d)| metric(a + b, b, c, d)).collect::<Vec<_>>(), 1.0, 1);
            let n = rows.len() as f64;
            let hmax = rows.iter().rev().fold(0.0, |acc, r| acc + r.0 + r.1) / n;
            let hmin = rows.iter().rev().fold(0.0, |acc, r| acc + r.1) / n;
            let w = rows.iter().rev().fold(0.0, |acc, r| acc + r.2 + r.3) / (2.0 * n);
            prop_assert!((s.mean_max_height.unwrap() - hmax).abs() < 1e-12);
            prop_assert!((s.mean_min_height.unwrap() - hmin).abs() < 1e-12);
            prop_assert!((s.mean_cross_width.unwrap() - w).abs() < 1e-12);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn connectivity_brute_force() -> Result<(), String> {
    let cell = 0.25;
    let blobs = prop::collection::vec(((0usize..30, 0usize..30), (1usize..5, 1usize..5), (0.0..5.0f64, 0.1..3.0f64)), 1..9);
    runner(64)
        .run(&(blobs, 0.0..2.0f64), |(blobs, reach)| {
            let voids: Vec<VoidCandidate> = blobs
                .iter()
                .enumerate()
                .map(|(k, &((i0, j0), (w, h), (floor, gap)))| {
                    let footprint: Vec<(usize, usize)> = (j0..j0 + h).flat_map(|j| (i0..i0 + w).map(move |i| (i, j))).collect();
                    let n = footprint.len();
                    VoidCandidate {
                        id: k as u32 + 1,
                        footprint,
                        gap_heights: vec![gap; n],
                        floor_elevations: vec![floor; n],
                        epoch_pair: (day(0), day(1)),
                        layer_pair: (0, 1),
                        centroid: [0.0; 3],
                        open_boundary: false,
                    }
                })
                .collect();
            let n = voids.len();
            // union-find over the direct pairwise rule
            let mut parent: Vec<usize> = (0..n).collect();
            fn root(p: &mut [usize], mut a: usize) -> usize {
                while p[a] != a {
                    a = p[a];
                }
                a
            }
            for a in 0..n {
                for b in a + 1..n {
                    let d = voids[a]
                        .footprint
                        .iter()
                        .flat_map(|&(ai, aj)| {
                            voids[b].footprint.iter().map(move |&(bi, bj)| {
                                let dx = ((ai as f64 - bi as f64).abs() - 1.0).max(0.0) * cell;
                                let dy = ((aj as f64 - bj as f64).abs() - 1.0).max(0.0) * cell;
                                dx.hypot(dy)
                            })
                        })
                        .fold(f64::INFINITY, f64::min);
                    let (fa, ga) = (voids[a].floor_elevations[0], voids[a].gap_heights[0]);
                    let (fb, gb) = (voids[b].floor_elevations[0], voids[b].gap_heights[0]);
                    if fa <= fb + gb && fb <= fa + ga && d <= reach {
                        let (ra, rb) = (root(&mut parent, a), root(&mut parent, b));
                        parent[ra] = rb;
                    }
                }
            }
            let c = connectivity(&voids, cell, reach).unwrap();
            for a in 0..n {
                for b in 0..n {
                    prop_assert_eq!(c.labels[a] == c.labels[b], root(&mut parent, a) == root(&mut parent, b));
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn report_round_trip() -> Result<(), String> {
    let rows = prop::collection::vec((-1e4f64..1e4, 0.0f64..10.0, 0.0f64..10.0, 0.0f64..50.0, 0.0f64..50.0, any::<bool>()), 0..10);
    runner(64)
        .run(&rows, |rows| {
            let records = rows
                .iter()
                .enumerate()
                .map(|(k, &(v, a, b, c, d, access))| {
                    let mut m = metric(a, b, c, d);
                    m.approx_volume = v;
                    m.surface_access = access;
                    VoidRecord::from_metrics(k as u32 + 1, None, m)
                })
                .collect();
            let report = ReportBundle::from_records(records, 4.0);
            let text = report.to_json();
            let parsed = ReportBundle::from_json(&text).unwrap();
            prop_assert_eq!(&parsed, &report);
            prop_assert_eq!(parsed.to_json(), text);
            Ok(())
        })
        .map_err(|e| e.to_string())
}

fn invariants() -> Outcome {
    let t = Instant::now();
    let suites: [(&str, Suite); 7] = [
        ("transform round-trip", transform_round_trip),
        ("fit_rigid exactness", fit_rigid_exact),
        ("ICP objective monotone", icp_monotone),
        ("detection threshold monotone", threshold_monotone),
        ("summarize brute force", summarize_brute_force),
        ("connectivity brute force", connectivity_brute_force),
        ("report round-trip", report_round_trip),
    ];
    let mut failed = Vec::new();
    for (name, suite) in suites {
        if let Err(e) = suite() {
            failed.push(format!("{name}: {e}"));
        }
    }
    let detail = if failed.is_empty() {
        format!("{} suites green, {:.1?}", suites.len(), t.elapsed())
    } else {
        failed.join("; ")
    };
    outcome(failed.is_empty(), detail)
}

fn main() {
    let criteria: [(&str, Criterion); 7] = [
        ("reference table summary", table_summary),
        ("reference table export", table_export),
        ("synthetic end-to-end", collapse_site),
        ("grid count", grid_count),
        ("registration recovery", registration_recovery),
        ("box-volume convergence", box_convergence),
        ("invariant suites", invariants),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failures = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let n = k + 1;
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str()) || *f == n.to_string()) {
            continue;
        }
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            outcome(false, format!("panicked: {msg}"))
        });
        failures += usize::from(!result.pass);
        println!("criterion {n} {name}: {} ({})", if result.pass { "PASS" } else { "FAIL" }, result.detail);
    }
    println!("criterion 8 viewer loop: SKIP (browser viewer is not part of this workspace)");
    if failures > 0 {
        std::process::exit(1);
    }
}
