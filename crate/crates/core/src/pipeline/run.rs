use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use chrono::Utc;
use rayon::prelude::*;

use super::report::{
    EpochEntry, GapMap, ReportBundle, RunMetadata, SliceEntry, SliceKind, VoidGeometry, VoidRecord, REPORT_SCHEMA_VERSION,
};
use super::{export_table, PipelineConfig, PipelineError, RegistrationConfig, Result};
use crate::cloud::{bounding_box, read_cloud, Aabb, PointCloud, Rect};
use crate::registration::{
    alignment_error, apply_transform, fit_rigid, icp_refine, AlignmentReport, CorrespondenceSet, IcpParams,
};
use crate::slicing::{extract_profile, generate_slice_planes, render_profile, render_profile_svg, SliceAxis, SlicePlane};
use crate::surface::{
    build_stack, common_xy_bounds, estimate_ground, fill_holes, pile_depth, rasterize_dsm, to_pgm, EpochStack, GridSpec,
};
use crate::voids::{characterize, classify_cause, connectivity, detect_gaps, summarize, VoidCandidate};

/// One loaded flight.
#[derive(Clone, Debug)]
pub struct EpochInput {
    pub cloud: PointCloud,
    /// Where it came from, for the report.
    pub path: String,
    pub tie_points: Option<CorrespondenceSet>,
}

/// Everything a run produces, before anything touches the disk.
#[derive(Clone, Debug)]
pub struct Analysis {
    pub report: ReportBundle,
    pub stack: EpochStack,
    /// Derived files keyed by path relative to the output directory.
    pub artifacts: Vec<(String, Vec<u8>)>,
}

/// Reads every input cloud and tie-point file named in the config.
pub fn load_inputs(config: &PipelineConfig) -> Result<Vec<EpochInput>> {
    config
        .inputs
        .par_iter()
        .map(|input| {
            let path = config.resolve(&input.path);
            let mut cloud = read_cloud(&path, input.format).map_err(|source| PipelineError::Cloud {
                path: path.clone(),
                source,
            })?;
            if let Some(e) = input.epoch {
                cloud.epoch = e;
            }
            if cloud.source_label.is_empty() {
                cloud.source_label = input.path.display().to_string();
            }
            let tie_points = match &input.tie_points {
                Some(t) => {
                    let t = config.resolve(t);
                    let text = fs::read_to_string(&t).map_err(PipelineError::io(&t))?;
                    Some(CorrespondenceSet::parse(&text).map_err(|source| PipelineError::Cloud { path: t, source })?)
                }
                None => None,
            };
            Ok(EpochInput {
                cloud,
                path: input.path.display().to_string(),
                tie_points,
            })
        })
        .collect()
}

fn thin(cloud: &PointCloud, max_points: usize) -> PointCloud {
    let stride = cloud.len().div_ceil(max_points.max(1)).max(1);
    PointCloud {
        points: cloud.points.iter().step_by(stride).copied().collect(),
        epoch: cloud.epoch,
        source_label: cloud.source_label.clone(),
    }
}

/// Pose of `source` in the frame of `target`: tie points give the starting
/// pose, ICP on a thinned copy of the source refines it. With
/// `fine_pair_distance` set, a second pass with that cutoff follows; the
/// report then carries the objective history of that pass and the
/// iteration count of both.
pub fn align_clouds(
    source: &PointCloud,
    target: &PointCloud,
    tie_points: Option<&CorrespondenceSet>,
    config: &RegistrationConfig,
) -> std::result::Result<AlignmentReport, crate::registration::RegistrationError> {
    let icp = &config.icp;
    let initial = match tie_points {
        Some(t) => fit_rigid(t)?,
        None => icp.initial,
    };
    let sample = thin(source, config.max_points);
    if config.enabled {
        let coarse = icp_refine(&sample, target, &IcpParams { initial, ..*icp })?;
        return match config.fine_pair_distance {
            Some(d) if d < icp.max_pair_distance => {
                let params = IcpParams {
                    initial: coarse.transform,
                    max_pair_distance: d,
                    ..*icp
                };
                let mut fine = icp_refine(&sample, target, &params)?;
                fine.iterations += coarse.iterations;
                Ok(fine)
            }
            _ => Ok(coarse),
        };
    }
    let posed = apply_transform(&sample, &initial)?;
    let stats = alignment_error(&posed, target, icp.max_pair_distance).ok();
    Ok(AlignmentReport {
        transform: initial,
        mean_nn_distance: stats.map_or(0.0, |s| s.mean),
        rms_nn_distance: stats.map_or(0.0, |s| s.rms),
        iterations: 0,
        converged: true,
        accepted_pairs: stats.map_or(0, |s| s.pairs),
        objective_history: Vec::new(),
    })
}

fn slice_id(kind: SliceKind, axis: SliceAxis, k: usize) -> String {
    let section = axis.section_name().to_lowercase();
    match kind {
        SliceKind::Grid => format!("{section}-{k:02}"),
        SliceKind::Void => format!("void-{k}-{section}"),
    }
}

/// Runs every processing stage on loaded clouds.
pub fn analyze(mut inputs: Vec<EpochInput>, config: &PipelineConfig) -> Result<Analysis> {
    let started_at = Utc::now();
    if inputs.is_empty() {
        return Err(PipelineError::Validation("no input clouds".into()));
    }
    inputs.sort_by_key(|i| i.cloud.epoch);
    if let Some(w) = inputs.windows(2).find(|w| w[0].cloud.epoch == w[1].cloud.epoch) {
        return Err(PipelineError::Validation(format!(
            "{} and {} share epoch {}",
            w[0].path, w[1].path, w[0].cloud.epoch
        )));
    }

    // register every later flight onto the earliest one
    let t = Instant::now();
    let reference = inputs[0].cloud.clone();
    let reg = &config.registration;
    let aligned: Vec<(PointCloud, AlignmentReport)> = inputs
        .iter()
        .enumerate()
        .map(|(k, input)| {
            if k == 0 {
                return Ok((input.cloud.clone(), AlignmentReport::reference()));
            }
            let wrap = |source| PipelineError::Registration {
                label: input.path.clone(),
                source,
            };
            let report = align_clouds(&input.cloud, &reference, input.tie_points.as_ref(), reg)
                .map_err(wrap)?;
            let posed = apply_transform(&input.cloud, &report.transform).map_err(wrap)?;
            log::info!(
                "{}: mean NN distance {:.4} m after {} iterations",
                input.path,
                report.mean_nn_distance,
                report.iterations
            );
            Ok((posed, report))
        })
        .collect::<Result<_>>()?;
    log::info!("registration took {:.2?}", t.elapsed());

    let region = match config.grid.region {
        Some(r) => r,
        None => {
            let boxes = aligned
                .iter()
                .map(|(c, _)| bounding_box(c))
                .collect::<std::result::Result<Vec<Aabb>, _>>()
                .map_err(|e| PipelineError::Runtime(e.to_string()))?;
            let (min, max) =
                common_xy_bounds(&boxes).ok_or_else(|| PipelineError::Runtime("input clouds do not overlap in XY".into()))?;
            Rect::new(min, max).map_err(|e| PipelineError::Runtime(format!("cloud overlap is degenerate: {e}")))?
        }
    };
    let grid = GridSpec::covering(region.min, region.max, config.grid.cell_size)?;

    let t = Instant::now();
    let layers = aligned
        .par_iter()
        .map(|(cloud, _)| {
            let hf = rasterize_dsm(cloud, &grid, config.grid.surface_rule)?;
            if config.grid.fill_radius > 0 {
                fill_holes(&hf, config.grid.fill_radius)
            } else {
                Ok(hf)
            }
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let ground = match config.ground.elevation {
        Some(z) => z,
        None => {
            let footprint = config.ground.pile_footprint.map(|r| r.to_aabb());
            estimate_ground(&layers[0], footprint.as_ref()).unwrap_or_else(|| {
                log::warn!("no cells to estimate the ground from; using 0");
                0.0
            })
        }
    };
    let stack = build_stack(layers, ground)?;
    log::info!("stack of {} layers on {}x{} cells in {:.2?}", stack.len(), grid.nx, grid.ny, t.elapsed());

    let t = Instant::now();
    let candidates = if stack.len() >= 2 {
        detect_gaps(&stack, &config.detection.params)?
    } else {
        log::warn!("a single epoch has no inter-layer gaps");
        Vec::new()
    };
    let metrics = candidates
        .par_iter()
        .map(|c| characterize(c, &grid))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let components = connectivity(&candidates, grid.cell_size, config.detection.adjacency_distance)?;
    let depth = pile_depth(&stack).max_depth;

    let mut voids = Vec::with_capacity(candidates.len());
    for ((c, m), component) in candidates.iter().zip(&metrics).zip(&components.labels) {
        let area = c.footprint_area(&grid);
        let thickness = config.classification.slab_thickness_at(c.centroid[0], c.centroid[1]);
        let cause = classify_cause(m.approx_volume, area, thickness, config.classification.margin)?;
        let mut m = *m;
        m.cause = cause;
        let (min, max) = c.bounds_xy(&grid);
        voids.push(VoidRecord {
            id: c.id,
            name: None,
            metrics: m,
            heuristic_cause: cause,
            removed_slab_thickness: thickness,
            net_volume: thickness.map(|t| m.approx_volume - t * area),
            component: *component,
            slices: Vec::new(),
            geometry: Some(VoidGeometry {
                epoch_pair: [c.epoch_pair.0, c.epoch_pair.1],
                centroid: c.centroid,
                bbox: Rect { min, max },
                footprint_cells: c.footprint.len(),
                footprint_area: area,
                gap_map: config.detection.embed_gap_maps.then(|| gap_map(c)),
            }),
        });
    }
    let all_metrics: Vec<_> = voids.iter().map(|v| v.metrics).collect();
    let summary = summarize(&all_metrics, depth, components.count);
    log::info!("{} candidate voids in {:.2?}", voids.len(), t.elapsed());

    let t = Instant::now();
    let mut planes: Vec<(String, SliceKind, SlicePlane)> = Vec::new();
    let grid_planes = generate_slice_planes(&region.to_aabb(), config.slicing.spacing, config.slicing.thickness)?;
    let mut per_axis = [0usize; 2];
    for p in grid_planes {
        let a = (p.axis == SliceAxis::YNormal) as usize;
        planes.push((slice_id(SliceKind::Grid, p.axis, per_axis[a]), SliceKind::Grid, p));
        per_axis[a] += 1;
    }
    for v in &voids {
        let g = v.geometry.as_ref().expect("detected voids carry geometry");
        for axis in [SliceAxis::YNormal, SliceAxis::XNormal] {
            let (n, h) = if axis == SliceAxis::XNormal { (0, 1) } else { (1, 0) };
            let pad = config.slicing.spacing;
            let extent = [(g.bbox.min[h] - pad).max(region.min[h]), (g.bbox.max[h] + pad).min(region.max[h])];
            let plane = SlicePlane::new(axis, g.centroid[n], config.slicing.thickness, extent)?;
            planes.push((slice_id(SliceKind::Void, axis, v.id as usize), SliceKind::Void, plane));
        }
    }
    let rendered = planes
        .par_iter()
        .map(|(id, kind, plane)| {
            let profile = extract_profile(&stack, plane)?;
            let image = render_profile(&profile, &config.slicing.render)?.to_ppm();
            let svg = render_profile_svg(&profile, &config.slicing.render)?;
            let json = serde_json::to_vec_pretty(&profile)?;
            let void_ids = voids
                .iter()
                .filter(|v| v.geometry.as_ref().is_some_and(|g| plane.crosses(g.bbox.min, g.bbox.max)))
                .map(|v| v.id)
                .collect();
            let entry = SliceEntry {
                id: id.clone(),
                kind: *kind,
                axis: plane.axis,
                section: plane.axis.section_name().into(),
                offset: plane.offset,
                thickness: plane.thickness,
                extent: plane.extent,
                void_ids,
                image: format!("slices/{id}.ppm"),
                svg: format!("slices/{id}.svg"),
                profile: format!("slices/{id}.json"),
            };
            Ok((entry, image, svg.into_bytes(), json))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut artifacts = Vec::new();
    let mut slices = Vec::with_capacity(rendered.len());
    for (entry, image, svg, json) in rendered {
        artifacts.push((entry.image.clone(), image));
        artifacts.push((entry.svg.clone(), svg));
        artifacts.push((entry.profile.clone(), json));
        slices.push(entry);
    }
    for v in &mut voids {
        v.slices = slices.iter().filter(|s| s.void_ids.contains(&v.id)).map(|s| s.id.clone()).collect();
    }
    for (k, layer) in stack.layers().iter().enumerate() {
        artifacts.push((format!("dsm/epoch-{}.pgm", k + 1), to_pgm(layer)));
    }
    log::info!("{} slices rendered in {:.2?}", slices.len(), t.elapsed());

    let epochs = inputs
        .iter()
        .zip(aligned)
        .enumerate()
        .map(|(k, (input, (cloud, alignment)))| EpochEntry {
            index: k + 1,
            epoch: cloud.epoch,
            source_label: cloud.source_label.clone(),
            path: input.path.clone(),
            point_count: cloud.len(),
            alignment,
        })
        .collect();
    let report = ReportBundle {
        metadata: RunMetadata {
            schema_version: REPORT_SCHEMA_VERSION,
            tool_version: env!("CARGO_PKG_VERSION").into(),
            config_hash: config.hash(),
            started_at,
            finished_at: Utc::now(),
        },
        grid: Some(grid),
        ground_elevation: Some(ground),
        epochs,
        summary,
        voids,
        slices,
        labels: Vec::new(),
    };
    artifacts.push(("voids.csv".into(), export_table(&report).into_bytes()));
    Ok(Analysis {
        report,
        stack,
        artifacts,
    })
}

fn gap_map(c: &VoidCandidate) -> GapMap {
    GapMap {
        cells: c.footprint.iter().map(|&(i, j)| [i, j]).collect(),
        heights: c.gap_heights.clone(),
    }
}

/// Validates the config, runs the analysis and writes the report, void
/// table, slice images and DSM previews to the output directory.
///
/// Files are staged next to the output directory and moved in only after
/// everything has been written, so a failed run leaves no partial output.
pub fn run(config: &PipelineConfig) -> Result<ReportBundle> {
    config.validate()?;
    let inputs = load_inputs(config)?;
    let analysis = analyze(inputs, config)?;
    let out = config.output_path();
    write_outputs(&analysis, &out)?;
    Ok(analysis.report)
}

fn write_outputs(analysis: &Analysis, out: &Path) -> Result<()> {
    let parent = match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&parent).map_err(PipelineError::io(&parent))?;
    let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_else(|| "report".into());
    let staging = parent.join(format!(".{name}.staging-{}", std::process::id()));
    let result = stage(analysis, &staging).and_then(|_| publish(&staging, out));
    let _ = fs::remove_dir_all(&staging);
    result
}

fn stage(analysis: &Analysis, staging: &Path) -> Result<()> {
    let _ = fs::remove_dir_all(staging);
    fs::create_dir_all(staging).map_err(PipelineError::io(staging))?;
    let mut files: Vec<(String, &[u8])> = analysis.artifacts.iter().map(|(p, b)| (p.clone(), b.as_slice())).collect();
    let json = analysis.report.to_json();
    files.push(("report.json".into(), json.as_bytes()));
    for (rel, bytes) in files {
        let path = staging.join(&rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(PipelineError::io(dir))?;
        }
        fs::write(&path, bytes).map_err(PipelineError::io(&path))?;
    }
    Ok(())
}

fn publish(staging: &Path, out: &Path) -> Result<()> {
    if !out.exists() {
        return fs::rename(staging, out).map_err(PipelineError::io(out));
    }
    for entry in fs::read_dir(staging).map_err(PipelineError::io(staging))? {
        let entry = entry.map_err(PipelineError::io(staging))?;
        let target = out.join(entry.file_name());
        if target.is_dir() {
            fs::remove_dir_all(&target).map_err(PipelineError::io(&target))?;
        } else if target.exists() {
            fs::remove_file(&target).map_err(PipelineError::io(&target))?;
        }
        fs::rename(entry.path(), &target).map_err(PipelineError::io(&target))?;
    }
    Ok(())
}
