use std::collections::BTreeSet;

use proptest::prelude::*;
use voidstack::voids::{characterize, classify_cause, connectivity, detect_gaps, summarize, Cause, DetectionParams, VoidError};
use voidstack::{GridSpec, VoidCandidate, VoidMetrics};

mod common;
use common::{carved_stack, day};

fn params(min_gap: f64, min_cells: usize) -> DetectionParams {
    DetectionParams {
        min_gap,
        min_footprint_cells: min_cells,
    }
}

fn in_box(x: f64, y: f64, min: [f64; 2], max: [f64; 2]) -> bool {
    x >= min[0] && x < max[0] && y >= min[1] && y < max[1]
}

/// Rounded cone of radius `r` and peak `h` centered at `c`.
fn bump(c: [f64; 2], r: f64, h: f64) -> impl Fn(f64, f64) -> f64 {
    move |x, y| {
        let d = (x - c[0]).hypot(y - c[1]) / r;
        (h * (1.0 - d * d)).max(0.0)
    }
}

fn metric(max_height: f64, min_height: f64, xz: f64, yz: f64) -> VoidMetrics {
    VoidMetrics {
        approx_volume: 0.0,
        max_height,
        min_height,
        xz_width: xz,
        yz_width: yz,
        surface_access: false,
        cause: Cause::Indeterminate,
        cause_source: voidstack::CauseSource::Heuristic,
    }
}

fn footprints(v: &[VoidCandidate]) -> Vec<BTreeSet<(usize, usize)>> {
    v.iter().map(|c| c.footprint.iter().copied().collect()).collect()
}

proptest! {
    #[test]
    fn raising_the_threshold_only_shrinks_footprints(
        bumps in prop::collection::vec(((2.0..18.0f64, 2.0..18.0f64), 0.5..4.0f64, 0.05..2.0f64), 1..6),
        lo in 0.05..0.5f64,
        step in 0.0..1.0f64,
    ) {
        let g = GridSpec::new([0.0, 0.0], 0.25, 80, 80).unwrap();
        // overlapping bumps are summed, so components may split as the threshold rises
        let stack = carved_stack(g, 10.0, |x, y| bumps.iter().map(|&((cx, cy), r, h)| bump([cx, cy], r, h)(x, y)).sum());
        let low = detect_gaps(&stack, &params(lo, 4)).unwrap();
        let high = detect_gaps(&stack, &params(lo + step, 4)).unwrap();
        let low_sets = footprints(&low);
        let low_cells: usize = low_sets.iter().map(BTreeSet::len).sum();
        let high_cells: usize = high.iter().map(|c| c.footprint.len()).sum();
        prop_assert!(high_cells <= low_cells);
        for h in footprints(&high) {
            prop_assert!(low_sets.iter().any(|l| h.is_subset(l)));
        }
    }

    #[test]
    fn candidate_count_is_monotone_for_separate_bumps(
        heights in prop::collection::vec(0.1..2.5f64, 1..7),
        thresholds in prop::collection::vec(0.05..2.5f64, 2..6),
    ) {
        // bumps on a 3x3 lattice of centers 8 m apart never touch, and each
        // bump's superlevel sets are discs, so a threshold cannot split them
        let g = GridSpec::new([0.0, 0.0], 0.25, 96, 96).unwrap();
        let centers: Vec<[f64; 2]> = (0..heights.len()).map(|k| [4.0 + 8.0 * (k % 3) as f64, 4.0 + 8.0 * (k / 3) as f64]).collect();
        let stack = carved_stack(g, 10.0, |x, y| {
            centers.iter().zip(&heights).map(|(c, h)| bump(*c, 3.0, *h)(x, y)).sum()
        });
        let mut ts = thresholds.clone();
        ts.sort_by(f64::total_cmp);
        let counts: Vec<usize> = ts.iter().map(|t| detect_gaps(&stack, &params(*t, 16)).unwrap().len()).collect();
        for w in counts.windows(2) {
            prop_assert!(w[1] <= w[0], "{:?} at {:?}", counts, ts);
        }
    }

    #[test]
    fn box_volume_stays_within_one_ring(
        min in (2.0..12.0f64, 2.0..12.0f64),
        size in (2.0..10.0f64, 2.0..10.0f64),
        h in 0.2..3.0f64,
    ) {
        let hi = [min.0 + size.0, min.1 + size.1];
        for cell in [0.5, 0.25, 0.125] {
            let n = (24.0 / cell) as usize;
            let g = GridSpec::new([0.0, 0.0], cell, n, n).unwrap();
            let stack = carved_stack(g, 10.0, |x, y| if in_box(x, y, [min.0, min.1], hi) { h } else { 0.0 });
            let found = detect_gaps(&stack, &params(0.15, 16)).unwrap();
            prop_assert_eq!(found.len(), 1);
            let m = characterize(&found[0], &g).unwrap();
            let truth = size.0 * size.1 * h;
            let ring = h * ((size.0 + 2.0 * cell) * (size.1 + 2.0 * cell) - size.0 * size.1);
            prop_assert!((m.approx_volume - truth).abs() <= ring, "cell {} error {} ring {}", cell, m.approx_volume - truth, ring);
        }
    }

    #[test]
    fn volume_is_the_sum_of_cell_contributions(bumps in prop::collection::vec(((3.0..17.0f64, 3.0..17.0f64), 1.0..3.0f64, 0.3..2.0f64), 1..4)) {
        let g = GridSpec::new([0.0, 0.0], 0.25, 80, 80).unwrap();
        let stack = carved_stack(g, 10.0, |x, y| bumps.iter().map(|&((cx, cy), r, h)| bump([cx, cy], r, h)(x, y)).sum());
        for v in detect_gaps(&stack, &DetectionParams::default()).unwrap() {
            let m = characterize(&v, &g).unwrap();
            let mut sum = 0.0;
            for gap in &v.gap_heights {
                sum += gap * g.cell_area();
            }
            prop_assert_eq!(m.approx_volume, sum);
            prop_assert_eq!(m.max_height, v.gap_heights.iter().copied().fold(f64::MIN, f64::max));
            prop_assert!(m.min_height <= m.max_height);
        }
    }

    #[test]
    fn classification_ignores_scale(v in 0.01..500.0f64, area in 0.1..200.0f64, t in 0.0..3.0f64, margin in 0.0..1.0f64, s in 0.001..1000.0f64) {
        let limit = t * area * (1.0 + margin);
        prop_assume!((v - limit).abs() > 1e-9 * limit.max(1.0));
        let a = classify_cause(v, area, Some(t), margin).unwrap();
        let b = classify_cause(v * s, area * s, Some(t), margin).unwrap();
        prop_assert_eq!(a, b);
        prop_assert_eq!(a, if v > limit { Cause::Natural } else { Cause::Excavation });
    }

    #[test]
    fn summarize_matches_direct_average(raw in prop::collection::vec((0.0..5.0f64, 0.0..1.0f64, 0.1..10.0f64, 0.1..10.0f64), 0..30)) {
        let metrics: Vec<VoidMetrics> = raw.iter().map(|&(a, b, c, d)| metric(a + b, b, c, d)).collect();
        let s = summarize(&metrics, 6.5, 2);
        prop_assert_eq!(s.count, raw.len());
        prop_assert_eq!(s.max_pile_depth, 6.5);
        if raw.is_empty() {
            prop_assert!(s.mean_max_height.is_none() && s.mean_min_height.is_none() && s.mean_cross_width.is_none());
        } else {
            let n = raw.len() as f64;
            // reverse-order accumulation as an independent path
            let hmax = raw.iter().rev().fold(0.0, |acc, r| acc + (r.0 + r.1)) / n;
            let hmin = raw.iter().rev().fold(0.0, |acc, r| acc + r.1) / n;
            let widths: Vec<f64> = raw.iter().flat_map(|r| [r.2, r.3]).collect();
            let w = widths.iter().rev().sum::<f64>() / widths.len() as f64;
            prop_assert!((s.mean_max_height.unwrap() - hmax).abs() < 1e-12);
            prop_assert!((s.mean_min_height.unwrap() - hmin).abs() < 1e-12);
            prop_assert!((s.mean_cross_width.unwrap() - w).abs() < 1e-12);
        }
    }

    #[test]
    fn connectivity_matches_pairwise_closure(
        blobs in prop::collection::vec(((0usize..30, 0usize..30), (1usize..5, 1usize..5), (0.0..5.0f64, 0.1..3.0f64)), 1..9),
        reach in 0.0..2.0f64,
    ) {
        let cell = 0.25;
        let voids: Vec<VoidCandidate> = blobs
            .iter()
            .enumerate()
            .map(|(k, &((i0, j0), (w, h), (floor, gap)))| {
                let footprint: Vec<(usize, usize)> =
                    (j0..j0 + h).flat_map(|j| (i0..i0 + w).map(move |i| (i, j))).collect();
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
        // direct rule: cell-square distance and z-interval overlap
        let mut link = vec![vec![false; n]; n];
        for a in 0..n {
            for b in 0..n {
                let mut d = f64::INFINITY;
                for &(ai, aj) in &voids[a].footprint {
                    for &(bi, bj) in &voids[b].footprint {
                        let dx = ((ai as f64 - bi as f64).abs() - 1.0).max(0.0) * cell;
                        let dy = ((aj as f64 - bj as f64).abs() - 1.0).max(0.0) * cell;
                        d = d.min((dx * dx + dy * dy).sqrt());
                    }
                }
                let (fa, ga) = (voids[a].floor_elevations[0], voids[a].gap_heights[0]);
                let (fb, gb) = (voids[b].floor_elevations[0], voids[b].gap_heights[0]);
                let overlap = fa <= fb + gb && fb <= fa + ga;
                link[a][b] = a == b || (overlap && d <= reach);
            }
        }
        for k in 0..n {
            for a in 0..n {
                for b in 0..n {
                    if link[a][k] && link[k][b] {
                        link[a][b] = true;
                    }
                }
            }
        }
        let c = connectivity(&voids, cell, reach).unwrap();
        for (a, row) in link.iter().enumerate() {
            for (b, &linked) in row.iter().enumerate() {
                prop_assert_eq!(c.labels[a] == c.labels[b], linked);
            }
        }
        let distinct: BTreeSet<usize> = c.labels.iter().copied().collect();
        prop_assert_eq!(c.count, distinct.len());
    }
}

#[test]
fn box_error_shrinks_with_cell_size() {
    // deterministic sample of boxes with edges off the coarse lattice
    let boxes = [
        ([3.1, 4.3], [5.7, 2.9], 1.2),
        ([2.35, 7.05], [4.2, 6.6], 0.6),
        ([6.2, 2.2], [3.3, 3.3], 2.1),
        ([4.9, 5.45], [7.45, 2.15], 0.45),
    ];
    let mut mean_err = Vec::new();
    for cell in [0.5, 0.25, 0.125] {
        let n = (24.0 / cell) as usize;
        let g = GridSpec::new([0.0, 0.0], cell, n, n).unwrap();
        let mut total = 0.0;
        for (min, size, h) in boxes {
            let max = [min[0] + size[0], min[1] + size[1]];
            let stack = carved_stack(g, 10.0, |x, y| if in_box(x, y, min, max) { h } else { 0.0 });
            let found = detect_gaps(&stack, &DetectionParams::default()).unwrap();
            let m = characterize(&found[0], &g).unwrap();
            total += (m.approx_volume - size[0] * size[1] * h).abs();
        }
        mean_err.push(total / boxes.len() as f64);
    }
    assert!(mean_err[0] > mean_err[1] && mean_err[1] > mean_err[2], "{mean_err:?}");
}

#[test]
fn split_at_a_higher_threshold() {
    // two deep basins joined by a shallow neck: one candidate at a low
    // threshold, two at a high one
    let g = GridSpec::new([0.0, 0.0], 0.25, 80, 40).unwrap();
    let stack = carved_stack(g, 10.0, |x, y| {
        if !(4.0..6.0).contains(&y) {
            0.0
        } else if (2.0..6.0).contains(&x) || (14.0..18.0).contains(&x) {
            1.0
        } else if (6.0..14.0).contains(&x) {
            0.3
        } else {
            0.0
        }
    });
    assert_eq!(detect_gaps(&stack, &params(0.2, 16)).unwrap().len(), 1);
    assert_eq!(detect_gaps(&stack, &params(0.5, 16)).unwrap().len(), 2);
}

#[test]
fn carve_examples() {
    let g = GridSpec::new([0.0, 0.0], 0.25, 48, 48).unwrap();
    let flat = carved_stack(g, 10.0, |_, _| 0.0);
    assert!(detect_gaps(&flat, &DetectionParams::default()).unwrap().is_empty());
    let shallow = carved_stack(g, 10.0, |_, _| 0.10);
    assert!(detect_gaps(&shallow, &DetectionParams::default()).unwrap().is_empty());

    let patch = carved_stack(g, 10.0, |x, y| if in_box(x, y, [4.0, 4.0], [7.0, 7.0]) { 1.0 } else { 0.0 });
    let found = detect_gaps(&patch, &DetectionParams::default()).unwrap();
    assert_eq!(found.len(), 1);
    let cells = &found[0].footprint;
    let is: BTreeSet<usize> = cells.iter().map(|c| c.0).collect();
    let js: BTreeSet<usize> = cells.iter().map(|c| c.1).collect();
    assert_eq!((is.len(), js.len(), cells.len()), (12, 12, 144));
    assert_eq!(found[0].epoch_pair, (day(0), day(1)));
    assert!((found[0].centroid[0] - 5.5).abs() < 1e-12 && (found[0].centroid[1] - 5.5).abs() < 1e-12);
    assert!((found[0].centroid[2] - 9.5).abs() < 1e-12);

    let single = voidstack::surface::build_stack(vec![flat.layers()[0].clone()], 0.0).unwrap();
    assert_eq!(detect_gaps(&single, &DetectionParams::default()), Err(VoidError::SingleLayerStack));
}

#[test]
fn box_characterization() {
    let g = GridSpec::new([0.0, 0.0], 0.25, 48, 48).unwrap();
    let stack = carved_stack(g, 10.0, |x, y| if in_box(x, y, [3.0, 5.0], [7.0, 7.0]) { 1.0 } else { 0.0 });
    let v = &detect_gaps(&stack, &DetectionParams::default()).unwrap()[0];
    let m = characterize(v, &g).unwrap();
    let ring = (4.5 * 2.5 - 8.0) * 1.0;
    assert!((m.approx_volume - 8.0).abs() <= ring);
    assert_eq!((m.xz_width, m.yz_width, m.max_height, m.min_height), (4.0, 2.0, 1.0, 1.0));
    assert!(!m.surface_access);

    let one = carved_stack(g, 10.0, |x, y| if in_box(x, y, [1.0, 1.0], [1.25, 1.25]) { 0.5 } else { 0.0 });
    let v = &detect_gaps(&one, &params(0.15, 1)).unwrap()[0];
    let m = characterize(v, &g).unwrap();
    assert_eq!((m.approx_volume, m.xz_width, m.yz_width), (0.03125, 0.25, 0.25));
}

#[test]
fn six_isolated_voids() {
    let g = GridSpec::new([0.0, 0.0], 0.25, 120, 80).unwrap();
    let centers: Vec<[f64; 2]> = (0..6).map(|k| [5.0 + 10.0 * (k % 3) as f64, 5.0 + 10.0 * (k / 3) as f64]).collect();
    let stack = carved_stack(g, 10.0, |x, y| {
        if centers.iter().any(|c| (x - c[0]).abs() < 1.5 && (y - c[1]).abs() < 1.0) {
            0.8
        } else {
            0.0
        }
    });
    let found = detect_gaps(&stack, &DetectionParams::default()).unwrap();
    assert_eq!(found.len(), 6);
    let c = connectivity(&found, g.cell_size, 0.5).unwrap();
    assert_eq!(c.count, 6);
    // a reach wider than the 7-8 m spacing joins them all
    assert_eq!(connectivity(&found, g.cell_size, 9.0).unwrap().count, 1);
}
