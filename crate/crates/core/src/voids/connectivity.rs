use serde::{Deserialize, Serialize};

use super::{Result, VoidCandidate, VoidError};

/// Partition of voids into connected groups.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Components {
    /// Component number per void, numbered in order of first appearance.
    pub labels: Vec<usize>,
    pub count: usize,
}

/// Smallest XY distance between two footprints, treating cells as closed
/// squares of side `cell_size`. Abutting footprints are at distance zero.
pub fn footprint_distance(a: &VoidCandidate, b: &VoidCandidate, cell_size: f64) -> f64 {
    let mut best = f64::INFINITY;
    for &(ai, aj) in &a.footprint {
        for &(bi, bj) in &b.footprint {
            let dx = (ai.abs_diff(bi) as f64 - 1.0).max(0.0);
            let dy = (aj.abs_diff(bj) as f64 - 1.0).max(0.0);
            best = best.min(dx.hypot(dy));
            if best == 0.0 {
                return 0.0;
            }
        }
    }
    best * cell_size
}

fn linked(a: &VoidCandidate, b: &VoidCandidate, cell_size: f64, adjacency_distance: f64) -> bool {
    let [alo, ahi] = a.z_interval();
    let [blo, bhi] = b.z_interval();
    if alo > bhi || blo > ahi {
        return false;
    }
    // cheap reject on index bounding boxes before the cell-pair scan
    let (ai0, ai1, aj0, aj1) = super::index_bounds(&a.footprint);
    let (bi0, bi1, bj0, bj1) = super::index_bounds(&b.footprint);
    let gap = |lo0: usize, hi0: usize, lo1: usize, hi1: usize| {
        if hi0 < lo1 {
            (lo1 - hi0) as f64 - 1.0
        } else if hi1 < lo0 {
            (lo0 - hi1) as f64 - 1.0
        } else {
            0.0
        }
    };
    let bbox_dist = gap(ai0, ai1, bi0, bi1).hypot(gap(aj0, aj1, bj0, bj1)) * cell_size;
    if bbox_dist > adjacency_distance {
        return false;
    }
    footprint_distance(a, b, cell_size) <= adjacency_distance
}

/// Groups voids whose footprints come within `adjacency_distance` in XY and
/// whose vertical gap intervals overlap.
pub fn connectivity(voids: &[VoidCandidate], cell_size: f64, adjacency_distance: f64) -> Result<Components> {
    if !(adjacency_distance >= 0.0) {
        return Err(VoidError::InvalidParams(format!(
            "adjacency_distance {adjacency_distance} must be non-negative"
        )));
    }
    let mut parent: Vec<usize> = (0..voids.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for a in 0..voids.len() {
        for b in a + 1..voids.len() {
            if linked(&voids[a], &voids[b], cell_size, adjacency_distance) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut labels = Vec::with_capacity(voids.len());
    let mut roots: Vec<usize> = Vec::new();
    for v in 0..voids.len() {
        let r = find(&mut parent, v);
        let label = roots.iter().position(|x| *x == r).unwrap_or_else(|| {
            roots.push(r);
            roots.len() - 1
        });
        labels.push(label);
    }
    Ok(Components {
        count: roots.len(),
        labels,
    })
}
