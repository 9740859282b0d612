use serde::{Deserialize, Serialize};

use super::VoidMetrics;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub count: usize,
    /// `None` when there are no voids.
    pub mean_max_height: Option<f64>,
    pub mean_min_height: Option<f64>,
    /// Mean over both cross-sectional widths of every void.
    pub mean_cross_width: Option<f64>,
    pub max_pile_depth: f64,
    pub connectivity_components: usize,
    pub any_surface_access: bool,
}

pub fn summarize(metrics: &[VoidMetrics], max_pile_depth: f64, connectivity_components: usize) -> SummaryStats {
    let n = metrics.len();
    let mean = |total: f64, count: usize| (count > 0).then(|| total / count as f64);
    SummaryStats {
        count: n,
        mean_max_height: mean(metrics.iter().map(|m| m.max_height).sum(), n),
        mean_min_height: mean(metrics.iter().map(|m| m.min_height).sum(), n),
        mean_cross_width: mean(metrics.iter().map(|m| m.xz_width + m.yz_width).sum(), 2 * n),
        max_pile_depth,
        connectivity_components,
        any_surface_access: metrics.iter().any(|m| m.surface_access),
    }
}
