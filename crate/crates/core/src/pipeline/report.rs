use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use super::{PipelineError, Result};
use crate::cloud::Rect;
use crate::registration::AlignmentReport;
use crate::slicing::SliceAxis;
use crate::surface::GridSpec;
use crate::voids::{summarize, Cause, CauseSource, SummaryStats, VoidMetrics};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub schema_version: u32,
    pub tool_version: String,
    pub config_hash: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochEntry {
    /// 1-based position in time order.
    pub index: usize,
    pub epoch: DateTime<Utc>,
    pub source_label: String,
    pub path: String,
    pub point_count: usize,
    /// Pose of this cloud in the reference frame.
    pub alignment: AlignmentReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapMap {
    /// `[i, j]` raster cells.
    pub cells: Vec<[usize; 2]>,
    pub heights: Vec<f64>,
}

/// Where a detected void sits; absent for records imported from a table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoidGeometry {
    pub epoch_pair: [DateTime<Utc>; 2],
    pub centroid: [f64; 3],
    /// Footprint bounding box in site XY.
    pub bbox: Rect,
    pub footprint_cells: usize,
    pub footprint_area: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gap_map: Option<GapMap>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VoidRecord {
    pub id: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(flatten)]
    pub metrics: VoidMetrics,
    /// Cause assigned by the volume heuristic, kept after human overrides.
    pub heuristic_cause: Cause,
    pub removed_slab_thickness: Option<f64>,
    /// Gap volume minus the removed slab volume over the footprint.
    pub net_volume: Option<f64>,
    /// Connectivity component number.
    pub component: usize,
    /// Ids of slices that cut through this void.
    pub slices: Vec<String>,
    pub geometry: Option<VoidGeometry>,
}

impl VoidRecord {
    /// A bare record carrying only table metrics.
    pub fn from_metrics(id: u32, name: Option<String>, metrics: VoidMetrics) -> Self {
        Self {
            id,
            name,
            metrics,
            heuristic_cause: metrics.cause,
            removed_slab_thickness: None,
            net_volume: None,
            component: id as usize,
            slices: Vec::new(),
            geometry: None,
        }
    }

    /// Identifier used in the void table.
    pub fn table_id(&self) -> String {
        self.name.clone().unwrap_or_else(|| self.id.to_string())
    }

    fn set_thickness(&mut self, t: Option<f64>) {
        self.removed_slab_thickness = t;
        self.net_volume = match (t, &self.geometry) {
            (Some(t), Some(g)) => Some(self.metrics.approx_volume - t * g.footprint_area),
            _ => None,
        };
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum SliceKind {
    /// Part of the regular slice grid.
    Grid,
    /// Cut through a void centroid.
    Void,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SliceEntry {
    pub id: String,
    pub kind: SliceKind,
    pub axis: SliceAxis,
    /// "XZ" or "YZ".
    pub section: String,
    pub offset: f64,
    pub thickness: f64,
    pub extent: [f64; 2],
    pub void_ids: Vec<u32>,
    /// Paths relative to the report directory.
    pub image: String,
    pub svg: String,
    pub profile: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRequest {
    pub cause: Cause,
    #[serde(default)]
    pub removed_slab_thickness: Option<f64>,
    #[serde(default)]
    pub note: Option<String>,
    #[serde(default)]
    pub analyst: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelEvent {
    /// 1-based position in the log.
    pub seq: u64,
    pub timestamp: DateTime<Utc>,
    pub void_id: u32,
    pub previous_cause: Cause,
    pub previous_source: CauseSource,
    pub cause: Cause,
    pub removed_slab_thickness: Option<f64>,
    pub note: Option<String>,
    pub analyst: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OverlayVoid {
    pub id: u32,
    pub name: Option<String>,
    pub bbox: Rect,
    pub centroid: [f64; 3],
    pub cause: Cause,
    pub cause_source: CauseSource,
    pub surface_access: bool,
}

/// Plan-view void boxes over the analysis extent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Overlay {
    pub extent: Option<Rect>,
    pub voids: Vec<OverlayVoid>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportBundle {
    pub metadata: RunMetadata,
    pub grid: Option<GridSpec>,
    pub ground_elevation: Option<f64>,
    pub epochs: Vec<EpochEntry>,
    pub summary: SummaryStats,
    pub voids: Vec<VoidRecord>,
    pub slices: Vec<SliceEntry>,
    /// Append-only log of human cause labels.
    pub labels: Vec<LabelEvent>,
}

impl ReportBundle {
    /// Report over externally characterized voids, with no run behind it.
    pub fn from_records(voids: Vec<VoidRecord>, max_pile_depth: f64) -> Self {
        let metrics: Vec<VoidMetrics> = voids.iter().map(|v| v.metrics).collect();
        let components = {
            let mut c: Vec<usize> = voids.iter().map(|v| v.component).collect();
            c.sort_unstable();
            c.dedup();
            c.len()
        };
        let now = DateTime::<Utc>::UNIX_EPOCH;
        Self {
            metadata: RunMetadata {
                schema_version: REPORT_SCHEMA_VERSION,
                tool_version: env!("CARGO_PKG_VERSION").into(),
                config_hash: String::new(),
                started_at: now,
                finished_at: now,
            },
            grid: None,
            ground_elevation: None,
            epochs: Vec::new(),
            summary: summarize(&metrics, max_pile_depth, components),
            voids,
            slices: Vec::new(),
            labels: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let report: ReportBundle = serde_json::from_str(text)?;
        if report.metadata.schema_version != REPORT_SCHEMA_VERSION {
            return Err(PipelineError::Validation(format!(
                "report schema_version {} is not {REPORT_SCHEMA_VERSION}",
                report.metadata.schema_version
            )));
        }
        Ok(report)
    }

    pub fn void(&self, id: u32) -> Option<&VoidRecord> {
        self.voids.iter().find(|v| v.id == id)
    }

    pub fn slice(&self, id: &str) -> Option<&SliceEntry> {
        self.slices.iter().find(|s| s.id == id)
    }

    /// Records a human cause label and appends it to the audit log.
    pub fn apply_label(&mut self, void_id: u32, request: LabelRequest, timestamp: DateTime<Utc>) -> Result<&VoidRecord> {
        if let Some(t) = request.removed_slab_thickness {
            if !(t >= 0.0 && t.is_finite()) {
                return Err(PipelineError::Validation(format!("removed_slab_thickness {t} must be non-negative")));
            }
        }
        let record = self.void(void_id).ok_or(PipelineError::UnknownVoid(void_id))?;
        let event = LabelEvent {
            seq: self.labels.len() as u64 + 1,
            timestamp,
            void_id,
            previous_cause: record.metrics.cause,
            previous_source: record.metrics.cause_source,
            cause: request.cause,
            removed_slab_thickness: request.removed_slab_thickness,
            note: request.note,
            analyst: request.analyst,
        };
        self.apply_event(event)
    }

    fn apply_event(&mut self, event: LabelEvent) -> Result<&VoidRecord> {
        let k = self
            .voids
            .iter()
            .position(|v| v.id == event.void_id)
            .ok_or(PipelineError::UnknownVoid(event.void_id))?;
        let v = &mut self.voids[k];
        v.metrics.cause = event.cause;
        v.metrics.cause_source = CauseSource::Human;
        if event.removed_slab_thickness.is_some() {
            v.set_thickness(event.removed_slab_thickness);
        }
        self.labels.push(event);
        Ok(&self.voids[k])
    }

    /// Re-applies `events` in order on top of `original`.
    pub fn replay(original: &ReportBundle, events: &[LabelEvent]) -> Result<ReportBundle> {
        let mut report = original.clone();
        for e in events {
            report.apply_event(e.clone())?;
        }
        Ok(report)
    }

    pub fn overlay(&self) -> Overlay {
        Overlay {
            extent: self.grid.map(|g| {
                let m = g.max_corner();
                Rect {
                    min: g.origin,
                    max: m,
                }
            }),
            voids: self
                .voids
                .iter()
                .filter_map(|v| {
                    v.geometry.as_ref().map(|g| OverlayVoid {
                        id: v.id,
                        name: v.name.clone(),
                        bbox: g.bbox,
                        centroid: g.centroid,
                        cause: v.metrics.cause,
                        cause_source: v.metrics.cause_source,
                        surface_access: v.metrics.surface_access,
                    })
                })
                .collect(),
        }
    }

    /// Copy with run timestamps zeroed, for comparing reruns.
    pub fn without_timestamps(&self) -> ReportBundle {
        let mut r = self.clone();
        r.metadata.started_at = DateTime::<Utc>::UNIX_EPOCH;
        r.metadata.finished_at = DateTime::<Utc>::UNIX_EPOCH;
        r
    }
}

pub const TABLE_HEADER: &str = "void_id,approx_volume_m3,max_height_m,min_height_m,xz_width_m,yz_width_m,cause";

/// The void table as CSV, one row per void, two decimals.
pub fn export_table(report: &ReportBundle) -> String {
    let mut out = String::from(TABLE_HEADER);
    out.push('\n');
    for v in &report.voids {
        let m = &v.metrics;
        out.push_str(&format!(
            "{},{:.2},{:.2},{:.2},{:.2},{:.2},{}\n",
            csv_field(&v.table_id()),
            m.approx_volume,
            m.max_height,
            m.min_height,
            m.xz_width,
            m.yz_width,
            m.cause.table_label()
        ));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
