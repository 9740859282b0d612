//! Multi-epoch aerial point-cloud processing for collapse-site void analysis.
//!
//! The crate turns a set of per-flight point clouds into a co-registered,
//! time-ordered stack of digital surface models, cuts that stack into a
//! regular grid of cross sections, and finds the gaps between consecutive
//! surfaces that mark candidate void spaces inside a rubble pile.
//!
//! Modules follow the processing order:
//!
//! - [`cloud`]: point types, PLY/XYZ ingestion, bounding boxes, XY grid index.
//! - [`registration`]: rigid transforms, closed-form tie-point fit, ICP.
//! - [`surface`]: DSM rasterization, hole filling, the epoch stack.
//! - [`slicing`]: cross-section grid, per-slice profiles and rendering.
//! - [`voids`]: gap detection, void metrics, cause heuristic, statistics.
//! - [`synthetic`]: seeded synthetic collapse scenes with ground truth.
//! - [`pipeline`]: config-driven orchestration, reports, HTTP service.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cloud;
pub mod pipeline;
pub mod registration;
pub mod slicing;
pub mod surface;
pub mod synthetic;
pub mod voids;

pub use cloud::{Aabb, CloudFormat, GridIndex, Point3, PointCloud, Rect};
pub use registration::{AlignmentReport, CorrespondenceSet, IcpParams, RigidTransform};
pub use slicing::{SliceAxis, SlicePlane, SliceProfile};
pub use surface::{EpochStack, GridSpec, HeightField, SurfaceRule};
pub use voids::{Cause, CauseSource, SummaryStats, VoidCandidate, VoidMetrics};
