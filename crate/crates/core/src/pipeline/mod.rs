//! Config-driven end-to-end runs, the report format, and the HTTP service.

mod config;
mod report;
mod run;
mod scene;
pub mod serve;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{
    ClassificationConfig, DetectionConfig, GridConfig, GroundConfig, InputCloud, PipelineConfig, RegistrationConfig,
    SlabRegion, SlicingConfig,
};
pub use report::{
    export_table, EpochEntry, GapMap, LabelEvent, LabelRequest, Overlay, OverlayVoid, ReportBundle, RunMetadata,
    SliceEntry, SliceKind, VoidGeometry, VoidRecord, REPORT_SCHEMA_VERSION, TABLE_HEADER,
};
pub use run::{align_clouds, analyze, load_inputs, run, Analysis, EpochInput};
pub use scene::write_scene;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{0}")]
    Validation(String),
    #[error("void {0} is not in this report")]
    UnknownVoid(u32),
    #[error("reading {path}: {source}")]
    Cloud {
        path: PathBuf,
        #[source]
        source: crate::cloud::CloudError,
    },
    #[error("registering {label}: {source}")]
    Registration {
        label: String,
        #[source]
        source: crate::registration::RegistrationError,
    },
    #[error("surface stack: {0}")]
    Surface(#[from] crate::surface::SurfaceError),
    #[error("slicing: {0}")]
    Slice(#[from] crate::slicing::SliceError),
    #[error("void analysis: {0}")]
    Void(#[from] crate::voids::VoidError),
    #[error("synthetic scene: {0}")]
    Synthetic(#[from] crate::synthetic::SyntheticError),
    #[error("{0}")]
    Runtime(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("report JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl PipelineError {
    /// Process exit status: 1 for bad input or configuration, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Validation(_) | PipelineError::UnknownVoid(_) => 1,
            PipelineError::Synthetic(e) if !matches!(e, crate::synthetic::SyntheticError::Io(_)) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> PipelineError {
        let path = path.into();
        move |source| PipelineError::Io { path, source }
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;
