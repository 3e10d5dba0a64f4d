//! Scenario runner for the `pqlap-core` solvers.
//!
//! A scenario file selects one of five pipelines (coupled cooperative or
//! competitive system, scalar problem, strip-perturbation stability check,
//! grid refinement study). [`run`] executes it and returns an [`Outcome`]
//! holding the JSON report and the fields to dump; [`write_outputs`] puts
//! them on disk.

pub mod config;
mod output;
mod pipeline;
pub mod refine;

use std::path::PathBuf;

pub use config::{Auto, RunConfig, RunMode};
pub use output::{write_field_csv, write_outputs, Metadata};
pub use pipeline::{run, run_refine, Outcome, Status};
pub use refine::{refine_study, RefineReport, RefineRow};

/// Version of the `report.json` layout.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("invalid config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] pqlap_core::Error),

    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),

    #[error("cannot write JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),
}

impl RunError {
    /// 2 for unusable input, 1 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        use pqlap_core::Error as E;
        match self {
            RunError::Read { .. } | RunError::Config(_) => 2,
            RunError::Io(_) | RunError::Json(_) | RunError::Csv(_) => 1,
            RunError::Core(e) => match e {
                E::NotConverged { .. }
                | E::InnerIteration { .. }
                | E::LambdaBudget { .. }
                | E::FixedPoint(_)
                | E::Containment { .. }
                | E::Ordering { .. }
                | E::NonFinite { .. } => 1,
                _ => 2,
            },
        }
    }
}
