//! Experiment harness: presets, comparisons, reference solves and trace I/O.

pub mod compare;
pub mod config;
pub mod presets;
pub mod reference;
pub mod trace;

pub use compare::{compare, ComparisonReport, ComparisonRun, NamedConfig, Summary};
pub use reference::{reference_solve, reference_solve_with, ReferenceSolution};
pub use trace::{RunTrace, TraceStatus, CSV_COLUMNS};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("missing CSV column `{0}`")]
    MissingColumn(String),
    #[error("column `{0}` has unparsable value `{1}`")]
    BadField(String, String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Solver(#[from] grpadmm::Error),
}
