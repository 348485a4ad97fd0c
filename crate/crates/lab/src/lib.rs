//! Configuration, execution and report output for the `oscsq-core` studies.
//!
//! Output files written to the run directory:
//!
//! | file | columns |
//! |------|---------|
//! | `<study>.csv` | `epsilon`, the study's metric columns, `verdict` |
//! | `trajectories.csv` | `epsilon, ic, t, V, min, max, h1` |
//! | `summary.json` | per-report verdicts and metadata, overall `passed` |
//!
//! Study CSVs are `resolvent`, `resolvent_probe`, `eigs`, `coercivity`,
//! `spectrum_anchor`, `wronglimit`, `boundary`, `evolve`, `equilibria`,
//! `robin` and `attractor`. The `equilibria` rows carry `branch`, `mean`,
//! `residual`, `morse_index`, `l1..l4`, `dist_l2`, `dist_h1` and `h1_norm`.

// NaN has to fail the `!(x > y)` style checks; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod exec;
pub mod output;
pub mod run;

pub use config::{RunConfig, Study, StudyOptions};
pub use exec::Threaded;
pub use run::{run, RunSummary};

use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("config parse error: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("config invalid: {hypothesis}: {detail}")]
    ConfigInvalid { hypothesis: String, detail: String },
    #[error("study failed: {0}")]
    Study(#[from] oscsq_core::Error),
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
}

impl LabError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        LabError::Io { path: path.into(), source }
    }
}
