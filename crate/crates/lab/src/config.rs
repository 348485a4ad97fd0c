//! JSON run configuration.

use std::path::{Path, PathBuf};

use oscsq_core::experiments::AttractorSampling;
use oscsq_core::semiflow::ProblemSpec;
use oscsq_core::Error as CoreError;
use serde::{Deserialize, Serialize};

use crate::LabError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Study {
    Resolvent,
    Eigs,
    Wronglimit,
    Boundary,
    Evolve,
    Equilibria,
    Attractor,
    All,
}

impl Study {
    pub const INDIVIDUAL: [Study; 7] = [
        Study::Resolvent,
        Study::Eigs,
        Study::Wronglimit,
        Study::Boundary,
        Study::Evolve,
        Study::Equilibria,
        Study::Attractor,
    ];

    pub fn expand(self) -> Vec<Study> {
        match self {
            Study::All => Study::INDIVIDUAL.to_vec(),
            s => vec![s],
        }
    }
}

/// Study knobs that are not part of the problem itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyOptions {
    /// Resolvent parameter, left of the spectrum.
    pub lambda: f64,
    /// Eigenvalues tracked per `eps`.
    pub eigen_count: usize,
    pub wrong_limit_epsilons: Vec<f64>,
    /// Zeroth-order coefficient of the canonical-metric study.
    pub wrong_limit_a: f64,
    pub boundary_epsilons: Vec<f64>,
    pub t_transient: f64,
    pub t_sample: f64,
    /// Attractor snapshot spacing in steps.
    pub stride: usize,
}

impl Default for StudyOptions {
    fn default() -> Self {
        let sampling = AttractorSampling::default();
        StudyOptions {
            lambda: -1.0,
            eigen_count: 4,
            wrong_limit_epsilons: vec![0.05, 0.02, 0.01, 0.005],
            wrong_limit_a: 0.0,
            boundary_epsilons: vec![0.1, 0.05, 0.02, 0.01, 0.005],
            t_transient: sampling.t_transient,
            t_sample: sampling.t_sample,
            stride: sampling.stride,
        }
    }
}

impl StudyOptions {
    pub fn sampling(&self) -> AttractorSampling {
        AttractorSampling { t_transient: self.t_transient, t_sample: self.t_sample, stride: self.stride }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub spec: ProblemSpec,
    pub study: Study,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Seeds the random resolvent probe.
    #[serde(default)]
    pub seed: u64,
    /// Worker threads for independent study legs; `None` uses all cores.
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub options: StudyOptions,
}

fn invalid(hypothesis: &str, detail: impl ToString) -> LabError {
    LabError::ConfigInvalid { hypothesis: hypothesis.to_string(), detail: detail.to_string() }
}

fn check_grid(name: &str, grid: &[f64]) -> Result<(), LabError> {
    if grid.is_empty() || grid.iter().any(|e| !(*e > 0.0 && e.is_finite())) {
        return Err(invalid(name, format!("{grid:?} must be nonempty and positive")));
    }
    if grid.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(invalid(name, format!("{grid:?} must be strictly decreasing")));
    }
    Ok(())
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, LabError> {
        let config: RunConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Structural hypotheses of `spec` plus sanity of the study options.
    pub fn validate(&self) -> Result<(), LabError> {
        match self.spec.validate() {
            Ok(()) => {}
            Err(CoreError::HypothesisViolation { hypothesis, detail }) => return Err(invalid(hypothesis, detail)),
            Err(e) => return Err(invalid("problem spec", e)),
        }
        if self.spec.epsilons.is_empty() {
            return Err(invalid("epsilon grid: nonempty", "no epsilons"));
        }
        let o = &self.options;
        if !(o.lambda < 0.0) {
            return Err(invalid("resolvent: lambda < 0", o.lambda));
        }
        if !(1..=6).contains(&o.eigen_count) {
            return Err(invalid("eigs: 1 <= eigen_count <= 6", o.eigen_count));
        }
        check_grid("wrong-limit epsilon grid", &o.wrong_limit_epsilons)?;
        check_grid("boundary epsilon grid", &o.boundary_epsilons)?;
        if !(o.wrong_limit_a >= 0.0) {
            return Err(invalid("wrong limit: a >= 0", o.wrong_limit_a));
        }
        if !(o.t_transient >= 0.0 && o.t_sample >= 0.0) || o.stride == 0 {
            return Err(invalid("attractor sampling: nonnegative times, stride >= 1", format!("{o:?}")));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads >= 1", 0));
        }
        Ok(())
    }
}
