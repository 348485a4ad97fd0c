//! Executes the configured studies and writes their outputs.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use oscsq_core::experiments::{
    attractor_semidistance_study, boundary_average_study, coercivity_study, eigenvalue_convergence_study,
    equilibria_study, initial_condition_grid, lyapunov_study, resolvent_convergence_study, robin_study,
    spectrum_anchor_study, wrong_limit_study, Executor, StudyReport,
};
use oscsq_core::semiflow::{step_count, Discretization};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::config::{RunConfig, Study};
use crate::output::{write_coordinate, write_json, write_report_csv, write_trajectories_csv, ReportSummary};
use crate::LabError;

/// Cosine modes `cos(kπx1) cos(lπx2)`, `k, l < 3`, of the random resolvent probe.
const PROBE_MODES: usize = 3;

/// Seeded coefficients of the random resolvent probe.
pub fn probe_coefficients(seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..PROBE_MODES * PROBE_MODES).map(|_| rng.gen_range(-1.0..=1.0)).collect()
}

fn probe(coeffs: &[f64], x: [f64; 2]) -> f64 {
    let mut s = 0.0;
    for k in 0..PROBE_MODES {
        for l in 0..PROBE_MODES {
            s += coeffs[k * PROBE_MODES + l] * (k as f64 * PI * x[0]).cos() * (l as f64 * PI * x[1]).cos();
        }
    }
    s
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub studies: Vec<Study>,
    pub seed: u64,
    pub passed: bool,
    pub reports: Vec<ReportSummary>,
}

/// Runs one study, returning its reports; extra tables go straight to `dir`.
pub fn run_study<E: Executor>(config: &RunConfig, study: Study, dir: &Path, exec: &E) -> Result<Vec<StudyReport>, LabError> {
    let spec = &config.spec;
    let opts = &config.options;
    let eps = &spec.epsilons;
    let mesh = spec.mesh()?;
    let reports = match study {
        Study::Resolvent => {
            let constant = resolvent_convergence_study(spec, eps, opts.lambda, &|_| 1.0, exec)?;
            let coeffs = probe_coefficients(config.seed);
            let mut random = resolvent_convergence_study(spec, eps, opts.lambda, &|x| probe(&coeffs, x), exec)?;
            random.name = "resolvent_probe".into();
            random.metadata.push(("seed".into(), config.seed.to_string()));
            vec![constant, random]
        }
        Study::Eigs => vec![
            eigenvalue_convergence_study(spec, eps, opts.eigen_count, exec)?,
            coercivity_study(spec, eps, exec)?,
            spectrum_anchor_study(spec.a, &[spec.nx, 2 * spec.nx], spec.tolerances.eigen, exec)?,
        ],
        Study::Wronglimit => {
            vec![wrong_limit_study(&mesh, &opts.wrong_limit_epsilons, opts.wrong_limit_a, spec.quadrature_cap, exec)?]
        }
        Study::Boundary => vec![boundary_average_study(&opts.boundary_epsilons)],
        Study::Evolve => {
            let mut all = vec![0.0];
            all.extend_from_slice(eps);
            let steps = step_count(spec.t_final, spec.dt);
            let (report, legs) = lyapunov_study(spec, &all, &initial_condition_grid(&mesh, spec.a), steps, exec)?;
            write_trajectories_csv(&dir.join("trajectories.csv"), &legs)?;
            vec![report]
        }
        Study::Equilibria => {
            let (report, _) = equilibria_study(spec, eps, &initial_condition_grid(&mesh, spec.a))?;
            vec![report, robin_study(spec, eps, exec)?]
        }
        Study::Attractor => {
            let ics = initial_condition_grid(&mesh, spec.a);
            vec![attractor_semidistance_study(spec, eps, &ics, opts.sampling(), exec)?.0]
        }
        Study::All => {
            let mut out = Vec::new();
            for s in Study::INDIVIDUAL {
                out.extend(run_study(config, s, dir, exec)?);
            }
            out
        }
    };
    Ok(reports)
}

/// Runs the configured study with `exec`, writing CSVs and `summary.json`
/// into `config.output_dir`.
pub fn run_with<E: Executor>(config: &RunConfig, exec: &E) -> Result<RunSummary, LabError> {
    config.validate()?;
    let dir = &config.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let mut reports = Vec::new();
    for study in config.study.expand() {
        for r in run_study(config, study, dir, exec)? {
            write_report_csv(dir, &r)?;
            reports.push(r);
        }
    }
    let summary = RunSummary {
        studies: config.study.expand(),
        seed: config.seed,
        passed: reports.iter().all(|r| r.passed()),
        reports: reports.iter().map(ReportSummary::from).collect(),
    };
    write_json(&dir.join("summary.json"), &summary)?;
    Ok(summary)
}

/// [`run_with`] on the executor selected by `config.threads`.
pub fn run(config: &RunConfig) -> Result<RunSummary, LabError> {
    let exec = match config.threads {
        Some(n) => crate::Threaded::new(n),
        None => crate::Threaded::available(),
    };
    run_with(config, &exec)
}

/// Writes the stiffness, mass and boundary mass at `eps` in coordinate format.
pub fn export_matrices(config: &RunConfig, eps: f64, dir: &Path) -> Result<Vec<PathBuf>, LabError> {
    let disc = Discretization::for_spec(&config.spec, eps)?;
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    let mut written = Vec::new();
    for (name, m) in [("stiffness", &disc.stiffness), ("mass", &disc.mass), ("boundary_mass", &disc.boundary_mass)] {
        let path = dir.join(format!("{name}.coo"));
        write_coordinate(&path, m)?;
        written.push(path);
    }
    Ok(written)
}
