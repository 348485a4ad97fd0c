//! Convergence studies in `eps`: resolvents, spectra, the canonical-metric
//! limit, boundary averaging, coercivity, Lyapunov descent, equilibria,
//! the Robin eigenvalue and attractor semidistances.
//!
//! Each study returns a [`StudyReport`]: one row per `eps` (the `eps = 0`
//! reference first when there is one) and a list of named verdicts.
//! Monotonicity verdicts treat values below a noise floor as converged;
//! the floor is recorded in the verdict detail.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::{cos, fabs, log, sqrt};

use crate::assembly::{assemble_limit_anomalous, assemble_stiffness_adapted, assemble_stiffness_canonical, graded_profile_extra_terms};
use crate::equilibria::{continue_in_epsilon, find_equilibria, robin_first_eigenvalue, EquilibriumRecord};
use crate::error::{Error, Result};
use crate::geometry::{boundary_average_limit, DiffeoFamily, Point, Profile};
use crate::linalg::{cg_solve, largest_eigenvalue, smallest_eigenpairs};
use crate::mesh::{oscillation_resolving_rule, QuadratureRule, StructuredMesh};
use crate::quadrature::adaptive_gauss;
use crate::semiflow::{evolve, step_count, Discretization, NodalField, ProblemSpec, ReferenceNorms, Trajectory};
use crate::sparse::{dot, SparseOperator};

/// Runs independent study legs. Implementations must return results in
/// input order so reports do not depend on scheduling.
pub trait Executor {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync;
}

/// Runs legs one after another on the calling thread.
#[derive(Clone, Copy, Debug, Default)]
pub struct Sequential;

impl Executor for Sequential {
    fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync,
    {
        items.iter().map(f).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    pub epsilon: f64,
    pub values: Vec<f64>,
    /// Short status of this row with respect to the study's main property.
    pub verdict: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyReport {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
    pub verdicts: Vec<Verdict>,
    pub metadata: Vec<(String, String)>,
}

impl StudyReport {
    fn new(name: &str, columns: &[&str]) -> Self {
        StudyReport {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            verdicts: Vec::new(),
            metadata: Vec::new(),
        }
    }

    fn push(&mut self, epsilon: f64, values: Vec<f64>, verdict: &str) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(Row { epsilon, values, verdict: verdict.to_string() });
    }

    fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    fn verdict(&mut self, name: impl ToString, passed: bool, detail: impl ToString) {
        self.verdicts.push(Verdict { name: name.to_string(), passed, detail: detail.to_string() });
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    /// Column `name` over the rows with `eps > 0`, in row order.
    pub fn series(&self, name: &str) -> Option<Vec<f64>> {
        let c = self.columns.iter().position(|x| x == name)?;
        Some(self.rows.iter().filter(|r| r.epsilon > 0.0).map(|r| r.values[c]).collect())
    }

    /// Value of column `name` in the row for `eps`.
    pub fn value(&self, eps: f64, name: &str) -> Option<f64> {
        let c = self.columns.iter().position(|x| x == name)?;
        self.rows.iter().find(|r| r.epsilon == eps).map(|r| r.values[c])
    }

    pub fn all_finite(&self) -> bool {
        self.rows.iter().all(|r| r.values.iter().all(|v| v.is_finite()))
    }
}

/// `true` if every entry is strictly below its predecessor.
pub fn strictly_decreasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] < w[0])
}

/// Strict decrease, except that consecutive values both at or below `floor`
/// count as converged.
pub fn decreasing_to_floor(xs: &[f64], floor: f64) -> bool {
    xs.windows(2).all(|w| w[1] < w[0] || (w[0] <= floor && w[1] <= floor))
}

/// Least-squares slope of `log y` against `log x`; `None` if any value is not positive.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || xs.iter().chain(ys).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|v| log(*v)).collect();
    let ly: Vec<f64> = ys.iter().map(|v| log(*v)).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

fn fmt_seq(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|v| format!("{v:.6e}")).collect();
    format!("[{}]", parts.join(", "))
}

/// Status of row `i` of a sequence that should decrease: the first row is
/// `"start"`, later rows `"ok"` or `"rise"`.
fn row_status(xs: &[f64], i: usize, floor: f64) -> &'static str {
    if i == 0 {
        "start"
    } else if xs[i] < xs[i - 1] || (xs[i] <= floor && xs[i - 1] <= floor) {
        "ok"
    } else {
        "rise"
    }
}

/// Noise floor for differences of quantities of size `scale`.
fn noise_floor(scale: f64) -> f64 {
    1e-9 * (1.0 + fabs(scale))
}

fn rhs_vector(mesh: &StructuredMesh, f: &dyn Fn(Point) -> f64) -> NodalField {
    mesh.interpolate(f)
}

/// The fixed initial-condition grid: constants `{-1, 0.01, 1} sqrt(max(1 - a, 0.01))`
/// plus `0.3 cos(kπx1) cos(lπx2)` for `(k, l)` in `(1,0), (0,1), (1,1), (2,0)`.
pub fn initial_condition_grid(mesh: &StructuredMesh, a: f64) -> Vec<NodalField> {
    let base = sqrt((1.0 - a).max(0.01));
    let mut out = Vec::with_capacity(12);
    for c in [-1.0, 0.01, 1.0] {
        for (k, l) in [(1.0, 0.0), (0.0, 1.0), (1.0, 1.0), (2.0, 0.0)] {
            out.push(mesh.interpolate(|x| c * base + 0.3 * cos(k * PI * x[0]) * cos(l * PI * x[1])));
        }
    }
    out
}

/// Same grid without the cosine modes: the three constants.
pub fn constant_guesses(mesh: &StructuredMesh, a: f64) -> Vec<NodalField> {
    let base = sqrt((1.0 - a).max(0.01));
    [-1.0, 0.01, 1.0].iter().map(|c| alloc::vec![c * base; mesh.num_nodes()]).collect()
}

fn discretizations<E: Executor>(spec: &ProblemSpec, eps: &[f64], exec: &E) -> Result<Vec<Discretization>> {
    exec.map(eps, |&e| Discretization::for_spec(spec, e)).into_iter().collect()
}

fn with_reference(eps_grid: &[f64]) -> Vec<f64> {
    let mut all = alloc::vec![0.0];
    all.extend_from_slice(eps_grid);
    all
}

/// Solves `(A_eps - λ M_eps) u = M_eps f` for each `eps` and compares with
/// `eps = 0` in the plain `L²` and `H¹` norms.
pub fn resolvent_convergence_study<E: Executor>(
    spec: &ProblemSpec,
    eps_grid: &[f64],
    lambda: f64,
    rhs: &(dyn Fn(Point) -> f64 + Sync),
    exec: &E,
) -> Result<StudyReport> {
    let mesh = spec.mesh()?;
    let norms = ReferenceNorms::new(&mesh)?;
    let f = rhs_vector(&mesh, rhs);
    let tol = spec.tolerances;
    let all = with_reference(eps_grid);
    let solutions: Vec<Result<NodalField>> = exec.map(&all, |&eps| {
        let disc = Discretization::for_spec(spec, eps)?;
        let op = disc.stiffness.combine(1.0, &disc.mass, -lambda)?;
        let b = disc.mass.mul_vec(&f);
        Ok(cg_solve(&op, &b, None, tol.cg, tol.cg_maxit)?.0)
    });
    let solutions: Vec<NodalField> = solutions.into_iter().collect::<Result<_>>()?;
    let u0 = &solutions[0];
    let mut report = StudyReport::new("resolvent", &["err_l2", "err_h1", "mean"]);
    let n = u0.len() as f64;
    report.push(0.0, alloc::vec![0.0, 0.0, u0.iter().sum::<f64>() / n], "reference");
    let l2: Vec<f64> = solutions[1..].iter().map(|u| norms.l2_distance(u, u0)).collect();
    let h1: Vec<f64> = solutions[1..].iter().map(|u| norms.h1_distance(u, u0)).collect();
    let floor = noise_floor(norms.h1(u0)) * 10.0;
    for (i, &eps) in eps_grid.iter().enumerate() {
        let mean = solutions[i + 1].iter().sum::<f64>() / n;
        report.push(eps, alloc::vec![l2[i], h1[i], mean], row_status(&h1, i, floor));
    }
    report.meta("lambda", lambda);
    report.meta("mesh", format!("{}x{}", mesh.nx(), mesh.ny()));
    report.verdict("l2 error decreasing", decreasing_to_floor(&l2, floor), format!("{} (floor {floor:.1e})", fmt_seq(&l2)));
    report.verdict("h1 error decreasing", decreasing_to_floor(&h1, floor), format!("{} (floor {floor:.1e})", fmt_seq(&h1)));
    report.verdict("finite", report.all_finite(), "");
    Ok(report)
}

/// First `k` eigenvalues of `(A_eps, M_eps)` per `eps`, compared with `eps = 0`.
pub fn eigenvalue_convergence_study<E: Executor>(
    spec: &ProblemSpec,
    eps_grid: &[f64],
    k: usize,
    exec: &E,
) -> Result<StudyReport> {
    let all = with_reference(eps_grid);
    let spectra: Vec<Result<Vec<f64>>> = exec.map(&all, |&eps| {
        let disc = Discretization::for_spec(spec, eps)?;
        let pairs = smallest_eigenpairs(&disc.stiffness, &disc.mass, k, spec.tolerances.eigen)?;
        Ok(pairs.into_iter().map(|p| p.value).collect())
    });
    let spectra: Vec<Vec<f64>> = spectra.into_iter().collect::<Result<_>>()?;
    let names: Vec<String> = (1..=k).map(|j| format!("lambda{j}")).chain((1..=k).map(|j| format!("diff{j}"))).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let mut report = StudyReport::new("eigs", &refs);
    let base = &spectra[0];
    let diffs: Vec<Vec<f64>> = (0..k).map(|j| spectra[1..].iter().map(|s| fabs(s[j] - base[j])).collect()).collect();
    let floors: Vec<f64> = base.iter().map(|v| noise_floor(*v) * 10.0).collect();
    for (i, s) in spectra.iter().enumerate() {
        let mut values = s.clone();
        if i == 0 {
            values.extend(core::iter::repeat_n(0.0, k));
            report.push(0.0, values, "reference");
        } else {
            values.extend((0..k).map(|j| diffs[j][i - 1]));
            let ok = (0..k).all(|j| row_status(&diffs[j], i - 1, floors[j]) != "rise");
            report.push(eps_grid[i - 1], values, if i == 1 { "start" } else if ok { "ok" } else { "rise" });
        }
    }
    report.meta("mesh", format!("{}x{}", spec.nx, spec.ny));
    for j in 0..k {
        report.verdict(
            format!("|lambda{}(eps) - lambda{}(0)| decreasing", j + 1, j + 1),
            decreasing_to_floor(&diffs[j], floors[j]),
            format!("{} (floor {:.1e})", fmt_seq(&diffs[j]), floors[j]),
        );
    }
    Ok(report)
}

/// Reference spectrum of the limit problem on a sequence of meshes, for the
/// separation-of-variables anchors and their refinement ratios.
pub fn spectrum_anchor_study<E: Executor>(a: f64, sizes: &[usize], tol: f64, exec: &E) -> Result<StudyReport> {
    let exact = [a, a + PI * PI, a + PI * PI, a + 2.0 * PI * PI];
    let spectra: Vec<Result<Vec<f64>>> = exec.map(sizes, |&n| {
        let mesh = StructuredMesh::new(n, n)?;
        let fam = DiffeoFamily::limit(Profile::Graded);
        let disc = Discretization::with_rule(fam, &mesh, QuadratureRule::new(1, 3), a)?;
        let pairs = smallest_eigenpairs(&disc.stiffness, &disc.mass, 4, tol)?;
        Ok(pairs.into_iter().map(|p| p.value).collect())
    });
    let spectra: Vec<Vec<f64>> = spectra.into_iter().collect::<Result<_>>()?;
    let mut report = StudyReport::new(
        "spectrum_anchor",
        &["n", "lambda1", "lambda2", "lambda3", "lambda4", "relerr1", "relerr2", "relerr3", "relerr4"],
    );
    for (n, s) in sizes.iter().zip(&spectra) {
        let mut values = alloc::vec![*n as f64];
        values.extend_from_slice(s);
        values.extend((0..4).map(|j| fabs(s[j] - exact[j]) / exact[j]));
        let ok = (0..4).all(|j| fabs(s[j] - exact[j]) / exact[j] < 0.01);
        report.push(0.0, values, if ok { "within 1%" } else { "off" });
    }
    let first = &spectra[0];
    let rel: Vec<f64> = (0..4).map(|j| fabs(first[j] - exact[j]) / exact[j]).collect();
    report.verdict("first mesh within 1%", rel.iter().all(|r| *r < 0.01), fmt_seq(&rel));
    Ok(report)
}

/// A labelled probe pair `(u, ψ)`.
pub type Probe = (&'static str, fn(Point) -> f64, fn(Point) -> f64);

/// Probe pairs `(u, ψ)` of the canonical-metric study.
pub fn wrong_limit_probes() -> [Probe; 3] {
    [
        ("x2_x2", |x| x[1], |x| x[1]),
        ("x1_x1", |x| x[0], |x| x[0]),
        ("x2sq_x2", |x| x[1] * x[1], |x| x[1]),
    ]
}

/// Canonical-metric form against the plain `(-Δ + a)` form and against the
/// anomalous limit form, on fixed probe pairs, for the linear profile.
/// The two first-order extra terms of the graded profile are reported too.
pub fn wrong_limit_study<E: Executor>(
    mesh: &StructuredMesh,
    eps_grid: &[f64],
    a: f64,
    cap: usize,
    exec: &E,
) -> Result<StudyReport> {
    let exact_rule = QuadratureRule::new(1, 3);
    let plain = assemble_stiffness_adapted(&DiffeoFamily::limit(Profile::Linear), mesh, &exact_rule, a)?;
    let limit = assemble_limit_anomalous(mesh, &exact_rule, a)?;
    let probes = wrong_limit_probes();
    let fields: Vec<(NodalField, NodalField)> =
        probes.iter().map(|(_, u, psi)| (mesh.interpolate(u), mesh.interpolate(psi))).collect();
    let rows: Vec<Result<Vec<f64>>> = exec.map(eps_grid, |&eps| {
        let fam = DiffeoFamily::new(eps, Profile::Linear)?;
        let rule = oscillation_resolving_rule(&fam, mesh, cap)?;
        let canonical = assemble_stiffness_canonical(eps, mesh, &rule, a)?;
        let mut values = Vec::new();
        for (u, psi) in &fields {
            let c = canonical.bilinear(psi, u);
            values.push(c);
            values.push(fabs(c - plain.bilinear(psi, u)));
            values.push(fabs(c - limit.bilinear(psi, u)));
        }
        let graded_rule = oscillation_resolving_rule(&DiffeoFamily::new(eps, Profile::Graded)?, mesh, cap)?;
        let (t1, t2) = graded_profile_extra_terms(eps, mesh, &graded_rule, &fields[0].0, &fields[0].1);
        values.push(t1);
        values.push(t2);
        Ok(values)
    });
    let rows: Vec<Vec<f64>> = rows.into_iter().collect::<Result<_>>()?;
    let mut names = Vec::new();
    for (label, _, _) in &probes {
        names.push(format!("canonical_{label}"));
        names.push(format!("gap_wrong_{label}"));
        names.push(format!("gap_right_{label}"));
    }
    names.push("graded_extra_u1".into());
    names.push("graded_extra_u2".into());
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let mut report = StudyReport::new("wronglimit", &refs);
    let right: Vec<f64> = rows.iter().map(|r| r[2]).collect();
    for (i, (eps, values)) in eps_grid.iter().zip(rows.iter()).enumerate() {
        report.push(*eps, values.clone(), row_status(&right, i, 0.0));
    }
    report.meta("mesh", format!("{}x{}", mesh.nx(), mesh.ny()));
    report.meta("a", a);
    let wrong: Vec<(f64, f64)> = eps_grid.iter().zip(&rows).filter(|(e, _)| **e <= 0.01).map(|(e, r)| (*e, r[1])).collect();
    report.verdict(
        "gap_wrong(x2,x2) in [0.30, 0.37] for eps <= 0.01",
        !wrong.is_empty() && wrong.iter().all(|(_, g)| (0.30..=0.37).contains(g)),
        format!("{wrong:?}"),
    );
    report.verdict("gap_right(x2,x2) strictly decreasing", strictly_decreasing(&right), fmt_seq(&right));
    let last = right.last().copied().unwrap_or(f64::NAN);
    report.verdict("gap_right(x2,x2) < 0.02 at smallest eps", last < 0.02, format!("{last:.6e}"));
    let x1_wrong: Vec<f64> = rows.iter().map(|r| r[4]).collect();
    // for x2-independent probes only an O(eps) first-order remainder survives
    let x1_ok = eps_grid.iter().zip(&x1_wrong).all(|(e, g)| *g <= 1.5 * e);
    report.verdict("gap_wrong(x1,x1) <= 1.5 eps", x1_ok, fmt_seq(&x1_wrong));
    Ok(report)
}

/// A labelled weight `v` with its exact integral over `[0, 1]`.
pub type BoundaryWeight = (&'static str, fn(f64) -> f64, f64);

/// Weight functions of the boundary-average study.
pub fn boundary_weights() -> [BoundaryWeight; 3] {
    [("v1", |_| 1.0, 1.0), ("vs", |s| s, 0.5), ("vs2", |s| s * s, 1.0 / 3.0)]
}

/// `|∫ sqrt(1 + cos²(s/eps)) v(s) ds - M ∫ v|` per `eps` and weight `v`.
pub fn boundary_average_study(eps_grid: &[f64]) -> StudyReport {
    let mean = boundary_average_limit();
    let weights = boundary_weights();
    let names: Vec<&str> = weights.iter().map(|w| w.0).collect();
    let mut report = StudyReport::new("boundary", &names);
    let errors: Vec<Vec<f64>> = eps_grid
        .iter()
        .map(|&eps| {
            weights
                .iter()
                .map(|(_, v, integral)| {
                    let got = adaptive_gauss(0.0, 1.0, 1e-13, |s| {
                        let c = cos(s / eps);
                        sqrt(1.0 + c * c) * v(s)
                    });
                    fabs(got - mean * integral)
                })
                .collect()
        })
        .collect();
    for (eps, e) in eps_grid.iter().zip(&errors) {
        report.push(*eps, e.clone(), "");
    }
    report.meta("mean", format!("{mean:.12}"));
    for (j, (name, _, _)) in weights.iter().enumerate() {
        let ys: Vec<f64> = errors.iter().map(|e| e[j]).collect();
        let slope = log_log_slope(eps_grid, &ys);
        report.verdict(
            format!("{name}: error slope in eps within 30% of 1"),
            slope.is_some_and(|s| fabs(s - 1.0) <= 0.3),
            format!("slope {slope:?}, errors {}", fmt_seq(&ys)),
        );
    }
    report
}

/// Smallest and largest eigenvalues of `(A_eps, G)` with `G` the plain `H¹` Gram matrix.
pub fn coercivity_study<E: Executor>(spec: &ProblemSpec, eps_grid: &[f64], exec: &E) -> Result<StudyReport> {
    let mesh = spec.mesh()?;
    let norms = ReferenceNorms::new(&mesh)?;
    let all = with_reference(eps_grid);
    let rows: Vec<Result<(f64, f64)>> = exec.map(&all, |&eps| {
        let disc = Discretization::for_spec(spec, eps)?;
        let low = smallest_eigenpairs(&disc.stiffness, &norms.gram, 1, spec.tolerances.eigen)?[0].value;
        let high = largest_eigenvalue(&disc.stiffness, &norms.gram, 1e-6, 2000)?;
        Ok((low, high))
    });
    let rows: Vec<(f64, f64)> = rows.into_iter().collect::<Result<_>>()?;
    let mut report = StudyReport::new("coercivity", &["lambda_min", "lambda_max"]);
    for (eps, (lo, hi)) in all.iter().zip(&rows) {
        report.push(*eps, alloc::vec![*lo, *hi], "");
    }
    let lows: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let highs: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let spread = relative_spread(&lows);
    report.verdict("lambda_min varies < 20%", spread < 0.2, format!("spread {spread:.4}, values {}", fmt_seq(&lows)));
    let ratio = highs.iter().fold(0.0f64, |m, v| m.max(*v)) / highs[0];
    report.verdict("lambda_max within 10x of eps = 0", ratio < 10.0, format!("ratio {ratio:.4}, values {}", fmt_seq(&highs)));
    Ok(report)
}

/// `(max - min) / max` of positive values.
pub fn relative_spread(xs: &[f64]) -> f64 {
    let hi = xs.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    let lo = xs.iter().fold(f64::INFINITY, |m, v| m.min(*v));
    (hi - lo) / hi
}

/// Trajectories of one `eps`, started from each initial condition.
#[derive(Clone, Debug)]
pub struct LyapunovLeg {
    pub epsilon: f64,
    pub trajectories: Vec<Trajectory>,
    /// `(trajectory, step)` pairs where `V` increased beyond the tolerance.
    pub violations: Vec<(usize, usize)>,
}

/// Relative tolerance on Lyapunov increases per step.
pub const LYAPUNOV_TOL: f64 = 1e-8;

/// Evolves every initial condition for `steps` steps at each `eps` and checks
/// that `V` is nonincreasing up to [`LYAPUNOV_TOL`].
pub fn lyapunov_study<E: Executor>(
    spec: &ProblemSpec,
    eps_list: &[f64],
    ics: &[NodalField],
    steps: usize,
    exec: &E,
) -> Result<(StudyReport, Vec<LyapunovLeg>)> {
    let legs: Vec<Result<LyapunovLeg>> = exec.map(eps_list, |&eps| {
        let disc = Discretization::for_spec(spec, eps)?;
        let mut trajectories = Vec::with_capacity(ics.len());
        let mut violations = Vec::new();
        for (i, u0) in ics.iter().enumerate() {
            let t = evolve(spec, &disc, u0, steps, 0)?;
            violations.extend(t.lyapunov_violations(LYAPUNOV_TOL).into_iter().map(|s| (i, s)));
            trajectories.push(t);
        }
        Ok(LyapunovLeg { epsilon: eps, trajectories, violations })
    });
    let legs: Vec<LyapunovLeg> = legs.into_iter().collect::<Result<_>>()?;
    let mut report = StudyReport::new("evolve", &["trajectories", "steps", "violations", "max_increase", "final_v_min", "final_v_max"]);
    for leg in &legs {
        let max_inc = leg
            .trajectories
            .iter()
            .flat_map(|t| t.lyapunov.windows(2).map(|w| (w[1] - w[0]) / (1.0 + fabs(w[0]))))
            .fold(f64::NEG_INFINITY, f64::max);
        let finals: Vec<f64> = leg.trajectories.iter().filter_map(|t| t.lyapunov.last().copied()).collect();
        report.push(
            leg.epsilon,
            alloc::vec![
                leg.trajectories.len() as f64,
                steps as f64,
                leg.violations.len() as f64,
                max_inc,
                finals.iter().copied().fold(f64::INFINITY, f64::min),
                finals.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            ],
            if leg.violations.is_empty() { "ok" } else { "increase" },
        );
    }
    let total: usize = legs.iter().map(|l| l.violations.len()).sum();
    report.meta("dt", spec.dt);
    report.meta("tolerance", LYAPUNOV_TOL);
    report.verdict("lyapunov nonincreasing", total == 0, format!("{total} violating steps"));
    Ok((report, legs))
}

/// An equilibrium branch of the limit problem followed in `eps`.
#[derive(Clone, Debug)]
pub struct BranchSummary {
    pub id: usize,
    pub origin: EquilibriumRecord,
    pub points: Vec<crate::equilibria::BranchPoint>,
    pub lost: Option<f64>,
}

/// Equilibria of the limit problem from the initial-condition grid, each
/// continued through `eps_grid` (taken in increasing order).
pub fn equilibria_study(spec: &ProblemSpec, eps_grid: &[f64], guesses: &[NodalField]) -> Result<(StudyReport, Vec<BranchSummary>)> {
    let mesh = spec.mesh()?;
    let norms = ReferenceNorms::new(&mesh)?;
    let base = Discretization::for_spec(spec, 0.0)?;
    let mut found = find_equilibria(spec, &base, &norms, guesses);
    found.sort_by(|p, q| mean(&p.state).total_cmp(&mean(&q.state)));
    let mut ascending: Vec<f64> = eps_grid.to_vec();
    ascending.sort_by(f64::total_cmp);
    let discs = discretizations(spec, &ascending, &Sequential)?;
    let disc_refs: Vec<&Discretization> = discs.iter().collect();
    let branches: Vec<BranchSummary> = found
        .into_iter()
        .enumerate()
        .map(|(id, e0)| {
            let b = continue_in_epsilon(spec, &disc_refs, &norms, &e0);
            BranchSummary { id, origin: e0, points: b.points, lost: b.lost }
        })
        .collect();
    let mut report = StudyReport::new(
        "equilibria",
        &["branch", "mean", "residual", "morse_index", "l1", "l2", "l3", "l4", "dist_l2", "dist_h1", "h1_norm"],
    );
    let row = |id: usize, rec: &EquilibriumRecord, dl2: f64, dh1: f64| -> Vec<f64> {
        let mut v = alloc::vec![id as f64, mean(&rec.state), rec.residual, rec.morse_index as f64];
        v.extend((0..4).map(|j| rec.spectrum_head.get(j).copied().unwrap_or(f64::NAN)));
        v.extend([dl2, dh1, norms.h1(&rec.state)]);
        v
    };
    let mut all_decreasing = true;
    let mut details = Vec::new();
    let mut morse_constant = true;
    let mut h1_norms = Vec::new();
    for b in &branches {
        report.push(0.0, row(b.id, &b.origin, 0.0, 0.0), if b.origin.hyperbolic { "hyperbolic" } else { "near-degenerate" });
        h1_norms.push(norms.h1(&b.origin.state));
        // rows in decreasing eps, matching the other studies
        let mut pts: Vec<_> = b.points.iter().collect();
        pts.sort_by(|p, q| q.epsilon.total_cmp(&p.epsilon));
        let dists: Vec<f64> = pts.iter().map(|p| p.h1_distance).collect();
        let floor = noise_floor(norms.h1(&b.origin.state)) * 10.0;
        for (i, p) in pts.iter().enumerate() {
            report.push(p.epsilon, row(b.id, &p.record, p.l2_distance, p.h1_distance), row_status(&dists, i, floor));
            morse_constant &= p.record.morse_index == b.origin.morse_index;
            h1_norms.push(norms.h1(&p.record.state));
        }
        let ok = b.lost.is_none() && pts.len() == eps_grid.len() && decreasing_to_floor(&dists, floor);
        all_decreasing &= ok;
        details.push(format!("branch {}: {} lost {:?}", b.id, fmt_seq(&dists), b.lost));
    }
    report.meta("mesh", format!("{}x{}", spec.nx, spec.ny));
    report.meta("branches", branches.len());
    report.verdict("branch distances decreasing", !branches.is_empty() && all_decreasing, details.join("; "));
    report.verdict("morse index constant along branches", morse_constant, "");
    let spread = if h1_norms.iter().any(|v| *v > 0.0) { relative_spread(&h1_norms) } else { 0.0 };
    // the spread is taken per branch family; zero branches dominate otherwise
    let per_branch_spread = branches
        .iter()
        .map(|b| {
            let mut v = alloc::vec![norms.h1(&b.origin.state)];
            v.extend(b.points.iter().map(|p| norms.h1(&p.record.state)));
            if v.iter().any(|x| *x > 0.0) { relative_spread(&v) } else { 0.0 }
        })
        .fold(0.0f64, f64::max);
    report.verdict(
        "equilibrium H1 norms vary < 20% along each branch",
        per_branch_spread < 0.2,
        format!("max branch spread {per_branch_spread:.4}, overall {spread:.4}"),
    );
    Ok((report, branches))
}

fn mean(u: &[f64]) -> f64 {
    u.iter().sum::<f64>() / u.len() as f64
}

/// Robin ground eigenvalue per `eps`, with the Rayleigh bound of the constant.
pub fn robin_study<E: Executor>(spec: &ProblemSpec, eps_grid: &[f64], exec: &E) -> Result<StudyReport> {
    let all = with_reference(eps_grid);
    let values: Vec<Result<f64>> = exec.map(&all, |&eps| robin_first_eigenvalue(spec, &Discretization::for_spec(spec, eps)?));
    let values: Vec<f64> = values.into_iter().collect::<Result<_>>()?;
    let mut report = StudyReport::new("robin", &["lambda0", "relative_change"]);
    let base = values[0];
    for (eps, v) in all.iter().zip(&values) {
        let rel = fabs(v - base) / fabs(base);
        report.push(*eps, alloc::vec![*v, rel], if *eps == 0.0 { "reference" } else if rel <= 0.1 { "ok" } else { "far" });
    }
    let bound = (spec.a - spec.c0) - spec.d0 * (boundary_average_limit() + 3.0);
    report.meta("rayleigh_bound", bound);
    report.verdict("lambda0(0) below the constant's Rayleigh quotient", base <= bound + 1e-12, format!("{base:.8} vs {bound:.8}"));
    report.verdict("lambda0(0) > 0", base > 0.0, format!("{base:.8}"));
    let near: Vec<f64> = all.iter().zip(&values).filter(|(e, _)| **e > 0.0 && **e <= 0.05).map(|(_, v)| fabs(v - base) / fabs(base)).collect();
    report.verdict("within 10% of lambda0(0) for eps <= 0.05", near.iter().all(|r| *r <= 0.1), fmt_seq(&near));
    Ok(report)
}

/// Sampled attractor for one `eps`: trajectory tails plus equilibria.
#[derive(Clone, Debug)]
pub struct AttractorSample {
    pub epsilon: f64,
    pub points: Vec<NodalField>,
    pub equilibria: usize,
}

/// Sampling parameters of the attractor study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AttractorSampling {
    pub t_transient: f64,
    pub t_sample: f64,
    /// Snapshot spacing in steps.
    pub stride: usize,
}

impl Default for AttractorSampling {
    fn default() -> Self {
        AttractorSampling { t_transient: 5.0, t_sample: 5.0, stride: 10 }
    }
}

fn attractor_sample(spec: &ProblemSpec, eps: f64, ics: &[NodalField], sampling: AttractorSampling, norms: &ReferenceNorms) -> Result<AttractorSample> {
    let disc = Discretization::for_spec(spec, eps)?;
    let transient = step_count(sampling.t_transient, spec.dt);
    let sample = step_count(sampling.t_sample, spec.dt);
    let mut points = Vec::new();
    for u0 in ics {
        let head = evolve(spec, &disc, u0, transient, 0)?;
        let start = head.last_state().cloned().unwrap_or_else(|| u0.clone());
        let tail = evolve(spec, &disc, &start, sample, sampling.stride.max(1))?;
        points.extend(tail.states);
    }
    let eq = find_equilibria(spec, &disc, norms, ics);
    let equilibria = eq.len();
    points.extend(eq.into_iter().map(|e| e.state));
    Ok(AttractorSample { epsilon: eps, points, equilibria })
}

/// `max_{x ∈ X} min_{y ∈ Y} |x - y|_G`.
pub fn hausdorff_semidistance(xs: &[NodalField], ys: &[NodalField], gram: &SparseOperator) -> f64 {
    let gy: Vec<Vec<f64>> = ys.iter().map(|y| gram.mul_vec(y)).collect();
    let yy: Vec<f64> = ys.iter().zip(&gy).map(|(y, g)| dot(y, g)).collect();
    let mut worst = 0.0f64;
    for x in xs {
        let xx = gram.quadratic(x);
        let best = gy
            .iter()
            .zip(&yy)
            .map(|(g, yn)| xx - 2.0 * dot(x, g) + yn)
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(sqrt(best.max(0.0)));
    }
    worst
}

/// One-sided `H¹` semidistance of sampled attractors to the limit sample.
pub fn attractor_semidistance_study<E: Executor>(
    spec: &ProblemSpec,
    eps_grid: &[f64],
    ics: &[NodalField],
    sampling: AttractorSampling,
    exec: &E,
) -> Result<(StudyReport, Vec<AttractorSample>)> {
    if ics.is_empty() {
        return Err(Error::HypothesisViolation { hypothesis: "attractor sampling: initial conditions", detail: "empty grid".into() });
    }
    let mesh = spec.mesh()?;
    let norms = ReferenceNorms::new(&mesh)?;
    let all = with_reference(eps_grid);
    let samples: Vec<Result<AttractorSample>> = exec.map(&all, |&eps| attractor_sample(spec, eps, ics, sampling, &norms));
    let samples: Vec<AttractorSample> = samples.into_iter().collect::<Result<_>>()?;
    let base = &samples[0];
    let dists: Vec<f64> = exec.map(&samples[1..], |s| hausdorff_semidistance(&s.points, &base.points, &norms.gram));
    let mut report = StudyReport::new("attractor", &["semidistance", "points", "equilibria"]);
    report.push(0.0, alloc::vec![0.0, base.points.len() as f64, base.equilibria as f64], "reference");
    let scale = base.points.iter().map(|p| norms.h1(p)).fold(0.0f64, f64::max);
    let floor = noise_floor(scale) * 10.0;
    for (i, s) in samples[1..].iter().enumerate() {
        report.push(s.epsilon, alloc::vec![dists[i], s.points.len() as f64, s.equilibria as f64], row_status(&dists, i, floor));
    }
    report.meta("t_transient", sampling.t_transient);
    report.meta("t_sample", sampling.t_sample);
    report.meta("stride", sampling.stride);
    report.meta("mesh", format!("{}x{}", mesh.nx(), mesh.ny()));
    report.verdict("semidistance decreasing", decreasing_to_floor(&dists, floor), format!("{} (floor {floor:.1e})", fmt_seq(&dists)));
    Ok((report, samples))
}
