//! Steady states by Newton's method, their linearization spectra, branch
//! continuation in `eps`, and the Robin ground eigenvalue.

use alloc::vec::Vec;

use libm::{fabs, sqrt};

use crate::error::{Error, Result};
use crate::linalg::{cg_solve, minres_solve, smallest_eigenpairs};
use crate::semiflow::{nonlinear_load, Discretization, Flux, NodalField, ProblemSpec, Reaction, ReferenceNorms};
use crate::sparse::{axpy, dot, SparseOperator};

/// `|λ_min(L)|` below this is reported as near-degenerate instead of hyperbolic.
pub const HYPERBOLICITY_GAP: f64 = 1e-3;
/// Number of linearization eigenvalues kept per equilibrium.
pub const SPECTRUM_HEAD: usize = 4;
/// Newton gives up after the residual grows this many steps in a row.
const DIVERGENCE_RUN: usize = 5;

#[derive(Clone, Debug, PartialEq)]
pub struct EquilibriumRecord {
    pub state: NodalField,
    /// `|A e - F(e) - G(e)|` in the `M^{-1}` norm.
    pub residual: f64,
    pub iterations: usize,
    /// Smallest eigenvalues of the pencil `(L, M)`, ascending.
    pub spectrum_head: Vec<f64>,
    pub morse_index: usize,
    pub hyperbolic: bool,
}

/// `L = A - F_u(u) - G_u(u)`.
pub fn assemble_linearization(spec: &ProblemSpec, disc: &Discretization, u: &[f64]) -> Result<SparseOperator> {
    let mut l = disc.stiffness.clone();
    if spec.reaction != Reaction::Zero {
        let r = spec.reaction;
        l = l.combine(1.0, &disc.volume.matrix(u, |v| r.derivative(v)), -1.0)?;
    }
    if spec.flux != Flux::Zero {
        let g = spec.flux;
        l = l.combine(1.0, &disc.boundary.matrix(u, |v| g.derivative(v)), -1.0)?;
    }
    Ok(l)
}

/// `A u - F(u) - G(u)`.
pub fn equilibrium_residual(spec: &ProblemSpec, disc: &Discretization, u: &[f64]) -> Vec<f64> {
    let mut r = disc.stiffness.mul_vec(u);
    axpy(-1.0, &nonlinear_load(spec, disc, u), &mut r);
    r
}

/// `sqrt(rᵀ M⁻¹ r)`.
pub fn dual_norm(disc: &Discretization, r: &[f64], spec: &ProblemSpec) -> Result<f64> {
    if r.iter().all(|v| *v == 0.0) {
        return Ok(0.0);
    }
    let (z, _) = cg_solve(&disc.mass, r, None, spec.tolerances.cg, spec.tolerances.cg_maxit)?;
    Ok(sqrt(dot(r, &z).max(0.0)))
}

/// Solves `L x = b`, by CG when `L` is positive definite and MINRES otherwise.
fn solve_linearized(l: &SparseOperator, b: &[f64], tol: f64, maxit: usize) -> Result<Vec<f64>> {
    match cg_solve(l, b, None, tol, maxit) {
        Ok((x, _)) => Ok(x),
        Err(Error::NotConverged(_)) => match minres_solve(l, b, tol, 4 * maxit) {
            Ok((x, _)) => Ok(x),
            Err(Error::NotConverged(rep)) => Err(Error::SingularLinearization(rep)),
            Err(e) => Err(e),
        },
        Err(e) => Err(e),
    }
}

/// Smallest eigenvalues of `(L(u), M)`, morse index and hyperbolicity of `u`.
pub fn linearization_spectrum(spec: &ProblemSpec, disc: &Discretization, u: &[f64]) -> Result<(Vec<f64>, usize, bool)> {
    let l = assemble_linearization(spec, disc, u)?;
    let k = SPECTRUM_HEAD.min(l.dim());
    let values: Vec<f64> = smallest_eigenpairs(&l, &disc.mass, k, spec.tolerances.eigen)?
        .into_iter()
        .map(|p| p.value)
        .collect();
    let morse = values.iter().filter(|v| **v < 0.0).count();
    let gap = values.iter().fold(f64::INFINITY, |m, v| m.min(fabs(*v)));
    Ok((values, morse, gap > HYPERBOLICITY_GAP))
}

/// Newton's method for `A u = F(u) + G(u)` from `u0`, followed by the
/// linearization spectrum at the solution.
pub fn newton_equilibria(spec: &ProblemSpec, disc: &Discretization, u0: &[f64]) -> Result<EquilibriumRecord> {
    let tol = &spec.tolerances;
    let mut u = u0.to_vec();
    let mut residual = dual_norm(disc, &equilibrium_residual(spec, disc, &u), spec)?;
    let mut growth_run = 0;
    let mut iterations = 0;
    while residual > tol.newton {
        if iterations == tol.newton_maxit || !residual.is_finite() {
            return Err(Error::NewtonDiverged { iterations, residual });
        }
        let r = equilibrium_residual(spec, disc, &u);
        let l = assemble_linearization(spec, disc, &u)?;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let delta = solve_linearized(&l, &neg, tol.cg, tol.cg_maxit)?;
        axpy(1.0, &delta, &mut u);
        iterations += 1;
        let next = dual_norm(disc, &equilibrium_residual(spec, disc, &u), spec)?;
        growth_run = if next > residual { growth_run + 1 } else { 0 };
        residual = next;
        if growth_run >= DIVERGENCE_RUN {
            return Err(Error::NewtonDiverged { iterations, residual });
        }
    }
    let (spectrum_head, morse_index, hyperbolic) = linearization_spectrum(spec, disc, &u)?;
    Ok(EquilibriumRecord { state: u, residual, iterations, spectrum_head, morse_index, hyperbolic })
}

/// Runs Newton from every guess and keeps the distinct solutions (`H¹`
/// distance above `1e-6`), in order of first discovery. Failed runs are skipped.
pub fn find_equilibria(
    spec: &ProblemSpec,
    disc: &Discretization,
    norms: &ReferenceNorms,
    guesses: &[NodalField],
) -> Vec<EquilibriumRecord> {
    let mut found: Vec<EquilibriumRecord> = Vec::new();
    for g in guesses {
        if let Ok(rec) = newton_equilibria(spec, disc, g) {
            if found.iter().all(|e| norms.h1_distance(&e.state, &rec.state) > 1e-6) {
                found.push(rec);
            }
        }
    }
    found
}

/// One point on a continued branch.
#[derive(Clone, Debug, PartialEq)]
pub struct BranchPoint {
    pub epsilon: f64,
    pub record: EquilibriumRecord,
    pub l2_distance: f64,
    pub h1_distance: f64,
}

/// A branch followed in `eps`; `lost` is the first `eps` at which Newton failed.
#[derive(Clone, Debug, PartialEq)]
pub struct Branch {
    pub points: Vec<BranchPoint>,
    pub lost: Option<f64>,
}

/// Follows the equilibrium `e0` of the limit problem through `discs`
/// (ordered by increasing `eps`), warm-starting each Newton solve from the
/// previous point. Distances are measured to `e0`.
pub fn continue_in_epsilon(
    spec: &ProblemSpec,
    discs: &[&Discretization],
    norms: &ReferenceNorms,
    e0: &EquilibriumRecord,
) -> Branch {
    let mut points = Vec::with_capacity(discs.len());
    let mut guess = e0.state.clone();
    for disc in discs {
        let eps = disc.family.epsilon();
        match newton_equilibria(spec, disc, &guess) {
            Ok(record) => {
                guess = record.state.clone();
                points.push(BranchPoint {
                    epsilon: eps,
                    l2_distance: norms.l2_distance(&record.state, &e0.state),
                    h1_distance: norms.h1_distance(&record.state, &e0.state),
                    record,
                });
            }
            Err(_) => return Branch { points, lost: Some(eps) },
        }
    }
    Branch { points, lost: None }
}

/// Ground eigenvalue of `(A^{(a - c0)} - d0 B, M)`.
pub fn robin_first_eigenvalue(spec: &ProblemSpec, disc: &Discretization) -> Result<f64> {
    let shifted = disc.stiffness.combine(1.0, &disc.mass, -spec.c0)?;
    let op = shifted.combine(1.0, &disc.boundary_mass, -spec.d0)?;
    let pairs = smallest_eigenpairs(&op, &disc.mass, 1, spec.tolerances.eigen)?;
    Ok(pairs[0].value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> ProblemSpec {
        ProblemSpec { flux: Flux::Zero, nx: 8, ny: 8, ..ProblemSpec::default() }
    }

    #[test]
    fn linear_problem_linearization_is_stiffness() {
        let s = spec().linear();
        let disc = Discretization::for_spec(&s, 0.0).unwrap();
        let u = alloc::vec![0.3; disc.mesh.num_nodes()];
        assert_eq!(assemble_linearization(&s, &disc, &u).unwrap(), disc.stiffness);
    }

    #[test]
    fn constant_branches() {
        let s = spec();
        let disc = Discretization::for_spec(&s, 0.0).unwrap();
        let n = disc.mesh.num_nodes();
        let root = sqrt(0.5);
        for (start, target, morse, lead) in [(0.6, root, 0, 1.0), (0.01, 0.0, 1, -0.5), (-0.6, -root, 0, 1.0)] {
            let rec = newton_equilibria(&s, &disc, &alloc::vec![start; n]).unwrap();
            assert!(rec.state.iter().all(|v| (v - target).abs() < 1e-8), "start {start}");
            assert_eq!(rec.morse_index, morse);
            assert!(rec.hyperbolic);
            assert!((rec.spectrum_head[0] - lead).abs() < 1e-8);
        }
    }

    #[test]
    fn robin_reduces_to_ground_state() {
        let s = ProblemSpec { d0: 0.0, c0: 0.0, ..spec() };
        let disc = Discretization::for_spec(&s, 0.0).unwrap();
        assert!((robin_first_eigenvalue(&s, &disc).unwrap() - 0.5).abs() < 1e-8);
        let s = ProblemSpec { c0: -0.5, d0: 0.1, ..spec() };
        let lam = robin_first_eigenvalue(&s, &disc).unwrap();
        assert!(lam > 0.0 && lam <= 1.0 - 0.1 * (crate::geometry::boundary_average_limit() + 3.0));
    }
}
