//! Krylov solvers and a shift-invert eigensolver for symmetric pencils.
//!
//! Everything runs sequentially with reductions in fixed order, so results
//! are bit-identical from run to run.

use alloc::vec::Vec;

use libm::{fabs, sqrt};

use crate::error::{Error, Result};
use crate::sparse::{axpy, dot, norm2, SparseOperator};

/// Outcome of an iterative solve. `residual` is the true relative residual
/// `|b - Ax| / |b|`, recomputed after the iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn true_residual(a: &SparseOperator, b: &[f64], x: &[f64]) -> f64 {
    let bn = norm2(b);
    if bn == 0.0 {
        return norm2(x);
    }
    let ax = a.mul_vec(x);
    let r: f64 = b.iter().zip(&ax).map(|(bi, ai)| (bi - ai) * (bi - ai)).sum();
    sqrt(r) / bn
}

/// Result of the internal CG loop.
pub(crate) enum CgOutcome {
    Done(Vec<f64>, SolveReport),
    /// Non-positive curvature `p^T A p <= 0` was met: `A` is not positive definite.
    Indefinite,
}

pub(crate) fn pcg(a: &SparseOperator, b: &[f64], x0: Option<&[f64]>, tol: f64, maxit: usize) -> CgOutcome {
    let n = a.dim();
    let diag = a.diagonal();
    if diag.iter().any(|&d| d <= 0.0) {
        return CgOutcome::Indefinite;
    }
    let inv: Vec<f64> = diag.iter().map(|d| 1.0 / d).collect();
    let mut x = x0.map_or_else(|| alloc::vec![0.0; n], |v| v.to_vec());
    let bn = norm2(b);
    if bn == 0.0 {
        let x = alloc::vec![0.0; n];
        return CgOutcome::Done(x, SolveReport { iterations: 0, residual: 0.0, converged: true });
    }
    let mut r = a.mul_vec(&x);
    r.iter_mut().zip(b).for_each(|(ri, bi)| *ri = bi - *ri);
    let mut z: Vec<f64> = r.iter().zip(&inv).map(|(ri, d)| ri * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = alloc::vec![0.0; n];
    let mut it = 0;
    while it < maxit {
        if norm2(&r) <= tol * bn {
            break;
        }
        a.mul_vec_into(&p, &mut ap);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return CgOutcome::Indefinite;
        }
        let alpha = rz / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        for ((zi, ri), d) in z.iter_mut().zip(&r).zip(&inv) {
            *zi = ri * d;
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
        it += 1;
    }
    let residual = true_residual(a, b, &x);
    // the recurrence residual can drift below the true one; accept a small slack
    let converged = residual <= tol.max(1e-14) * 10.0;
    CgOutcome::Done(x, SolveReport { iterations: it, residual, converged })
}

/// Jacobi-preconditioned conjugate gradients for symmetric positive definite `a`.
pub fn cg_solve(
    a: &SparseOperator,
    b: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    maxit: usize,
) -> Result<(Vec<f64>, SolveReport)> {
    check_dim(a, b)?;
    match pcg(a, b, x0, tol, maxit) {
        CgOutcome::Done(x, rep) if rep.converged => Ok((x, rep)),
        CgOutcome::Done(_, rep) => Err(Error::NotConverged(rep)),
        CgOutcome::Indefinite => {
            Err(Error::NotConverged(SolveReport { iterations: 0, residual: f64::NAN, converged: false }))
        }
    }
}

fn check_dim(a: &SparseOperator, b: &[f64]) -> Result<()> {
    if a.dim() != b.len() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.len() });
    }
    Ok(())
}

/// MINRES with a `|diag|` Jacobi preconditioner, for symmetric indefinite `a`.
pub fn minres_solve(a: &SparseOperator, b: &[f64], tol: f64, maxit: usize) -> Result<(Vec<f64>, SolveReport)> {
    check_dim(a, b)?;
    let n = a.dim();
    let inv: Vec<f64> = a
        .diagonal()
        .iter()
        .map(|d| if fabs(*d) > 0.0 { 1.0 / fabs(*d) } else { 1.0 })
        .collect();
    let precond = |v: &[f64]| -> Vec<f64> { v.iter().zip(&inv).map(|(x, d)| x * d).collect() };
    let mut x = alloc::vec![0.0; n];
    if norm2(b) == 0.0 {
        return Ok((x, SolveReport { iterations: 0, residual: 0.0, converged: true }));
    }
    let mut r1 = b.to_vec();
    let mut y = precond(&r1);
    let beta1 = sqrt(dot(&r1, &y));
    let mut r2 = r1.clone();
    let mut oldb = 0.0;
    let mut beta = beta1;
    let mut dbar = 0.0;
    let mut epsln = 0.0;
    let mut phibar = beta1;
    let mut cs = -1.0;
    let mut sn = 0.0;
    let mut w = alloc::vec![0.0; n];
    let mut w2 = alloc::vec![0.0; n];
    let mut it = 0;
    while it < maxit {
        it += 1;
        let s = 1.0 / beta;
        let v: Vec<f64> = y.iter().map(|yi| s * yi).collect();
        y = a.mul_vec(&v);
        if it >= 2 {
            axpy(-beta / oldb, &r1, &mut y);
        }
        let alfa = dot(&v, &y);
        axpy(-alfa / beta, &r2, &mut y);
        r1 = core::mem::replace(&mut r2, y);
        y = precond(&r2);
        oldb = beta;
        beta = sqrt(dot(&r2, &y).max(0.0));
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = sqrt(gbar * gbar + beta * beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let w1 = core::mem::replace(&mut w2, core::mem::take(&mut w));
        w = v
            .iter()
            .zip(&w1)
            .zip(&w2)
            .map(|((vi, w1i), w2i)| (vi - oldeps * w1i - delta * w2i) / gamma)
            .collect();
        axpy(phi, &w, &mut x);
        if phibar <= 0.1 * tol * beta1 || beta == 0.0 {
            break;
        }
    }
    let residual = true_residual(a, b, &x);
    let rep = SolveReport { iterations: it, residual, converged: residual <= tol.max(1e-14) * 10.0 };
    if rep.converged {
        Ok((x, rep))
    } else {
        Err(Error::NotConverged(rep))
    }
}

/// Generalized eigenpair of `A x = λ M x`, with `x^T M x = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub value: f64,
    pub vector: Vec<f64>,
}

/// Deterministic pseudo-random start vector (splitmix64).
fn start_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(0x2545_F491_4F6C_DD1D);
    (0..n)
        .map(|_| {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^= z >> 31;
            (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
        .collect()
}

/// M-orthonormalizes `block` in place by modified Gram-Schmidt, applied twice.
/// Returns the index of the first vector whose M-norm collapsed, if any.
fn m_orthonormalize(block: &mut [Vec<f64>], m: &SparseOperator) -> Option<usize> {
    for j in 0..block.len() {
        let (done, rest) = block.split_at_mut(j);
        let x = &mut rest[0];
        let before = sqrt(m.quadratic(x).max(0.0));
        for _ in 0..2 {
            let mx = m.mul_vec(x);
            for q in done.iter() {
                let c = dot(q, &mx);
                axpy(-c, q, x);
            }
        }
        let nrm = sqrt(m.quadratic(x).max(0.0));
        if !(nrm > 1e-10 * before) || !nrm.is_finite() {
            return Some(j);
        }
        x.iter_mut().for_each(|v| *v /= nrm);
    }
    None
}

/// Eigen-decomposition of a small dense symmetric matrix by cyclic Jacobi
/// rotations. Returns ascending eigenvalues and the eigenvectors as columns.
pub fn symmetric_eigen(mut h: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let p = h.len();
    let mut q: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..p).flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| h[i][j] * h[i][j]).sum();
        let scale: f64 = (0..p).map(|i| h[i][i] * h[i][i]).sum();
        if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for r in 0..p {
            for s in (r + 1)..p {
                if h[r][s] == 0.0 {
                    continue;
                }
                let theta = (h[s][s] - h[r][r]) / (2.0 * h[r][s]);
                let t = theta.signum() / (fabs(theta) + sqrt(theta * theta + 1.0));
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / sqrt(t * t + 1.0);
                let sn = t * c;
                for k in 0..p {
                    let (hkr, hks) = (h[k][r], h[k][s]);
                    h[k][r] = c * hkr - sn * hks;
                    h[k][s] = sn * hkr + c * hks;
                }
                for k in 0..p {
                    let (hrk, hsk) = (h[r][k], h[s][k]);
                    h[r][k] = c * hrk - sn * hsk;
                    h[s][k] = sn * hrk + c * hsk;
                }
                for row in q.iter_mut() {
                    let (qr, qs) = (row[r], row[s]);
                    row[r] = c * qr - sn * qs;
                    row[s] = sn * qr + c * qs;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&i, &j| h[i][i].total_cmp(&h[j][j]));
    let values = order.iter().map(|&i| h[i][i]).collect();
    let vectors = (0..p).map(|i| order.iter().map(|&j| q[i][j]).collect()).collect();
    (values, vectors)
}

/// Sign convention: the first component of significant size is positive.
fn fix_sign(x: &mut [f64]) {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(fabs(*v)));
    if let Some(first) = x.iter().find(|v| fabs(**v) > 1e-8 * scale) {
        if *first < 0.0 {
            x.iter_mut().for_each(|v| *v = -*v);
        }
    }
}

const EIGEN_MAXIT: usize = 2000;
const INNER_MAXIT: usize = 20_000;
const MAX_SHIFTS: usize = 64;
/// Extra block vectors beyond `k`; they speed up convergence of the `k`-th pair.
const GUARD_VECTORS: usize = 3;

/// The `k` smallest eigenpairs of the symmetric pencil `(A, M)`, `M` positive
/// definite, by block shift-invert iteration with `M`-orthonormalization and
/// Rayleigh-Ritz projection.
///
/// The shift starts at zero and is lowered whenever `A - σM` turns out to be
/// indefinite, so pencils with negative eigenvalues are handled too.
/// Returned values are ascending; vectors satisfy `x^T M x = 1`.
pub fn smallest_eigenpairs(a: &SparseOperator, m: &SparseOperator, k: usize, tol: f64) -> Result<Vec<EigenPair>> {
    if a.dim() != m.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: m.dim() });
    }
    let mut shift = 0.0;
    for _ in 0..MAX_SHIFTS {
        match eigen_with_shift(a, m, k, tol, shift)? {
            Some(pairs) => return Ok(pairs),
            None => shift = if shift == 0.0 { -1.0 } else { 2.0 * shift },
        }
    }
    Err(Error::NotConverged(SolveReport { iterations: 0, residual: f64::NAN, converged: false }))
}

fn eigen_with_shift(
    a: &SparseOperator,
    m: &SparseOperator,
    k: usize,
    tol: f64,
    shift: f64,
) -> Result<Option<Vec<EigenPair>>> {
    let n = a.dim();
    let k = k.min(n);
    let p = (k + GUARD_VECTORS).min(n);
    let shifted = if shift == 0.0 { a.clone() } else { a.linear_combination(1.0, m, -shift) };
    let inner_tol = tol / 100.0;
    let mut block: Vec<Vec<f64>> = (0..p).map(|j| start_vector(n, j as u64 + 1)).collect();
    if let Some(index) = m_orthonormalize(&mut block, m) {
        return Err(Error::DegenerateDeflation { index });
    }
    let mut previous = alloc::vec![f64::NAN; p];
    for _ in 0..EIGEN_MAXIT {
        for x in block.iter_mut() {
            let rhs = m.mul_vec(x);
            *x = match pcg(&shifted, &rhs, None, inner_tol, INNER_MAXIT) {
                CgOutcome::Done(y, rep) if rep.converged => y,
                // a stalled inner solve means the shift sits too close to (or above) the spectrum
                _ => return Ok(None),
            };
        }
        if let Some(index) = m_orthonormalize(&mut block, m) {
            return Err(Error::DegenerateDeflation { index });
        }
        let ay: Vec<Vec<f64>> = block.iter().map(|y| a.mul_vec(y)).collect();
        let h: Vec<Vec<f64>> = (0..p)
            .map(|i| (0..p).map(|j| 0.5 * (dot(&block[i], &ay[j]) + dot(&block[j], &ay[i]))).collect())
            .collect();
        let (theta, q) = symmetric_eigen(h);
        let rotate = |vs: &[Vec<f64>]| -> Vec<Vec<f64>> {
            (0..p)
                .map(|c| {
                    let mut out = alloc::vec![0.0; n];
                    for (r, v) in vs.iter().enumerate() {
                        axpy(q[r][c], v, &mut out);
                    }
                    out
                })
                .collect()
        };
        block = rotate(&block);
        let ax = rotate(&ay);
        let mut converged = true;
        for j in 0..k {
            let mx = m.mul_vec(&block[j]);
            let res: f64 = ax[j].iter().zip(&mx).map(|(u, v)| (u - theta[j] * v) * (u - theta[j] * v)).sum();
            let scale = 1.0 + fabs(theta[j]);
            if !(sqrt(res) <= tol * scale * norm2(&mx) && fabs(theta[j] - previous[j]) <= tol * scale) {
                converged = false;
            }
        }
        previous = theta.clone();
        if converged {
            if theta[0] <= shift {
                return Ok(None);
            }
            let pairs = block
                .into_iter()
                .zip(theta)
                .take(k)
                .map(|(mut vector, value)| {
                    fix_sign(&mut vector);
                    EigenPair { value, vector }
                })
                .collect();
            return Ok(Some(pairs));
        }
    }
    Err(Error::NotConverged(SolveReport { iterations: EIGEN_MAXIT, residual: f64::NAN, converged: false }))
}

/// Largest eigenvalue of `(A, M)` by power iteration on `M⁻¹A`, stopping when
/// the Rayleigh quotient changes by less than `tol` relatively.
pub fn largest_eigenvalue(a: &SparseOperator, m: &SparseOperator, tol: f64, maxit: usize) -> Result<f64> {
    let n = a.dim();
    let mut x = start_vector(n, 0);
    let mut lambda = f64::NAN;
    for it in 0..maxit {
        let ax = a.mul_vec(&x);
        let (mut y, _) = cg_solve(m, &ax, Some(&x), 1e-12, INNER_MAXIT)?;
        let nrm = sqrt(m.quadratic(&y).max(0.0));
        if !(nrm > 0.0) {
            return Err(Error::DegenerateDeflation { index: 0 });
        }
        y.iter_mut().for_each(|v| *v /= nrm);
        let next = a.quadratic(&y);
        if it > 0 && fabs(next - lambda) <= tol * fabs(next) {
            return Ok(next);
        }
        lambda = next;
        x = y;
    }
    Err(Error::NotConverged(SolveReport { iterations: maxit, residual: f64::NAN, converged: false }))
}
