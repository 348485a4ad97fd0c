//! Independent oracles for values the library computes another way.

#![allow(clippy::needless_range_loop)]

use std::f64::consts::PI;

use oscsq_core::geometry::{boundary_average_limit, DiffeoFamily, Profile};
use oscsq_core::linalg::{cg_solve, smallest_eigenpairs};
use oscsq_core::semiflow::{Discretization, ProblemSpec};
use oscsq_core::SparseOperator;

fn simpson<F: Fn(f64) -> f64>(a: f64, b: f64, panels: usize, f: F) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for k in 1..panels {
        s += if k % 2 == 1 { 4.0 } else { 2.0 } * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Complete elliptic integral of the second kind `E(m)` by the AGM.
fn elliptic_e(m: f64) -> f64 {
    let (mut a, mut b) = (1.0f64, (1.0 - m).sqrt());
    let mut c = m.sqrt();
    let mut sum = 0.5 * c * c;
    let mut pow2 = 0.5;
    for _ in 0..40 {
        if c.abs() <= 1e-16 * a {
            break;
        }
        let an = 0.5 * (a + b);
        let bn = (a * b).sqrt();
        c = 0.5 * (a - b);
        pow2 *= 2.0;
        sum += pow2 * c * c;
        a = an;
        b = bn;
    }
    PI / (2.0 * a) * (1.0 - sum)
}

#[test]
fn boundary_average_two_oracles() {
    let by_simpson = simpson(0.0, PI, 1_000_000, |y| (1.0 + y.cos().powi(2)).sqrt()) / PI;
    // 1 + cos² y = 2 (1 - ½ sin² y)
    let by_agm = 2.0 * 2f64.sqrt() * elliptic_e(0.5) / PI;
    let m = boundary_average_limit();
    assert!((by_simpson - by_agm).abs() < 1e-10);
    assert!((m - by_simpson).abs() < 1e-7);
    assert!((m - by_agm).abs() < 1e-7);
    assert!((1.216_005_4..=1.216_006_8).contains(&m));
}

#[test]
fn jacobian_det_matches_finite_differences() {
    for profile in [Profile::Graded, Profile::Linear] {
        let fam = DiffeoFamily::new(0.07, profile).unwrap();
        let h = 1e-6;
        for &(x1, x2) in &[(0.13, 0.4), (0.5, 0.99), (0.91, 0.02), (0.33, 0.77)] {
            let d1p = fam.map_point([x1 + h, x2]);
            let d1m = fam.map_point([x1 - h, x2]);
            let d2p = fam.map_point([x1, x2 + h]);
            let d2m = fam.map_point([x1, x2 - h]);
            let j = [
                [(d1p[0] - d1m[0]) / (2.0 * h), (d2p[0] - d2m[0]) / (2.0 * h)],
                [(d1p[1] - d1m[1]) / (2.0 * h), (d2p[1] - d2m[1]) / (2.0 * h)],
            ];
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            let exact = fam.jacobian_det([x1, x2]).unwrap();
            assert!((det - exact).abs() < 1e-6 * (1.0 + exact.abs()), "{profile:?} at ({x1}, {x2})");
        }
    }
}

fn splitmix(state: &mut u64) -> f64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ((z ^ (z >> 31)) >> 11) as f64 / (1u64 << 53) as f64 - 0.5
}

fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            b[i] -= f * b[k];
        }
    }
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * x[j]).sum();
        x[k] = (b[k] - s) / a[k][k];
    }
    x
}

#[test]
fn cg_agrees_with_dense_elimination() {
    let n = 50;
    let mut seed = 7u64;
    let q: Vec<Vec<f64>> = (0..n).map(|_| (0..n).map(|_| splitmix(&mut seed)).collect()).collect();
    let mut dense = vec![vec![0.0; n]; n];
    let mut triplets = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v: f64 = (0..n).map(|k| q[k][i] * q[k][j]).sum::<f64>() + if i == j { 1.0 } else { 0.0 };
            dense[i][j] = v;
            triplets.push((i, j, v));
        }
    }
    let a = SparseOperator::from_triplets(n, &triplets);
    let b: Vec<f64> = (0..n).map(|_| splitmix(&mut seed)).collect();
    let expected = gauss_solve(dense, b.clone());
    let (x, report) = cg_solve(&a, &b, None, 1e-13, 10_000).unwrap();
    assert!(report.converged);
    let scale = expected.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (u, v) in x.iter().zip(&expected) {
        assert!((u - v).abs() < 1e-9 * scale);
    }
}

#[test]
fn resolvent_of_constant_load_is_constant() {
    // (A + M) u = M 1 with a = 0.5 has the exact solution u = 2/3.
    let spec = ProblemSpec { nx: 16, ny: 16, ..ProblemSpec::default() };
    for eps in [0.0, 0.1] {
        let disc = Discretization::for_spec(&spec, eps).unwrap();
        let op = disc.stiffness.combine(1.0, &disc.mass, 1.0).unwrap();
        let rhs = disc.mass.mul_vec(&vec![1.0; disc.mesh.num_nodes()]);
        let (u, _) = cg_solve(&op, &rhs, None, 1e-13, 10_000).unwrap();
        assert!(u.iter().all(|v| (v - 2.0 / 3.0).abs() < 1e-9), "eps = {eps}");
    }
}

#[test]
fn eigenvectors_are_mass_orthonormal() {
    let spec = ProblemSpec { nx: 16, ny: 16, ..ProblemSpec::default() };
    let disc = Discretization::for_spec(&spec, 0.1).unwrap();
    let pairs = smallest_eigenpairs(&disc.stiffness, &disc.mass, 4, 1e-10).unwrap();
    for (i, p) in pairs.iter().enumerate() {
        for (j, q) in pairs.iter().enumerate() {
            let g = disc.mass.bilinear(&p.vector, &q.vector);
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((g - want).abs() < 1e-8, "({i}, {j}) -> {g}");
        }
        let av = disc.stiffness.mul_vec(&p.vector);
        let mv = disc.mass.mul_vec(&p.vector);
        let res = av.iter().zip(&mv).map(|(a, m)| (a - p.value * m).powi(2)).sum::<f64>().sqrt();
        assert!(res < 1e-7 * (1.0 + p.value));
    }
    assert!(pairs.windows(2).all(|w| w[0].value <= w[1].value));
}

#[test]
fn mesh_refinement_moves_references_less_than_tolerance() {
    let reference = |n: usize| {
        let spec = ProblemSpec { nx: n, ny: n, ..ProblemSpec::default() };
        let disc = Discretization::for_spec(&spec, 0.0).unwrap();
        let values: Vec<f64> =
            smallest_eigenpairs(&disc.stiffness, &disc.mass, 4, 1e-10).unwrap().into_iter().map(|p| p.value).collect();
        let one = vec![1.0; disc.mesh.num_nodes()];
        (values, disc.boundary_mass.quadratic(&one))
    };
    let (coarse, b16) = reference(16);
    let (fine, b32) = reference(32);
    for (c, f) in coarse.iter().zip(&fine) {
        assert!((c - f).abs() / f < 0.01, "{c} vs {f}");
    }
    assert!((b16 - b32).abs() < 1e-12);
}
