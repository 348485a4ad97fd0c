//! Finite-element assembly of the pulled-back operators.
//!
//! Adapted-metric forms carry the weight `|Dh|` and the transported gradient
//! `B grad u` with `B = (Dh)^{-T}`:
//!
//! ```text
//! a(u, v) = ∫ (B∇u)·(B∇v)|Dh| + a ∫ u v |Dh|
//! m(u, v) = ∫ u v |Dh|
//! b(u, v) = ∫_{∂Ω} u v w_∂
//! ```
//!
//! The canonical-metric form pairs against `v / |Dh|` in the unweighted
//! inner product, which produces first-order terms and a limit that is not
//! the Neumann Laplacian.

use alloc::vec::Vec;

use libm::{cos, log, pow};

use crate::error::{Error, Result};
use crate::geometry::{DiffeoFamily, Point, Profile, Side};
use crate::mesh::{shape, shape_grad, QuadratureRule, StructuredMesh};
use crate::sparse::SparseOperator;

/// Pointwise coefficients of a general second-order bilinear form
/// `∫ ∇v·K∇u + v (c·∇u) + r u v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coefficients {
    pub diffusion: [[f64; 2]; 2],
    pub convection: [f64; 2],
    pub reaction: f64,
}

struct RefPoint {
    xi: f64,
    eta: f64,
    weight: f64,
    n: [f64; 4],
    dn: [[f64; 2]; 4],
}

fn reference_table(mesh: &StructuredMesh, rule: &QuadratureRule) -> Vec<RefPoint> {
    let (hx, hy) = (mesh.hx(), mesh.hy());
    rule.reference_points()
        .into_iter()
        .map(|(xi, eta, w)| {
            let g = shape_grad(xi, eta);
            RefPoint {
                xi,
                eta,
                weight: w * hx * hy,
                n: shape(xi, eta),
                dn: g.map(|d| [d[0] / hx, d[1] / hy]),
            }
        })
        .collect()
}

/// Assembles `entry(i, j) = form(φ_j, φ_i)` for the coefficients returned by `coeff`
/// at every quadrature point (row = test function, column = trial function).
pub fn assemble_volume<F>(mesh: &StructuredMesh, rule: &QuadratureRule, mut coeff: F) -> Result<SparseOperator>
where
    F: FnMut(Point) -> Result<Coefficients>,
{
    let table = reference_table(mesh, rule);
    let (hx, hy) = (mesh.hx(), mesh.hy());
    let mut out = SparseOperator::q1_pattern(mesh);
    for e in 0..mesh.num_elements() {
        let origin = mesh.element_origin(e);
        let mut local = [[0.0; 4]; 4];
        for p in &table {
            let x = [origin[0] + p.xi * hx, origin[1] + p.eta * hy];
            let c = coeff(x)?;
            let k = c.diffusion;
            for a in 0..4 {
                let ga = p.dn[a];
                for b in 0..4 {
                    let gb = p.dn[b];
                    let kgb = [k[0][0] * gb[0] + k[0][1] * gb[1], k[1][0] * gb[0] + k[1][1] * gb[1]];
                    let val = ga[0] * kgb[0]
                        + ga[1] * kgb[1]
                        + p.n[a] * (c.convection[0] * gb[0] + c.convection[1] * gb[1])
                        + c.reaction * p.n[a] * p.n[b];
                    local[a][b] += p.weight * val;
                }
            }
        }
        out.add_local(&mesh.element_nodes(e), &local);
    }
    Ok(out)
}

/// Adapted-metric stiffness with zeroth-order coefficient `a`.
pub fn assemble_stiffness_adapted(
    fam: &DiffeoFamily,
    mesh: &StructuredMesh,
    rule: &QuadratureRule,
    a: f64,
) -> Result<SparseOperator> {
    assemble_volume(mesh, rule, |x| {
        let det = fam.jacobian_det(x)?;
        let metric = fam.inv_transpose_jacobian(x)?.metric();
        Ok(Coefficients {
            diffusion: metric.map(|row| row.map(|v| v * det)),
            convection: [0.0; 2],
            reaction: a * det,
        })
    })
}

/// `|Dh|`-weighted mass matrix.
pub fn assemble_mass(fam: &DiffeoFamily, mesh: &StructuredMesh, rule: &QuadratureRule) -> Result<SparseOperator> {
    assemble_volume(mesh, rule, |x| {
        Ok(Coefficients { diffusion: [[0.0; 2]; 2], convection: [0.0; 2], reaction: fam.jacobian_det(x)? })
    })
}

/// Boundary mass with the boundary length distortion as weight (the
/// homogenized mean on the top side when `eps = 0`).
pub fn assemble_boundary_mass(
    fam: &DiffeoFamily,
    mesh: &StructuredMesh,
    rule: &QuadratureRule,
) -> Result<SparseOperator> {
    let bq = BoundaryQuadrature::new(fam, mesh, rule)?;
    Ok(bq.matrix(&alloc::vec![0.0; mesh.num_nodes()], |_| 1.0))
}

/// Plain `H^1` Gram matrix `∫ ∇u·∇v + u v` on the reference square.
pub fn assemble_h1_gram(mesh: &StructuredMesh, rule: &QuadratureRule) -> Result<SparseOperator> {
    assemble_volume(mesh, rule, |_| {
        Ok(Coefficients { diffusion: [[1.0, 0.0], [0.0, 1.0]], convection: [0.0; 2], reaction: 1.0 })
    })
}

/// Canonical-metric operator for the linear family `x2 + x2 eps sin(x1/eps)`:
/// `∫ (B∇u)·(B∇(ψ/|Dh|)) |Dh| + a ∫ u ψ`. Nonsymmetric.
pub fn assemble_stiffness_canonical(
    eps: f64,
    mesh: &StructuredMesh,
    rule: &QuadratureRule,
    a: f64,
) -> Result<SparseOperator> {
    let fam = DiffeoFamily::new(eps, Profile::Linear)?;
    assemble_canonical_for(&fam, mesh, rule, a)
}

pub(crate) fn assemble_canonical_for(
    fam: &DiffeoFamily,
    mesh: &StructuredMesh,
    rule: &QuadratureRule,
    a: f64,
) -> Result<SparseOperator> {
    if fam.profile() != Profile::Linear {
        return Err(Error::ProfileMismatch);
    }
    let eps = fam.epsilon();
    assemble_volume(mesh, rule, |x| {
        let det = fam.jacobian_det(x)?;
        let metric = fam.inv_transpose_jacobian(x)?.metric();
        // ∇|Dh| = (cos(x1/eps), 0) for the linear profile
        let grad_det = if fam.is_limit() { [0.0, 0.0] } else { [cos(x[0] / eps), 0.0] };
        let convection = [
            -(metric[0][0] * grad_det[0] + metric[0][1] * grad_det[1]) / det,
            -(metric[1][0] * grad_det[0] + metric[1][1] * grad_det[1]) / det,
        ];
        Ok(Coefficients { diffusion: metric, convection, reaction: a })
    })
}

/// Limit of the canonical-metric operator:
/// `(-Δ + a) + ½∫ x2² u_{x2} ψ_{x2} + ½∫ x2 u_{x2} ψ`.
pub fn assemble_limit_anomalous(mesh: &StructuredMesh, rule: &QuadratureRule, a: f64) -> Result<SparseOperator> {
    assemble_volume(mesh, rule, |x| {
        Ok(Coefficients {
            diffusion: [[1.0, 0.0], [0.0, 1.0 + 0.5 * x[1] * x[1]]],
            convection: [0.0, 0.5 * x[1]],
            reaction: a,
        })
    })
}

/// Integrands of the two extra first-order terms produced by the canonical
/// pull-back under the `x2 eps^(2 - x2)` profile, evaluated on probe pairs.
/// Returns `(∫ -x2 eps^(1-x2) ln eps cos(x1/eps) u_{x1} ψ, ∫ x2² eps^(2-2x2) ln eps cos²(x1/eps) u_{x2} ψ)`.
pub fn graded_profile_extra_terms(
    eps: f64,
    mesh: &StructuredMesh,
    rule: &QuadratureRule,
    u: &[f64],
    psi: &[f64],
) -> (f64, f64) {
    let table = reference_table(mesh, rule);
    let (hx, hy) = (mesh.hx(), mesh.hy());
    let ln = log(eps);
    let (mut t1, mut t2) = (0.0, 0.0);
    for e in 0..mesh.num_elements() {
        let origin = mesh.element_origin(e);
        let nodes = mesh.element_nodes(e);
        for p in &table {
            let x = [origin[0] + p.xi * hx, origin[1] + p.eta * hy];
            let mut grad = [0.0; 2];
            let mut val = 0.0;
            for k in 0..4 {
                grad[0] += u[nodes[k]] * p.dn[k][0];
                grad[1] += u[nodes[k]] * p.dn[k][1];
                val += psi[nodes[k]] * p.n[k];
            }
            let c = cos(x[0] / eps);
            t1 += p.weight * (-x[1] * pow(eps, 1.0 - x[1]) * ln * c) * grad[0] * val;
            t2 += p.weight * (x[1] * x[1] * pow(eps, 2.0 - 2.0 * x[1]) * ln * c * c) * grad[1] * val;
        }
    }
    (t1, t2)
}

/// Precomputed `|Dh|`-weighted volume quadrature for nonlinear loads.
#[derive(Clone, Debug)]
pub struct VolumeQuadrature {
    mesh: StructuredMesh,
    shapes: Vec<[f64; 4]>,
    /// `weights[e * shapes.len() + q]`, includes element area and `|Dh|`.
    weights: Vec<f64>,
}

impl VolumeQuadrature {
    pub fn new(fam: &DiffeoFamily, mesh: &StructuredMesh, rule: &QuadratureRule) -> Result<Self> {
        let table = reference_table(mesh, rule);
        let (hx, hy) = (mesh.hx(), mesh.hy());
        let mut weights = Vec::with_capacity(table.len() * mesh.num_elements());
        for e in 0..mesh.num_elements() {
            let origin = mesh.element_origin(e);
            for p in &table {
                let x = [origin[0] + p.xi * hx, origin[1] + p.eta * hy];
                weights.push(p.weight * fam.jacobian_det(x)?);
            }
        }
        Ok(VolumeQuadrature { mesh: mesh.clone(), shapes: table.iter().map(|p| p.n).collect(), weights })
    }

    fn for_each_point<F: FnMut([usize; 4], &[f64; 4], f64, f64)>(&self, u: &[f64], mut visit: F) {
        let nq = self.shapes.len();
        for e in 0..self.mesh.num_elements() {
            let nodes = self.mesh.element_nodes(e);
            let local = nodes.map(|k| u[k]);
            for (q, n) in self.shapes.iter().enumerate() {
                let uh = n[0] * local[0] + n[1] * local[1] + n[2] * local[2] + n[3] * local[3];
                visit(nodes, n, self.weights[e * nq + q], uh);
            }
        }
    }

    /// `∫ f(u_h) φ_i |Dh|` for every node `i`.
    pub fn load<F: Fn(f64) -> f64>(&self, u: &[f64], f: F) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.mesh.num_nodes()];
        self.for_each_point(u, |nodes, n, w, uh| {
            let fw = w * f(uh);
            for k in 0..4 {
                out[nodes[k]] += fw * n[k];
            }
        });
        out
    }

    /// `∫ F(u_h) |Dh|`.
    pub fn integral<F: Fn(f64) -> f64>(&self, u: &[f64], f: F) -> f64 {
        let mut total = 0.0;
        self.for_each_point(u, |_, _, w, uh| total += w * f(uh));
        total
    }

    /// `∫ f'(u_h) φ_j φ_i |Dh|`.
    pub fn matrix<F: Fn(f64) -> f64>(&self, u: &[f64], df: F) -> SparseOperator {
        let mut out = SparseOperator::q1_pattern(&self.mesh);
        let nq = self.shapes.len();
        for e in 0..self.mesh.num_elements() {
            let nodes = self.mesh.element_nodes(e);
            let local_u = nodes.map(|k| u[k]);
            let mut local = [[0.0; 4]; 4];
            for (q, n) in self.shapes.iter().enumerate() {
                let uh = n[0] * local_u[0] + n[1] * local_u[1] + n[2] * local_u[2] + n[3] * local_u[3];
                let w = self.weights[e * nq + q] * df(uh);
                for a in 0..4 {
                    for b in 0..4 {
                        local[a][b] += w * n[a] * n[b];
                    }
                }
            }
            out.add_local(&nodes, &local);
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
struct BoundaryPoint {
    nodes: [usize; 2],
    shape: [f64; 2],
    weight: f64,
}

/// Boundary quadrature weighted by the boundary length distortion.
#[derive(Clone, Debug)]
pub struct BoundaryQuadrature {
    mesh: StructuredMesh,
    points: Vec<BoundaryPoint>,
}

impl BoundaryQuadrature {
    pub fn new(fam: &DiffeoFamily, mesh: &StructuredMesh, rule: &QuadratureRule) -> Result<Self> {
        let mut points = Vec::new();
        for edge in mesh.boundary_edges() {
            let horizontal = matches!(edge.side, Side::Top | Side::Bottom);
            let len = edge.span[1] - edge.span[0];
            for (t, w) in rule.edge_points(horizontal) {
                let s = edge.span[0] + t * len;
                let weight = w * len * fam.boundary_jacobian(edge.side, s)?;
                points.push(BoundaryPoint { nodes: edge.nodes, shape: [1.0 - t, t], weight });
            }
        }
        Ok(BoundaryQuadrature { mesh: mesh.clone(), points })
    }

    /// `∫_{∂Ω} g(γu) γφ_i w_∂`; zero on interior nodes.
    pub fn load<F: Fn(f64) -> f64>(&self, u: &[f64], g: F) -> Vec<f64> {
        let mut out = alloc::vec![0.0; self.mesh.num_nodes()];
        for p in &self.points {
            let uh = p.shape[0] * u[p.nodes[0]] + p.shape[1] * u[p.nodes[1]];
            let gw = p.weight * g(uh);
            out[p.nodes[0]] += gw * p.shape[0];
            out[p.nodes[1]] += gw * p.shape[1];
        }
        out
    }

    pub fn integral<F: Fn(f64) -> f64>(&self, u: &[f64], g: F) -> f64 {
        self.points
            .iter()
            .map(|p| p.weight * g(p.shape[0] * u[p.nodes[0]] + p.shape[1] * u[p.nodes[1]]))
            .sum()
    }

    /// `∫_{∂Ω} g'(γu_h) γφ_j γφ_i w_∂`.
    pub fn matrix<F: Fn(f64) -> f64>(&self, u: &[f64], dg: F) -> SparseOperator {
        let mut out = SparseOperator::q1_pattern(&self.mesh);
        for p in &self.points {
            let uh = p.shape[0] * u[p.nodes[0]] + p.shape[1] * u[p.nodes[1]];
            let w = p.weight * dg(uh);
            for a in 0..2 {
                for b in 0..2 {
                    out.add(p.nodes[a], p.nodes[b], w * p.shape[a] * p.shape[b]);
                }
            }
        }
        out
    }
}

/// Analytic `∫_0^1 sin(x1/eps) dx1`, used by tests and quadrature checks.
pub fn sin_integral(eps: f64) -> f64 {
    eps * (1.0 - cos(1.0 / eps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::boundary_average_limit;
    use crate::mesh::{oscillation_resolving_rule, DEFAULT_QUADRATURE_CAP};
    use crate::quadrature::adaptive_gauss;
    use libm::{sin, sqrt};

    fn setup(eps: f64, profile: Profile, n: usize) -> (DiffeoFamily, StructuredMesh, QuadratureRule) {
        let fam = if eps == 0.0 { DiffeoFamily::limit(profile) } else { DiffeoFamily::new(eps, profile).unwrap() };
        let mesh = StructuredMesh::new(n, n).unwrap();
        let rule = oscillation_resolving_rule(&fam, &mesh, DEFAULT_QUADRATURE_CAP).unwrap();
        (fam, mesh, rule)
    }

    #[test]
    fn mass_total_matches_jacobian_integral() {
        let (fam, mesh, rule) = setup(0.1, Profile::Graded, 16);
        let m = assemble_mass(&fam, &mesh, &rule).unwrap();
        let one = alloc::vec![1.0; mesh.num_nodes()];
        // ∫ J = 1 + sin_integral(eps) * (phi(1) - phi(0)) with phi(1) = eps
        let exact = 1.0 + 0.1 * sin_integral(0.1);
        assert!((m.quadratic(&one) - exact).abs() < 1e-9 * exact, "{} vs {exact}", m.quadratic(&one));
        assert!((m.quadratic(&one) - 1.018_390_7).abs() < 1e-7);
        assert!(m.asymmetry() < 1e-14);
    }

    #[test]
    fn boundary_mass_totals() {
        let (fam, mesh, rule) = setup(0.0, Profile::Graded, 16);
        let one = alloc::vec![1.0; mesh.num_nodes()];
        let b = assemble_boundary_mass(&fam, &mesh, &rule).unwrap();
        assert!((b.quadratic(&one) - (boundary_average_limit() + 3.0)).abs() < 1e-12);

        let (fam, mesh, rule) = setup(0.1, Profile::Graded, 16);
        let b = assemble_boundary_mass(&fam, &mesh, &rule).unwrap();
        let top = adaptive_gauss(0.0, 1.0, 1e-13, |s| sqrt(1.0 + cos(s / 0.1) * cos(s / 0.1)));
        let right = 1.0 + 0.1 * sin(10.0);
        assert!((right - 0.945_597_9).abs() < 1e-7);
        assert!((b.quadratic(&one) - (top + right + 2.0)).abs() < 1e-6 * (top + right + 2.0), "{} vs {}", b.quadratic(&one), top + right + 2.0);
    }

    #[test]
    fn adapted_form_values() {
        let (fam, mesh, rule) = setup(0.0, Profile::Graded, 16);
        let a = assemble_stiffness_adapted(&fam, &mesh, &rule, 0.5).unwrap();
        let one = alloc::vec![1.0; mesh.num_nodes()];
        let x2 = mesh.interpolate(|x| x[1]);
        assert!((a.quadratic(&one) - 0.5).abs() < 1e-12);
        // 1 + 0.5/3 up to the Q1 interpolation of x2 (exact for linear fields)
        assert!((a.quadratic(&x2) - 1.166_666_666_7).abs() < 1e-9);

        let (fam, mesh, rule) = setup(0.1, Profile::Graded, 16);
        let a = assemble_stiffness_adapted(&fam, &mesh, &rule, 0.5).unwrap();
        assert!((a.quadratic(&one) - 0.509_195_4).abs() < 1e-7);
        assert!(a.asymmetry() < 1e-13);
    }

    #[test]
    fn limit_adapted_stiffness_is_plain_fem() {
        let (fam, mesh, rule) = setup(0.0, Profile::Linear, 8);
        let a = assemble_stiffness_adapted(&fam, &mesh, &rule, 1.0).unwrap();
        let g = assemble_h1_gram(&mesh, &rule).unwrap();
        assert!(a.combine(1.0, &g, -1.0).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn anomalous_limit_on_probes() {
        let mesh = StructuredMesh::new(16, 16).unwrap();
        let rule = QuadratureRule::new(1, 3);
        let l = assemble_limit_anomalous(&mesh, &rule, 0.0).unwrap();
        let x1 = mesh.interpolate(|x| x[0]);
        let x2 = mesh.interpolate(|x| x[1]);
        // 1 + ½∫x2² + ½∫x2² = 4/3
        assert!((l.bilinear(&x2, &x2) - 4.0 / 3.0).abs() < 1e-12);
        assert!((l.bilinear(&x1, &x1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn canonical_limit_equals_neumann_laplacian() {
        let (_, mesh, rule) = setup(0.0, Profile::Linear, 8);
        let c = assemble_canonical_for(&DiffeoFamily::limit(Profile::Linear), &mesh, &rule, 0.5).unwrap();
        let a = assemble_stiffness_adapted(&DiffeoFamily::limit(Profile::Linear), &mesh, &rule, 0.5).unwrap();
        assert!(c.combine(1.0, &a, -1.0).unwrap().max_abs() < 1e-14);
        let graded = DiffeoFamily::new(0.1, Profile::Graded).unwrap();
        assert_eq!(assemble_canonical_for(&graded, &mesh, &rule, 0.5), Err(Error::ProfileMismatch));
    }

    #[test]
    fn canonical_form_is_nonsymmetric() {
        let (fam, mesh, rule) = setup(0.1, Profile::Linear, 8);
        let c = assemble_canonical_for(&fam, &mesh, &rule, 0.0).unwrap();
        assert!(c.asymmetry() > 1e-3);
    }

    #[test]
    fn volume_quadrature_agrees_with_mass() {
        let (fam, mesh, rule) = setup(0.1, Profile::Graded, 8);
        let vq = VolumeQuadrature::new(&fam, &mesh, &rule).unwrap();
        let m = assemble_mass(&fam, &mesh, &rule).unwrap();
        let u = mesh.interpolate(|x| x[0] - 2.0 * x[1]);
        assert!(vq.matrix(&u, |_| 1.0).combine(1.0, &m, -1.0).unwrap().max_abs() < 1e-15);
        let one = alloc::vec![1.0; mesh.num_nodes()];
        let load = vq.load(&u, |_| 1.0);
        let mu = m.mul_vec(&one);
        assert!(load.iter().zip(&mu).all(|(a, b)| (a - b).abs() < 1e-14));
        assert!((vq.integral(&u, |_| 1.0) - m.quadratic(&one)).abs() < 1e-13);
    }

    #[test]
    fn boundary_load_vanishes_inside() {
        let (fam, mesh, rule) = setup(0.05, Profile::Graded, 8);
        let bq = BoundaryQuadrature::new(&fam, &mesh, &rule).unwrap();
        let load = bq.load(&alloc::vec![0.7; mesh.num_nodes()], |v| v);
        for (k, v) in load.iter().enumerate() {
            if !mesh.is_boundary_node(k) {
                assert_eq!(*v, 0.0);
            }
        }
    }

    #[test]
    fn sin_integral_against_quadrature() {
        for eps in [0.2, 0.05, 0.013] {
            let q = adaptive_gauss(0.0, 1.0, 1e-12, |x| sin(x / eps));
            assert!((sin_integral(eps) - q).abs() < 1e-8);
        }
    }
}
