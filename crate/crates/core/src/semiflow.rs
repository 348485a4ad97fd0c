//! Nonlinearities, problem specification, the IMEX semiflow and its
//! Lyapunov functional.
//!
//! The evolution problem is `M u' + A u = F(u) + G(u)` where `A` already
//! contains the `a`-weighted mass term, `F` is the interior load of `f` and
//! `G` the boundary load of `g`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use libm::{exp, fabs, log, sqrt, tanh};

use crate::assembly::{
    assemble_boundary_mass, assemble_h1_gram, assemble_mass, assemble_stiffness_adapted, BoundaryQuadrature,
    VolumeQuadrature,
};
use crate::error::{Error, Result};
use crate::geometry::{DiffeoFamily, Profile};
use crate::linalg::cg_solve;
use crate::mesh::{oscillation_resolving_rule, QuadratureRule, StructuredMesh, DEFAULT_QUADRATURE_CAP};
use crate::sparse::{sub, SparseOperator};

/// Coefficient vector of a Q1 function, one entry per mesh node.
pub type NodalField = Vec<f64>;

/// Sup-norm level at which [`evolve`] gives up.
pub const BLOWUP_GUARD: f64 = 1e6;

/// Interior nonlinearity `f`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Reaction {
    Zero,
    /// `u - u^3` on `|u| <= clip`, continued linearly (C¹) outside, odd.
    CubicSaturated { clip: f64 },
}

impl Reaction {
    pub fn value(self, u: f64) -> f64 {
        match self {
            Reaction::Zero => 0.0,
            Reaction::CubicSaturated { clip } => {
                if fabs(u) <= clip {
                    u - u * u * u
                } else {
                    let r = clip.copysign(u);
                    (r - r * r * r) + (1.0 - 3.0 * r * r) * (u - r)
                }
            }
        }
    }

    pub fn derivative(self, u: f64) -> f64 {
        match self {
            Reaction::Zero => 0.0,
            Reaction::CubicSaturated { clip } => {
                let v = if fabs(u) <= clip { u } else { clip };
                1.0 - 3.0 * v * v
            }
        }
    }

    /// Primitive with `F(0) = 0`.
    pub fn primitive(self, u: f64) -> f64 {
        match self {
            Reaction::Zero => 0.0,
            Reaction::CubicSaturated { clip } => {
                let inner = |v: f64| 0.5 * v * v - 0.25 * v * v * v * v;
                if fabs(u) <= clip {
                    inner(u)
                } else {
                    let r = clip;
                    let s = fabs(u) - r;
                    inner(r) + (r - r * r * r) * s + 0.5 * (1.0 - 3.0 * r * r) * s * s
                }
            }
        }
    }

    /// `L` in `|f(u) - f(v)| <= L (1 + |u|^2 + |v|^2) |u - v|`.
    pub fn growth_constant(self) -> f64 {
        match self {
            Reaction::Zero => 0.0,
            Reaction::CubicSaturated { .. } => 3.0,
        }
    }

    /// `limsup_{|u|->inf} f(u) / u`.
    pub fn asymptotic_slope(self) -> f64 {
        match self {
            Reaction::Zero => 0.0,
            Reaction::CubicSaturated { clip } => 1.0 - 3.0 * clip * clip,
        }
    }
}

/// Boundary nonlinearity `g`.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum Flux {
    Zero,
    /// `d tanh(u)`.
    ScaledTanh { scale: f64 },
}

impl Flux {
    pub fn value(self, u: f64) -> f64 {
        match self {
            Flux::Zero => 0.0,
            Flux::ScaledTanh { scale } => scale * tanh(u),
        }
    }

    pub fn derivative(self, u: f64) -> f64 {
        match self {
            Flux::Zero => 0.0,
            Flux::ScaledTanh { scale } => {
                let t = tanh(u);
                scale * (1.0 - t * t)
            }
        }
    }

    /// `d ln cosh u`, evaluated as `d (|u| + ln(1 + e^{-2|u|}) - ln 2)`.
    pub fn primitive(self, u: f64) -> f64 {
        match self {
            Flux::Zero => 0.0,
            Flux::ScaledTanh { scale } => {
                let x = fabs(u);
                scale * (x + log(1.0 + exp(-2.0 * x)) - core::f64::consts::LN_2)
            }
        }
    }

    /// `L` in `|g(u) - g(v)| <= L (1 + |u| + |v|) |u - v|`.
    pub fn growth_constant(self) -> f64 {
        match self {
            Flux::Zero => 0.0,
            Flux::ScaledTanh { scale } => fabs(scale),
        }
    }

    /// `limsup_{|u|->inf} g(u) / u`.
    pub fn asymptotic_slope(self) -> f64 {
        0.0
    }
}

/// Solver tolerances.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct Tolerances {
    pub cg: f64,
    pub cg_maxit: usize,
    pub eigen: f64,
    pub newton: f64,
    pub newton_maxit: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { cg: 1e-12, cg_maxit: 20_000, eigen: 1e-9, newton: 1e-10, newton_maxit: 50 }
    }
}

/// Everything that defines a run, apart from the study-specific knobs.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ProblemSpec {
    pub a: f64,
    pub reaction: Reaction,
    pub flux: Flux,
    pub d0: f64,
    pub c0: f64,
    pub profile: Profile,
    /// Perturbation sizes, strictly decreasing and positive.
    pub epsilons: Vec<f64>,
    pub nx: usize,
    pub ny: usize,
    pub dt: f64,
    pub t_final: f64,
    pub quadrature_cap: usize,
    pub tolerances: Tolerances,
}

impl Default for ProblemSpec {
    fn default() -> Self {
        ProblemSpec {
            a: 0.5,
            reaction: Reaction::CubicSaturated { clip: 3.0 },
            flux: Flux::ScaledTanh { scale: 0.1 },
            d0: 0.1,
            c0: -0.5,
            profile: Profile::Graded,
            epsilons: alloc::vec![0.2, 0.1, 0.05],
            nx: 32,
            ny: 32,
            dt: 0.02,
            t_final: 10.0,
            quadrature_cap: DEFAULT_QUADRATURE_CAP,
            tolerances: Tolerances::default(),
        }
    }
}

fn violation(hypothesis: &'static str, detail: String) -> Error {
    Error::HypothesisViolation { hypothesis, detail }
}

/// Points at which the dissipativity ratios are sampled.
const FAR_FIELD: [f64; 4] = [-1e4, -1e3, 1e3, 1e4];

impl ProblemSpec {
    /// A spec with both nonlinearities switched off.
    pub fn linear(mut self) -> Self {
        self.reaction = Reaction::Zero;
        self.flux = Flux::Zero;
        self.c0 = 0.0;
        self
    }

    /// Checks the structural hypotheses: positivity of `a`, `dt`, tolerances,
    /// the growth bounds of `f` and `g`, and the dissipativity conditions
    /// `limsup f(u)/u <= c0` and `limsup g(u)/u = d0' < d0`.
    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(violation("coercivity: a > 0", alloc::format!("a = {}", self.a)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) || !(self.t_final >= 0.0) {
            return Err(violation("time stepping: dt > 0, t_final >= 0", alloc::format!("dt = {}, t_final = {}", self.dt, self.t_final)));
        }
        if self.nx < 2 || self.ny < 2 {
            return Err(Error::InvalidMeshSize { nx: self.nx, ny: self.ny });
        }
        let t = &self.tolerances;
        if !(t.cg > 0.0 && t.eigen > 0.0 && t.newton > 0.0) || t.cg_maxit == 0 || t.newton_maxit == 0 {
            return Err(violation("tolerances: positive", alloc::format!("{t:?}")));
        }
        for w in self.epsilons.windows(2) {
            if !(w[0] > w[1]) {
                return Err(violation("epsilon grid: strictly decreasing", alloc::format!("{} then {}", w[0], w[1])));
            }
        }
        for &eps in &self.epsilons {
            if !(eps > 0.0) {
                return Err(Error::InvalidEpsilon(eps));
            }
            DiffeoFamily::new(eps, self.profile)?;
        }
        if let Reaction::CubicSaturated { clip } = self.reaction {
            if !(clip > 0.0 && clip.is_finite()) {
                return Err(violation("reaction: clip radius > 0", alloc::format!("clip = {clip}")));
            }
        }
        if let Flux::ScaledTanh { scale } = self.flux {
            if !scale.is_finite() {
                return Err(violation("flux: finite scale", alloc::format!("scale = {scale}")));
            }
        }
        let slope_f = self.reaction.asymptotic_slope();
        let sampled_f = FAR_FIELD.iter().map(|&u| self.reaction.value(u) / u).fold(f64::NEG_INFINITY, f64::max);
        if slope_f > self.c0 || sampled_f > self.c0 + 1e-2 * (1.0 + fabs(self.c0)) {
            return Err(violation(
                "dissipativity: limsup f(u)/u <= c0",
                alloc::format!("limsup = {slope_f}, sampled = {sampled_f}, c0 = {}", self.c0),
            ));
        }
        let slope_g = self.flux.asymptotic_slope();
        let sampled_g = FAR_FIELD.iter().map(|&u| self.flux.value(u) / u).fold(f64::NEG_INFINITY, f64::max);
        if !(slope_g < self.d0) || !(sampled_g < self.d0) {
            return Err(violation(
                "dissipativity: d0' < d0",
                alloc::format!("d0' = {slope_g}, sampled = {sampled_g}, d0 = {}", self.d0),
            ));
        }
        Ok(())
    }

    pub fn mesh(&self) -> Result<StructuredMesh> {
        StructuredMesh::new(self.nx, self.ny)
    }

    pub fn family(&self, eps: f64) -> Result<DiffeoFamily> {
        DiffeoFamily::new(eps, self.profile)
    }
}

/// Assembled operators and quadratures for one `eps` on one mesh.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub family: DiffeoFamily,
    pub mesh: StructuredMesh,
    pub rule: QuadratureRule,
    /// Adapted stiffness including `a` times the weighted mass.
    pub stiffness: SparseOperator,
    pub mass: SparseOperator,
    pub boundary_mass: SparseOperator,
    /// Plain `H¹` Gram matrix of the reference square, for reporting norms.
    pub gram: SparseOperator,
    pub volume: VolumeQuadrature,
    pub boundary: BoundaryQuadrature,
    pub a: f64,
}

impl Discretization {
    pub fn new(family: DiffeoFamily, mesh: &StructuredMesh, a: f64, cap: usize) -> Result<Self> {
        let rule = oscillation_resolving_rule(&family, mesh, cap)?;
        Self::with_rule(family, mesh, rule, a)
    }

    pub fn with_rule(family: DiffeoFamily, mesh: &StructuredMesh, rule: QuadratureRule, a: f64) -> Result<Self> {
        Ok(Discretization {
            stiffness: assemble_stiffness_adapted(&family, mesh, &rule, a)?,
            mass: assemble_mass(&family, mesh, &rule)?,
            boundary_mass: assemble_boundary_mass(&family, mesh, &rule)?,
            gram: assemble_h1_gram(mesh, &QuadratureRule::new(1, 3))?,
            volume: VolumeQuadrature::new(&family, mesh, &rule)?,
            boundary: BoundaryQuadrature::new(&family, mesh, &rule)?,
            family,
            mesh: mesh.clone(),
            rule,
            a,
        })
    }

    /// Builds the discretization of `spec` at `eps` (0 for the limit problem).
    pub fn for_spec(spec: &ProblemSpec, eps: f64) -> Result<Self> {
        Self::new(spec.family(eps)?, &spec.mesh()?, spec.a, spec.quadrature_cap)
    }
}

/// `∫ f(u_h) φ_i |Dh|`.
pub fn apply_interior_load(reaction: Reaction, disc: &Discretization, u: &[f64]) -> Vec<f64> {
    match reaction {
        Reaction::Zero => alloc::vec![0.0; u.len()],
        _ => disc.volume.load(u, |v| reaction.value(v)),
    }
}

/// `∫_{∂Ω} g(γu_h) γφ_i w_∂`.
pub fn apply_boundary_load(flux: Flux, disc: &Discretization, u: &[f64]) -> Vec<f64> {
    match flux {
        Flux::Zero => alloc::vec![0.0; u.len()],
        _ => disc.boundary.load(u, |v| flux.value(v)),
    }
}

/// `F(u) + G(u)`.
pub fn nonlinear_load(spec: &ProblemSpec, disc: &Discretization, u: &[f64]) -> Vec<f64> {
    let mut h = apply_interior_load(spec.reaction, disc, u);
    for (hi, gi) in h.iter_mut().zip(apply_boundary_load(spec.flux, disc, u)) {
        *hi += gi;
    }
    h
}

/// `V(u) = ½ uᵀAu - ∫ F(u_h)|Dh| - ∫_{∂Ω} G(γu_h) w_∂`, with the primitives
/// vanishing at zero and the same quadrature as the loads.
pub fn lyapunov_value(spec: &ProblemSpec, disc: &Discretization, u: &[f64]) -> f64 {
    let quadratic = 0.5 * disc.stiffness.quadratic(u);
    let interior = match spec.reaction {
        Reaction::Zero => 0.0,
        r => disc.volume.integral(u, |v| r.primitive(v)),
    };
    let boundary = match spec.flux {
        Flux::Zero => 0.0,
        g => disc.boundary.integral(u, |v| g.primitive(v)),
    };
    quadratic - interior - boundary
}

/// Linear-implicit, nonlinear-explicit Euler stepper with a fixed `dt`.
#[derive(Clone, Debug)]
pub struct ImexStepper<'a> {
    spec: &'a ProblemSpec,
    disc: &'a Discretization,
    system: SparseOperator,
    dt: f64,
}

impl<'a> ImexStepper<'a> {
    pub fn new(spec: &'a ProblemSpec, disc: &'a Discretization, dt: f64) -> Result<Self> {
        let system = disc.mass.combine(1.0, &disc.stiffness, dt)?;
        Ok(ImexStepper { spec, disc, system, dt })
    }

    /// Solves `(M + dt A) u₁ = M u₀ + dt (F(u₀) + G(u₀))`, starting CG from `u₀`.
    pub fn step(&self, u: &[f64]) -> Result<NodalField> {
        let mut rhs = self.disc.mass.mul_vec(u);
        for (r, h) in rhs.iter_mut().zip(nonlinear_load(self.spec, self.disc, u)) {
            *r += self.dt * h;
        }
        let tol = &self.spec.tolerances;
        cg_solve(&self.system, &rhs, Some(u), tol.cg, tol.cg_maxit).map(|(x, _)| x)
    }
}

/// One step of [`ImexStepper`]; builds the system matrix each call.
pub fn imex_step(spec: &ProblemSpec, disc: &Discretization, u: &[f64], dt: f64) -> Result<NodalField> {
    ImexStepper::new(spec, disc, dt)?.step(u)
}

/// A computed trajectory. `lyapunov[n]` is `V` at `times[n]`; `states` holds
/// the snapshots selected by the stride passed to [`evolve`].
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub lyapunov: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
    /// Plain `H¹` norm of the state.
    pub h1: Vec<f64>,
    pub snapshot_times: Vec<f64>,
    pub states: Vec<NodalField>,
}

impl Trajectory {
    pub fn last_state(&self) -> Option<&NodalField> {
        self.states.last()
    }

    /// Steps where `V` grew by more than `rel * (1 + |V_n|)`.
    pub fn lyapunov_violations(&self, rel: f64) -> Vec<usize> {
        self.lyapunov
            .windows(2)
            .enumerate()
            .filter(|(_, w)| w[1] > w[0] + rel * (1.0 + fabs(w[0])))
            .map(|(n, _)| n)
            .collect()
    }
}

/// Number of steps of size `dt` to reach `t`, rounded to nearest.
pub fn step_count(t: f64, dt: f64) -> usize {
    libm::round(t / dt) as usize
}

/// Runs the IMEX scheme for `steps` steps of `spec.dt`, keeping every
/// `stride`-th state (and always the last). `stride = 0` keeps only the last.
pub fn evolve(spec: &ProblemSpec, disc: &Discretization, u0: &[f64], steps: usize, stride: usize) -> Result<Trajectory> {
    let stepper = ImexStepper::new(spec, disc, spec.dt)?;
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        lyapunov: Vec::with_capacity(steps + 1),
        min: Vec::with_capacity(steps + 1),
        max: Vec::with_capacity(steps + 1),
        h1: Vec::with_capacity(steps + 1),
        snapshot_times: Vec::new(),
        states: Vec::new(),
    };
    let mut u = u0.to_vec();
    for n in 0..=steps {
        if n > 0 {
            u = stepper.step(&u)?;
        }
        let t = n as f64 * spec.dt;
        let (lo, hi) = u.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        let sup = fabs(lo).max(fabs(hi));
        if !(sup <= BLOWUP_GUARD) {
            return Err(Error::BlowupDetected { time: t, sup_norm: sup });
        }
        traj.times.push(t);
        traj.lyapunov.push(lyapunov_value(spec, disc, &u));
        traj.min.push(lo);
        traj.max.push(hi);
        traj.h1.push(sqrt(disc.gram.quadratic(&u).max(0.0)));
        let keep = (stride > 0 && n % stride == 0) || n == steps;
        if keep {
            traj.snapshot_times.push(t);
            traj.states.push(u.clone());
        }
    }
    Ok(traj)
}

/// Discrete `L²` and `H¹` norms on the reference square, independent of `eps`.
#[derive(Clone, Debug)]
pub struct ReferenceNorms {
    pub mass: SparseOperator,
    pub gram: SparseOperator,
}

impl ReferenceNorms {
    pub fn new(mesh: &StructuredMesh) -> Result<Self> {
        let rule = QuadratureRule::new(1, 3);
        let lim = DiffeoFamily::limit(Profile::Graded);
        Ok(ReferenceNorms { mass: assemble_mass(&lim, mesh, &rule)?, gram: assemble_h1_gram(mesh, &rule)? })
    }

    pub fn l2(&self, u: &[f64]) -> f64 {
        sqrt(self.mass.quadratic(u).max(0.0))
    }

    pub fn h1(&self, u: &[f64]) -> f64 {
        sqrt(self.gram.quadratic(u).max(0.0))
    }

    pub fn l2_distance(&self, u: &[f64], v: &[f64]) -> f64 {
        self.l2(&sub(u, v))
    }

    pub fn h1_distance(&self, u: &[f64], v: &[f64]) -> f64 {
        self.h1(&sub(u, v))
    }
}

/// Short human-readable name of a reaction, for reports.
pub fn reaction_label(r: Reaction) -> String {
    match r {
        Reaction::Zero => "zero".to_string(),
        Reaction::CubicSaturated { clip } => alloc::format!("cubic(clip={clip})"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::boundary_average_limit;

    fn cubic() -> ProblemSpec {
        ProblemSpec { flux: Flux::Zero, nx: 8, ny: 8, ..ProblemSpec::default() }
    }

    #[test]
    fn reaction_is_c1_at_clip() {
        let f = Reaction::CubicSaturated { clip: 2.0 };
        let h = 1e-7;
        for u in [2.0, -2.0] {
            assert!((f.value(u + h) - f.value(u - h)).abs() < 1e-5);
            let fd = (f.primitive(u + h) - f.primitive(u - h)) / (2.0 * h);
            assert!((fd - f.value(u)).abs() < 1e-6);
        }
        assert_eq!(f.derivative(5.0), -11.0);
        assert_eq!(f.value(-3.0), -f.value(3.0));
    }

    #[test]
    fn flux_primitive_is_stable() {
        let g = Flux::ScaledTanh { scale: 0.1 };
        assert!((g.primitive(1.0) - 0.1 * libm::log(libm::cosh(1.0))).abs() < 1e-15);
        assert!((g.primitive(800.0) - 0.1 * (800.0 - core::f64::consts::LN_2)).abs() < 1e-10);
    }

    #[test]
    fn default_spec_validates() {
        ProblemSpec::default().validate().unwrap();
        ProblemSpec::default().linear().validate().unwrap();
    }

    #[test]
    fn rejects_non_dissipative_boundary() {
        let spec = ProblemSpec { d0: -1.0, ..ProblemSpec::default() };
        match spec.validate() {
            Err(Error::HypothesisViolation { hypothesis, .. }) => assert!(hypothesis.contains("d0' < d0")),
            other => panic!("unexpected {other:?}"),
        }
        let spec = ProblemSpec { c0: -100.0, ..ProblemSpec::default() };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn constant_field_loads() {
        let spec = cubic();
        let disc = Discretization::for_spec(&spec, 0.0).unwrap();
        let n = disc.mesh.num_nodes();
        let ones = alloc::vec![1.0; n];
        let half = alloc::vec![0.5; n];
        let m1 = disc.mass.mul_vec(&ones);
        let load = apply_interior_load(spec.reaction, &disc, &half);
        for (l, m) in load.iter().zip(&m1) {
            assert!((l - 0.375 * m).abs() < 1e-14);
        }
        assert!(apply_interior_load(spec.reaction, &disc, &alloc::vec![0.0; n]).iter().all(|v| *v == 0.0));
        let g = Flux::ScaledTanh { scale: 0.1 };
        let total: f64 = apply_boundary_load(g, &disc, &ones).iter().sum();
        let expected = 0.1 * libm::tanh(1.0) * (boundary_average_limit() + 3.0);
        assert!((total - expected).abs() < 1e-12);
        let bl = apply_boundary_load(g, &disc, &ones);
        for k in 0..n {
            if !disc.mesh.is_boundary_node(k) {
                assert_eq!(bl[k], 0.0);
            }
        }
    }

    #[test]
    fn lyapunov_anchors() {
        let spec = cubic();
        let disc = Discretization::for_spec(&spec, 0.0).unwrap();
        let n = disc.mesh.num_nodes();
        assert_eq!(lyapunov_value(&spec, &disc, &alloc::vec![0.0; n]), 0.0);
        assert!(lyapunov_value(&spec, &disc, &alloc::vec![1.0; n]).abs() < 1e-12);
        let v = lyapunov_value(&spec, &disc, &alloc::vec![sqrt(0.5); n]);
        assert!((v + 0.0625).abs() < 1e-12);
    }

    #[test]
    fn linear_decay_of_constants() {
        let spec = ProblemSpec { dt: 0.1, nx: 6, ny: 6, ..ProblemSpec::default() }.linear();
        let disc = Discretization::for_spec(&spec, 0.0).unwrap();
        let n = disc.mesh.num_nodes();
        let u1 = imex_step(&spec, &disc, &alloc::vec![2.0; n], 0.1).unwrap();
        assert!(u1.iter().all(|v| (v - 2.0 / 1.05).abs() < 1e-10));
        let traj = evolve(&spec, &disc, &alloc::vec![1.0; n], step_count(1.0, 0.1), 0).unwrap();
        let expected = libm::pow(1.0 / 1.05, 10.0);
        assert!(traj.last_state().unwrap().iter().all(|v| (v - expected).abs() < 1e-10));
        assert!(traj.lyapunov_violations(1e-12).is_empty());
    }

    #[test]
    fn blowup_guard_trips() {
        let spec = ProblemSpec { nx: 4, ny: 4, ..ProblemSpec::default() }.linear();
        let disc = Discretization::for_spec(&spec, 0.0).unwrap();
        let u0 = alloc::vec![2e6; disc.mesh.num_nodes()];
        assert!(matches!(evolve(&spec, &disc, &u0, 3, 1), Err(Error::BlowupDetected { .. })));
    }
}
