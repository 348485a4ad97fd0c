//! Closed-form evaluation of the oscillating perturbation family
//! `h(x1, x2) = (x1, x2 + phi(x2, eps) * sin(x1 / eps))` of the unit square.
//!
//! `eps = 0` is a tagged limit case: the map is the identity and the top
//! boundary weight becomes the homogenized mean of `sqrt(1 + cos^2)`.

use core::f64::consts::PI;
use core::sync::atomic::{AtomicU64, Ordering};

use libm::{cos, log, pow, sin, sqrt};

use crate::error::{Error, Result};
use crate::quadrature::adaptive_gauss;

pub type Point = [f64; 2];

/// Grid resolution of the positivity scan run at construction.
pub const POSITIVITY_SCAN: usize = 512;
/// Smallest Jacobian determinant accepted by the positivity scan.
pub const MIN_JACOBIAN: f64 = 0.05;

/// Vertical amplitude profile of the perturbation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Profile {
    /// `phi(x2, eps) = x2 * eps^(2 - x2)`.
    Graded,
    /// `phi(x2, eps) = x2 * eps`.
    Linear,
}

impl Profile {
    pub fn value(self, x2: f64, eps: f64) -> f64 {
        match self {
            Profile::Graded => x2 * pow(eps, 2.0 - x2),
            Profile::Linear => x2 * eps,
        }
    }

    /// Partial derivative with respect to `x2`.
    pub fn dx2(self, x2: f64, eps: f64) -> f64 {
        match self {
            Profile::Graded => pow(eps, 2.0 - x2) * (1.0 - x2 * log(eps)),
            Profile::Linear => eps,
        }
    }
}

/// One side of the unit square.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    /// `x2 = 1`, the oscillating side.
    Top,
    /// `x1 = 1`.
    Right,
    /// `x2 = 0`.
    Bottom,
    /// `x1 = 0`.
    Left,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Top, Side::Right, Side::Bottom, Side::Left];
}

/// Entries of `(Dh)^{-T}`; the first column is always `(1, 0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InvTransposeJacobian {
    pub b11: f64,
    pub b12: f64,
    pub b21: f64,
    pub b22: f64,
}

impl InvTransposeJacobian {
    pub const IDENTITY: Self = InvTransposeJacobian { b11: 1.0, b12: 0.0, b21: 0.0, b22: 1.0 };

    /// `B^T B`, the metric acting on reference gradients.
    pub fn metric(&self) -> [[f64; 2]; 2] {
        let m11 = self.b11 * self.b11 + self.b21 * self.b21;
        let m12 = self.b11 * self.b12 + self.b21 * self.b22;
        let m22 = self.b12 * self.b12 + self.b22 * self.b22;
        [[m11, m12], [m12, m22]]
    }

    /// Transported gradient `B * g`.
    pub fn apply(&self, g: [f64; 2]) -> [f64; 2] {
        [self.b11 * g[0] + self.b12 * g[1], self.b21 * g[0] + self.b22 * g[1]]
    }
}

/// A member of the perturbation family at a fixed `eps`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffeoFamily {
    epsilon: f64,
    profile: Profile,
}

impl DiffeoFamily {
    /// The `eps = 0` limit: identity map, homogenized boundary weight.
    pub fn limit(profile: Profile) -> Self {
        DiffeoFamily { epsilon: 0.0, profile }
    }

    /// Builds the family member at `epsilon > 0`, rejecting values for which the
    /// Jacobian determinant drops below [`MIN_JACOBIAN`] on a
    /// [`POSITIVITY_SCAN`]-square sampling grid.
    pub fn new(epsilon: f64, profile: Profile) -> Result<Self> {
        if epsilon == 0.0 {
            return Ok(Self::limit(profile));
        }
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        let fam = DiffeoFamily { epsilon, profile };
        let n = POSITIVITY_SCAN;
        let step = 1.0 / (n - 1) as f64;
        let mut worst = (f64::INFINITY, 0.0, 0.0);
        for j in 0..n {
            let x2 = j as f64 * step;
            let slope = profile.dx2(x2, epsilon);
            for i in 0..n {
                let x1 = i as f64 * step;
                let det = 1.0 + slope * sin(x1 / epsilon);
                if det < worst.0 {
                    worst = (det, x1, x2);
                }
            }
        }
        if worst.0 <= MIN_JACOBIAN {
            return Err(Error::NonPositiveJacobian { x1: worst.1, x2: worst.2, value: worst.0 });
        }
        Ok(fam)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn is_limit(&self) -> bool {
        self.epsilon == 0.0
    }

    pub fn map_point(&self, x: Point) -> Point {
        if self.is_limit() {
            return x;
        }
        let e = self.epsilon;
        [x[0], x[1] + self.profile.value(x[1], e) * sin(x[0] / e)]
    }

    /// `Dh` as `[[dh1/dx1, dh1/dx2], [dh2/dx1, dh2/dx2]]`.
    pub fn jacobian(&self, x: Point) -> [[f64; 2]; 2] {
        if self.is_limit() {
            return [[1.0, 0.0], [0.0, 1.0]];
        }
        let e = self.epsilon;
        let t = x[0] / e;
        let phi = self.profile.value(x[1], e);
        let dphi = self.profile.dx2(x[1], e);
        [[1.0, 0.0], [phi * cos(t) / e, 1.0 + dphi * sin(t)]]
    }

    fn det_unchecked(&self, x: Point) -> f64 {
        if self.is_limit() {
            return 1.0;
        }
        let e = self.epsilon;
        1.0 + self.profile.dx2(x[1], e) * sin(x[0] / e)
    }

    pub fn jacobian_det(&self, x: Point) -> Result<f64> {
        let det = self.det_unchecked(x);
        if det > 0.0 {
            Ok(det)
        } else {
            Err(Error::NonPositiveJacobian { x1: x[0], x2: x[1], value: det })
        }
    }

    pub fn inv_transpose_jacobian(&self, x: Point) -> Result<InvTransposeJacobian> {
        if self.is_limit() {
            return Ok(InvTransposeJacobian::IDENTITY);
        }
        let det = self.jacobian_det(x)?;
        let e = self.epsilon;
        let phi = self.profile.value(x[1], e);
        Ok(InvTransposeJacobian {
            b11: 1.0,
            b12: -phi * cos(x[0] / e) / e / det,
            b21: 0.0,
            b22: 1.0 / det,
        })
    }

    /// Length distortion of the boundary map on `side` at arclength parameter `s`
    /// (`x1` on the horizontal sides, `x2` on the vertical ones).
    pub fn boundary_jacobian(&self, side: Side, s: f64) -> Result<f64> {
        match side {
            Side::Bottom | Side::Left => Ok(1.0),
            Side::Top if self.is_limit() => Ok(boundary_average_limit()),
            Side::Top => {
                let c = cos(s / self.epsilon);
                Ok(sqrt(1.0 + c * c))
            }
            Side::Right if self.is_limit() => Ok(1.0),
            Side::Right => {
                let e = self.epsilon;
                let w = 1.0 + self.profile.dx2(s, e) * sin(1.0 / e);
                if w < 0.0 {
                    Err(Error::NegativeBoundaryWeight { s, value: w })
                } else {
                    Ok(w)
                }
            }
        }
    }
}

static BOUNDARY_MEAN_BITS: AtomicU64 = AtomicU64::new(0);

/// Mean over one period of `p(y) = sqrt(1 + cos^2 y)`, to absolute accuracy 1e-12.
///
/// The value is computed once and cached.
pub fn boundary_average_limit() -> f64 {
    let bits = BOUNDARY_MEAN_BITS.load(Ordering::Relaxed);
    if bits != 0 {
        return f64::from_bits(bits);
    }
    let integral = adaptive_gauss(0.0, PI, 1e-12 * PI, |y| {
        let c = cos(y);
        sqrt(1.0 + c * c)
    });
    let mean = integral / PI;
    BOUNDARY_MEAN_BITS.store(mean.to_bits(), Ordering::Relaxed);
    mean
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_case() {
        let fam = DiffeoFamily::limit(Profile::Graded);
        assert_eq!(fam.map_point([0.3, 0.7]), [0.3, 0.7]);
        assert_eq!(fam.jacobian_det([0.3, 0.7]).unwrap(), 1.0);
        assert_eq!(fam.inv_transpose_jacobian([0.2, 0.1]).unwrap(), InvTransposeJacobian::IDENTITY);
    }

    #[test]
    fn crest_of_top_boundary() {
        let fam = DiffeoFamily::new(0.1, Profile::Graded).unwrap();
        let x = [PI * 0.05, 1.0];
        let y = fam.map_point(x);
        assert!((y[0] - 0.157_079_632_679_489_66).abs() < 1e-15);
        assert!((y[1] - 1.1).abs() < 1e-14);
        assert_eq!(fam.map_point([0.0, 0.5]), [0.0, 0.5]);
        assert!((fam.jacobian_det(x).unwrap() - 1.330_258_509_299_404_6).abs() < 1e-12);
        assert_eq!(fam.jacobian_det([0.0, 0.37]).unwrap(), 1.0);
    }

    #[test]
    fn inverse_transpose_at_origin_of_top() {
        let fam = DiffeoFamily::new(0.1, Profile::Graded).unwrap();
        let b = fam.inv_transpose_jacobian([0.0, 1.0]).unwrap();
        assert!((b.b12 + 1.0).abs() < 1e-14);
        assert!((b.b22 - 1.0).abs() < 1e-14);
        assert_eq!((b.b11, b.b21), (1.0, 0.0));
    }

    #[test]
    fn boundary_weights() {
        let fam = DiffeoFamily::new(0.1, Profile::Graded).unwrap();
        assert_eq!(fam.boundary_jacobian(Side::Bottom, 0.4).unwrap(), 1.0);
        assert_eq!(fam.boundary_jacobian(Side::Left, 0.4).unwrap(), 1.0);
        assert!((fam.boundary_jacobian(Side::Top, 0.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let lim = DiffeoFamily::limit(Profile::Graded);
        assert!((lim.boundary_jacobian(Side::Top, 0.3).unwrap() - 1.216_006_723_425).abs() < 1e-10);
        assert_eq!(lim.boundary_jacobian(Side::Right, 0.3).unwrap(), 1.0);
    }

    #[test]
    fn rejects_large_epsilon() {
        assert!(matches!(
            DiffeoFamily::new(10.0, Profile::Graded),
            Err(Error::NonPositiveJacobian { .. })
        ));
        assert!(matches!(DiffeoFamily::new(-0.1, Profile::Graded), Err(Error::InvalidEpsilon(_))));
        assert!(DiffeoFamily::new(0.2, Profile::Graded).is_ok());
    }

    #[test]
    fn boundary_mean_bounds() {
        let m = boundary_average_limit();
        assert!(m > 1.0 && m < 2f64.sqrt());
        assert_eq!(m, boundary_average_limit());
    }
}
