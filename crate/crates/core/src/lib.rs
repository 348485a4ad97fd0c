//! Finite-element laboratory for semilinear parabolic problems on rapidly
//! oscillating perturbations of the unit square, pulled back to the fixed
//! square.
//!
//! The crate is `no_std` with `alloc`; IO, CLI and threading live in the
//! companion `oscsq` crate.

#![no_std]
// NaN has to fail the `!(x > y)` style checks; index loops mirror the formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

extern crate alloc;

pub mod assembly;
pub mod equilibria;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod quadrature;
pub mod semiflow;
pub mod sparse;

pub use error::{Error, Result};
pub use geometry::{DiffeoFamily, Profile, Side};
pub use mesh::{QuadratureRule, StructuredMesh};
pub use sparse::SparseOperator;
