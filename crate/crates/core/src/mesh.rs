//! Structured bilinear (Q1) mesh of the unit square and the composite
//! Gauss rules used to integrate oscillatory coefficients on it.

use alloc::vec::Vec;
use core::f64::consts::PI;

use libm::ceil;

use crate::error::{Error, Result};
use crate::geometry::{DiffeoFamily, Point, Side};
use crate::quadrature::GaussLegendre;

/// Default cap on the number of volume quadrature points per assembly.
pub const DEFAULT_QUADRATURE_CAP: usize = 50_000_000;

/// `nx` by `ny` cells on `[0,1]^2`, nodes numbered row-major from the
/// bottom-left corner (`node = j * (nx + 1) + i`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructuredMesh {
    nx: usize,
    ny: usize,
}

/// A boundary edge: its two end nodes, side tag and parameter interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub side: Side,
    /// Parameter range along the side (`x1` for top/bottom, `x2` for left/right).
    pub span: [f64; 2],
}

impl StructuredMesh {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        if nx < 2 || ny < 2 {
            return Err(Error::InvalidMeshSize { nx, ny });
        }
        Ok(StructuredMesh { nx, ny })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn hx(&self) -> f64 {
        1.0 / self.nx as f64
    }

    pub fn hy(&self) -> f64 {
        1.0 / self.ny as f64
    }

    pub fn num_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn num_elements(&self) -> usize {
        self.nx * self.ny
    }

    pub fn node_index(&self, i: usize, j: usize) -> usize {
        j * (self.nx + 1) + i
    }

    pub fn node(&self, k: usize) -> Point {
        let i = k % (self.nx + 1);
        let j = k / (self.nx + 1);
        [i as f64 * self.hx(), j as f64 * self.hy()]
    }

    pub fn nodes(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.num_nodes()).map(move |k| self.node(k))
    }

    /// Counterclockwise node list of element `e`, starting bottom-left.
    pub fn element_nodes(&self, e: usize) -> [usize; 4] {
        let i = e % self.nx;
        let j = e / self.nx;
        [
            self.node_index(i, j),
            self.node_index(i + 1, j),
            self.node_index(i + 1, j + 1),
            self.node_index(i, j + 1),
        ]
    }

    /// Bottom-left corner of element `e`.
    pub fn element_origin(&self, e: usize) -> Point {
        let i = e % self.nx;
        let j = e / self.nx;
        [i as f64 * self.hx(), j as f64 * self.hy()]
    }

    pub fn element_area(&self, _e: usize) -> f64 {
        self.hx() * self.hy()
    }

    pub fn is_boundary_node(&self, k: usize) -> bool {
        let i = k % (self.nx + 1);
        let j = k / (self.nx + 1);
        i == 0 || j == 0 || i == self.nx || j == self.ny
    }

    /// All boundary edges, grouped by side in [`Side::ALL`] order.
    pub fn boundary_edges(&self) -> Vec<BoundaryEdge> {
        let (nx, ny) = (self.nx, self.ny);
        let (hx, hy) = (self.hx(), self.hy());
        let mut edges = Vec::with_capacity(2 * (nx + ny));
        for i in 0..nx {
            edges.push(BoundaryEdge {
                nodes: [self.node_index(i, ny), self.node_index(i + 1, ny)],
                side: Side::Top,
                span: [i as f64 * hx, (i + 1) as f64 * hx],
            });
        }
        for j in 0..ny {
            edges.push(BoundaryEdge {
                nodes: [self.node_index(nx, j), self.node_index(nx, j + 1)],
                side: Side::Right,
                span: [j as f64 * hy, (j + 1) as f64 * hy],
            });
        }
        for i in 0..nx {
            edges.push(BoundaryEdge {
                nodes: [self.node_index(i, 0), self.node_index(i + 1, 0)],
                side: Side::Bottom,
                span: [i as f64 * hx, (i + 1) as f64 * hx],
            });
        }
        for j in 0..ny {
            edges.push(BoundaryEdge {
                nodes: [self.node_index(0, j), self.node_index(0, j + 1)],
                side: Side::Left,
                span: [j as f64 * hy, (j + 1) as f64 * hy],
            });
        }
        edges
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate<F: Fn(Point) -> f64>(&self, f: F) -> Vec<f64> {
        self.nodes().map(f).collect()
    }
}

/// Tensor Gauss rule per element, split into `panels_per_element` panels along `x1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuadratureRule {
    pub panels_per_element: usize,
    pub gauss_order: usize,
}

impl QuadratureRule {
    pub const fn new(panels_per_element: usize, gauss_order: usize) -> Self {
        QuadratureRule { panels_per_element, gauss_order }
    }

    pub fn points_per_element(&self) -> usize {
        self.panels_per_element * self.gauss_order * self.gauss_order
    }

    /// Total volume quadrature points on `mesh`.
    pub fn total_points(&self, mesh: &StructuredMesh) -> usize {
        self.points_per_element() * mesh.num_elements()
    }

    /// Reference-element points: `(xi, eta, weight)` on `[0,1]^2` with weights summing to 1.
    pub fn reference_points(&self) -> Vec<(f64, f64, f64)> {
        let g = GaussLegendre::new(self.gauss_order);
        let p = self.panels_per_element;
        let mut out = Vec::with_capacity(self.points_per_element());
        for k in 0..p {
            let lo = k as f64 / p as f64;
            let hi = (k + 1) as f64 / p as f64;
            for (xi, wx) in g.mapped(lo, hi) {
                for (eta, wy) in g.mapped(0.0, 1.0) {
                    out.push((xi, eta, wx * wy));
                }
            }
        }
        out
    }

    /// Reference edge points `(t, weight)` on `[0,1]`; horizontal edges use the panels.
    pub fn edge_points(&self, horizontal: bool) -> Vec<(f64, f64)> {
        let g = GaussLegendre::new(self.gauss_order);
        let p = if horizontal { self.panels_per_element } else { 1 };
        let mut out = Vec::with_capacity(p * self.gauss_order);
        for k in 0..p {
            let lo = k as f64 / p as f64;
            let hi = (k + 1) as f64 / p as f64;
            out.extend(g.mapped(lo, hi));
        }
        out
    }
}

/// Panels per element so that every Gauss panel spans at most `pi * eps / 4`
/// in `x1` (eight panels per oscillation period), order 3.
pub fn oscillation_resolving_rule(
    fam: &DiffeoFamily,
    mesh: &StructuredMesh,
    cap: usize,
) -> Result<QuadratureRule> {
    const ORDER: usize = 3;
    if fam.is_limit() {
        return Ok(QuadratureRule::new(1, ORDER));
    }
    let rule = QuadratureRule::new(panels_for(fam.epsilon(), mesh.hx()), ORDER);
    let points = rule.total_points(mesh);
    if points > cap {
        return Err(Error::QuadratureBudgetExceeded { points, cap });
    }
    Ok(rule)
}

pub(crate) fn panels_for(eps: f64, h: f64) -> usize {
    let max_width = PI * eps / 4.0;
    // guard against 1.0000000001 rounding up to 2
    let ratio = h / max_width;
    let panels = ceil(ratio - 1e-12) as usize;
    panels.max(1)
}

/// Q1 shape functions on the reference square, counterclockwise from `(0,0)`.
pub fn shape(xi: f64, eta: f64) -> [f64; 4] {
    [(1.0 - xi) * (1.0 - eta), xi * (1.0 - eta), xi * eta, (1.0 - xi) * eta]
}

/// Reference derivatives `[d/dxi, d/deta]` of [`shape`].
pub fn shape_grad(xi: f64, eta: f64) -> [[f64; 2]; 4] {
    [
        [-(1.0 - eta), -(1.0 - xi)],
        [1.0 - eta, -xi],
        [eta, xi],
        [-eta, 1.0 - xi],
    ]
}
