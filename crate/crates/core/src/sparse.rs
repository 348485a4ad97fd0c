//! Compressed-row sparse matrices with the Q1 nine-point pattern.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mesh::StructuredMesh;

/// Square sparse matrix in compressed-row form. Entries are stored in full
/// (no symmetric packing) so nonsymmetric operators share the same layout.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseOperator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseOperator {
    /// Zero matrix carrying the full node-to-node coupling pattern of `mesh`.
    pub fn q1_pattern(mesh: &StructuredMesh) -> Self {
        let (nx, ny) = (mesh.nx(), mesh.ny());
        let n = mesh.num_nodes();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::with_capacity(9 * n);
        row_ptr.push(0);
        for j in 0..=ny {
            for i in 0..=nx {
                for dj in -1i64..=1 {
                    for di in -1i64..=1 {
                        let (ii, jj) = (i as i64 + di, j as i64 + dj);
                        if ii >= 0 && jj >= 0 && ii <= nx as i64 && jj <= ny as i64 {
                            col_idx.push(mesh.node_index(ii as usize, jj as usize));
                        }
                    }
                }
                row_ptr.push(col_idx.len());
            }
        }
        let values = alloc::vec![0.0; col_idx.len()];
        SparseOperator { n, row_ptr, col_idx, values }
    }

    /// Builds a matrix from `(row, col, value)` triplets; duplicates are summed
    /// in input order.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut order: Vec<usize> = (0..triplets.len()).collect();
        order.sort_by_key(|&k| (triplets[k].0, triplets[k].1));
        let mut row_ptr = alloc::vec![0usize; n + 1];
        let mut col_idx = Vec::new();
        let mut values: Vec<f64> = Vec::new();
        let mut last: Option<(usize, usize)> = None;
        for k in order {
            let (r, c, v) = triplets[k];
            assert!(r < n && c < n, "triplet ({r}, {c}) out of range for n = {n}");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                col_idx.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            row_ptr[r + 1] += row_ptr[r];
        }
        SparseOperator { n, row_ptr, col_idx, values }
    }

    pub fn identity(n: usize) -> Self {
        SparseOperator {
            n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: alloc::vec![1.0; n],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[lo..hi].iter().copied().zip(self.values[lo..hi].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.position(r, c).map_or(0.0, |p| self.values[p])
    }

    fn position(&self, r: usize, c: usize) -> Option<usize> {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.col_idx[lo..hi].binary_search(&c).ok().map(|p| lo + p)
    }

    /// Adds `value` at `(r, c)`; the entry must exist in the pattern.
    pub fn add(&mut self, r: usize, c: usize, value: f64) {
        let p = self.position(r, c).expect("entry outside sparsity pattern");
        self.values[p] += value;
    }

    /// Scatters a dense 4x4 element matrix (`local[test][trial]`).
    pub fn add_local(&mut self, nodes: &[usize; 4], local: &[[f64; 4]; 4]) {
        for (a, &r) in nodes.iter().enumerate() {
            for (b, &c) in nodes.iter().enumerate() {
                self.add(r, c, local[a][b]);
            }
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = alloc::vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        debug_assert_eq!(x.len(), self.n);
        for (r, out) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for p in self.row_ptr[r]..self.row_ptr[r + 1] {
                s += self.values[p] * x[self.col_idx[p]];
            }
            *out = s;
        }
    }

    /// `y^T A x`.
    pub fn bilinear(&self, y: &[f64], x: &[f64]) -> f64 {
        let ax = self.mul_vec(x);
        dot(y, &ax)
    }

    pub fn quadratic(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|r| self.get(r, r)).collect()
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.n {
            for (c, v) in self.row(r) {
                worst = worst.max((v - self.get(c, r)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `alpha * self + beta * other`; both must share the same pattern.
    pub fn combine(&self, alpha: f64, other: &SparseOperator, beta: f64) -> Result<Self> {
        if self.n != other.n || self.row_ptr != other.row_ptr || self.col_idx != other.col_idx {
            return Err(Error::PatternMismatch);
        }
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(&other.values) {
            *v = alpha * *v + beta * w;
        }
        Ok(out)
    }

    /// `alpha * self + beta * other` on the union of both patterns.
    pub fn linear_combination(&self, alpha: f64, other: &SparseOperator, beta: f64) -> Self {
        if let Ok(out) = self.combine(alpha, other, beta) {
            return out;
        }
        assert_eq!(self.n, other.n, "operator dimensions differ");
        let t: Vec<_> = self
            .triplets()
            .map(|(r, c, v)| (r, c, alpha * v))
            .chain(other.triplets().map(|(r, c, v)| (r, c, beta * v)))
            .collect();
        SparseOperator::from_triplets(self.n, &t)
    }

    /// Coordinate triplets in row-major order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    /// Writes one `row col value` line per stored entry (zero-based indices,
    /// values in shortest round-trip form).
    pub fn write_coordinate<W: core::fmt::Write>(&self, out: &mut W) -> core::fmt::Result {
        for (r, c, v) in self.triplets() {
            writeln!(out, "{r} {c} {v:e}")?;
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = alloc::vec![alloc::vec![0.0; self.n]; self.n];
        for (r, c, v) in self.triplets() {
            d[r][c] = v;
        }
        d
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
