//! Small fixed-size vectors for gradients and fluxes, plus the sparse direct
//! solve used by every Newton iteration.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Col;

use crate::error::{Error, Result};

/// Point, gradient or flux. One-dimensional quantities keep the second
/// component at zero.
pub type Vector = nalgebra::Vector2<f64>;

/// Jacobian block ∂A/∂ξ.
pub type Matrix = nalgebra::Matrix2<f64>;

/// Builds `Vector` from the first `dim` entries of a slice, zero padded.
pub fn vector_from(values: &[f64]) -> Vector {
    Vector::new(
        values.first().copied().unwrap_or(0.0),
        values.get(1).copied().unwrap_or(0.0),
    )
}

/// Restricts a vector or matrix to its leading `dim` block, zeroing the rest.
pub fn truncate(v: Vector, dim: usize) -> Vector {
    if dim == 1 {
        Vector::new(v[0], 0.0)
    } else {
        v
    }
}

pub fn truncate_matrix(m: Matrix, dim: usize) -> Matrix {
    if dim == 1 {
        Matrix::new(m[(0, 0)], 0.0, 0.0, 0.0)
    } else {
        m
    }
}

pub fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// Square sparse matrix accumulated from (row, col, value) contributions.
/// Duplicate entries are summed.
#[derive(Debug, Clone)]
pub struct SparseSystem {
    n: usize,
    entries: Vec<Triplet<usize, usize, f64>>,
}

impl SparseSystem {
    pub fn new(n: usize) -> Self {
        Self { n, entries: Vec::new() }
    }

    pub fn with_capacity(n: usize, nnz: usize) -> Self {
        Self { n, entries: Vec::with_capacity(nnz) }
    }

    pub fn size(&self) -> usize {
        self.n
    }

    pub fn add(&mut self, row: usize, col: usize, value: f64) {
        self.entries.push(Triplet::new(row, col, value));
    }

    /// y = A x
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for t in &self.entries {
            y[t.row] += t.val * x[t.col];
        }
        y
    }

    /// Solves A x = rhs by sparse LU.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n {
            return Err(Error::DimensionMismatch { expected: self.n, got: rhs.len() });
        }
        if self.n == 0 {
            return Ok(Vec::new());
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(self.n, self.n, &self.entries)
            .map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let lu = a.sp_lu().map_err(|e| Error::LinearSolve(format!("{e:?}")))?;
        let b = Col::<f64>::from_fn(self.n, |i| rhs[i]);
        let x = lu.solve(&b);
        let out: Vec<f64> = (0..self.n).map(|i| x[i]).collect();
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::LinearSolve("singular or ill-conditioned system".into()));
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicates_are_summed() {
        let mut a = SparseSystem::new(2);
        a.add(0, 0, 1.0);
        a.add(0, 0, 1.0);
        a.add(1, 1, 4.0);
        a.add(0, 1, 1.0);
        let x = a.solve(&[1.0, 2.0]).unwrap();
        assert!((x[0] - 0.25).abs() < 1e-14);
        assert!((x[1] - 0.5).abs() < 1e-14);
        assert_eq!(a.apply(&x), vec![1.0, 2.0]);
    }

    #[test]
    fn singular_system_is_an_error() {
        let mut a = SparseSystem::new(2);
        a.add(0, 0, 1.0);
        a.add(0, 1, 1.0);
        a.add(1, 0, 1.0);
        a.add(1, 1, 1.0);
        assert!(a.solve(&[1.0, 0.0]).is_err());
    }
}
