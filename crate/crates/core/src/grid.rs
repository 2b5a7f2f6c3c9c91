//! Rectangular tensor grids with multilinear interpolation of vector data.

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};

/// Tensor product of strictly increasing axes. Flat indices are row major:
/// the last axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorGrid {
    axes: Vec<Vec<f64>>,
}

impl TensorGrid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        if !(1..=2).contains(&axes.len()) {
            return Err(Error::UnsupportedDimension(axes.len()));
        }
        for (k, axis) in axes.iter().enumerate() {
            if axis.is_empty() || axis.iter().any(|v| !v.is_finite()) {
                return Err(Error::InputDomain(format!("axis {k} is empty or not finite")));
            }
            if axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InputDomain(format!("axis {k} is not strictly increasing")));
            }
        }
        Ok(Self { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        if self.dim() == 1 {
            [flat, 0]
        } else {
            let n1 = self.axes[1].len();
            [flat / n1, flat % n1]
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        if self.dim() == 1 {
            idx[0]
        } else {
            idx[0] * self.axes[1].len() + idx[1]
        }
    }

    pub fn point(&self, flat: usize) -> Vector {
        let idx = self.multi_index(flat);
        let mut p = Vector::zeros();
        for (k, axis) in self.axes.iter().enumerate() {
            p[k] = axis[idx[k]];
        }
        p
    }

    pub fn points(&self) -> impl Iterator<Item = Vector> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    pub fn contains(&self, x: &Vector) -> bool {
        self.axes.iter().enumerate().all(|(k, a)| x[k] >= a[0] && x[k] <= a[a.len() - 1])
    }

    /// Flat index of the grid point closest to `x` in the max norm.
    pub fn nearest(&self, x: &Vector) -> usize {
        let mut idx = [0usize; 2];
        for (k, axis) in self.axes.iter().enumerate() {
            idx[k] = axis
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - x[k]).abs().total_cmp(&(b.1 - x[k]).abs()))
                .map(|(i, _)| i)
                .unwrap_or(0);
        }
        self.flat_index(idx)
    }

    /// Segment index and local coordinate per axis. Single-point axes
    /// accept only their own coordinate.
    fn bracket(&self, x: &Vector) -> Result<[(usize, f64, f64); 2]> {
        let mut out = [(0, 0.0, 1.0); 2];
        for (k, axis) in self.axes.iter().enumerate() {
            let t = x[k];
            let n = axis.len();
            if !(t >= axis[0] && t <= axis[n - 1]) {
                return Err(Error::Extrapolation(x.iter().take(self.dim()).copied().collect()));
            }
            if n == 1 {
                out[k] = (0, 0.0, 1.0);
                continue;
            }
            let i = match axis.binary_search_by(|v| v.total_cmp(&t)) {
                Ok(i) => i.min(n - 2),
                Err(i) => i - 1,
            };
            let width = axis[i + 1] - axis[i];
            out[k] = (i, (t - axis[i]) / width, width);
        }
        Ok(out)
    }

    /// Multilinear interpolation of `values` (one per grid point).
    pub fn interpolate(&self, values: &[Vector], x: &Vector) -> Result<Vector> {
        self.interpolate_with_gradient(values, x).map(|(v, _)| v)
    }

    /// Interpolated value and its derivative, column k holding ∂/∂x_k.
    pub fn interpolate_with_gradient(&self, values: &[Vector], x: &Vector) -> Result<(Vector, Matrix)> {
        let b = self.bracket(x)?;
        let single = |k: usize| self.axes[k].len() == 1;
        if self.dim() == 1 {
            let (i, t, w) = b[0];
            if single(0) {
                return Ok((values[0], Matrix::zeros()));
            }
            let (v0, v1) = (values[i], values[i + 1]);
            let mut d = Matrix::zeros();
            d.set_column(0, &((v1 - v0) / w));
            return Ok((v0 * (1.0 - t) + v1 * t, d));
        }
        let (i, s, wi) = b[0];
        let (j, t, wj) = b[1];
        let i1 = if single(0) { i } else { i + 1 };
        let j1 = if single(1) { j } else { j + 1 };
        let at = |a: usize, c: usize| values[self.flat_index([a, c])];
        let (v00, v10, v01, v11) = (at(i, j), at(i1, j), at(i, j1), at(i1, j1));
        let value = v00 * ((1.0 - s) * (1.0 - t)) + v10 * (s * (1.0 - t)) + v01 * ((1.0 - s) * t) + v11 * (s * t);
        let mut d = Matrix::zeros();
        if !single(0) {
            d.set_column(0, &(((v10 - v00) * (1.0 - t) + (v11 - v01) * t) / wi));
        }
        if !single(1) {
            d.set_column(1, &(((v01 - v00) * (1.0 - s) + (v11 - v10) * s) / wj));
        }
        Ok((value, d))
    }
}

/// `n` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsorted_axes() {
        assert!(TensorGrid::new(vec![vec![0.0, 0.0]]).is_err());
        assert!(TensorGrid::new(vec![vec![1.0, 0.0]]).is_err());
        assert!(TensorGrid::new(vec![]).is_err());
    }

    #[test]
    fn reproduces_bilinear_data() {
        let g = TensorGrid::new(vec![linspace(-1.0, 1.0, 3), linspace(0.0, 2.0, 5)]).unwrap();
        let f = |p: &Vector| Vector::new(1.0 + 2.0 * p[0] - p[1] + 0.5 * p[0] * p[1], p[1]);
        let values: Vec<Vector> = g.points().map(|p| f(&p)).collect();
        for x in [Vector::new(0.3, 0.7), Vector::new(-1.0, 2.0), Vector::new(0.99, 0.01)] {
            let (v, d) = g.interpolate_with_gradient(&values, &x).unwrap();
            assert!((v - f(&x)).norm() < 1e-14);
            assert!((d[(0, 0)] - (2.0 + 0.5 * x[1])).abs() < 1e-12);
            assert!((d[(0, 1)] - (-1.0 + 0.5 * x[0])).abs() < 1e-12);
        }
        assert!(matches!(g.interpolate(&values, &Vector::new(1.5, 0.0)), Err(Error::Extrapolation(_))));
    }

    #[test]
    fn grid_points_are_returned_exactly() {
        let g = TensorGrid::new(vec![vec![-2.0, -1.0, 0.0, 1.0, 2.0]]).unwrap();
        let values: Vec<Vector> = g.points().map(|p| Vector::new(p[0].powi(3) / 7.0, 0.0)).collect();
        for (k, p) in g.points().enumerate() {
            assert_eq!(g.interpolate(&values, &p).unwrap(), values[k]);
        }
        assert_eq!(g.nearest(&Vector::new(0.4, 0.0)), 2);
    }

    #[test]
    fn single_point_grid() {
        let g = TensorGrid::new(vec![vec![0.0]]).unwrap();
        assert_eq!(g.interpolate(&[Vector::zeros()], &Vector::zeros()).unwrap(), Vector::zeros());
        assert!(g.interpolate(&[Vector::zeros()], &Vector::new(0.1, 0.0)).is_err());
    }
}
