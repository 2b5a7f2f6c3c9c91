use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::mesh::{BoundaryKind, Mesh};
use crate::linalg::Vector;

/// Scalar P1 field stored by its free coefficients. Constrained nodes are
/// reconstructed through the mesh's constraint map.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    mesh: Arc<Mesh>,
    coefficients: Vec<f64>,
}

impl DiscreteField {
    pub fn zeros(mesh: Arc<Mesh>) -> Self {
        let n = mesh.num_free();
        Self { mesh, coefficients: vec![0.0; n] }
    }

    pub fn from_coefficients(mesh: Arc<Mesh>, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != mesh.num_free() {
            return Err(Error::DimensionMismatch { expected: mesh.num_free(), got: coefficients.len() });
        }
        Ok(Self { mesh, coefficients })
    }

    /// Nodal interpolation of `f`. Dirichlet nodes are dropped; on periodic
    /// meshes the value at the pinned node is subtracted, which only shifts
    /// the field by a constant.
    pub fn interpolate(mesh: Arc<Mesh>, f: impl Fn(&Vector) -> f64) -> Self {
        let shift = mesh.pinned_node().map(|p| f(&mesh.vertices()[p])).unwrap_or(0.0);
        let coefficients = (0..mesh.num_free())
            .map(|k| f(&mesh.vertices()[mesh.node_of_free(k)]) - shift)
            .collect();
        Self { mesh, coefficients }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [f64] {
        &mut self.coefficients
    }

    pub fn into_coefficients(self) -> Vec<f64> {
        self.coefficients
    }

    /// Full nodal vector. On periodic meshes the result has zero mean.
    pub fn nodal_values(&self) -> Vec<f64> {
        let mesh = &self.mesh;
        let mut values: Vec<f64> = (0..mesh.num_vertices())
            .map(|v| mesh.free_index(v).map_or(0.0, |k| self.coefficients[k]))
            .collect();
        if mesh.boundary() == BoundaryKind::Periodic {
            let mean = p1_mean(mesh, &values);
            values.iter_mut().for_each(|v| *v -= mean);
        }
        values
    }

    /// Cellwise constant gradients of the P1 interpolant.
    pub fn gradients(&self) -> Vec<Vector> {
        let nodal = self.nodal_values();
        cell_gradients(&self.mesh, &nodal)
    }

    /// Point evaluation of the P1 function.
    pub fn eval_at(&self, x: &Vector) -> Result<f64> {
        let nodal = self.nodal_values();
        eval_nodal(&self.mesh, &nodal, x)
    }
}

/// Gradients of a nodal vector (one value per vertex).
pub fn cell_gradients(mesh: &Mesh, nodal: &[f64]) -> Vec<Vector> {
    (0..mesh.num_cells())
        .map(|c| {
            mesh.cell(c)
                .iter()
                .zip(mesh.basis_gradients(c))
                .fold(Vector::zeros(), |acc, (&v, g)| acc + g * nodal[v])
        })
        .collect()
}

pub fn eval_nodal(mesh: &Mesh, nodal: &[f64], x: &Vector) -> Result<f64> {
    let (cell, bary) = mesh
        .locate(x)
        .ok_or_else(|| Error::InputDomain(format!("point {:?} outside the mesh", [x[0], x[1]])))?;
    Ok(mesh.cell(cell).iter().zip(&bary).map(|(&v, b)| nodal[v] * b).sum())
}

/// Exact integral mean of the P1 function with the given nodal values.
pub fn p1_mean(mesh: &Mesh, nodal: &[f64]) -> f64 {
    let k = (mesh.dim() + 1) as f64;
    let (integral, measure) = (0..mesh.num_cells()).fold((0.0, 0.0), |(s, m), c| {
        let avg: f64 = mesh.cell(c).iter().map(|&v| nodal[v]).sum::<f64>() / k;
        (s + avg * mesh.measure(c), m + mesh.measure(c))
    });
    integral / measure
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_mesh;

    #[test]
    fn linear_reproduction_1d() {
        let mesh = Arc::new(build_mesh(1, 7, BoundaryKind::Unconstrained, &[]).unwrap());
        let f = DiscreteField::interpolate(mesh, |x| x[0]);
        assert!(f.gradients().iter().all(|g| (g[0] - 1.0).abs() < 1e-12));
    }

    #[test]
    fn constant_field_has_zero_gradient() {
        let mesh = Arc::new(build_mesh(2, 5, BoundaryKind::Unconstrained, &[]).unwrap());
        let f = DiscreteField::interpolate(mesh, |_| 3.5);
        assert!(f.gradients().iter().all(|g| g.norm() < 1e-12));
    }

    #[test]
    fn linear_reproduction_2d() {
        let mesh = Arc::new(build_mesh(2, 6, BoundaryKind::Unconstrained, &[0.37]).unwrap());
        let f = DiscreteField::interpolate(mesh, |x| x[0] + 2.0 * x[1]);
        for g in f.gradients() {
            assert!((g - Vector::new(1.0, 2.0)).norm() < 1e-12);
        }
        assert!((f.eval_at(&Vector::new(0.3, 0.7)).unwrap() - 1.7).abs() < 1e-12);
    }

    #[test]
    fn periodic_reconstruction_is_consistent_and_zero_mean() {
        let mesh = Arc::new(build_mesh(2, 8, BoundaryKind::Periodic, &[]).unwrap());
        let tau = std::f64::consts::TAU;
        let f = DiscreteField::interpolate(mesh.clone(), |x| 1.0 + (tau * x[0]).sin() * (tau * x[1]).cos());
        let nodal = f.nodal_values();
        assert!(p1_mean(&mesh, &nodal).abs() < 1e-12);
        for v in 0..mesh.num_vertices() {
            for w in 0..mesh.num_vertices() {
                if mesh.free_index(v) == mesh.free_index(w) {
                    assert_eq!(nodal[v], nodal[w]);
                }
            }
        }
    }

    #[test]
    fn coefficient_count_is_checked() {
        let mesh = Arc::new(build_mesh(1, 4, BoundaryKind::DirichletZero, &[]).unwrap());
        assert!(DiscreteField::from_coefficients(mesh, vec![0.0; 4]).is_err());
    }
}
