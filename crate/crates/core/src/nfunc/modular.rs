use crate::error::{Error, Result};
use crate::fem::{DiscreteField, Mesh, QuadRule};
use crate::linalg::Vector;
use crate::nfunc::NFunction;

/// Field values frozen at quadrature points: (position, weight, value).
/// The position is the argument handed to M as its first variable.
#[derive(Debug, Clone, Default)]
pub struct SampledField {
    pub points: Vec<(Vector, f64, Vector)>,
}

impl SampledField {
    pub fn from_fn(mesh: &Mesh, v: impl Fn(&Vector) -> Vector, order: usize) -> Self {
        let rule = QuadRule::new(mesh.dim(), order);
        let points = (0..mesh.num_cells())
            .flat_map(|c| mesh.quad_points(c, &rule).collect::<Vec<_>>())
            .map(|(x, w)| (x, w, v(&x)))
            .collect();
        Self { points }
    }

    /// P1 values of a scalar field.
    pub fn values(field: &DiscreteField, order: usize) -> Self {
        let mesh = field.mesh();
        let nodal = field.nodal_values();
        let rule = QuadRule::new(mesh.dim(), order);
        let mut points = Vec::with_capacity(mesh.num_cells() * rule.len());
        for c in 0..mesh.num_cells() {
            for (p, w) in rule.points.iter().zip(&rule.weights) {
                let value: f64 = mesh.cell(c).iter().zip(p).map(|(&v, b)| nodal[v] * b).sum();
                points.push((mesh.map_point(c, p), w * mesh.measure(c), Vector::new(value, 0.0)));
            }
        }
        Self { points }
    }

    /// Cellwise constant gradients of a scalar field.
    pub fn gradients(field: &DiscreteField, order: usize) -> Self {
        let mesh = field.mesh();
        let grads = field.gradients();
        let rule = QuadRule::new(mesh.dim(), order);
        let points = (0..mesh.num_cells())
            .flat_map(|c| {
                let g = grads[c];
                mesh.quad_points(c, &rule).map(move |(x, w)| (x, w, g)).collect::<Vec<_>>()
            })
            .collect();
        Self { points }
    }

    /// ∫ M(x, v(x)/λ) dx
    pub fn modular(&self, nf: &NFunction, lambda: f64) -> f64 {
        self.points.iter().map(|(x, w, v)| w * nf.eval(x, &(v / lambda))).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.points.iter().all(|(_, _, v)| v.norm() == 0.0)
    }
}

fn check_dims(nf: &NFunction, mesh: &Mesh) -> Result<()> {
    if nf.dim() != mesh.dim() {
        return Err(Error::DimensionMismatch { expected: nf.dim(), got: mesh.dim() });
    }
    Ok(())
}

/// ∫ M(x, v(x)) dx for the P1 values of a scalar field (1D N-functions).
pub fn modular(nf: &NFunction, field: &DiscreteField, order: usize) -> Result<f64> {
    check_dims(nf, field.mesh())?;
    if nf.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, got: nf.dim() });
    }
    Ok(SampledField::values(field, order).modular(nf, 1.0))
}

/// ∫ M(x, ∇v(x)) dx
pub fn modular_gradient(nf: &NFunction, field: &DiscreteField, order: usize) -> Result<f64> {
    check_dims(nf, field.mesh())?;
    Ok(SampledField::gradients(field, order).modular(nf, 1.0))
}

/// ∫ M(x, v(x)) dx for an arbitrary vector field.
pub fn modular_fn(nf: &NFunction, mesh: &Mesh, v: impl Fn(&Vector) -> Vector, order: usize) -> Result<f64> {
    check_dims(nf, mesh)?;
    Ok(SampledField::from_fn(mesh, v, order).modular(nf, 1.0))
}

/// ∫_Ω ∫_Y M(y, v(x, y)) dy dx over the product of two meshes.
pub fn modular_two_scale(
    nf: &NFunction,
    omega: &Mesh,
    cell: &Mesh,
    v: impl Fn(&Vector, &Vector) -> Vector,
    order: usize,
) -> Result<f64> {
    check_dims(nf, cell)?;
    let outer = SampledField::from_fn(omega, |_| Vector::zeros(), order);
    let inner = SampledField::from_fn(cell, |_| Vector::zeros(), order);
    Ok(outer
        .points
        .iter()
        .map(|(x, wx, _)| wx * inner.points.iter().map(|(y, wy, _)| wy * nf.eval(y, &v(x, y))).sum::<f64>())
        .sum())
}

const LUXEMBURG_REL_TOL: f64 = 1e-10;
const LUXEMBURG_MAX_DOUBLINGS: usize = 400;

fn luxemburg_sampled(nf: &NFunction, field: &SampledField) -> Result<f64> {
    if field.is_zero() {
        return Ok(0.0);
    }
    let rho = |lambda: f64| field.modular(nf, lambda);
    // bracket: rho(lo) > 1 >= rho(hi)
    let (mut lo, mut hi) = (1.0, 1.0);
    if rho(1.0) > 1.0 {
        let mut k = 0;
        while rho(hi) > 1.0 {
            lo = hi;
            hi *= 2.0;
            k += 1;
            if k > LUXEMBURG_MAX_DOUBLINGS || !hi.is_finite() {
                return Err(Error::Overflow(hi));
            }
        }
    } else {
        let mut k = 0;
        while rho(lo) <= 1.0 {
            hi = lo;
            lo *= 0.5;
            k += 1;
            if k > LUXEMBURG_MAX_DOUBLINGS {
                return Ok(0.0);
            }
        }
    }
    while (hi - lo) > LUXEMBURG_REL_TOL * hi {
        let mid = (lo * hi).sqrt();
        if rho(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(hi)
}

/// inf{λ > 0 : ∫ M(x, v/λ) ≤ 1} for the P1 values of a scalar field.
pub fn luxemburg_norm(nf: &NFunction, field: &DiscreteField, order: usize) -> Result<f64> {
    check_dims(nf, field.mesh())?;
    luxemburg_sampled(nf, &SampledField::values(field, order))
}

pub fn luxemburg_norm_gradient(nf: &NFunction, field: &DiscreteField, order: usize) -> Result<f64> {
    check_dims(nf, field.mesh())?;
    luxemburg_sampled(nf, &SampledField::gradients(field, order))
}

pub fn luxemburg_norm_fn(nf: &NFunction, mesh: &Mesh, v: impl Fn(&Vector) -> Vector, order: usize) -> Result<f64> {
    check_dims(nf, mesh)?;
    luxemburg_sampled(nf, &SampledField::from_fn(mesh, v, order))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_mesh, BoundaryKind};
    use crate::nfunc::RadialNFunction;
    use std::sync::Arc;

    fn square() -> NFunction {
        NFunction::new("t^2", 1, |_, xi| xi[0] * xi[0])
            .with_envelopes(RadialNFunction::power(2.0, 2.0), RadialNFunction::power(2.0, 2.0))
    }

    fn unit_mesh() -> Arc<Mesh> {
        Arc::new(build_mesh(1, 10, BoundaryKind::Unconstrained, &[]).unwrap())
    }

    #[test]
    fn modular_examples() {
        let nf = square();
        let mesh = unit_mesh();
        assert_eq!(modular(&nf, &DiscreteField::zeros(mesh.clone()), 3).unwrap(), 0.0);
        let two = DiscreteField::interpolate(mesh.clone(), |_| 2.0);
        assert!((modular(&nf, &two, 3).unwrap() - 4.0).abs() < 1e-14);
        let x = DiscreteField::interpolate(mesh, |p| p[0]);
        assert!((modular(&nf, &x, 3).unwrap() - 1.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn luxemburg_examples() {
        let nf = square();
        let mesh = unit_mesh();
        assert_eq!(luxemburg_norm(&nf, &DiscreteField::zeros(mesh.clone()), 3).unwrap(), 0.0);
        let two = DiscreteField::interpolate(mesh.clone(), |_| 2.0);
        assert!((luxemburg_norm(&nf, &two, 3).unwrap() - 2.0).abs() < 1e-9);
        let x = DiscreteField::interpolate(mesh, |p| p[0]);
        let expected = 1.0 / 3f64.sqrt();
        assert!((luxemburg_norm(&nf, &x, 3).unwrap() - expected).abs() < 1e-9);
    }

    #[test]
    fn field_blowing_up_at_every_scale_overflows() {
        let nf = NFunction::new("step", 1, |_, xi| if xi[0] != 0.0 { f64::INFINITY } else { 0.0 });
        let mesh = unit_mesh();
        let f = DiscreteField::interpolate(mesh, |_| 1.0);
        assert!(matches!(luxemburg_norm(&nf, &f, 3), Err(Error::Overflow(_))));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let nf = square();
        let mesh = Arc::new(build_mesh(2, 4, BoundaryKind::Unconstrained, &[]).unwrap());
        let f = DiscreteField::zeros(mesh);
        assert!(matches!(modular(&nf, &f, 3), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn two_scale_modular_of_constant_field() {
        let nf = square();
        let omega = build_mesh(1, 4, BoundaryKind::Unconstrained, &[]).unwrap();
        let cell = build_mesh(1, 4, BoundaryKind::Periodic, &[]).unwrap();
        let v = modular_two_scale(&nf, &omega, &cell, |x, y| Vector::new(x[0] + y[0], 0.0), 3).unwrap();
        // ∫∫ (x+y)^2 = 7/6
        assert!((v - 7.0 / 6.0).abs() < 1e-13);
    }
}
