//! Two-scale decomposition x = ε(N + R), the composition S_ε(x, y), the
//! unfolding integral identity, separable two-scale pairings and the
//! corrector identification diagnostic.

use std::io::Write;
use std::sync::Arc;

use crate::cell::solve_cell;
use crate::error::{Error, Result};
use crate::fem::{build_mesh, BoundaryKind, DiscreteField, Mesh, QuadRule};
use crate::linalg::Vector;
use crate::msolve::SolverSettings;
use crate::opcat::MonotoneOperator;

/// Subdivisions per ε-cell and per axis of the quadrature meshes.
pub const SUBCELLS: usize = 16;

/// Integer part N and fractional part R ∈ [0,1)^d of x/ε.
pub fn floor_decompose(x: &Vector, dim: usize, eps: f64) -> ([i64; 2], Vector) {
    let mut n = [0i64; 2];
    let mut r = Vector::zeros();
    for k in 0..dim {
        let t = x[k] / eps;
        let f = t.floor();
        n[k] = f as i64;
        let frac = t - f;
        // t - floor(t) can round up to 1 for tiny negative t
        r[k] = if frac >= 1.0 { 0.0 } else { frac };
        if frac >= 1.0 {
            n[k] += 1;
        }
    }
    (n, r)
}

/// S_ε(x, y) = ε(N(x/ε) + y).
pub fn compose(x: &Vector, y: &Vector, dim: usize, eps: f64) -> Vector {
    let (n, _) = floor_decompose(x, dim, eps);
    let mut out = Vector::zeros();
    for k in 0..dim {
        out[k] = eps * (n[k] as f64 + y[k]);
    }
    out
}

/// Whether 1/ε is an integer up to rounding.
pub fn is_commensurate(eps: f64) -> bool {
    let k = 1.0 / eps;
    (k - k.round()).abs() <= 1e-9 * k
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnfoldingReport {
    /// ∫_Ω g(x, x/ε) dx.
    pub lhs: f64,
    /// ∫_Ω ∫_Y g(S_ε(x,y), y) dy dx.
    pub rhs: f64,
    pub gap: f64,
    /// False when ε does not tile Ω; the left side then suffers quadrature
    /// error across lattice lines.
    pub aligned: bool,
}

fn lattice_cells(dim: usize, eps: f64) -> Vec<([i64; 2], f64)> {
    let count = (1.0 / eps - 1e-9).ceil().max(1.0) as i64;
    let width = |i: i64| ((i + 1) as f64 * eps).min(1.0) - i as f64 * eps;
    let mut out = Vec::new();
    for i in 0..count {
        if dim == 1 {
            out.push(([i, 0], width(i)));
        } else {
            for j in 0..count {
                out.push(([i, j], width(i) * width(j)));
            }
        }
    }
    out
}

/// Evaluates both sides of the unfolding identity on Ω = (0,1)^d. The left
/// side uses a mesh with [`SUBCELLS`] subdivisions per ε-cell; the right
/// side integrates Y on the same subdivision for each lattice cell.
pub fn check_unfolding_identity(g: impl Fn(&Vector, &Vector) -> f64 + Sync, dim: usize, eps: f64, order: usize) -> Result<UnfoldingReport> {
    if !(eps > 0.0) {
        return Err(Error::InputDomain(format!("ε must be positive, got {eps}")));
    }
    let aligned = is_commensurate(eps);
    let lattice = (1.0 / eps).ceil() as usize;
    let omega = build_mesh(dim, SUBCELLS * lattice, BoundaryKind::Unconstrained, &[])?;
    let cell = build_mesh(dim, SUBCELLS, BoundaryKind::Unconstrained, &[])?;
    let rule = QuadRule::new(dim, order);
    let mut lhs = 0.0;
    for c in 0..omega.num_cells() {
        for (x, w) in omega.quad_points(c, &rule) {
            lhs += w * g(&x, &(x / eps));
        }
    }
    let mut rhs = 0.0;
    for (n, measure) in lattice_cells(dim, eps) {
        let mut inner = 0.0;
        for c in 0..cell.num_cells() {
            for (y, w) in cell.quad_points(c, &rule) {
                let mut x = Vector::zeros();
                for k in 0..dim {
                    x[k] = eps * (n[k] as f64 + y[k]);
                }
                inner += w * g(&x, &y);
            }
        }
        rhs += measure * inner;
    }
    Ok(UnfoldingReport { lhs, rhs, gap: (lhs - rhs).abs(), aligned })
}

/// ∫_Ω v(x) φ(x) χ(x/ε) dx on a mesh with [`SUBCELLS`] subdivisions per
/// ε-cell.
pub fn weak_two_scale_pairing(
    v: impl Fn(&Vector) -> f64,
    phi: impl Fn(&Vector) -> f64,
    chi: impl Fn(&Vector) -> f64,
    dim: usize,
    eps: f64,
    order: usize,
) -> Result<f64> {
    if !(eps > 0.0) {
        return Err(Error::InputDomain(format!("ε must be positive, got {eps}")));
    }
    let lattice = (1.0 / eps).ceil() as usize;
    let mesh = build_mesh(dim, SUBCELLS * lattice, BoundaryKind::Unconstrained, &[])?;
    let rule = QuadRule::new(dim, order);
    let mut total = 0.0;
    for c in 0..mesh.num_cells() {
        for (x, w) in mesh.quad_points(c, &rule) {
            total += w * v(&x) * phi(&x) * chi(&(x / eps));
        }
    }
    Ok(total)
}

/// Cellwise gradient of `field` at `x`.
pub fn gradient_at(field: &DiscreteField, gradients: &[Vector], x: &Vector) -> Result<Vector> {
    let (c, _) = field
        .mesh()
        .locate(x)
        .ok_or_else(|| Error::InputDomain(format!("point {:?} outside the mesh", [x[0], x[1]])))?;
    Ok(gradients[c])
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbeMismatch {
    pub x: Vector,
    /// ∇u(x) from the homogenized solution.
    pub xi: Vector,
    /// Relative L¹(Y) distance between the unfolded fine gradient and
    /// ξ + ∇w_ξ.
    pub mismatch: f64,
}

#[derive(Debug, Clone)]
pub struct CorrectorReport {
    pub eps: f64,
    pub probes: Vec<ProbeMismatch>,
}

impl CorrectorReport {
    pub fn max_mismatch(&self) -> f64 {
        self.probes.iter().map(|p| p.mismatch).fold(0.0, f64::max)
    }
}

/// Compares y ↦ ∇u^ε(ε(N(x/ε) + y)) with ξ + ∇w_ξ(y), ξ = ∇u(x), at each
/// probe, using `samples` midpoints per axis of Y.
#[allow(clippy::too_many_arguments)]
pub fn corrector_identification(
    u_eps: &DiscreteField,
    hom: &DiscreteField,
    op: &MonotoneOperator,
    cell_mesh: &Arc<Mesh>,
    eps: f64,
    probes: &[Vector],
    samples: usize,
    settings: &SolverSettings,
) -> Result<CorrectorReport> {
    let dim = op.dim();
    let fine_grads = u_eps.gradients();
    let hom_grads = hom.gradients();
    let mut out = Vec::with_capacity(probes.len());
    for x in probes {
        if (0..dim).any(|k| !(x[k] > 0.0 && x[k] < 1.0)) {
            return Err(Error::InputDomain(format!("probe {:?} outside the domain", [x[0], x[1]])));
        }
        let xi = gradient_at(hom, &hom_grads, x)?;
        let sol = solve_cell(op, cell_mesh, &xi, settings)?;
        let w_grads = sol.w.gradients();
        let (n, _) = floor_decompose(x, dim, eps);
        let (mut diff, mut norm) = (0.0, 0.0);
        let total = samples.pow(dim as u32);
        for s in 0..total {
            let mut y = Vector::zeros();
            y[0] = ((s % samples) as f64 + 0.5) / samples as f64;
            if dim == 2 {
                y[1] = ((s / samples) as f64 + 0.5) / samples as f64;
            }
            let mut xs = Vector::zeros();
            for k in 0..dim {
                xs[k] = eps * (n[k] as f64 + y[k]);
            }
            let fine = gradient_at(u_eps, &fine_grads, &xs)?;
            let reference = xi + gradient_at(&sol.w, &w_grads, &y)?;
            diff += (fine - reference).norm();
            norm += reference.norm();
        }
        let mismatch = if norm > 0.0 { diff / norm } else { diff / total as f64 };
        out.push(ProbeMismatch { x: *x, xi, mismatch });
    }
    Ok(CorrectorReport { eps, probes: out })
}

/// One diagnostic CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagnosticRow {
    pub eps: f64,
    pub quantity: String,
    pub value: f64,
    pub gap: f64,
}

pub fn write_diagnostics(rows: &[DiagnosticRow], mut out: impl Write) -> Result<()> {
    writeln!(out, "eps,quantity,value,gap")?;
    for r in rows {
        writeln!(out, "{:.16e},{},{:.16e},{:.16e}", r.eps, r.quantity, r.value, r.gap)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn v(x: f64) -> Vector {
        Vector::new(x, 0.0)
    }

    #[test]
    fn decomposition_examples() {
        let (n, r) = floor_decompose(&v(3.7), 1, 1.0);
        assert_eq!(n[0], 3);
        assert!((r[0] - 0.7).abs() < 1e-12);
        let (n, r) = floor_decompose(&v(-1.2), 1, 1.0);
        assert_eq!(n[0], -2);
        assert!((r[0] - 0.8).abs() < 1e-12);
        let (n, r) = floor_decompose(&v(0.7), 1, 0.5);
        assert_eq!(n[0], 1);
        assert!((r[0] - 0.4).abs() < 1e-12);
        let (_, r) = floor_decompose(&v(-1e-17), 1, 1.0);
        assert!(r[0] >= 0.0 && r[0] < 1.0);
    }

    #[test]
    fn compose_examples() {
        assert!((compose(&v(0.7), &v(0.3), 1, 0.5)[0] - 0.65).abs() < 1e-15);
        let (_, r) = floor_decompose(&v(0.7), 1, 0.5);
        assert!((compose(&v(0.7), &r, 1, 0.5)[0] - 0.7).abs() < 1e-15);
    }

    #[test]
    fn unfolding_examples() {
        let r = check_unfolding_identity(|_, y| (2.0 * PI * y[0]).sin(), 1, 0.5, 3).unwrap();
        assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12);
        let r = check_unfolding_identity(|_, _| 1.0, 2, 0.25, 3).unwrap();
        assert!((r.lhs - 1.0).abs() < 1e-12 && (r.rhs - 1.0).abs() < 1e-12);
        let step = |x: &Vector, y: &Vector| if y[0].rem_euclid(1.0) < 0.5 { x[0] } else { 0.0 };
        let r = check_unfolding_identity(step, 1, 1.0 / 3.0, 3).unwrap();
        assert!(r.gap < 1e-6 && r.aligned);
        // fine midpoint oracle for the left side
        let n = 300_000;
        let oracle: f64 = (0..n)
            .map(|i| {
                let x = (i as f64 + 0.5) / n as f64;
                step(&v(x), &v(3.0 * x)) / n as f64
            })
            .sum();
        assert!((r.lhs - oracle).abs() < 1e-6);
        assert!(!check_unfolding_identity(|_, _| 1.0, 1, 0.3, 3).unwrap().aligned);
    }

    #[test]
    fn pairing_examples() {
        let p = weak_two_scale_pairing(|_| 1.0, |_| 1.0, |y| (2.0 * PI * y[0]).cos(), 1, 0.25, 3).unwrap();
        assert!(p.abs() < 1e-12);
        let p = weak_two_scale_pairing(|x| x[0], |x| x[0], |_| 1.0, 1, 0.25, 3).unwrap();
        assert!((p - 1.0 / 3.0).abs() < 1e-14);
        // aligned quadrature sees whole periods, so every k already gives ∫_Y cos²
        for k in [4.0, 8.0, 16.0] {
            let eps = 1.0 / k;
            let p = weak_two_scale_pairing(|x| (2.0 * PI * x[0] / eps).cos(), |_| 1.0, |y| (2.0 * PI * y[0]).cos(), 1, eps, 3).unwrap();
            assert!((p - 0.5).abs() < 1e-6, "{k}: {p}");
        }
    }

    #[test]
    fn write_diagnostic_rows() {
        let mut buf = Vec::new();
        write_diagnostics(&[DiagnosticRow { eps: 0.25, quantity: "gap".into(), value: 1.0, gap: 0.0 }], &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("eps,quantity,value,gap\n2.5000000000000000e-1,gap,"));
    }
}
