//! Monotone operators A(y, ξ) satisfying the Carathéodory, periodicity,
//! coercivity and strict monotonicity assumptions, with pointwise inversion
//! B = A⁻¹ and sampling-based contract checks.
//!
//! Catalog names (parameters after the colon):
//!
//! | name                  | A(y, ξ)                              | potential Φ              |
//! |-----------------------|--------------------------------------|--------------------------|
//! | `linear:a1,a2`        | a(y) ξ, laminate a ∈ {a1, a2}        | a \|ξ\|²/2               |
//! | `plaplace:p,a1,a2`    | a(y) \|ξ\|^{p−2} ξ                   | a \|ξ\|^p / p            |
//! | `varexp:p1,p2`        | \|ξ\|^{p(y)−2} ξ, smooth p(y)        | \|ξ\|^{p(y)} / p(y)      |
//! | `exp:alpha`           | (e^{α\|ξ\|} − 1)/α · ξ/\|ξ\|         | (e^{α\|ξ\|} − α\|ξ\| − 1)/α² |
//! | `aniso:k11,k12,k22`   | K ξ (1D: `aniso:k`)                  | ½ ξᵀKξ                   |
//!
//! Every catalog operator is the gradient of its potential, and its
//! associated N-function is the potential itself. `fixture:nonmonotone`
//! (A = −ξ) exists only as a negative control for the check batteries.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::{truncate, truncate_matrix, Matrix, Vector};
use crate::nfunc::{self, Claim, NFunction, Pattern, RadialNFunction};
use crate::sampling;

pub type FluxFn = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;
pub type JacobianFn = Arc<dyn Fn(&Vector, &Vector) -> Matrix + Send + Sync>;
pub type PotentialFn = Arc<dyn Fn(&Vector, &Vector) -> f64 + Send + Sync>;

/// Regularisation δ of the p-type Jacobian near ξ = 0.
pub const JACOBIAN_DELTA: f64 = 1e-8;
/// Below this |ξ| the p-type Jacobian uses (|ξ|² + δ²)^{(p−2)/2} I.
pub const JACOBIAN_SINGULAR_RADIUS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JacobianMode {
    Analytic,
    FiniteDifference,
}

#[derive(Clone)]
pub struct MonotoneOperator {
    name: String,
    dim: usize,
    eval: FluxFn,
    jacobian: Option<JacobianFn>,
    potential: Option<PotentialFn>,
    nfunction: NFunction,
    periodic: bool,
    coercivity_c: Option<f64>,
    interfaces: Vec<f64>,
    inverse_guess: Option<FluxFn>,
    odd: bool,
}

impl fmt::Debug for MonotoneOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MonotoneOperator")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("nfunction", &self.nfunction.name())
            .field("analytic_jacobian", &self.jacobian.is_some())
            .field("potential", &self.potential.is_some())
            .field("interfaces", &self.interfaces)
            .finish()
    }
}

impl MonotoneOperator {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        nfunction: NFunction,
        eval: impl Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            eval: Arc::new(eval),
            jacobian: None,
            potential: None,
            interfaces: nfunction.interfaces().to_vec(),
            nfunction,
            periodic: true,
            coercivity_c: None,
            inverse_guess: None,
            odd: false,
        }
    }

    pub fn with_jacobian(mut self, j: impl Fn(&Vector, &Vector) -> Matrix + Send + Sync + 'static) -> Self {
        self.jacobian = Some(Arc::new(j));
        self
    }

    pub fn with_potential(mut self, phi: impl Fn(&Vector, &Vector) -> f64 + Send + Sync + 'static) -> Self {
        self.potential = Some(Arc::new(phi));
        self
    }

    pub fn with_inverse_guess(mut self, g: impl Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static) -> Self {
        self.inverse_guess = Some(Arc::new(g));
        self
    }

    pub fn with_coercivity(mut self, c: f64) -> Self {
        self.coercivity_c = Some(c);
        self
    }

    pub fn with_interfaces(mut self, interfaces: Vec<f64>) -> Self {
        self.interfaces = interfaces;
        self
    }

    /// Marks A(y, −ξ) = −A(y, ξ).
    pub fn odd(mut self) -> Self {
        self.odd = true;
        self
    }

    pub fn non_periodic(mut self) -> Self {
        self.periodic = false;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nfunction(&self) -> &NFunction {
        &self.nfunction
    }

    pub fn has_potential(&self) -> bool {
        self.potential.is_some()
    }

    pub fn has_analytic_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn is_odd(&self) -> bool {
        self.odd
    }

    pub fn coercivity_c(&self) -> Option<f64> {
        self.coercivity_c
    }

    /// Interface coordinates where A jumps in y; meshes should align to them.
    pub fn interfaces(&self) -> &[f64] {
        &self.interfaces
    }

    /// A(y, ξ).
    pub fn eval(&self, y: &Vector, xi: &Vector) -> Vector {
        truncate((self.eval)(y, &truncate(*xi, self.dim)), self.dim)
    }

    /// A(y, ξ), rejecting NaN input or output.
    pub fn eval_checked(&self, y: &Vector, xi: &Vector) -> Result<Vector> {
        if xi.iter().any(|v| v.is_nan()) || y.iter().any(|v| v.is_nan()) {
            return Err(Error::InputDomain(format!("NaN argument to {}", self.name)));
        }
        let a = self.eval(y, xi);
        if a.iter().any(|v| v.is_nan()) {
            return Err(Error::InputDomain(format!("{} produced NaN at ξ = {:?}", self.name, [xi[0], xi[1]])));
        }
        Ok(a)
    }

    pub fn potential(&self, y: &Vector, xi: &Vector) -> Option<f64> {
        self.potential.as_ref().map(|phi| phi(y, &truncate(*xi, self.dim)))
    }

    /// ∂A/∂ξ, analytic when available and requested.
    pub fn jacobian(&self, y: &Vector, xi: &Vector, mode: JacobianMode) -> Matrix {
        match (&self.jacobian, mode) {
            (Some(j), JacobianMode::Analytic) => truncate_matrix(j(y, &truncate(*xi, self.dim)), self.dim),
            _ => self.jacobian_fd(y, xi),
        }
    }

    pub fn jacobian_fd(&self, y: &Vector, xi: &Vector) -> Matrix {
        let xi = truncate(*xi, self.dim);
        let h = 1e-6 * (1.0 + xi.norm());
        let mut m = Matrix::zeros();
        for k in 0..self.dim {
            let mut e = Vector::zeros();
            e[k] = h;
            let col = (self.eval(y, &(xi + e)) - self.eval(y, &(xi - e))) / (2.0 * h);
            m.set_column(k, &col);
        }
        m
    }

    /// B(y, ζ): solves A(y, ξ) = ζ by damped Newton from the closed-form
    /// radial guess, halving the step until the residual decreases.
    pub fn invert(&self, y: &Vector, zeta: &Vector) -> Result<Vector> {
        let zeta = truncate(*zeta, self.dim);
        let tol = 1e-10 * (1.0 + zeta.norm());
        let mut xi = match &self.inverse_guess {
            Some(g) => truncate(g(y, &zeta), self.dim),
            None => zeta,
        };
        let mut r = self.eval_checked(y, &xi)? - zeta;
        let mut history = vec![r.norm()];
        for _ in 0..100 {
            if r.norm() <= tol {
                return Ok(xi);
            }
            let j = self.jacobian(y, &xi, JacobianMode::Analytic);
            let step = solve_block(&j, &r, self.dim).unwrap_or(r);
            let mut alpha = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let trial = xi - step * alpha;
                let rt = self.eval_checked(y, &trial)? - zeta;
                if rt.norm() < r.norm() {
                    xi = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            history.push(r.norm());
            if !accepted {
                break;
            }
        }
        if r.norm() <= tol {
            return Ok(xi);
        }
        Err(Error::NonConvergence { what: "operator inversion", iterations: history.len() - 1, residual: r.norm(), history })
    }
}

/// Solves the leading dim×dim block of J x = r.
pub(crate) fn solve_block(j: &Matrix, r: &Vector, dim: usize) -> Option<Vector> {
    if dim == 1 {
        let d = j[(0, 0)];
        (d != 0.0 && d.is_finite()).then(|| Vector::new(r[0] / d, 0.0))
    } else {
        j.try_inverse().map(|inv| inv * r)
    }
}

/// σ(|ξ|) ξ/|ξ| together with its Jacobian σ' ξ̂ξ̂ᵀ + σ/|ξ| (I − ξ̂ξ̂ᵀ).
fn radial_jacobian(xi: &Vector, sigma: f64, dsigma: f64, small_modulus: f64) -> Matrix {
    let r = xi.norm();
    if r <= JACOBIAN_SINGULAR_RADIUS {
        return Matrix::identity() * small_modulus;
    }
    let n = xi / r;
    let nn = n * n.transpose();
    nn * dsigma + (Matrix::identity() - nn) * (sigma / r)
}

fn radial(xi: &Vector, sigma: f64) -> Vector {
    let r = xi.norm();
    if r == 0.0 {
        Vector::zeros()
    } else {
        xi * (sigma / r)
    }
}

fn power_operator(name: &str, dim: usize, nf: NFunction, exponent: impl Fn(&Vector) -> f64 + Send + Sync + Clone + 'static, coeff: impl Fn(&Vector) -> f64 + Send + Sync + Clone + 'static) -> MonotoneOperator {
    let (e1, e2, e3, e4) = (exponent.clone(), exponent.clone(), exponent.clone(), exponent);
    let (c1, c2, c3, c4) = (coeff.clone(), coeff.clone(), coeff.clone(), coeff);
    MonotoneOperator::new(name, dim, nf, move |y, xi| {
        let p = e1(y);
        radial(xi, c1(y) * xi.norm().powf(p - 1.0))
    })
    .with_jacobian(move |y, xi| {
        let (p, a) = (e2(y), c2(y));
        let r = xi.norm();
        let small = a * (r * r + JACOBIAN_DELTA * JACOBIAN_DELTA).powf(0.5 * (p - 2.0));
        radial_jacobian(xi, a * r.powf(p - 1.0), a * (p - 1.0) * r.powf(p - 2.0), small)
    })
    .with_potential(move |y, xi| {
        let p = e3(y);
        c3(y) * xi.norm().powf(p) / p
    })
    .with_inverse_guess(move |y, zeta| {
        let p = e4(y);
        radial(zeta, (zeta.norm() / c4(y)).powf(1.0 / (p - 1.0)))
    })
    .with_coercivity(1.0)
    .odd()
}

/// Parses an operator catalog name; see the module table.
pub fn parse_operator(name: &str, dim: usize) -> Result<MonotoneOperator> {
    if !(1..=2).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let (kind, spec) = match name.split_once(':') {
        Some((k, s)) => (k.trim(), Some(s.trim())),
        None => (name.trim(), None),
    };
    let positive = |a: f64| -> Result<f64> {
        if a > 0.0 && a.is_finite() {
            Ok(a)
        } else {
            Err(Error::UnknownCatalog(format!("{name}: coefficient {a} must be positive")))
        }
    };
    match kind {
        "linear" => {
            let v = nfunc::catalog_params(name, spec, &[1, 2])?;
            let (a1, a2) = (positive(v[0])?, positive(*v.get(1).unwrap_or(&v[0]))?);
            laminate_power(name, dim, 2.0, a1, a2)
        }
        "plaplace" => {
            let v = nfunc::catalog_params(name, spec, &[1, 3])?;
            let p = v[0];
            let (a1, a2) = if v.len() == 3 { (positive(v[1])?, positive(v[2])?) } else { (1.0, 1.0) };
            laminate_power(name, dim, p, a1, a2)
        }
        "varexp" => {
            let v = nfunc::catalog_params(name, spec, &[0, 2])?;
            let (p1, p2) = if v.is_empty() { (2.0, 4.0) } else { (v[0], v[1]) };
            let nf = nfunc::parse_nfunction(&format!("varexp:{p1},{p2}"), dim)?;
            let exponent = nfunc::smooth_exponent(dim, p1, p2);
            Ok(power_operator(name, dim, nf, exponent, |_| 1.0))
        }
        "exp" => {
            let v = nfunc::catalog_params(name, spec, &[0, 1])?;
            let alpha = positive(v.first().copied().unwrap_or(1.0))?;
            let nf = nfunc::parse_nfunction(&format!("exp:{alpha}"), dim)?;
            Ok(MonotoneOperator::new(name, dim, nf, move |_, xi| radial(xi, (alpha * xi.norm()).exp_m1() / alpha))
                .with_jacobian(move |_, xi| {
                    let r = xi.norm();
                    radial_jacobian(xi, (alpha * r).exp_m1() / alpha, (alpha * r).exp(), 1.0)
                })
                .with_potential(move |_, xi| nfunc::exp_excess(alpha * xi.norm()) / (alpha * alpha))
                .with_inverse_guess(move |_, zeta| radial(zeta, (alpha * zeta.norm()).ln_1p() / alpha))
                .with_coercivity(1.0)
                .odd())
        }
        "aniso" => {
            let k = nfunc::aniso_matrix(name, spec, dim)?;
            let nf = nfunc::quadratic_form(name, dim, k);
            let kinv = if dim == 1 { Matrix::new(1.0 / k[(0, 0)], 0.0, 0.0, 0.0) } else { k.try_inverse().unwrap() };
            Ok(MonotoneOperator::new(name, dim, nf, move |_, xi| k * xi)
                .with_jacobian(move |_, _| k)
                .with_potential(move |_, xi| 0.5 * xi.dot(&(k * xi)))
                .with_inverse_guess(move |_, zeta| kinv * zeta)
                .with_coercivity(1.0)
                .odd())
        }
        "fixture" if spec == Some("nonmonotone") => {
            let nf = nfunc::parse_nfunction("power:2", dim)?;
            Ok(MonotoneOperator::new(name, dim, nf, |_, xi| -xi).with_jacobian(|_, _| -Matrix::identity()).odd())
        }
        _ => Err(Error::UnknownCatalog(name.to_string())),
    }
}

fn laminate_power(name: &str, dim: usize, p: f64, a1: f64, a2: f64) -> Result<MonotoneOperator> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::UnknownCatalog(format!("{name}: exponent {p} must exceed 1")));
    }
    let nf = nfunc::parse_nfunction(&format!("weighted:{p},{a1},{a2}"), dim)?;
    let coeff = move |y: &Vector| Pattern::Laminate.select(y, dim, a1, a2);
    let op = power_operator(name, dim, nf, move |_| p, coeff);
    // laminates always expose the cell midline so meshes stay aligned
    Ok(op.with_interfaces(vec![0.5]))
}

/// Pairing (A(y,ξ) − A(y,η))·(ξ − η) recorded at a sampled point.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicitySample {
    pub y: Vector,
    pub xi: Vector,
    pub eta: Vector,
    pub pairing: f64,
}

#[derive(Debug, Clone)]
pub struct MonotonicityReport {
    pub samples: usize,
    pub min_pairing: f64,
    pub violations: Vec<MonotonicitySample>,
}

impl MonotonicityReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn monotone_pairing(op: &MonotoneOperator, y: &Vector, xi: &Vector, eta: &Vector) -> f64 {
    (op.eval(y, xi) - op.eval(y, eta)).dot(&(truncate(*xi, op.dim()) - truncate(*eta, op.dim())))
}

/// Samples (y, ξ, η) with ξ ≠ η and records the monotonicity pairing; any
/// pairing ≤ 0 is a violation.
pub fn check_monotone(op: &MonotoneOperator, sample_count: usize, rng_seed: u64) -> MonotonicityReport {
    let mut rng = sampling::rng(rng_seed);
    let dim = op.dim();
    let mut min_pairing = f64::INFINITY;
    let mut violations = Vec::new();
    for _ in 0..sample_count {
        let y = sampling::cell_point(&mut rng, dim);
        let xi = sampling::vector_in_shell(&mut rng, dim, -2.0, 0.5);
        let eta = sampling::vector_in_shell(&mut rng, dim, -2.0, 0.5);
        if xi == eta {
            continue;
        }
        let pairing = monotone_pairing(op, &y, &xi, &eta);
        min_pairing = min_pairing.min(pairing);
        if !(pairing > 0.0) {
            violations.push(MonotonicitySample { y, xi, eta, pairing });
        }
    }
    MonotonicityReport { samples: sample_count, min_pairing, violations }
}

/// Ratio A(y,ξ)·ξ / (M(y,ξ) + M*(y,A(y,ξ))) at one point.
pub fn coercivity_ratio(op: &MonotoneOperator, y: &Vector, xi: &Vector) -> Result<f64> {
    let nf = op.nfunction();
    let a = op.eval_checked(y, xi)?;
    let denom = nf.eval(y, xi) + nf.conjugate(y, &a)?;
    Ok(a.dot(&truncate(*xi, op.dim())) / denom)
}

/// Empirical coercivity constant: infimum of [`coercivity_ratio`] over
/// seeded samples, clamped to (0, 1].
pub fn estimate_coercivity(op: &MonotoneOperator, sample_count: usize, rng_seed: u64) -> Result<f64> {
    let mut rng = sampling::rng(rng_seed);
    let mut c = f64::INFINITY;
    for _ in 0..sample_count {
        let y = sampling::cell_point(&mut rng, op.dim());
        let xi = sampling::vector_in_shell(&mut rng, op.dim(), -2.0, 0.5);
        if xi.norm() == 0.0 {
            continue;
        }
        c = c.min(coercivity_ratio(op, &y, &xi)?);
    }
    Ok(c.clamp(f64::EPSILON, 1.0))
}

/// Sampled coercivity check A·ξ ≥ c (M + M*) with relative slack.
pub fn check_coercivity(op: &MonotoneOperator, c: f64, slack: f64, sample_count: usize, rng_seed: u64) -> Result<Vec<(Vector, Vector, f64)>> {
    let mut rng = sampling::rng(rng_seed);
    let nf = op.nfunction();
    let mut bad = Vec::new();
    for _ in 0..sample_count {
        let y = sampling::cell_point(&mut rng, op.dim());
        let xi = sampling::vector_in_shell(&mut rng, op.dim(), -2.0, 0.5);
        let a = op.eval_checked(&y, &xi)?;
        let lhs = a.dot(&xi);
        let rhs = c * (nf.eval(&y, &xi) + nf.conjugate(&y, &a)?);
        if lhs < (1.0 - slack) * rhs {
            bad.push((y, xi, lhs - rhs));
        }
    }
    Ok(bad)
}

/// Sampled dual coercivity B(y,ζ)·ζ ≥ c (M(y,B(y,ζ)) + M*(y,ζ)).
pub fn check_dual_coercivity(op: &MonotoneOperator, c: f64, slack: f64, sample_count: usize, rng_seed: u64) -> Result<Vec<(Vector, Vector, f64)>> {
    let mut rng = sampling::rng(rng_seed);
    let nf = op.nfunction();
    let mut bad = Vec::new();
    for _ in 0..sample_count {
        let y = sampling::cell_point(&mut rng, op.dim());
        let zeta = sampling::vector_in_shell(&mut rng, op.dim(), -2.0, 0.5);
        let b = op.invert(&y, &zeta)?;
        let lhs = b.dot(&zeta);
        let rhs = c * (nf.eval(&y, &b) + nf.conjugate(&y, &zeta)?);
        if lhs < (1.0 - slack) * rhs {
            bad.push((y, zeta, lhs - rhs));
        }
    }
    Ok(bad)
}

/// Largest |∇_ξΦ − A| / (1 + |A|) over samples, with a central-difference
/// gradient of the potential. `None` when the operator has no potential.
pub fn potential_gradient_mismatch(op: &MonotoneOperator, sample_count: usize, rng_seed: u64) -> Option<f64> {
    op.potential.as_ref()?;
    let mut rng = sampling::rng(rng_seed);
    let dim = op.dim();
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count {
        let y = sampling::cell_point(&mut rng, dim);
        let xi = sampling::vector_in_shell(&mut rng, dim, -2.0, 0.5);
        let h = 1e-6 * (1.0 + xi.norm());
        let mut g = Vector::zeros();
        for k in 0..dim {
            let mut e = Vector::zeros();
            e[k] = h;
            g[k] = (op.potential(&y, &(xi + e))? - op.potential(&y, &(xi - e))?) / (2.0 * h);
        }
        let a = op.eval(&y, &xi);
        worst = worst.max((g - a).norm() / (1.0 + a.norm()));
    }
    Some(worst)
}

/// Largest |B(y, A(y, ξ)) − ξ| / (1 + |ξ|) over samples.
pub fn inversion_round_trip_error(op: &MonotoneOperator, sample_count: usize, rng_seed: u64) -> Result<f64> {
    let mut rng = sampling::rng(rng_seed);
    let mut worst: f64 = 0.0;
    for _ in 0..sample_count {
        let y = sampling::cell_point(&mut rng, op.dim());
        let xi = sampling::vector_in_shell(&mut rng, op.dim(), -2.0, 0.5);
        let back = op.invert(&y, &op.eval(&y, &xi))?;
        worst = worst.max((back - xi).norm() / (1.0 + xi.norm()));
    }
    Ok(worst)
}

/// Checks A(y + e_i, ξ) == A(y, ξ) bit for bit on dyadic y samples.
pub fn check_periodicity(op: &MonotoneOperator, sample_count: usize, rng_seed: u64) -> bool {
    let mut rng = sampling::rng(rng_seed);
    (0..sample_count).all(|_| {
        let y = sampling::dyadic_cell_point(&mut rng, op.dim());
        let xi = sampling::vector_in_shell(&mut rng, op.dim(), -2.0, 0.5);
        let a = op.eval(&y, &xi);
        (0..op.dim()).all(|i| {
            let mut shifted = y;
            shifted[i] += 1.0;
            op.eval(&shifted, &xi) == a
        })
    })
}

/// Helper for tests and fixtures: the N-function a|ξ|²/2 with constant a.
pub fn constant_quadratic(dim: usize, a: f64) -> NFunction {
    NFunction::new(format!("quadratic:{a}"), dim, move |_, xi| 0.5 * a * xi.norm_squared())
        .with_gradient(move |_, xi| xi * a)
        .with_conjugate(move |_, eta| 0.5 * eta.norm_squared() / a)
        .with_envelopes(RadialNFunction::power(2.0, a), RadialNFunction::power(2.0, a))
        .with_claims(Claim::Yes, Claim::Yes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn y0() -> Vector {
        Vector::zeros()
    }

    fn v(x: f64) -> Vector {
        Vector::new(x, 0.0)
    }

    #[test]
    fn eval_examples() {
        let p3 = parse_operator("plaplace:3", 1).unwrap();
        assert!((p3.eval(&y0(), &v(2.0))[0] - 4.0).abs() < 1e-14);
        let lin = parse_operator("linear:1,3", 1).unwrap();
        assert_eq!(lin.eval(&v(0.75), &v(2.0))[0], 6.0);
        assert_eq!(lin.eval(&v(0.25), &v(2.0))[0], 2.0);
        for name in ["linear:1,3", "plaplace:3,1,16", "plaplace:1.5", "varexp", "exp:1", "aniso"] {
            for dim in 1..=2 {
                let op = parse_operator(name, dim).unwrap();
                assert_eq!(op.eval(&Vector::new(0.3, 0.6), &Vector::zeros()), Vector::zeros(), "{name}");
            }
        }
    }

    #[test]
    fn nan_input_is_rejected() {
        let op = parse_operator("plaplace:3", 1).unwrap();
        assert!(matches!(op.eval_checked(&y0(), &v(f64::NAN)), Err(Error::InputDomain(_))));
    }

    #[test]
    fn invert_examples() {
        let p3 = parse_operator("plaplace:3", 1).unwrap();
        let xi = p3.invert(&y0(), &v(8.0)).unwrap();
        assert!((xi[0] - 8f64.sqrt()).abs() < 1e-12);
        assert_eq!(p3.invert(&y0(), &v(0.0)).unwrap(), Vector::zeros());
    }

    #[test]
    fn exp_inverse_matches_bisection_oracle() {
        let op = parse_operator("exp:1", 1).unwrap();
        // bisection on the monotone scalar profile A(t) = e^t - 1
        let (mut lo, mut hi) = (0.0_f64, 10.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid.exp() - 1.0 < 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let xi = op.invert(&y0(), &v(1.0)).unwrap();
        assert!((xi[0] - 0.5 * (lo + hi)).abs() < 1e-12);
        assert!((xi[0] - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn invert_without_guess_uses_newton() {
        let nf = constant_quadratic(1, 1.0);
        let op = MonotoneOperator::new("cubic", 1, nf, |_, xi| xi + xi * xi.norm_squared());
        let xi = op.invert(&y0(), &v(10.0)).unwrap();
        assert!((xi[0] + xi[0].powi(3) - 10.0).abs() < 1e-9);
    }

    #[test]
    fn monotone_pairing_examples() {
        let p3 = parse_operator("plaplace:3", 1).unwrap();
        assert!((monotone_pairing(&p3, &y0(), &v(1.0), &v(-1.0)) - 4.0).abs() < 1e-14);
        let lin = parse_operator("linear:1.5", 1).unwrap();
        assert!((monotone_pairing(&lin, &y0(), &v(2.0), &v(0.0)) - 6.0).abs() < 1e-14);
        let exp = parse_operator("exp:1", 1).unwrap();
        let r = check_monotone(&exp, 10_000, 3);
        assert!(r.passed() && r.min_pairing > 0.0);
        let bad = parse_operator("fixture:nonmonotone", 1).unwrap();
        assert!(!check_monotone(&bad, 100, 3).passed());
    }

    #[test]
    fn coercivity_examples() {
        let p3 = parse_operator("plaplace:3", 1).unwrap();
        let c = estimate_coercivity(&p3, 1000, 1).unwrap();
        assert!((c - 1.0).abs() < 1e-9, "{c}");
        let lam = parse_operator("linear:1,3", 1).unwrap();
        assert!((estimate_coercivity(&lam, 1000, 1).unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn aniso_coercivity_agrees_across_resolutions() {
        let op = parse_operator("aniso", 2).unwrap();
        let coarse = estimate_coercivity(&op, 200, 11).unwrap();
        let fine = estimate_coercivity(&op, 20_000, 12).unwrap();
        assert!(coarse > 0.0 && fine > 0.0);
        assert!((coarse - fine).abs() <= 0.05 * fine);
    }

    #[test]
    fn plaplace_jacobian_is_regularised_at_zero() {
        let p3 = parse_operator("plaplace:3", 2).unwrap();
        let j = p3.jacobian(&y0(), &Vector::zeros(), JacobianMode::Analytic);
        assert!(j[(0, 0)] > 0.0 && j[(0, 0)] < 1e-7);
        let p15 = parse_operator("plaplace:1.5", 1).unwrap();
        let j = p15.jacobian(&y0(), &Vector::zeros(), JacobianMode::Analytic);
        assert!(j[(0, 0)].is_finite() && j[(0, 0)] > 1e3);
    }

    #[test]
    fn analytic_jacobians_match_finite_differences() {
        for name in ["linear:1,3", "plaplace:3,1,16", "plaplace:1.5", "varexp", "exp:1.5", "aniso"] {
            for dim in 1..=2 {
                let op = parse_operator(name, dim).unwrap();
                let y = Vector::new(0.3, 0.8);
                let xi = truncate(Vector::new(0.7, -1.2), dim);
                let ja = op.jacobian(&y, &xi, JacobianMode::Analytic);
                let jf = op.jacobian(&y, &xi, JacobianMode::FiniteDifference);
                assert!((ja - jf).norm() < 1e-6 * (1.0 + ja.norm()), "{name} {dim}: {ja} vs {jf}");
            }
        }
    }
}
