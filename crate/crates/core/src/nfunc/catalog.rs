//! Named N-functions addressable from config files.
//!
//! | name                  | M(y, ξ)                                   |
//! |-----------------------|-------------------------------------------|
//! | `power:p`             | \|ξ\|^p / p                               |
//! | `varexp[:p1,p2]`      | \|ξ\|^p(y) / p(y), p smooth between p1,p2 |
//! | `aniso[:k11,k12,k22]` | ½ ξᵀKξ (1D: `aniso:k`)                    |
//! | `exp[:alpha]`         | (e^{α\|ξ\|} − α\|ξ\| − 1) / α²            |
//! | `checkerboard:p1,p2`  | \|ξ\|^p(y) / p(y), p ∈ {p1, p2} on a checkerboard |
//! | `weighted:p,a1,a2`    | a(y) \|ξ\|^p / p, a ∈ {a1, a2} on a laminate |

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::nfunc::{Claim, NFunction, RadialNFunction};

/// Two-phase periodic coefficient layout on the unit cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pattern {
    /// Layers normal to y₁: first phase on y₁ < ½.
    Laminate,
    /// First phase where ⌊2y₁⌋ + ⌊2y₂⌋ is even (halves in 1D).
    Checkerboard,
}

impl Pattern {
    /// True on the first phase.
    pub fn first_phase(self, y: &Vector, dim: usize) -> bool {
        let half = |t: f64| t.rem_euclid(1.0) < 0.5;
        match self {
            Pattern::Laminate => half(y[0]),
            Pattern::Checkerboard if dim == 1 => half(y[0]),
            Pattern::Checkerboard => half(y[0]) == half(y[1]),
        }
    }

    pub fn select(self, y: &Vector, dim: usize, first: f64, second: f64) -> f64 {
        if self.first_phase(y, dim) {
            first
        } else {
            second
        }
    }
}

pub(crate) fn params(name: &str, spec: Option<&str>, expected: &[usize]) -> Result<Vec<f64>> {
    let values: Vec<f64> = match spec {
        None | Some("") => Vec::new(),
        Some(s) => s
            .split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| Error::UnknownCatalog(format!("{name}: bad parameter `{t}`"))))
            .collect::<Result<_>>()?,
    };
    if !expected.contains(&values.len()) {
        return Err(Error::UnknownCatalog(format!("{name}: expected {expected:?} parameters, got {}", values.len())));
    }
    Ok(values)
}

fn check_exponent(name: &str, p: f64) -> Result<()> {
    if p > 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::UnknownCatalog(format!("{name}: exponent {p} must exceed 1")))
    }
}

fn check_positive(name: &str, a: f64) -> Result<()> {
    if a > 0.0 && a.is_finite() {
        Ok(())
    } else {
        Err(Error::UnknownCatalog(format!("{name}: coefficient {a} must be positive")))
    }
}

/// Parses a catalog name such as `power:3` or `checkerboard:2,4`.
pub fn parse_nfunction(name: &str, dim: usize) -> Result<NFunction> {
    if !(1..=2).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    let (kind, spec) = match name.split_once(':') {
        Some((k, s)) => (k.trim(), Some(s.trim())),
        None => (name.trim(), None),
    };
    match kind {
        "power" => {
            let p = params(name, spec, &[1])?[0];
            check_exponent(name, p)?;
            Ok(weighted_power(name, dim, p, 1.0, 1.0))
        }
        "weighted" => {
            let v = params(name, spec, &[3])?;
            check_exponent(name, v[0])?;
            check_positive(name, v[1])?;
            check_positive(name, v[2])?;
            Ok(weighted_power(name, dim, v[0], v[1], v[2]))
        }
        "varexp" => {
            let v = params(name, spec, &[0, 2])?;
            let (p1, p2) = if v.is_empty() { (2.0, 4.0) } else { (v[0], v[1]) };
            check_exponent(name, p1)?;
            check_exponent(name, p2)?;
            Ok(variable_exponent(name, dim, p1, p2))
        }
        "checkerboard" => {
            let v = params(name, spec, &[2])?;
            check_exponent(name, v[0])?;
            check_exponent(name, v[1])?;
            Ok(checkerboard(name, dim, v[0], v[1]))
        }
        "exp" => {
            let v = params(name, spec, &[0, 1])?;
            let alpha = v.first().copied().unwrap_or(1.0);
            check_positive(name, alpha)?;
            Ok(exponential(name, dim, alpha))
        }
        "aniso" => {
            let k = aniso_matrix(name, spec, dim)?;
            Ok(quadratic_form(name, dim, k))
        }
        _ => Err(Error::UnknownCatalog(name.to_string())),
    }
}

pub(crate) fn aniso_matrix(name: &str, spec: Option<&str>, dim: usize) -> Result<Matrix> {
    let k = if dim == 1 {
        let v = params(name, spec, &[0, 1])?;
        let k = v.first().copied().unwrap_or(2.0);
        Matrix::new(k, 0.0, 0.0, 0.0)
    } else {
        let v = params(name, spec, &[0, 3])?;
        let (a, b, c) = if v.is_empty() { (2.0, 0.5, 1.0) } else { (v[0], v[1], v[2]) };
        Matrix::new(a, b, b, c)
    };
    let (lmin, _) = eigen_range(&k, dim);
    if !(lmin > 0.0) {
        return Err(Error::UnknownCatalog(format!("{name}: matrix is not positive definite")));
    }
    Ok(k)
}

pub(crate) fn eigen_range(k: &Matrix, dim: usize) -> (f64, f64) {
    if dim == 1 {
        return (k[(0, 0)], k[(0, 0)]);
    }
    let tr = k[(0, 0)] + k[(1, 1)];
    let det = k[(0, 0)] * k[(1, 1)] - k[(0, 1)] * k[(1, 0)];
    let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
    (0.5 * tr - disc, 0.5 * tr + disc)
}

fn radial_gradient(xi: &Vector, sigma: f64) -> Vector {
    let r = xi.norm();
    if r == 0.0 {
        Vector::zeros()
    } else {
        xi * (sigma / r)
    }
}

/// a(y) |ξ|^p / p with a two-phase laminate coefficient.
pub(crate) fn weighted_power(name: &str, dim: usize, p: f64, a1: f64, a2: f64) -> NFunction {
    let q = p / (p - 1.0);
    let coeff = move |y: &Vector| Pattern::Laminate.select(y, dim, a1, a2);
    let nf = NFunction::new(name, dim, move |y, xi| coeff(y) * xi.norm().powf(p) / p)
        .with_gradient(move |y, xi| radial_gradient(xi, coeff(y) * xi.norm().powf(p - 1.0)))
        .with_conjugate(move |y, eta| {
            let a = coeff(y);
            a * (eta.norm() / a).powf(q) / q
        })
        .with_envelopes(RadialNFunction::power(p, a1.min(a2)), RadialNFunction::power(p, a1.max(a2)))
        .with_claims(Claim::Yes, Claim::Yes);
    if a1 != a2 {
        nf.piecewise(vec![0.5])
    } else {
        nf
    }
}

fn exponent_envelopes(p1: f64, p2: f64) -> (RadialNFunction, RadialNFunction) {
    let (lo, hi) = (p1.min(p2), p1.max(p2));
    let lower = RadialNFunction::new(move |t| t.powf(hi) / (1.0 + t).powf(hi - lo) / hi);
    let upper = RadialNFunction::new(move |t| (t.powf(lo) + t.powf(hi)) / lo);
    (lower, upper)
}

fn power_family(name: &str, dim: usize, exponent: impl Fn(&Vector) -> f64 + Send + Sync + Clone + 'static) -> NFunction {
    let (e1, e2, e3) = (exponent.clone(), exponent.clone(), exponent);
    NFunction::new(name, dim, move |y, xi| {
        let p = e1(y);
        xi.norm().powf(p) / p
    })
    .with_gradient(move |y, xi| radial_gradient(xi, xi.norm().powf(e2(y) - 1.0)))
    .with_conjugate(move |y, eta| {
        let p = e3(y);
        let q = p / (p - 1.0);
        eta.norm().powf(q) / q
    })
    .with_claims(Claim::Yes, Claim::Yes)
}

/// Smooth periodic exponent p(y) = p1 + (p2 − p1)·mean_i sin²(π y_i).
pub(crate) fn smooth_exponent(dim: usize, p1: f64, p2: f64) -> impl Fn(&Vector) -> f64 + Send + Sync + Clone + 'static {
    move |y: &Vector| {
        let s: f64 = (0..dim).map(|i| (std::f64::consts::PI * y[i].rem_euclid(1.0)).sin().powi(2)).sum();
        p1 + (p2 - p1) * s / dim as f64
    }
}

fn variable_exponent(name: &str, dim: usize, p1: f64, p2: f64) -> NFunction {
    let (lower, upper) = exponent_envelopes(p1, p2);
    power_family(name, dim, smooth_exponent(dim, p1, p2)).with_envelopes(lower, upper)
}

fn checkerboard(name: &str, dim: usize, p1: f64, p2: f64) -> NFunction {
    let (lower, upper) = exponent_envelopes(p1, p2);
    power_family(name, dim, move |y: &Vector| Pattern::Checkerboard.select(y, dim, p1, p2))
        .with_envelopes(lower, upper)
        .piecewise(vec![0.5])
}

/// e^x − x − 1 without cancellation near zero.
pub(crate) fn exp_excess(x: f64) -> f64 {
    if x < 1e-3 {
        x * x * (0.5 + x * (1.0 / 6.0 + x * (1.0 / 24.0 + x / 120.0)))
    } else {
        x.exp_m1() - x
    }
}

/// (1+u) ln(1+u) − u, the conjugate of `exp_excess`.
pub(crate) fn exp_excess_conjugate(u: f64) -> f64 {
    if u < 1e-3 {
        u * u * (0.5 - u * (1.0 / 6.0 - u * (1.0 / 12.0 - u / 20.0)))
    } else {
        (1.0 + u) * u.ln_1p() - u
    }
}

fn exponential(name: &str, dim: usize, alpha: f64) -> NFunction {
    let a2 = alpha * alpha;
    let profile = move |t: f64| exp_excess(alpha * t.abs()) / a2;
    let conj = move |s: f64| exp_excess_conjugate(alpha * s.abs()) / a2;
    NFunction::new(name, dim, move |_, xi| profile(xi.norm()))
        .with_gradient(move |_, xi| radial_gradient(xi, (alpha * xi.norm()).exp_m1() / alpha))
        .with_conjugate(move |_, eta| conj(eta.norm()))
        .with_envelopes(
            RadialNFunction::new(profile).with_conjugate(conj),
            RadialNFunction::new(profile).with_conjugate(conj),
        )
        .with_claims(Claim::No, Claim::Yes)
}

pub(crate) fn quadratic_form(name: &str, dim: usize, k: Matrix) -> NFunction {
    let (lmin, lmax) = eigen_range(&k, dim);
    let kinv = if dim == 1 {
        Matrix::new(1.0 / k[(0, 0)], 0.0, 0.0, 0.0)
    } else {
        k.try_inverse().unwrap_or_else(Matrix::zeros)
    };
    NFunction::new(name, dim, move |_, xi| 0.5 * xi.dot(&(k * xi)))
        .with_gradient(move |_, xi| k * xi)
        .with_conjugate(move |_, eta| 0.5 * eta.dot(&(kinv * eta)))
        .with_envelopes(RadialNFunction::power(2.0, lmin), RadialNFunction::power(2.0, lmax))
        .with_claims(Claim::Yes, Claim::Yes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_catalog_name() {
        for dim in 1..=2 {
            for name in ["power:2", "power:1.5", "varexp", "varexp:1.5,3", "aniso", "exp", "exp:2", "checkerboard:2,4", "weighted:3,1,16"] {
                let nf = parse_nfunction(name, dim).unwrap_or_else(|e| panic!("{name}: {e}"));
                assert_eq!(nf.dim(), dim);
            }
        }
        assert!(parse_nfunction("aniso:3,1,2", 2).is_ok());
        assert!(parse_nfunction("aniso:1,3,1", 2).is_err());
        assert!(parse_nfunction("power:1", 1).is_err());
        assert!(parse_nfunction("bogus", 1).is_err());
        assert!(parse_nfunction("power:x", 1).is_err());
    }

    #[test]
    fn checkerboard_phases() {
        let p = Pattern::Checkerboard;
        assert!(p.first_phase(&Vector::new(0.2, 0.2), 2));
        assert!(!p.first_phase(&Vector::new(0.7, 0.2), 2));
        assert!(p.first_phase(&Vector::new(0.7, 0.7), 2));
        assert!(!p.first_phase(&Vector::new(0.75, 0.0), 1));
        assert!(p.first_phase(&Vector::new(-0.75, 0.0), 1));
    }

    #[test]
    fn series_branches_are_continuous() {
        for &x in &[1e-3_f64 - 1e-12, 1e-3 + 1e-12]  {
            let direct = x.exp_m1() - x;
            assert!((exp_excess(x) - direct).abs() < 1e-9 * direct);
            let u = x;
            let direct = (1.0 + u) * u.ln_1p() - u;
            assert!((exp_excess_conjugate(u) - direct).abs() < 1e-9 * direct);
        }
    }
}
