use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::nfunc::NFunction;

/// Coarse grid and refinement budget for numeric Legendre transforms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConjugationSettings {
    pub radii: usize,
    pub r_min: f64,
    pub r_max: f64,
    /// Directions of the coarse search in 2D.
    pub directions: usize,
    pub refine_steps: usize,
}

impl Default for ConjugationSettings {
    fn default() -> Self {
        Self { radii: 64, r_min: 1e-6, r_max: 1e6, directions: 32, refine_steps: 20 }
    }
}

impl ConjugationSettings {
    fn radius(&self, k: usize) -> f64 {
        let ratio = (self.r_max / self.r_min).ln() / (self.radii - 1) as f64;
        self.r_min * (ratio * k as f64).exp()
    }
}

/// sup_{t ≥ 0} (t·|s| − f(t)) for an even convex `f` with f(0) = 0.
///
/// The log-spaced radius grid is scanned upward until the objective starts
/// to decrease; the maximiser is then refined by Newton steps on the
/// derivative, safeguarded by bisection inside the grid bracket.
pub fn legendre_scalar(f: impl Fn(f64) -> Result<f64>, s: f64, settings: &ConjugationSettings) -> Result<f64> {
    let s = s.abs();
    if s == 0.0 {
        return Ok(0.0);
    }
    let eval = |t: f64| -> Result<f64> {
        let v = f(t)?;
        if v.is_nan() {
            return Err(Error::InputDomain(format!("N-function returned NaN at t = {t}")));
        }
        Ok(v)
    };
    let g = |t: f64| -> Result<f64> { Ok(t * s - eval(t)?) };

    let mut best = 0.0;
    let mut best_k: Option<usize> = None;
    for k in 0..settings.radii {
        let v = g(settings.radius(k))?;
        if v > best {
            best = v;
            best_k = Some(k);
        } else if best_k.is_some() || v < best {
            break;
        }
    }
    let (mut lo, mut hi, mut t) = match best_k {
        None => (0.0, settings.radius(0), 0.5 * settings.radius(0)),
        Some(k) if k + 1 == settings.radii => {
            return Err(Error::Conjugation { lo: settings.radius(k - 1), hi: settings.r_max });
        }
        Some(k) => {
            let lo = if k == 0 { 0.0 } else { settings.radius(k - 1) };
            (lo, settings.radius(k + 1), settings.radius(k))
        }
    };

    let mut converged = false;
    for _ in 0..settings.refine_steps {
        let h = 1e-6 * (1.0 + t);
        let (fp, f0, fm) = (eval(t + h)?, eval(t)?, eval((t - h).abs())?);
        let slope = s - (fp - fm) / (2.0 * h);
        if slope > 0.0 {
            lo = lo.max(t);
        } else {
            hi = hi.min(t);
        }
        let h2 = 1e-4 * (1.0 + t);
        let curvature = (eval(t + h2)? - 2.0 * f0 + eval((t - h2).abs())?) / (h2 * h2);
        let mut next = if curvature > 0.0 { t + slope / curvature } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - t).abs();
        t = next;
        if step <= 1e-10 * (1.0 + t) || slope.abs() <= 1e-12 * (1.0 + s) {
            converged = true;
            break;
        }
    }
    if !converged && hi - lo > 1e-7 * (1.0 + t) {
        return Err(Error::Conjugation { lo, hi });
    }
    Ok(g(t)?.max(best))
}

pub(crate) fn conjugate_point(nf: &NFunction, y: &Vector, eta: &Vector, settings: &ConjugationSettings) -> Result<f64> {
    if eta.norm() == 0.0 {
        return Ok(0.0);
    }
    if nf.dim() == 1 {
        let dir = eta[0].signum();
        return legendre_scalar(|t| Ok(nf.eval(y, &Vector::new(t * dir, 0.0))), eta[0], settings);
    }
    conjugate_2d(nf, y, eta, settings)
}

fn conjugate_2d(nf: &NFunction, y: &Vector, eta: &Vector, settings: &ConjugationSettings) -> Result<f64> {
    let objective = |xi: &Vector| -> Result<f64> {
        let m = nf.eval(y, xi);
        if m.is_nan() {
            return Err(Error::InputDomain(format!("{} returned NaN", nf.name())));
        }
        Ok(xi.dot(eta) - m)
    };

    let mut best = 0.0;
    let mut best_xi = Vector::zeros();
    let mut best_k = 0;
    for j in 0..settings.directions {
        let theta = std::f64::consts::TAU * j as f64 / settings.directions as f64;
        let dir = Vector::new(theta.cos(), theta.sin());
        if dir.dot(eta) <= 0.0 {
            continue;
        }
        let mut prev = 0.0;
        for k in 0..settings.radii {
            let xi = dir * settings.radius(k);
            let v = objective(&xi)?;
            if v > best {
                best = v;
                best_xi = xi;
                best_k = k;
            }
            if v < prev && k > 0 {
                break;
            }
            prev = v;
        }
    }
    if best_k + 1 == settings.radii {
        return Err(Error::Conjugation { lo: settings.radius(best_k - 1), hi: settings.r_max });
    }
    if best_xi.norm() == 0.0 {
        best_xi = eta.normalize() * settings.r_min;
    }

    let hessian = |xi: &Vector| -> Matrix {
        let h = 1e-5 * (1.0 + xi.norm());
        let mut hess = Matrix::zeros();
        for k in 0..2 {
            let mut e = Vector::zeros();
            e[k] = h;
            let col = (nf.gradient(y, &(xi + e)) - nf.gradient(y, &(xi - e))) / (2.0 * h);
            hess.set_column(k, &col);
        }
        0.5 * (hess + hess.transpose())
    };

    let mut xi = best_xi;
    let mut value = objective(&xi)?;
    let mut grad_norm = f64::INFINITY;
    for _ in 0..settings.refine_steps {
        let grad = eta - nf.gradient(y, &xi);
        grad_norm = grad.norm();
        if grad_norm <= 1e-10 * (1.0 + eta.norm()) {
            break;
        }
        let step = match hessian(&xi).try_inverse() {
            Some(inv) if (inv * grad).dot(&grad) > 0.0 => inv * grad,
            _ => grad * (0.5 * (1.0 + xi.norm()) / (1.0 + grad_norm)),
        };
        let mut alpha = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial = xi + step * alpha;
            let v = objective(&trial)?;
            if v >= value {
                xi = trial;
                value = v;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted || (step * alpha).norm() <= 1e-13 * (1.0 + xi.norm()) {
            break;
        }
    }
    let grad_norm = grad_norm.min((eta - nf.gradient(y, &xi)).norm());
    if grad_norm > 1e-6 * (1.0 + eta.norm()) {
        let lo = if best_k == 0 { 0.0 } else { settings.radius(best_k - 1) };
        return Err(Error::Conjugation { lo, hi: settings.radius(best_k + 1) });
    }
    Ok(value.max(best))
}
