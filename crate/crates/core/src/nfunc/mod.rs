//! Musielak–Orlicz N-functions M(y, ξ): evaluation, numeric convex
//! conjugation, modulars, Luxemburg norms and the Young / Δ₂ batteries.

mod catalog;
mod checks;
mod conjugate;
mod modular;

use std::fmt;
use std::sync::Arc;

pub use catalog::{parse_nfunction, Pattern};
pub(crate) use catalog::{aniso_matrix, exp_excess, params as catalog_params, quadratic_form, smooth_exponent};
pub use checks::{check_delta2, check_young, Delta2Verdict, YoungReport, YoungViolation};
pub use conjugate::{legendre_scalar, ConjugationSettings};
pub use modular::{
    luxemburg_norm, luxemburg_norm_fn, luxemburg_norm_gradient, modular, modular_fn, modular_gradient,
    modular_two_scale, SampledField,
};

use crate::error::{Error, Result};
use crate::linalg::{truncate, Vector};

pub type PointFn = Arc<dyn Fn(&Vector, &Vector) -> f64 + Send + Sync>;
pub type PointGradFn = Arc<dyn Fn(&Vector, &Vector) -> Vector + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Tri-state metadata claim (Δ₂ of M or of M*).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Claim {
    Yes,
    No,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Smoothness {
    Smooth,
    /// Discontinuous in y across the listed interfaces.
    Piecewise,
}

/// Radial N-function t ↦ m(t), used as lower/upper envelope of M.
#[derive(Clone)]
pub struct RadialNFunction {
    eval: ScalarFn,
    conjugate: Option<ScalarFn>,
}

impl fmt::Debug for RadialNFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialNFunction")
            .field("closed_form_conjugate", &self.conjugate.is_some())
            .finish()
    }
}

impl RadialNFunction {
    pub fn new(eval: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self { eval: Arc::new(eval), conjugate: None }
    }

    pub fn with_conjugate(mut self, conj: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.conjugate = Some(Arc::new(conj));
        self
    }

    /// t ↦ scale · t^p / p, conjugate s ↦ scale · (s/scale)^q / q.
    pub fn power(p: f64, scale: f64) -> Self {
        let q = p / (p - 1.0);
        Self::new(move |t: f64| scale * t.abs().powf(p) / p)
            .with_conjugate(move |s: f64| scale * (s.abs() / scale).powf(q) / q)
    }

    pub fn eval(&self, t: f64) -> f64 {
        (self.eval)(t.abs())
    }

    pub fn has_closed_form_conjugate(&self) -> bool {
        self.conjugate.is_some()
    }

    /// m*(s), closed form when known, numeric Legendre transform otherwise.
    pub fn conjugate(&self, s: f64) -> Result<f64> {
        match &self.conjugate {
            Some(c) => Ok(c(s.abs())),
            None => {
                let m = self.eval.clone();
                legendre_scalar(|t| Ok(m(t)), s.abs(), &ConjugationSettings::default())
            }
        }
    }
}

/// N-function M(y, ξ) with y in the unit cell (or domain) and ξ ∈ R^dim.
#[derive(Clone)]
pub struct NFunction {
    name: String,
    dim: usize,
    eval: PointFn,
    gradient: Option<PointGradFn>,
    conjugate: Option<PointFn>,
    periodic: bool,
    lower: RadialNFunction,
    upper: RadialNFunction,
    delta2: Claim,
    delta2_conjugate: Claim,
    smoothness: Smoothness,
    interfaces: Vec<f64>,
    settings: ConjugationSettings,
}

impl fmt::Debug for NFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NFunction")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("periodic", &self.periodic)
            .field("delta2", &self.delta2)
            .field("delta2_conjugate", &self.delta2_conjugate)
            .field("smoothness", &self.smoothness)
            .field("interfaces", &self.interfaces)
            .finish()
    }
}

impl NFunction {
    /// Smooth, periodic N-function with unknown Δ₂ claims. Both envelopes
    /// start as t²/2; set real ones with [`NFunction::with_envelopes`].
    pub fn new(name: impl Into<String>, dim: usize, eval: impl Fn(&Vector, &Vector) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            dim,
            eval: Arc::new(eval),
            gradient: None,
            conjugate: None,
            periodic: true,
            lower: RadialNFunction::power(2.0, 1.0),
            upper: RadialNFunction::power(2.0, 1.0),
            delta2: Claim::Unknown,
            delta2_conjugate: Claim::Unknown,
            smoothness: Smoothness::Smooth,
            interfaces: Vec::new(),
            settings: ConjugationSettings::default(),
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(&Vector, &Vector) -> Vector + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_conjugate(mut self, c: impl Fn(&Vector, &Vector) -> f64 + Send + Sync + 'static) -> Self {
        self.conjugate = Some(Arc::new(c));
        self
    }

    pub fn with_envelopes(mut self, lower: RadialNFunction, upper: RadialNFunction) -> Self {
        self.lower = lower;
        self.upper = upper;
        self
    }

    pub fn with_claims(mut self, delta2: Claim, delta2_conjugate: Claim) -> Self {
        self.delta2 = delta2;
        self.delta2_conjugate = delta2_conjugate;
        self
    }

    pub fn piecewise(mut self, interfaces: Vec<f64>) -> Self {
        self.smoothness = Smoothness::Piecewise;
        self.interfaces = interfaces;
        self
    }

    pub fn with_interfaces(mut self, interfaces: Vec<f64>) -> Self {
        self.interfaces = interfaces;
        self
    }

    pub fn non_periodic(mut self) -> Self {
        self.periodic = false;
        self
    }

    pub fn with_conjugation_settings(mut self, settings: ConjugationSettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn periodic(&self) -> bool {
        self.periodic
    }

    pub fn lower(&self) -> &RadialNFunction {
        &self.lower
    }

    pub fn upper(&self) -> &RadialNFunction {
        &self.upper
    }

    pub fn delta2_claim(&self) -> Claim {
        self.delta2
    }

    pub fn delta2_conjugate_claim(&self) -> Claim {
        self.delta2_conjugate
    }

    pub fn smoothness(&self) -> Smoothness {
        self.smoothness
    }

    pub fn interfaces(&self) -> &[f64] {
        &self.interfaces
    }

    pub fn has_closed_form_conjugate(&self) -> bool {
        self.conjugate.is_some()
    }

    pub fn eval(&self, y: &Vector, xi: &Vector) -> f64 {
        (self.eval)(y, &truncate(*xi, self.dim))
    }

    /// Gradient in ξ: closed form when provided, central differences with
    /// step 1e-6·(1+|ξ|) otherwise.
    pub fn gradient(&self, y: &Vector, xi: &Vector) -> Vector {
        match &self.gradient {
            Some(g) => truncate(g(y, &truncate(*xi, self.dim)), self.dim),
            None => self.gradient_fd(y, xi),
        }
    }

    pub fn gradient_fd(&self, y: &Vector, xi: &Vector) -> Vector {
        let xi = truncate(*xi, self.dim);
        let h = 1e-6 * (1.0 + xi.norm());
        let mut g = Vector::zeros();
        for k in 0..self.dim {
            let mut e = Vector::zeros();
            e[k] = h;
            g[k] = (self.eval(y, &(xi + e)) - self.eval(y, &(xi - e))) / (2.0 * h);
        }
        g
    }

    /// M*(y, η). Uses the closed form when present.
    pub fn conjugate(&self, y: &Vector, eta: &Vector) -> Result<f64> {
        match &self.conjugate {
            Some(c) => {
                let v = c(y, &truncate(*eta, self.dim));
                if v.is_nan() {
                    Err(Error::InputDomain(format!("conjugate of {} is NaN", self.name)))
                } else {
                    Ok(v)
                }
            }
            None => self.conjugate_numeric(y, eta),
        }
    }

    /// sup_ξ (ξ·η − M(y, ξ)) by coarse radial/directional search and local
    /// ascent, ignoring any closed form.
    pub fn conjugate_numeric(&self, y: &Vector, eta: &Vector) -> Result<f64> {
        conjugate::conjugate_point(self, y, &truncate(*eta, self.dim), &self.settings)
    }

    /// The conjugate N-function M*, evaluated through [`NFunction::conjugate`].
    /// Its own conjugate is M again, and the envelopes swap roles.
    pub fn conjugate_nfunction(&self) -> NFunction {
        let primal = self.clone();
        let primal_for_conj = self.clone();
        let lower = {
            let upper = self.upper.clone();
            RadialNFunction::new(move |s| upper.conjugate(s).unwrap_or(f64::NAN))
        };
        let upper = {
            let lower = self.lower.clone();
            RadialNFunction::new(move |s| lower.conjugate(s).unwrap_or(f64::NAN))
        };
        NFunction {
            name: format!("{}*", self.name),
            dim: self.dim,
            eval: Arc::new(move |y, eta| primal.conjugate(y, eta).unwrap_or(f64::NAN)),
            gradient: None,
            conjugate: Some(Arc::new(move |y, xi| primal_for_conj.eval(y, xi))),
            periodic: self.periodic,
            lower,
            upper,
            delta2: self.delta2_conjugate,
            delta2_conjugate: self.delta2,
            smoothness: self.smoothness,
            interfaces: self.interfaces.clone(),
            settings: self.settings,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_envelope_conjugate_is_closed_form() {
        let m = RadialNFunction::power(3.0, 1.0);
        assert!((m.conjugate(1.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        let numeric = RadialNFunction::new(|t| t.powi(3) / 3.0);
        assert!((numeric.conjugate(1.0).unwrap() - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn conjugate_of_conjugate_is_primal() {
        let nf = parse_nfunction("power:3", 1).unwrap();
        let conj = nf.conjugate_nfunction();
        let y = Vector::zeros();
        let xi = Vector::new(1.3, 0.0);
        assert!((conj.conjugate(&y, &xi).unwrap() - nf.eval(&y, &xi)).abs() < 1e-15);
        assert_eq!(conj.delta2_claim(), nf.delta2_conjugate_claim());
    }
}
