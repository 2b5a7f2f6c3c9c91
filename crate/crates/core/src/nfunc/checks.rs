use crate::error::Result;
use crate::linalg::Vector;
use crate::nfunc::{NFunction, Smoothness};
use crate::sampling;

/// Absolute slack of the Young inequality check.
pub const YOUNG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct YoungViolation {
    pub y: Vector,
    pub xi: Vector,
    pub eta: Vector,
    /// ξ·η − M(y,ξ) − M*(y,η), positive on violation.
    pub excess: f64,
}

#[derive(Debug, Clone, Default)]
pub struct YoungReport {
    pub samples: usize,
    pub violations: Vec<YoungViolation>,
    /// Largest M(y,ξ) + M*(y,∇M(y,ξ)) − ξ·∇M(y,ξ) over the sampled pairs
    /// (zero when the N-function is not smooth).
    pub max_gap_at_conjugate_pair: f64,
}

impl YoungReport {
    pub fn passed(&self, gap_tol: f64) -> bool {
        self.violations.is_empty() && self.max_gap_at_conjugate_pair <= gap_tol
    }
}

/// Samples (y, ξ, η) and checks ξ·η ≤ M(y,ξ) + M*(y,η) + 1e-12. For smooth
/// N-functions the pair (ξ, ∇M(y,ξ)), with a central-difference gradient,
/// is also sampled and its equality gap recorded.
pub fn check_young(nf: &NFunction, sample_count: usize, rng_seed: u64) -> Result<YoungReport> {
    let mut rng = sampling::rng(rng_seed);
    let dim = nf.dim();
    let mut report = YoungReport { samples: sample_count, ..Default::default() };
    for _ in 0..sample_count {
        let y = sampling::cell_point(&mut rng, dim);
        let xi = sampling::vector_in_shell(&mut rng, dim, -2.0, 0.5);
        let eta = sampling::vector_in_shell(&mut rng, dim, -2.0, 0.5);
        let excess = xi.dot(&eta) - nf.eval(&y, &xi) - nf.conjugate(&y, &eta)?;
        if excess > YOUNG_TOL {
            report.violations.push(YoungViolation { y, xi, eta, excess });
        }
        if nf.smoothness() == Smoothness::Smooth {
            let grad = nf.gradient_fd(&y, &xi);
            let gap = nf.eval(&y, &xi) + nf.conjugate(&y, &grad)? - xi.dot(&grad);
            if -gap > YOUNG_TOL {
                report.violations.push(YoungViolation { y, xi, eta: grad, excess: -gap });
            }
            report.max_gap_at_conjugate_pair = report.max_gap_at_conjugate_pair.max(gap.abs());
        }
    }
    Ok(report)
}

/// Sampling verdict on the Δ₂ condition. This is a heuristic: Δ₂ is an
/// asymptotic property and cannot be decided from finitely many samples.
#[derive(Debug, Clone)]
pub struct Delta2Verdict {
    pub satisfied_on_samples: bool,
    pub max_ratio: f64,
    /// max over sampled (y, direction) of M(y,2ξ)/(M(y,ξ)+1) per grid radius.
    pub ratios: Vec<f64>,
}

/// Growth allowed between the ratios at the two largest radii.
const DELTA2_SETTLED_GROWTH: f64 = 1.05;

pub fn check_delta2(nf: &NFunction, radius_grid: &[f64]) -> Delta2Verdict {
    assert!(radius_grid.windows(2).all(|w| w[0] < w[1]), "radius grid must be strictly increasing");
    let dim = nf.dim();
    let ys: Vec<Vector> = if dim == 1 {
        (0..8).map(|i| Vector::new((i as f64 + 0.5) / 8.0, 0.0)).collect()
    } else {
        (0..16).map(|i| Vector::new(((i % 4) as f64 + 0.5) / 4.0, ((i / 4) as f64 + 0.5) / 4.0)).collect()
    };
    let dirs: Vec<Vector> = if dim == 1 {
        vec![Vector::new(1.0, 0.0), Vector::new(-1.0, 0.0)]
    } else {
        (0..8)
            .map(|j| {
                let t = std::f64::consts::TAU * j as f64 / 8.0;
                Vector::new(t.cos(), t.sin())
            })
            .collect()
    };
    let ratios: Vec<f64> = radius_grid
        .iter()
        .map(|&r| {
            ys.iter()
                .flat_map(|y| dirs.iter().map(move |d| (y, d)))
                .map(|(y, d)| nf.eval(y, &(d * (2.0 * r))) / (nf.eval(y, &(d * r)) + 1.0))
                .fold(0.0, f64::max)
        })
        .collect();
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let settled = match ratios.len() {
        0 | 1 => true,
        n => ratios[n - 1] <= ratios[n - 2] * DELTA2_SETTLED_GROWTH,
    };
    Delta2Verdict {
        satisfied_on_samples: max_ratio.is_finite() && settled,
        max_ratio,
        ratios,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nfunc::parse_nfunction;

    fn custom(f: fn(f64) -> f64) -> NFunction {
        NFunction::new("custom", 1, move |_, xi| f(xi[0].abs()))
    }

    #[test]
    fn young_tight_for_quadratic() {
        let nf = parse_nfunction("power:2", 1).unwrap();
        let y = Vector::zeros();
        let (xi, eta) = (Vector::new(1.0, 0.0), Vector::new(1.0, 0.0));
        let gap = nf.eval(&y, &xi) + nf.conjugate(&y, &eta).unwrap() - xi.dot(&eta);
        assert!(gap.abs() < 1e-15);
        let cubic = parse_nfunction("power:3", 1).unwrap();
        let rhs = cubic.eval(&y, &xi) + cubic.conjugate(&y, &Vector::zeros()).unwrap();
        assert!((rhs - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn exp_equality_gap_at_gradient() {
        let nf = parse_nfunction("exp", 1).unwrap();
        let y = Vector::zeros();
        let xi = Vector::new(1.0, 0.0);
        let eta = nf.gradient_fd(&y, &xi);
        assert!((eta[0] - (1f64.exp() - 1.0)).abs() < 1e-8);
        let gap = nf.eval(&y, &xi) + nf.conjugate(&y, &eta).unwrap() - xi.dot(&eta);
        assert!(gap.abs() < 1e-8, "{gap}");
    }

    #[test]
    fn young_battery_is_clean_for_catalog() {
        for name in ["power:2", "power:3", "exp", "varexp"] {
            let nf = parse_nfunction(name, 1).unwrap();
            let r = check_young(&nf, 500, 7).unwrap();
            assert!(r.passed(1e-8), "{name}: {r:?}");
        }
    }

    #[test]
    fn delta2_power_ratios() {
        let grid: Vec<f64> = (0..=20).map(|k| 10f64.powf(k as f64 / 5.0)).collect();
        let sq = custom(|t| t * t);
        let v = check_delta2(&sq, &grid);
        assert!(v.satisfied_on_samples);
        assert!(v.max_ratio <= 4.0 && v.max_ratio > 3.99, "{}", v.max_ratio);
        let cube = custom(|t| t * t * t);
        let v = check_delta2(&cube, &grid);
        assert!(v.satisfied_on_samples);
        assert!(v.max_ratio <= 8.0 && v.max_ratio > 7.99);
    }

    #[test]
    fn delta2_fails_for_exp_square() {
        let grid: Vec<f64> = (1..=12).map(|k| 0.5 * k as f64).collect();
        let nf = custom(|t| (t * t).exp() - 1.0);
        let v = check_delta2(&nf, &grid);
        assert!(!v.satisfied_on_samples);
        assert!(v.max_ratio > 1e6);
        assert!(v.ratios.windows(2).skip(2).all(|w| w[1] > w[0]));
    }
}
