use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;

use crate::cell::{cell_mesh, check_ahat_monotone, eval_f, eval_f_nfunction, eval_hstar, fstar_numeric, solve_cell};
use crate::error::Result;
use crate::fem::{build_mesh, BoundaryKind};
use crate::harness::config::ExperimentConfig;
use crate::harness::sweep::fine_mesh;
use crate::linalg::{norm2, Vector};
use crate::msolve::{apriori_check, nodal_max_diff, primal_dual_l1, solve_dirichlet, solve_dirichlet_from, solve_dual_1d};
use crate::nfunc::{check_delta2, check_young, parse_nfunction, Claim, NFunction};
use crate::opcat::{
    check_coercivity, check_dual_coercivity, check_monotone, check_periodicity, estimate_coercivity,
    inversion_round_trip_error, potential_gradient_mismatch,
};
use crate::sampling;
use crate::unfold::{check_unfolding_identity, compose, floor_decompose, weak_two_scale_pairing};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ChecksReport {
    pub outcomes: Vec<CheckOutcome>,
}

impl ChecksReport {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }

    pub fn failures(&self) -> Vec<&CheckOutcome> {
        self.outcomes.iter().filter(|o| !o.passed).collect()
    }

    pub fn write_csv(&self, out: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["check", "passed", "detail"])?;
        for o in &self.outcomes {
            w.write_record([o.name, if o.passed { "true" } else { "false" }, &o.detail])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

pub type Integrand = fn(&Vector, &Vector) -> f64;

/// Unfolding-identity integrands g(x, y) used by the checks; the first
/// coordinate only, so they apply in 1D and 2D alike.
pub fn unfolding_integrands() -> Vec<(&'static str, Integrand)> {
    fn frac(t: f64) -> f64 {
        t.rem_euclid(1.0)
    }
    vec![
        ("one", |_, _| 1.0),
        ("sin(2 pi y)", |_, y| (2.0 * PI * y[0]).sin()),
        ("x 1[y<1/2]", |x, y| if frac(y[0]) < 0.5 { x[0] } else { 0.0 }),
        ("(x^2 + 1) (1 + frac(y)^2)", |x, y| (x[0] * x[0] + 1.0) * (1.0 + frac(y[0]).powi(2))),
        ("exp(x) cos(2 pi y)^2", |x, y| x[0].exp() * (2.0 * PI * y[0]).cos().powi(2)),
    ]
}

/// Steep-gradient fixture v(x) = 40 x^0.6 (1 − x) on (0,1).
pub fn truncation_fixture(x: f64) -> (f64, f64) {
    let v = 40.0 * x.powf(0.6) * (1.0 - x);
    let dv = 40.0 * (0.6 * x.powf(-0.4) * (1.0 - x) - x.powf(0.6));
    (v, dv)
}

/// ∫_{|v|>k} M(x, ∇v) dx, the modular of ∇T_k(v) − ∇v, for each k.
pub fn truncation_modulars(nf: &NFunction, levels: &[f64]) -> Result<Vec<f64>> {
    const PEAK: f64 = 0.375;
    let v = |x: f64| truncation_fixture(x).0;
    let solve = |k: f64, mut lo: f64, mut hi: f64, rising: bool| {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (v(mid) > k) == rising {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let gauss = [(-(3.0f64 / 5.0).sqrt(), 5.0 / 9.0), (0.0, 8.0 / 9.0), ((3.0f64 / 5.0).sqrt(), 5.0 / 9.0)];
    levels
        .iter()
        .map(|&k| {
            if v(PEAK) <= k {
                return Ok(0.0);
            }
            let a = solve(k, 0.0, PEAK, true);
            let b = solve(k, PEAK, 1.0, false);
            let n = 20_000;
            let h = (b - a) / n as f64;
            let mut total = 0.0;
            for i in 0..n {
                let mid = a + (i as f64 + 0.5) * h;
                for (s, w) in gauss {
                    let x = mid + 0.5 * h * s;
                    let dv = truncation_fixture(x).1;
                    total += 0.5 * h * w * nf.eval(&Vector::new(x, 0.0), &Vector::new(-dv, 0.0));
                }
            }
            Ok(total)
        })
        .collect()
}

type CheckFn<'a> = Box<dyn Fn() -> Result<(bool, String)> + Sync + 'a>;

/// Runs the nfunc, opcat, cell, msolve and unfold batteries plus the
/// truncation check with the configured seed.
pub fn run_checks(cfg: &ExperimentConfig) -> Result<ChecksReport> {
    cfg.validate()?;
    let op = cfg.operator()?;
    let nf = cfg.nfunction()?;
    let source = cfg.source()?;
    let dim = cfg.problem.dim;
    let seed = cfg.seed;
    let settings = cfg.solver;
    let cell = cell_mesh(&op, cfg.mesh.cell_n)?;
    let xi_samples: Vec<Vector> = {
        let mut rng = sampling::rng(seed ^ 0x5eed);
        (0..4).map(|_| sampling::vector_in_shell(&mut rng, dim, -1.0, 0.3)).collect()
    };
    let eps = cfg.eps[0];
    let c_est = || estimate_coercivity(&op, 2000, seed);

    let mut checks: Vec<(&'static str, CheckFn)> = Vec::new();
    checks.push((
        "nfunc.young",
        Box::new(|| {
            let mut detail = Vec::new();
            let mut ok = true;
            for f in [op.nfunction(), &nf] {
                let r = check_young(f, 10_000, seed)?;
                ok &= r.passed(1e-8);
                detail.push(format!("{}: {} violations, gap {:.2e}", f.name(), r.violations.len(), r.max_gap_at_conjugate_pair));
            }
            Ok((ok, detail.join("; ")))
        }),
    ));
    checks.push((
        "nfunc.delta2_claim",
        Box::new(|| {
            let grid: Vec<f64> = (0..40).map(|i| 10f64.powf(-2.0 + 0.1 * i as f64)).collect();
            let verdict = check_delta2(&nf, &grid);
            let ok = match nf.delta2_claim() {
                Claim::Yes => verdict.satisfied_on_samples,
                Claim::No => !verdict.satisfied_on_samples,
                Claim::Unknown => true,
            };
            Ok((ok, format!("claim {:?}, sampled {}", nf.delta2_claim(), verdict.satisfied_on_samples)))
        }),
    ));
    checks.push((
        "opcat.monotone",
        Box::new(|| {
            let r = check_monotone(&op, 10_000, seed);
            Ok((r.passed(), format!("min pairing {:.3e}, {} violations", r.min_pairing, r.violations.len())))
        }),
    ));
    checks.push((
        "opcat.origin",
        Box::new(|| {
            let mut rng = sampling::rng(seed);
            let worst = (0..100)
                .map(|_| op.eval(&sampling::cell_point(&mut rng, dim), &Vector::zeros()).norm())
                .fold(0.0, f64::max);
            Ok((worst == 0.0, format!("max |A(y,0)| = {worst:.3e}")))
        }),
    ));
    checks.push((
        "opcat.coercivity",
        Box::new(|| {
            let c = c_est()?;
            let bad = check_coercivity(&op, c, 0.01, 2000, seed + 1)?;
            Ok((c > 0.0 && bad.is_empty(), format!("c = {c:.6}, {} violations", bad.len())))
        }),
    ));
    checks.push((
        "opcat.dual_coercivity",
        Box::new(|| {
            let c = c_est()?;
            let bad = check_dual_coercivity(&op, c, 0.01, 1000, seed + 2)?;
            Ok((bad.is_empty(), format!("{} violations", bad.len())))
        }),
    ));
    checks.push((
        "opcat.potential",
        Box::new(|| match potential_gradient_mismatch(&op, 1000, seed) {
            Some(m) => Ok((m <= 1e-5, format!("max mismatch {m:.3e}"))),
            None => Ok((true, "no potential".into())),
        }),
    ));
    checks.push((
        "opcat.inversion",
        Box::new(|| {
            let e = inversion_round_trip_error(&op, 1000, seed)?;
            Ok((e <= 1e-8, format!("max round-trip error {e:.3e}")))
        }),
    ));
    checks.push((
        "opcat.periodicity",
        Box::new(|| {
            let ok = check_periodicity(&op, 1000, seed);
            Ok((ok, if ok { "exact".into() } else { "A(y+e_i) differs".into() }))
        }),
    ));
    checks.push((
        "cell.origin",
        Box::new(|| {
            let a = solve_cell(&op, &cell, &Vector::zeros(), &settings)?.ahat.norm();
            Ok((a <= 1e-9, format!("|Ahat(0)| = {a:.3e}")))
        }),
    ));
    checks.push((
        "cell.odd_symmetry_and_orthogonality",
        Box::new(|| {
            let mut worst_odd: f64 = 0.0;
            let mut ok = true;
            for xi in &xi_samples {
                let p = solve_cell(&op, &cell, xi, &settings)?;
                let m = solve_cell(&op, &cell, &-xi, &settings)?;
                worst_odd = worst_odd.max((p.ahat + m.ahat).norm());
                ok &= p.orthogonality <= 10.0 * settings.residual_tol * (1.0 + xi.norm());
            }
            let tol = 1e-8 * (1.0 + xi_samples.iter().map(|x| x.norm()).fold(0.0, f64::max));
            Ok((ok && worst_odd <= tol, format!("max |Ahat(x)+Ahat(-x)| = {worst_odd:.3e}")))
        }),
    ));
    checks.push((
        "cell.modular_estimate",
        Box::new(|| {
            let c = c_est()?;
            let mut ok = true;
            let mut worst: f64 = 0.0;
            for xi in &xi_samples {
                let s = solve_cell(&op, &cell, xi, &settings)?;
                let (lhs, rhs) = s.modular_estimate(op.nfunction(), c, settings.quad_order);
                ok &= lhs <= 1.05 * rhs;
                worst = worst.max(lhs / rhs);
            }
            Ok((ok, format!("max lhs/rhs = {worst:.4}")))
        }),
    ));
    checks.push((
        "cell.monotone",
        Box::new(|| {
            let (min, bad) = check_ahat_monotone(&op, &cell, 20, seed, &settings)?;
            Ok((bad == 0, format!("min pairing {min:.3e}")))
        }),
    ));
    checks.push((
        "cell.energy_consistency",
        Box::new(|| {
            if !op.has_potential() {
                return Ok((true, "no potential".into()));
            }
            let xi = xi_samples[0];
            let f = eval_f_nfunction(op.nfunction(), &cell, &xi, &settings)?;
            let s = solve_cell(&op, &cell, &xi, &settings)?;
            let worst = f.gradients.iter().zip(s.total_gradients()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            let fv = eval_f(&op, &cell, &xi, &settings)?.value;
            Ok((worst <= 1e-6 && (fv - f.value).abs() <= 1e-8 * (1.0 + fv), format!("max gradient gap {worst:.3e}")))
        }),
    ));
    if dim == 1 {
        checks.push((
            "cell.conjugate_duality",
            Box::new(|| {
                let s = Vector::new(1.0, 0.0);
                let fstar = fstar_numeric(&op, &cell, &s, &settings)?;
                let hstar = eval_hstar(op.nfunction(), &s, &cell, settings.quad_order)?;
                let gap = (fstar - hstar).abs();
                Ok((gap <= 1e-3 * (1.0 + hstar), format!("f*(1) = {fstar:.8}, h*(1) = {hstar:.8}")))
            }),
        ));
    }
    checks.push((
        "msolve.energy_and_uniqueness",
        Box::new(|| {
            let mesh = fine_mesh(&op, eps, cfg.mesh.ratio)?;
            let a = solve_dirichlet(&op, &mesh, &source, Some(eps), &settings)?;
            let mut rng = sampling::rng(seed);
            let start: Vec<f64> = (0..mesh.num_free()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b = solve_dirichlet_from(&op, &mesh, &source, Some(eps), &settings, Some(&start))?;
            let diff = nodal_max_diff(&a.u, &b.u);
            let bound = 10.0 * settings.residual_tol * (1.0 + norm2(a.u.coefficients()));
            let c = c_est()?;
            let apriori = apriori_check(&a, &op, &source, c)?;
            let ok = diff <= 1e-8 && a.energy_identity_gap <= bound && apriori.holds(0.05);
            Ok((ok, format!("two-start {diff:.2e}, energy gap {:.2e}, a-priori {:.4} <= {:.4}", a.energy_identity_gap, apriori.lhs, apriori.rhs)))
        }),
    ));
    if dim == 1 {
        checks.push((
            "msolve.primal_dual",
            Box::new(|| {
                let mesh = Arc::new(build_mesh(1, 256, BoundaryKind::DirichletZero, op.interfaces())?);
                let p = solve_dirichlet(&op, &mesh, &source, None, &settings)?;
                let d = solve_dual_1d(&op, &mesh, &source, &settings)?;
                let l1 = primal_dual_l1(&p.u, &d);
                Ok((l1 <= 1e-6, format!("L1 gradient gap {l1:.3e}, T = {:.8}", d.t)))
            }),
        ));
    }
    checks.push((
        "unfold.decomposition",
        Box::new(|| {
            let mut rng = sampling::rng(seed);
            let mut worst: f64 = 0.0;
            for _ in 0..10_000 {
                let x: f64 = rng.gen_range(-50.0..50.0);
                let e: f64 = 1.0 / rng.gen_range(1..64) as f64;
                let xv = Vector::new(x, 0.0);
                let (_, r) = floor_decompose(&xv, 1, e);
                worst = worst.max((compose(&xv, &r, 1, e)[0] - x).abs() / (1.0 + x.abs()));
            }
            Ok((worst <= 1e-14, format!("max relative error {worst:.2e}")))
        }),
    ));
    checks.push((
        "unfold.identity",
        Box::new(|| {
            let mut worst: f64 = 0.0;
            for (_, g) in unfolding_integrands() {
                for e in [1.0 / 3.0, 0.2] {
                    worst = worst.max(check_unfolding_identity(g, dim, e, 3)?.gap);
                }
            }
            Ok((worst <= 1e-6, format!("max gap {worst:.2e}")))
        }),
    ));
    checks.push((
        "unfold.pairing_linearity",
        Box::new(|| {
            let e = 0.125;
            let chi = |y: &Vector| (2.0 * PI * y[0]).cos();
            let phi = |x: &Vector| x[0] * (1.0 - x[0]);
            let v1 = |x: &Vector| x[0].sin();
            let v2 = |x: &Vector| x[0] * x[0];
            let p1 = weak_two_scale_pairing(v1, phi, chi, dim, e, 3)?;
            let p2 = weak_two_scale_pairing(v2, phi, chi, dim, e, 3)?;
            let p12 = weak_two_scale_pairing(|x| 2.0 * v1(x) - 3.0 * v2(x), phi, chi, dim, e, 3)?;
            let gap = (p12 - (2.0 * p1 - 3.0 * p2)).abs();
            Ok((gap <= 1e-12, format!("linearity gap {gap:.2e}")))
        }),
    ));
    checks.push((
        "truncation",
        Box::new(|| {
            let name = cfg.problem.nfunction.clone().unwrap_or_else(|| "power:2".into());
            let mut f = parse_nfunction(&name, 1)?;
            if f.delta2_claim() != Claim::Yes {
                f = parse_nfunction("power:2", 1)?;
            }
            let m = truncation_modulars(&f, &[1.0, 2.0, 4.0, 8.0])?;
            let ok = m.iter().all(|v| v.is_finite()) && m.windows(2).all(|w| w[1] < w[0]);
            Ok((ok, format!("{}: {m:.6?}", f.name())))
        }),
    ));

    use rayon::prelude::*;
    let outcomes = checks
        .par_iter()
        .map(|(name, check)| match check() {
            Ok((passed, detail)) => CheckOutcome { name, passed, detail },
            Err(e) => CheckOutcome { name, passed: false, detail: format!("error: {e}") },
        })
        .collect();
    Ok(ChecksReport { outcomes })
}

/// Modular of ∇T_k(v) − ∇v for the default quadratic N-function.
pub fn default_truncation_sequence() -> Result<Vec<f64>> {
    truncation_modulars(&parse_nfunction("power:2", 1)?, &[1.0, 2.0, 4.0, 8.0])
}
