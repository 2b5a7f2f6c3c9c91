//! Acceptance criteria. Each test prints one `criterion N PASS|FAIL` line
//! and then asserts it. Reference values come from closed forms computed
//! here, independently of the library.

use std::sync::Arc;
use std::time::Instant;

use orlicz_homog::cell::{
    cell_mesh, check_ahat_monotone, check_ahat_structure, eval_f, eval_hstar, fstar_numeric, solve_cell,
    tabulate_ahat, CoercivityBranch,
};
use orlicz_homog::fem::{build_mesh, BoundaryKind};
use orlicz_homog::grid::{linspace, TensorGrid};
use orlicz_homog::harness::checks::{truncation_fixture, truncation_modulars, unfolding_integrands};
use orlicz_homog::harness::sweep::fine_mesh;
use orlicz_homog::harness::{run_sweep, ExperimentConfig, RowStatus};
use orlicz_homog::msolve::{
    nodal_max_diff, primal_dual_l1, solve_dirichlet, solve_dirichlet_from, solve_dual_1d, SolverSettings, Source,
};
use orlicz_homog::nfunc::{check_young, parse_nfunction};
use orlicz_homog::opcat::{estimate_coercivity, parse_operator};
use orlicz_homog::unfold::check_unfolding_identity;
use orlicz_homog::Vector;
use rand::{Rng, SeedableRng};

fn report(n: usize, title: &str, ok: bool, detail: String) {
    println!("criterion {n:>2} {} {title}: {detail}", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n} ({title}) failed: {detail}");
}

fn v1(x: f64) -> Vector {
    Vector::new(x, 0.0)
}

/// 1D two-phase laminate with phases a₁ on [0,½), a₂ on [½,1) and flux
/// a|ξ|^{p−2}ξ: the cell flux σ is constant, so ξ = ∫ (σ/a)^{1/(p−1)} and
/// Â(ξ) = sign(ξ) (|ξ| / ∫ a^{−1/(p−1)})^{p−1}.
fn laminate_ahat(p: f64, a1: f64, a2: f64, xi: f64) -> f64 {
    let q = 1.0 / (p - 1.0);
    let mean = 0.5 * (a1.powf(-q) + a2.powf(-q));
    xi.signum() * (xi.abs() / mean).powf(p - 1.0)
}

const CATALOG: [(&str, usize); 7] = [
    ("linear:1,3", 1),
    ("plaplace:3,1,16", 1),
    ("varexp", 1),
    ("exp", 1),
    ("aniso", 1),
    ("linear:1,3", 2),
    ("aniso", 2),
];

#[test]
fn criterion_01_linear_laminate_harmonic_mean() {
    let op = parse_operator("linear:1,3", 1).unwrap();
    let mesh = cell_mesh(&op, 256).unwrap();
    let settings = SolverSettings::default();
    let mut ok = true;
    let mut detail = Vec::new();
    for xi in [-2.0, 1.0, 3.0] {
        let t = Instant::now();
        let a = solve_cell(&op, &mesh, &v1(xi), &settings).unwrap().ahat[0];
        let secs = t.elapsed().as_secs_f64();
        let expected = laminate_ahat(2.0, 1.0, 3.0, xi);
        let err = (a - expected).abs();
        ok &= err <= 1e-3 * xi.abs() && secs < 1.0;
        detail.push(format!("xi={xi}: {a:.9} vs {expected} ({secs:.3}s)"));
    }
    report(1, "linear laminate", ok, detail.join(", "));
}

#[test]
fn criterion_02_plaplace_laminate() {
    let op = parse_operator("plaplace:3,1,16", 1).unwrap();
    let t = Instant::now();
    let mesh = cell_mesh(&op, 256).unwrap();
    let a = solve_cell(&op, &mesh, &v1(1.0), &SolverSettings::default()).unwrap().ahat[0];
    let secs = t.elapsed().as_secs_f64();
    let expected = laminate_ahat(3.0, 1.0, 16.0, 1.0);
    let ok = (a - expected).abs() <= 5e-3 && secs < 5.0 && (expected - 2.56).abs() < 1e-12;
    report(2, "p=3 laminate", ok, format!("Ahat(1) = {a:.9}, closed form {expected}, {secs:.3}s"));
}

#[test]
fn criterion_03_ahat_vanishes_at_origin() {
    let settings = SolverSettings::default();
    let mut worst: f64 = 0.0;
    for (name, dim) in CATALOG {
        let op = parse_operator(name, dim).unwrap();
        let mesh = cell_mesh(&op, if dim == 1 { 128 } else { 16 }).unwrap();
        worst = worst.max(solve_cell(&op, &mesh, &Vector::zeros(), &settings).unwrap().ahat.norm());
    }
    report(3, "Ahat(0) = 0", worst <= 1e-9, format!("max |Ahat(0)| = {worst:.2e} over {} operators", CATALOG.len()));
}

#[test]
fn criterion_04_ahat_monotone() {
    let settings = SolverSettings::default();
    let mut ok = true;
    let mut detail = Vec::new();
    for (k, (name, dim)) in CATALOG.into_iter().enumerate() {
        let op = parse_operator(name, dim).unwrap();
        let mesh = cell_mesh(&op, if dim == 1 { 64 } else { 8 }).unwrap();
        let (min, bad) = check_ahat_monotone(&op, &mesh, 100, 40 + k as u64, &settings).unwrap();
        ok &= bad == 0 && min > 0.0;
        detail.push(format!("{name}/{dim}d min {min:.2e}"));
    }
    report(4, "monotone Ahat, 100 pairs each", ok, detail.join(", "));
}

#[test]
fn criterion_05_ahat_coercivity() {
    let op = parse_operator("linear:1,3", 1).unwrap();
    let mesh = cell_mesh(&op, 256).unwrap();
    let settings = SolverSettings::default();
    let c = estimate_coercivity(&op, 2000, 5).unwrap();
    let grid = TensorGrid::new(vec![linspace(-2.0, 2.0, 41)]).unwrap();
    let table = tabulate_ahat(&op, &mesh, &grid, &settings).unwrap();
    let r = check_ahat_structure(&table, &op, &mesh, &settings, CoercivityBranch::F, c, 20, 5).unwrap();
    let one = v1(1.0);
    let a1 = solve_cell(&op, &mesh, &one, &settings).unwrap().ahat;
    let f1 = eval_f(&op, &mesh, &one, &settings).unwrap().value;
    let fs1 = fstar_numeric(&op, &mesh, &a1, &settings).unwrap();
    // f(ξ) = 0.75 ξ², Â(1) = 1.5 and f*(1.5) = 1.5²/3 = 0.75
    let equality = (a1[0] - 1.5).abs() < 1e-6 && (f1 - 0.75).abs() < 1e-6 && (fs1 - 0.75).abs() < 1e-6;
    let ok = r.coercivity.len() == 20 && r.coercivity_failures == 0 && (c - 1.0).abs() < 1e-9 && equality;
    report(
        5,
        "coercivity",
        ok,
        format!("c = {c}, {} failures of 20, at xi=1: {:.6} >= {:.6} + {:.6}", r.coercivity_failures, a1[0], f1, fs1),
    );
}

#[test]
fn criterion_06_conjugate_duality() {
    let op = parse_operator("linear:1,3", 1).unwrap();
    let mesh = cell_mesh(&op, 256).unwrap();
    let settings = SolverSettings::default();
    let fstar = fstar_numeric(&op, &mesh, &v1(1.0), &settings).unwrap();
    let hstar = eval_hstar(op.nfunction(), &v1(1.0), &mesh, settings.quad_order).unwrap();
    let oracle = 0.5 * (1.0 / 2.0 + 1.0 / 6.0);
    let ok = (fstar - oracle).abs() <= 1e-3 && (hstar - oracle).abs() <= 1e-3;
    report(6, "conjugate duality", ok, format!("f*(1) = {fstar:.9}, h*(1) = {hstar:.9}, mean of 1/(2a) = {oracle:.9}"));
}

#[test]
fn criterion_07_young_inequality() {
    let names = ["power:2", "power:3", "weighted:3,1,16", "varexp:2,4", "checkerboard:2,4", "exp:1", "aniso"];
    let mut ok = true;
    let mut detail = Vec::new();
    for dim in [1, 2] {
        for (k, name) in names.iter().enumerate() {
            let nf = parse_nfunction(name, dim).unwrap();
            let r = check_young(&nf, 10_000, 100 + k as u64).unwrap();
            ok &= r.samples == 10_000 && r.passed(1e-8);
            if !r.passed(1e-8) {
                detail.push(format!("{name}/{dim}d: {} violations, gap {:.2e}", r.violations.len(), r.max_gap_at_conjugate_pair));
            }
        }
    }
    report(7, "Young inequality", ok, if detail.is_empty() { format!("{} N-functions clean", 2 * names.len()) } else { detail.join("; ") });
}

#[test]
fn criterion_08_unfolding_identity() {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for (_, g) in unfolding_integrands() {
        for eps in [1.0 / 3.0, 0.2] {
            let r = check_unfolding_identity(g, 1, eps, 3).unwrap();
            worst = worst.max((r.lhs - r.rhs).abs());
            count += 1;
        }
    }
    // oracle for the first integrand: both sides equal |Ω| = 1
    let one = check_unfolding_identity(unfolding_integrands()[0].1, 1, 0.2, 3).unwrap();
    let ok = count == 10 && worst <= 1e-6 && (one.lhs - 1.0).abs() < 1e-12;
    report(8, "unfolding identity", ok, format!("max |lhs - rhs| = {worst:.2e} over 5 integrands x 2 eps"));
}

#[test]
fn criterion_09_homogenization_convergence() {
    let t = Instant::now();
    let cfg = ExperimentConfig::default();
    assert_eq!(cfg.problem.operator, "linear:1,3");
    assert_eq!(cfg.eps, vec![0.25, 0.125, 0.0625]);
    assert_eq!(cfg.mesh.ratio, 32);
    let r = run_sweep(&cfg).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let mut ok = secs < 60.0 && r.rows.iter().all(|row| row.status == RowStatus::Ok);
    let mut detail = Vec::new();
    for w in r.rows.windows(2) {
        let (rw, rl) = (w[0].weak_err / w[1].weak_err, w[0].l1_err / w[1].l1_err);
        ok &= rw >= 1.4 && rl >= 1.4;
        detail.push(format!("weak x{rw:.2}, l1 x{rl:.2}"));
    }
    report(9, "homogenization convergence", ok, format!("{} ({secs:.2}s)", detail.join("; ")));
}

#[test]
fn criterion_10_primal_dual_agreement() {
    let settings = SolverSettings::default();
    let source = Source::linear(1);
    let mut ok = true;
    let mut detail = Vec::new();
    for name in ["plaplace:2,1,3", "plaplace:3,1,16"] {
        let op = parse_operator(name, 1).unwrap();
        let mesh = Arc::new(build_mesh(1, 512, BoundaryKind::DirichletZero, op.interfaces()).unwrap());
        let primal = solve_dirichlet(&op, &mesh, &source, None, &settings).unwrap();
        let dual = solve_dual_1d(&op, &mesh, &source, &settings).unwrap();
        let l1 = primal_dual_l1(&primal.u, &dual);
        ok &= l1 <= 1e-6;
        detail.push(format!("{name}: {l1:.2e}"));
    }
    report(10, "primal-dual agreement", ok, detail.join(", "));
}

#[test]
fn criterion_11_corrector_identification() {
    let cfg = ExperimentConfig { eps: vec![1.0 / 16.0, 1.0 / 32.0], ..ExperimentConfig::default() };
    let r = run_sweep(&cfg).unwrap();
    let (coarse, fine) = (&r.rows[0].probe_mismatches, &r.rows[1].probe_mismatches);
    let ok = coarse.len() == 5 && fine.len() == 5 && coarse.iter().zip(fine).all(|(a, b)| b < a);
    let pairs: Vec<String> = coarse.iter().zip(fine).map(|(a, b)| format!("{a:.3}->{b:.3}")).collect();
    report(11, "corrector identification", ok, pairs.join(", "));
}

#[test]
fn criterion_12_truncation_modulars() {
    let nf = parse_nfunction("power:2", 1).unwrap();
    let m = truncation_modulars(&nf, &[1.0, 2.0, 4.0, 8.0]).unwrap();
    // oracle: midpoint rule for ∫_{v>k} |v'|²/2
    let n = 400_000;
    let oracle: f64 = (0..n)
        .map(|i| {
            let x = (i as f64 + 0.5) / n as f64;
            let (v, dv) = truncation_fixture(x);
            if v > 1.0 {
                0.5 * dv * dv / n as f64
            } else {
                0.0
            }
        })
        .sum();
    let ok = m.windows(2).all(|w| w[1] < w[0]) && (m[0] - oracle).abs() < 1e-2 * oracle;
    report(12, "truncation modulars", ok, format!("{m:.4?}, k=1 oracle {oracle:.4}"));
}

#[test]
fn criterion_13_uniqueness_and_energy_identity() {
    let settings = SolverSettings::default();
    let fixtures = [
        ("linear:1", 1, 0.25),
        ("plaplace:3", 1, 0.25),
        ("linear:1,3", 1, 0.25),
        ("plaplace:3,1,16", 1, 0.125),
        ("linear:1,3", 2, 0.5),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(13);
    for (name, dim, eps) in fixtures {
        let op = parse_operator(name, dim).unwrap();
        let ratio = if dim == 1 { 32 } else { 8 };
        let mesh = fine_mesh(&op, eps, ratio).unwrap();
        let source = Source::linear(dim);
        let a = solve_dirichlet(&op, &mesh, &source, Some(eps), &settings).unwrap();
        let start: Vec<f64> = (0..mesh.num_free()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = solve_dirichlet_from(&op, &mesh, &source, Some(eps), &settings, Some(&start)).unwrap();
        let diff = nodal_max_diff(&a.u, &b.u);
        ok &= diff <= 1e-8 && a.energy_identity_gap <= 10.0 * settings.residual_tol;
        detail.push(format!("{name}/{dim}d: two-start {diff:.1e}, energy gap {:.1e}", a.energy_identity_gap));
    }
    report(13, "uniqueness and energy identity", ok, detail.join("; "));
}
