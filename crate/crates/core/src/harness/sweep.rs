use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::cell::{cell_mesh, tabulate_ahat, HomogTable, NestedLaw, TableLaw};
use crate::error::{Error, Result};
use crate::fem::{build_mesh, eval_nodal, BoundaryKind, DiscreteField, Mesh, QuadRule};
use crate::harness::config::ExperimentConfig;
use crate::linalg::Vector;
use crate::msolve::{apriori_constant, solve_dirichlet, solve_law, Discretization, FluxLaw, Source};
use crate::opcat::{estimate_coercivity, MonotoneOperator};
use crate::unfold::corrector_identification;

/// Number of functions in the weak-error battery.
pub const WEAK_TESTS: usize = 8;

fn bump(t: f64, center: f64) -> f64 {
    let r = (t - center) / 0.2;
    if r.abs() < 1.0 {
        (1.0 - 1.0 / (1.0 - r * r)).exp()
    } else {
        0.0
    }
}

/// Test function `k` of the weak-error battery at x. In 1D: sin(πx),
/// sin(2πx), sin(3πx), sin(4πx), x(1−x) and bumps centred at 0.25, 0.5,
/// 0.75; in 2D the tensor product of the 1D function with itself.
pub fn weak_test_function(k: usize, x: &Vector, dim: usize) -> f64 {
    let one = |t: f64| match k {
        0..=3 => ((k + 1) as f64 * PI * t).sin(),
        4 => t * (1.0 - t),
        5 => bump(t, 0.25),
        6 => bump(t, 0.5),
        _ => bump(t, 0.75),
    };
    (0..dim).map(|i| one(x[i])).product()
}

/// Fine-scale Dirichlet mesh with n = ratio/ε, aligned to the ε-lattice
/// and to the scaled operator interfaces.
pub fn fine_mesh(op: &MonotoneOperator, eps: f64, ratio: usize) -> Result<Arc<Mesh>> {
    let cells = (1.0 / eps).round() as usize;
    let mut lines = Vec::new();
    for k in 0..cells {
        if k > 0 {
            lines.push(eps * k as f64);
        }
        lines.extend(op.interfaces().iter().map(|s| eps * (k as f64 + s)));
    }
    lines.retain(|x| *x > 0.0 && *x < 1.0);
    let n = (ratio as f64 / eps).round() as usize;
    Ok(Arc::new(build_mesh(op.dim(), n, BoundaryKind::DirichletZero, &lines)?))
}

#[derive(Debug, Clone, PartialEq)]
pub enum RowStatus {
    Ok,
    Failed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub h: f64,
    pub newton_iterations: usize,
    pub final_residual: f64,
    /// (∫M(x/ε,∇u^ε), ∫M*(x/ε,A)).
    pub modular_bounds: (f64, f64),
    /// c(½∫M + ∫M*), bounded by [`SweepReport::apriori_bound`].
    pub apriori_lhs: f64,
    /// max_k |∫(u^ε − u)φ_k| over the weak-error battery.
    pub weak_err: f64,
    pub weak_errors: [f64; WEAK_TESTS],
    pub l1_err: f64,
    /// Largest relative corrector mismatch over the probes (1D), NaN in 2D.
    pub corrector_mismatch: f64,
    pub probe_mismatches: Vec<f64>,
    pub status: RowStatus,
}

impl SweepRow {
    fn failed(eps: f64, h: f64, msg: String) -> Self {
        Self {
            eps,
            h,
            newton_iterations: 0,
            final_residual: f64::NAN,
            modular_bounds: (f64::NAN, f64::NAN),
            apriori_lhs: f64::NAN,
            weak_err: f64::NAN,
            weak_errors: [f64::NAN; WEAK_TESTS],
            l1_err: f64::NAN,
            corrector_mismatch: f64::NAN,
            probe_mismatches: Vec::new(),
            status: RowStatus::Failed(msg),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HomogMeta {
    pub table_points: usize,
    pub table_partial: bool,
    pub cell_h: f64,
    pub mesh_n: usize,
    pub iterations: usize,
    pub final_residual: f64,
    /// Largest |∇u| of the homogenized solution.
    pub max_gradient: f64,
    /// Whether every gradient lies inside the tabulated hull.
    pub within_hull: bool,
    pub nested: bool,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub homog: HomogMeta,
    pub coercivity_c: f64,
    /// ε-independent ∫ m₁*((2/c)|F|).
    pub apriori_bound: f64,
    pub table: HomogTable,
}

impl SweepReport {
    pub const HEADER: [&'static str; 12] = [
        "eps",
        "h",
        "newton_iterations",
        "final_residual",
        "modular_m",
        "modular_mstar",
        "apriori_lhs",
        "apriori_bound",
        "weak_err",
        "l1_err",
        "corrector_mismatch",
        "status",
    ];

    pub fn write_csv(&self, out: impl std::io::Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(Self::HEADER)?;
        let f = |v: f64| format!("{v:.16e}");
        for r in &self.rows {
            let status = match &r.status {
                RowStatus::Ok => "ok".to_string(),
                RowStatus::Failed(m) => format!("failed: {m}"),
            };
            w.write_record([
                f(r.eps),
                f(r.h),
                r.newton_iterations.to_string(),
                f(r.final_residual),
                f(r.modular_bounds.0),
                f(r.modular_bounds.1),
                f(r.apriori_lhs),
                f(self.apriori_bound),
                f(r.weak_err),
                f(r.l1_err),
                f(r.corrector_mismatch),
                status,
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Homogenized Dirichlet solution on a mesh with `n` subdivisions.
pub fn solve_homogenized(
    law: &dyn FluxLaw,
    n: usize,
    source: &Source,
    cfg: &ExperimentConfig,
) -> Result<(DiscreteField, usize, f64)> {
    let mesh = Arc::new(build_mesh(cfg.problem.dim, n, BoundaryKind::DirichletZero, &[])?);
    let disc = Discretization::new(mesh.clone(), source, cfg.solver.quad_order);
    let sol = solve_law(&disc, law, None, &cfg.solver)?;
    Ok((DiscreteField::from_coefficients(mesh, sol.coefficients)?, sol.iterations, sol.final_residual))
}

/// Tabulates Â on the configured grid, or loads the configured table file.
pub fn build_table(cfg: &ExperimentConfig, op: &MonotoneOperator, cell: &Arc<Mesh>) -> Result<HomogTable> {
    match cfg.table_file() {
        Some(path) => {
            let t = HomogTable::load(&path)?;
            if t.dim() != cfg.problem.dim {
                return Err(Error::Config(format!("table {} has dimension {}", path.display(), t.dim())));
            }
            Ok(t)
        }
        None => tabulate_ahat(op, cell, &cfg.xi_grid()?, &cfg.solver),
    }
}

/// Errors of `fine` against the homogenized solution, integrated on the
/// homogenized mesh (the finest one, nested with every fine mesh).
fn error_metrics(fine: &DiscreteField, hom: &DiscreteField, order: usize) -> Result<([f64; WEAK_TESTS], f64)> {
    let mesh = hom.mesh();
    let dim = mesh.dim();
    let rule = QuadRule::new(dim, order.max(5));
    let hom_nodal = hom.nodal_values();
    let fine_nodal = fine.nodal_values();
    let mut weak = [0.0; WEAK_TESTS];
    let mut l1 = 0.0;
    for c in 0..mesh.num_cells() {
        let m = mesh.measure(c);
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let x = mesh.map_point(c, p);
            let uh: f64 = mesh.cell(c).iter().zip(p).map(|(&v, b)| hom_nodal[v] * b).sum();
            let ue = eval_nodal(fine.mesh(), &fine_nodal, &x)?;
            let d = ue - uh;
            l1 += w * m * d.abs();
            for (k, acc) in weak.iter_mut().enumerate() {
                *acc += w * m * d * weak_test_function(k, &x, dim);
            }
        }
    }
    Ok((weak.map(f64::abs), l1))
}

/// Runs the ε-sweep: table, homogenized solve, one fine-scale solve per ε
/// and the error metrics. Rows run in parallel and are reported in input
/// order; a failed row is recorded and the sweep continues.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let op = cfg.operator()?;
    let source = cfg.source()?;
    let cell = cell_mesh(&op, cfg.mesh.cell_n)?;
    let table = build_table(cfg, &op, &cell)?;
    let eps_min = cfg.eps.iter().copied().fold(f64::INFINITY, f64::min);
    let hom_n = cfg.fine_n(eps_min);
    let table_law = TableLaw { table: Arc::new(table.clone()) };
    let nested_law;
    let law: &dyn FluxLaw = if cfg.nested {
        nested_law = NestedLaw::new(op.clone(), cell.clone(), cfg.solver);
        &nested_law
    } else {
        &table_law
    };
    let (hom, hom_iterations, hom_residual) = solve_homogenized(law, hom_n, &source, cfg)?;
    let grads = hom.gradients();
    let max_gradient = grads.iter().map(|g| g.norm()).fold(0.0, f64::max);
    let within_hull = grads.iter().all(|g| table.grid.contains(g));
    let c = estimate_coercivity(&op, 2000, cfg.seed)?;
    let apriori_bound = apriori_constant(&op, &source, c, cfg.solver.quad_order)?;
    let probes: Vec<Vector> = if cfg.problem.dim == 1 { cfg.probes.iter().map(|&p| Vector::new(p, 0.0)).collect() } else { Vec::new() };

    let rows: Vec<SweepRow> = cfg
        .eps
        .par_iter()
        .map(|&eps| {
            let h = 1.0 / cfg.fine_n(eps) as f64;
            let run = || -> Result<SweepRow> {
                let mesh = fine_mesh(&op, eps, cfg.mesh.ratio)?;
                let res = solve_dirichlet(&op, &mesh, &source, Some(eps), &cfg.solver)?;
                let (weak_errors, l1_err) = error_metrics(&res.u, &hom, cfg.solver.quad_order)?;
                let probe_mismatches = if probes.is_empty() {
                    Vec::new()
                } else {
                    corrector_identification(&res.u, &hom, &op, &cell, eps, &probes, 2048, &cfg.solver)?
                        .probes
                        .into_iter()
                        .map(|p| p.mismatch)
                        .collect()
                };
                let (m, mstar) = res.modular_bounds;
                Ok(SweepRow {
                    eps,
                    h: mesh.h(),
                    newton_iterations: res.iterations,
                    final_residual: res.final_residual,
                    modular_bounds: res.modular_bounds,
                    apriori_lhs: c * (0.5 * m + mstar),
                    weak_err: weak_errors.iter().copied().fold(0.0, f64::max),
                    weak_errors,
                    l1_err,
                    corrector_mismatch: probe_mismatches.iter().copied().fold(f64::NAN, f64::max),
                    probe_mismatches,
                    status: RowStatus::Ok,
                })
            };
            run().unwrap_or_else(|e| SweepRow::failed(eps, h, e.to_string()))
        })
        .collect();

    Ok(SweepReport {
        rows,
        homog: HomogMeta {
            table_points: table.grid.len(),
            table_partial: table.is_partial(),
            cell_h: table.cell_h,
            mesh_n: hom_n,
            iterations: hom_iterations,
            final_residual: hom_residual,
            max_gradient,
            within_hull,
            nested: cfg.nested,
        },
        coercivity_c: c,
        apriori_bound,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn battery_vanishes_on_boundary() {
        for k in 0..WEAK_TESTS {
            for dim in 1..=2 {
                assert!(weak_test_function(k, &Vector::zeros(), dim).abs() < 1e-12);
                assert!(weak_test_function(k, &Vector::new(1.0, 1.0), dim).abs() < 1e-12);
            }
        }
        assert!((weak_test_function(6, &Vector::new(0.5, 0.0), 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fine_mesh_is_aligned() {
        let op = crate::opcat::parse_operator("linear:1,3", 1).unwrap();
        let mesh = fine_mesh(&op, 0.25, 4).unwrap();
        assert_eq!(mesh.num_cells(), 16);
        let xs: Vec<f64> = mesh.vertices().iter().map(|v| v[0]).collect();
        for k in 0..8 {
            assert!(xs.iter().any(|x| (x - k as f64 / 8.0).abs() < 1e-15));
        }
    }

    #[test]
    fn constant_coefficient_sweep_has_no_homogenization_error() {
        let mut cfg = ExperimentConfig::default_for(1);
        cfg.problem.operator = "linear:2".into();
        cfg.mesh.ratio = 8;
        cfg.mesh.cell_n = 16;
        cfg.table.points = 9;
        let report = run_sweep(&cfg).unwrap();
        // u = x(1 − x)/4 and both P1 solutions are nodal interpolants on
        // nested meshes of a concave u, so ∫|I_h u − I_H u| = (h² − H²)|u''|/12
        let hh = 1.0 / report.homog.mesh_n as f64;
        for r in &report.rows {
            assert_eq!(r.status, RowStatus::Ok);
            let oracle = (r.h * r.h - hh * hh) / 24.0;
            assert!((r.l1_err - oracle).abs() < 0.02 * oracle + 1e-14, "{} vs {oracle}", r.l1_err);
        }
        // no corrector, so the mismatch is the O(ε) variation of ∇u per cell
        for w in report.rows.windows(2) {
            for (a, b) in w[0].probe_mismatches.iter().zip(&w[1].probe_mismatches) {
                assert!(b < a, "{:?}", report.rows.iter().map(|r| &r.probe_mismatches).collect::<Vec<_>>());
            }
        }
    }
}
