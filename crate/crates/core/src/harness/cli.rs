use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::cell::{cell_mesh, solve_cell, tabulate_ahat, HomogTable};
use crate::error::{Error, Result};
use crate::fem::DiscreteField;
use crate::harness::checks::run_checks;
use crate::harness::config::{parse_eps_list, ExperimentConfig};
use crate::harness::sweep::{fine_mesh, run_sweep};
use crate::linalg::Vector;
use crate::msolve::solve_dirichlet;

/// Worker-pool size; defaults to the available parallelism.
pub const WORKERS_ENV: &str = "HOMOG_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "homog", version, about = "Periodic homogenization of monotone operators with Orlicz growth")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// INI experiment file
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated ε list, e.g. 1/4,1/8
    #[arg(long, global = true)]
    eps: Option<String>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Cell mesh subdivisions per side
    #[arg(long, global = true)]
    cell_n: Option<usize>,
    /// Newton residual tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fine-scale Dirichlet solve for every ε
    Solve,
    /// Cell problem at one macroscopic gradient
    Cell {
        /// Gradient ξ, comma-separated in 2D
        #[arg(long, allow_hyphen_values = true)]
        xi: String,
    },
    /// Tabulate Â on the configured grid
    Tabulate,
    /// ε-sweep against the homogenized solution
    Sweep {
        /// Nested cell solves instead of the table
        #[arg(long)]
        nested: bool,
    },
    /// Run the invariant batteries
    Check,
}

/// Parses `argv`, runs the subcommand and returns the process exit code:
/// 0 on success, 1 on numerical failure or failed checks, 2 on usage or
/// configuration errors.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let pool = match worker_pool() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    match pool.install(|| run(cli)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Parse { .. } | Error::UnknownCatalog(_) => 2,
                _ => 1,
            }
        }
    }
}

fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::Config(e.to_string()))
}

fn load_config(common: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.output = out.clone();
    }
    if let Some(eps) = &common.eps {
        cfg.eps = parse_eps_list(eps)?;
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(n) = common.cell_n {
        cfg.mesh.cell_n = n;
    }
    if let Some(tol) = common.tol {
        cfg.solver.residual_tol = tol;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<i32> {
    let mut cfg = load_config(&cli.common)?;
    let out = cfg.output.clone();
    match cli.command {
        Command::Solve => {
            fs::create_dir_all(&out)?;
            let op = cfg.operator()?;
            let source = cfg.source()?;
            for &eps in &cfg.eps {
                let mesh = fine_mesh(&op, eps, cfg.mesh.ratio)?;
                let sol = solve_dirichlet(&op, &mesh, &source, Some(eps), &cfg.solver)?;
                let path = out.join(format!("solution_eps{}.csv", (1.0 / eps).round() as u64));
                write_field(&sol.u, "u", &path)?;
                println!(
                    "wrote {} (eps={eps}, {} cells, {} iterations, residual {:.3e}, {:?})",
                    path.display(),
                    mesh.num_cells(),
                    sol.iterations,
                    sol.final_residual,
                    sol.method
                );
            }
        }
        Command::Cell { xi } => {
            let op = cfg.operator()?;
            let xi = parse_xi(&xi, cfg.problem.dim)?;
            let mesh = cell_mesh(&op, cfg.mesh.cell_n)?;
            let sol = solve_cell(&op, &mesh, &xi, &cfg.solver)?;
            let ahat: Vec<String> = sol.ahat.iter().take(cfg.problem.dim).map(|v| format!("{v:.10}")).collect();
            println!("Ahat = {} ({} iterations, residual {:.3e})", ahat.join(","), sol.iterations, sol.final_residual);
            fs::create_dir_all(&out)?;
            let path = out.join("cell.csv");
            write_field(&sol.w, "w", &path)?;
            println!("wrote {} (corrector on {} cells)", path.display(), mesh.num_cells());
        }
        Command::Tabulate => {
            let op = cfg.operator()?;
            let mesh = cell_mesh(&op, cfg.mesh.cell_n)?;
            let table = tabulate_ahat(&op, &mesh, &cfg.xi_grid()?, &cfg.solver)?;
            fs::create_dir_all(&out)?;
            let path = out.join("homog_table.csv");
            table.save(&path)?;
            print_table_summary(&table, &path);
            if table.is_partial() {
                return Ok(1);
            }
        }
        Command::Sweep { nested } => {
            cfg.nested |= nested;
            let report = run_sweep(&cfg)?;
            fs::create_dir_all(&out)?;
            let table_path = out.join("homog_table.csv");
            report.table.save(&table_path)?;
            print_table_summary(&report.table, &table_path);
            let path = out.join("sweep.csv");
            report.save(&path)?;
            let failed = report.rows.iter().filter(|r| r.status != crate::harness::RowStatus::Ok).count();
            println!("wrote {} ({} rows, {failed} failed)", path.display(), report.rows.len());
            if failed > 0 {
                return Ok(1);
            }
        }
        Command::Check => {
            let report = run_checks(&cfg)?;
            fs::create_dir_all(&out)?;
            let path = out.join("checks.csv");
            report.save(&path)?;
            for o in report.failures() {
                eprintln!("FAIL {}: {}", o.name, o.detail);
            }
            let failed = report.failures().len();
            println!("wrote {} ({} checks, {failed} failed)", path.display(), report.outcomes.len());
            if failed > 0 {
                return Ok(1);
            }
        }
    }
    Ok(0)
}

fn print_table_summary(table: &HomogTable, path: &Path) {
    println!(
        "wrote {} ({} points, {} failed, cell h {:.3e})",
        path.display(),
        table.grid.len(),
        table.failed_points().len(),
        table.cell_h
    );
}

fn parse_xi(text: &str, dim: usize) -> Result<Vector> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Config(format!("invalid --xi component `{s}`"))))
        .collect::<Result<_>>()?;
    if parts.len() != dim {
        return Err(Error::Config(format!("--xi needs {dim} components, got {}", parts.len())));
    }
    Ok(Vector::new(parts[0], parts.get(1).copied().unwrap_or(0.0)))
}

/// Nodal CSV with columns `x_1[,x_2],<name>`.
fn write_field(field: &DiscreteField, name: &str, path: &Path) -> Result<()> {
    let mesh = field.mesh();
    let dim = mesh.dim();
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (1..=dim).map(|i| format!("x_{i}")).collect();
    header.push(name.into());
    w.write_record(&header)?;
    for (x, v) in mesh.vertices().iter().zip(field.nodal_values()) {
        let mut rec: Vec<String> = (0..dim).map(|i| format!("{:.16e}", x[i])).collect();
        rec.push(format!("{v:.16e}"));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(cli_main(["homog", "frobnicate"]), 2);
        assert_eq!(cli_main(["homog", "check", "--bogus"]), 2);
        assert_eq!(cli_main(["homog", "cell"]), 2);
        assert_eq!(cli_main(["homog", "--help"]), 0);
    }

    #[test]
    fn xi_parsing() {
        assert_eq!(parse_xi("-2", 1).unwrap(), Vector::new(-2.0, 0.0));
        assert_eq!(parse_xi("1, 0.5", 2).unwrap(), Vector::new(1.0, 0.5));
        assert!(parse_xi("1,2", 1).is_err());
        assert!(parse_xi("a", 1).is_err());
    }
}
