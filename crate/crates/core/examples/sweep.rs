//! ε-sweep for the linear laminate; prints the CSV report.

use orlicz_homog::harness::{run_sweep, ExperimentConfig};
use orlicz_homog::Result;

fn main() -> Result<()> {
    let cfg = ExperimentConfig::default();
    let report = run_sweep(&cfg)?;
    report.write_csv(std::io::stdout())?;
    eprintln!(
        "homogenized: {} table points, mesh n={}, {} iterations, max |grad u|={:.3}",
        report.homog.table_points, report.homog.mesh_n, report.homog.iterations, report.homog.max_gradient
    );
    Ok(())
}
