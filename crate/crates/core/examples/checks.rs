//! Runs the invariant batteries for the default configuration and for the
//! non-monotone fixture.

use orlicz_homog::harness::{run_checks, ExperimentConfig};
use orlicz_homog::Result;

fn main() -> Result<()> {
    let mut cfg = ExperimentConfig::default();
    for op in ["linear:1,3", "fixture:nonmonotone"] {
        cfg.problem.operator = op.into();
        let report = run_checks(&cfg)?;
        println!("{op}: {}", if report.passed() { "all passed" } else { "failures" });
        for o in &report.outcomes {
            println!("  {:<38} {:<5} {}", o.name, o.passed, o.detail);
        }
    }
    Ok(())
}
