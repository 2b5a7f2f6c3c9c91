//! Samples catalog operators: monotonicity, coercivity and inversion.

use orlicz_homog::opcat::{check_monotone, estimate_coercivity, inversion_round_trip_error, parse_operator};
use orlicz_homog::{Result, Vector};

fn main() -> Result<()> {
    for (name, dim) in [("linear:1,3", 1), ("plaplace:3,1,16", 1), ("varexp", 1), ("exp", 1), ("aniso", 2), ("fixture:nonmonotone", 1)] {
        let op = parse_operator(name, dim)?;
        let mono = check_monotone(&op, 2000, 3);
        let c = estimate_coercivity(&op, 2000, 3)?;
        let inv = inversion_round_trip_error(&op, 200, 3).map(|e| format!("{e:.1e}")).unwrap_or_else(|e| format!("{e}"));
        let a = op.eval(&Vector::new(0.75, 0.0), &Vector::new(1.0, 0.0));
        println!(
            "{name:<20} A(.75,1)={:<10.5} monotone={:<5} c={c:.4} inversion={inv}",
            a[0],
            mono.passed()
        );
    }
    Ok(())
}
