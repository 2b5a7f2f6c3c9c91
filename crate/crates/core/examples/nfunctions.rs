//! Evaluates catalog N-functions, their conjugates, modulars and Luxemburg
//! norms, and runs the Young-inequality battery on each.

use std::sync::Arc;

use orlicz_homog::fem::{build_mesh, BoundaryKind};
use orlicz_homog::nfunc::{check_delta2, check_young, luxemburg_norm_fn, modular_fn, parse_nfunction};
use orlicz_homog::{Result, Vector};

fn main() -> Result<()> {
    let mesh = Arc::new(build_mesh(1, 64, BoundaryKind::Unconstrained, &[0.5])?);
    let radii: Vec<f64> = (0..40).map(|i| 10f64.powf(-2.0 + 0.1 * i as f64)).collect();
    println!("{:<18} {:>10} {:>10} {:>10} {:>10} {:>8} {:>6}", "name", "M(.3,1)", "M*(.3,1)", "modular", "lux norm", "young", "delta2");
    for name in ["power:2", "power:3", "weighted:3,1,16", "varexp:2,4", "checkerboard:2,4", "exp:1", "aniso"] {
        let nf = parse_nfunction(name, 1)?;
        let y = Vector::new(0.3, 0.0);
        let e = Vector::new(1.0, 0.0);
        let v = |x: &Vector| Vector::new((std::f64::consts::PI * x[0]).sin(), 0.0);
        let young = check_young(&nf, 10_000, 7)?;
        println!(
            "{:<18} {:>10.5} {:>10.5} {:>10.5} {:>10.5} {:>8} {:>6}",
            name,
            nf.eval(&y, &e),
            nf.conjugate(&y, &e)?,
            modular_fn(&nf, &mesh, v, 4)?,
            luxemburg_norm_fn(&nf, &mesh, v, 4)?,
            young.violations.len(),
            check_delta2(&nf, &radii).satisfied_on_samples,
        );
    }
    Ok(())
}
