//! Homogenized fluxes Â(ξ) of 1D laminates against the flux-constancy
//! closed forms, plus one 2D laminate.

use orlicz_homog::cell::{cell_mesh, solve_cell};
use orlicz_homog::msolve::SolverSettings;
use orlicz_homog::opcat::parse_operator;
use orlicz_homog::{Result, Vector};

fn main() -> Result<()> {
    let settings = SolverSettings::default();

    let op = parse_operator("linear:1,3", 1)?;
    let mesh = cell_mesh(&op, 256)?;
    for xi in [-2.0, 1.0, 3.0] {
        let s = solve_cell(&op, &mesh, &Vector::new(xi, 0.0), &settings)?;
        println!("linear 1|3  xi={xi:>5}: Ahat={:>10.6} harmonic mean={:>10.6}", s.ahat[0], 1.5 * xi);
    }

    let op = parse_operator("plaplace:3,1,16", 1)?;
    let mesh = cell_mesh(&op, 256)?;
    let s = solve_cell(&op, &mesh, &Vector::new(1.0, 0.0), &settings)?;
    println!("p=3 1|16    xi=    1: Ahat={:>10.6} closed form={:>10.6}", s.ahat[0], (1.0f64 / 0.625).powi(2));

    let op = parse_operator("linear:1,3", 2)?;
    let mesh = cell_mesh(&op, 16)?;
    let s = solve_cell(&op, &mesh, &Vector::new(1.0, 1.0), &settings)?;
    println!("2D laminate xi=(1,1): Ahat=({:.6}, {:.6}) expected=(1.5, 2)", s.ahat[0], s.ahat[1]);
    Ok(())
}
