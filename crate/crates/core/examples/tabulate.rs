//! Tabulates Â on a ξ grid, saves it and interpolates the reloaded table.

use orlicz_homog::cell::{cell_mesh, interp_ahat, tabulate_ahat, HomogTable};
use orlicz_homog::grid::{linspace, TensorGrid};
use orlicz_homog::msolve::SolverSettings;
use orlicz_homog::opcat::parse_operator;
use orlicz_homog::{Result, Vector};

fn main() -> Result<()> {
    let op = parse_operator("plaplace:3,1,16", 1)?;
    let mesh = cell_mesh(&op, 128)?;
    let grid = TensorGrid::new(vec![linspace(-2.0, 2.0, 41)])?;
    let table = tabulate_ahat(&op, &mesh, &grid, &SolverSettings::default())?;
    let path = std::env::temp_dir().join("homog_table_example.csv");
    table.save(&path)?;
    let table = HomogTable::load(&path)?;
    println!("saved {} points to {}", table.grid.len(), path.display());
    for xi in [0.05, 0.5, 1.0, 1.75] {
        let a = interp_ahat(&table, &Vector::new(xi, 0.0))?;
        println!("xi={xi:<5} Ahat≈{:.6} closed form={:.6}", a[0], (xi / 0.625f64).powi(2));
    }
    Ok(())
}
