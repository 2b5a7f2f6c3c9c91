//! Solves div A(x/ε, ∇u) = div F with u = 0 on the boundary for a p = 3
//! laminate and reports solver diagnostics per ε.

use orlicz_homog::harness::sweep::fine_mesh;
use orlicz_homog::msolve::{solve_dirichlet, SolverSettings, Source};
use orlicz_homog::opcat::parse_operator;
use orlicz_homog::{Result, Vector};

fn main() -> Result<()> {
    let op = parse_operator("plaplace:3,1,16", 1)?;
    let source = Source::linear(1);
    let settings = SolverSettings::default();
    for k in [4, 8, 16] {
        let eps = 1.0 / k as f64;
        let mesh = fine_mesh(&op, eps, 32)?;
        let sol = solve_dirichlet(&op, &mesh, &source, Some(eps), &settings)?;
        println!(
            "eps=1/{k:<3} cells={:<5} iterations={:<3} residual={:.2e} u(1/2)={:.6} energy gap={:.1e}",
            mesh.num_cells(),
            sol.iterations,
            sol.final_residual,
            sol.u.eval_at(&Vector::new(0.5, 0.0))?,
            sol.energy_identity_gap
        );
    }
    Ok(())
}
