//! Compares the primal Dirichlet solve with the 1D dual construction
//! ∇u = B(y, T + F), B the inverse of A.

use std::sync::Arc;

use orlicz_homog::fem::{build_mesh, BoundaryKind};
use orlicz_homog::msolve::{primal_dual_l1, solve_dirichlet, solve_dual_1d, SolverSettings, Source};
use orlicz_homog::opcat::parse_operator;
use orlicz_homog::Result;

fn main() -> Result<()> {
    let settings = SolverSettings::default();
    let source = Source::linear(1);
    for name in ["plaplace:2,1,3", "plaplace:3,1,16", "exp"] {
        let op = parse_operator(name, 1)?;
        let mesh = Arc::new(build_mesh(1, 512, BoundaryKind::DirichletZero, op.interfaces())?);
        let primal = solve_dirichlet(&op, &mesh, &source, None, &settings)?;
        let dual = solve_dual_1d(&op, &mesh, &source, &settings)?;
        println!(
            "{name:<16} T={:<12.8} L1 gap={:.2e} closure={:.1e}",
            dual.t,
            primal_dual_l1(&primal.u, &dual),
            dual.closure_gap
        );
    }
    Ok(())
}
