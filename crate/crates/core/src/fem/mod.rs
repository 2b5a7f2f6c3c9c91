//! P1 finite elements on uniform simplicial meshes of the unit interval and
//! the unit square.

mod field;
mod io;
mod mesh;
mod quadrature;

pub use field::{cell_gradients, eval_nodal, p1_mean, DiscreteField};
pub use io::{dump_mesh, load_mesh};
pub use mesh::{build_mesh, BoundaryKind, Mesh};
pub use quadrature::{QuadRule, DEFAULT_ORDER};

use crate::linalg::Vector;

/// Composite quadrature of `integrand(x, cell)` over the mesh.
pub fn integrate(mesh: &Mesh, integrand: impl Fn(&Vector, usize) -> f64, order: usize) -> f64 {
    let rule = QuadRule::new(mesh.dim(), order);
    (0..mesh.num_cells())
        .map(|c| mesh.quad_points(c, &rule).map(|(x, w)| w * integrand(&x, c)).sum::<f64>())
        .sum()
}
