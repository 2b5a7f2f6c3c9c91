use crate::error::{Error, Result};
use crate::fem::quadrature::QuadRule;
use crate::linalg::Vector;

/// How the nodal unknowns of a mesh are constrained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryKind {
    /// Homogeneous Dirichlet: boundary nodes are eliminated.
    DirichletZero,
    /// Opposite faces identified; one node pinned, reconstruction has zero mean.
    Periodic,
    /// Every node is free. Used for interpolating arbitrary data.
    Unconstrained,
}

impl BoundaryKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BoundaryKind::DirichletZero => "dirichlet",
            BoundaryKind::Periodic => "periodic",
            BoundaryKind::Unconstrained => "unconstrained",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dirichlet" | "dirichlet_zero" => Some(BoundaryKind::DirichletZero),
            "periodic" => Some(BoundaryKind::Periodic),
            "unconstrained" | "free" => Some(BoundaryKind::Unconstrained),
            _ => None,
        }
    }
}

/// Simplicial mesh of the unit interval or unit square with P1 geometry
/// cached per cell.
#[derive(Debug, Clone)]
pub struct Mesh {
    dim: usize,
    vertices: Vec<Vector>,
    cells: Vec<[usize; 3]>,
    boundary: BoundaryKind,
    free_of_node: Vec<Option<usize>>,
    node_of_free: Vec<usize>,
    pinned: Option<usize>,
    interfaces: Vec<f64>,
    axes: Vec<Vec<f64>>,
    h: f64,
    measures: Vec<f64>,
    grads: Vec<[Vector; 3]>,
}

const INTERFACE_SNAP_TOL: f64 = 1e-12;

/// Builds a uniform mesh of (0,1)^dim with `n` subdivisions per side.
/// Grid lines closest to each interface coordinate are moved onto it; in 2D
/// each square is split into two right triangles along its main diagonal.
pub fn build_mesh(dim: usize, n: usize, boundary: BoundaryKind, interfaces: &[f64]) -> Result<Mesh> {
    if !(1..=2).contains(&dim) {
        return Err(Error::UnsupportedDimension(dim));
    }
    if n < 2 {
        return Err(Error::Refinement(format!("need at least 2 subdivisions, got {n}")));
    }
    let axis = snapped_axis(n, interfaces)?;
    let axes = vec![axis.clone(); dim];

    let mut vertices = Vec::new();
    let mut cells = Vec::new();
    if dim == 1 {
        vertices.extend(axis.iter().map(|&x| Vector::new(x, 0.0)));
        cells.extend((0..n).map(|i| [i, i + 1, 0]));
    } else {
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(Vector::new(axis[i], axis[j]));
            }
        }
        let id = |i: usize, j: usize| j * (n + 1) + i;
        for j in 0..n {
            for i in 0..n {
                cells.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
                cells.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
            }
        }
    }

    let mut sorted: Vec<f64> = interfaces.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    Mesh::assemble(dim, vertices, cells, boundary, sorted, Some(axes))
}

fn snapped_axis(n: usize, interfaces: &[f64]) -> Result<Vec<f64>> {
    let mut axis: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let mut taken = vec![false; n + 1];
    let mut sorted: Vec<f64> = interfaces.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    for &c in &sorted {
        if !(c > 0.0 && c < 1.0) {
            return Err(Error::Refinement(format!("interface {c} is not inside (0,1)")));
        }
        let k = (c * n as f64).round() as usize;
        if (axis[k] - c).abs() <= INTERFACE_SNAP_TOL {
            axis[k] = c;
            taken[k] = true;
            continue;
        }
        if k == 0 || k == n || taken[k] {
            return Err(Error::Refinement(format!(
                "interface {c} cannot be resolved with {n} subdivisions"
            )));
        }
        axis[k] = c;
        taken[k] = true;
    }
    let min_gap = 0.1 / n as f64;
    if axis.windows(2).any(|w| w[1] - w[0] < min_gap) {
        return Err(Error::Refinement(format!(
            "interfaces {sorted:?} too close to resolve with {n} subdivisions"
        )));
    }
    Ok(axis)
}

impl Mesh {
    /// Assembles a mesh from raw data and computes cached geometry and the
    /// constraint map. `axes` enables fast point location for tensor grids.
    pub fn assemble(
        dim: usize,
        vertices: Vec<Vector>,
        cells: Vec<[usize; 3]>,
        boundary: BoundaryKind,
        interfaces: Vec<f64>,
        axes: Option<Vec<Vec<f64>>>,
    ) -> Result<Self> {
        let mut measures = Vec::with_capacity(cells.len());
        let mut grads = Vec::with_capacity(cells.len());
        let mut h: f64 = 0.0;
        for (c, cell) in cells.iter().enumerate() {
            if cell[..=dim].iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InputDomain(format!("cell {c} references a missing vertex")));
            }
            let (m, g, diam) = simplex_geometry(dim, &vertices, cell);
            if m <= 0.0 {
                return Err(Error::InputDomain(format!("cell {c} has non-positive measure {m}")));
            }
            h = h.max(diam);
            measures.push(m);
            grads.push(g);
        }

        let axes = axes.unwrap_or_else(|| infer_axes(dim, &vertices));
        let (free_of_node, node_of_free, pinned) = constraint_map(dim, &vertices, boundary);
        let mut mesh = Mesh {
            dim,
            vertices,
            cells,
            boundary,
            free_of_node,
            node_of_free,
            pinned,
            interfaces,
            axes,
            h,
            measures,
            grads,
        };
        if !mesh.axes_are_consistent() {
            mesh.axes.clear();
        }
        Ok(mesh)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    /// Vertex indices of `cell` (`dim + 1` entries).
    pub fn cell(&self, cell: usize) -> &[usize] {
        &self.cells[cell][..=self.dim]
    }

    pub fn boundary(&self) -> BoundaryKind {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == BoundaryKind::Periodic
    }

    pub fn interfaces(&self) -> &[f64] {
        &self.interfaces
    }

    /// Maximum cell diameter.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn measure(&self, cell: usize) -> f64 {
        self.measures[cell]
    }

    /// Gradients of the local P1 basis functions on `cell`.
    pub fn basis_gradients(&self, cell: usize) -> &[Vector] {
        &self.grads[cell][..=self.dim]
    }

    pub fn num_free(&self) -> usize {
        self.node_of_free.len()
    }

    pub fn free_index(&self, node: usize) -> Option<usize> {
        self.free_of_node[node]
    }

    /// A representative node for each free index.
    pub fn node_of_free(&self, free: usize) -> usize {
        self.node_of_free[free]
    }

    pub fn pinned_node(&self) -> Option<usize> {
        self.pinned
    }

    /// Physical point with barycentric coordinates `bary` in `cell`.
    pub fn map_point(&self, cell: usize, bary: &[f64; 3]) -> Vector {
        self.cell(cell)
            .iter()
            .zip(bary)
            .fold(Vector::zeros(), |acc, (&v, &b)| acc + self.vertices[v] * b)
    }

    /// Quadrature points and physical weights of `cell`.
    pub fn quad_points<'a>(&'a self, cell: usize, rule: &'a QuadRule) -> impl Iterator<Item = (Vector, f64)> + 'a {
        let m = self.measures[cell];
        rule.points
            .iter()
            .zip(&rule.weights)
            .map(move |(p, w)| (self.map_point(cell, p), w * m))
    }

    pub fn centroid(&self, cell: usize) -> Vector {
        let k = (self.dim + 1) as f64;
        self.cell(cell).iter().fold(Vector::zeros(), |acc, &v| acc + self.vertices[v]) / k
    }

    /// Every declared interface coordinate coincides with a grid line.
    pub fn interfaces_aligned(&self) -> bool {
        if self.axes.is_empty() {
            return false;
        }
        self.interfaces.iter().all(|c| {
            self.axes.iter().all(|axis| axis.iter().any(|x| (x - c).abs() <= INTERFACE_SNAP_TOL))
        })
    }

    /// Locates the cell containing `x` and the barycentric coordinates of
    /// `x` in it. Points on shared faces go to the cell with larger index
    /// along each axis, except at the right/top boundary.
    pub fn locate(&self, x: &Vector) -> Option<(usize, [f64; 3])> {
        if !self.axes.is_empty() {
            if let Some(found) = self.locate_structured(x) {
                return Some(found);
            }
        }
        (0..self.num_cells()).find_map(|c| {
            let b = self.barycentric(c, x);
            b[..=self.dim].iter().all(|&l| l >= -1e-12).then_some((c, b))
        })
    }

    fn locate_structured(&self, x: &Vector) -> Option<(usize, [f64; 3])> {
        let n = self.axes[0].len() - 1;
        let index = |axis: &[f64], t: f64| -> Option<usize> {
            if t < axis[0] - 1e-12 || t > axis[n] + 1e-12 {
                return None;
            }
            Some(axis.partition_point(|&a| a <= t).saturating_sub(1).min(n - 1))
        };
        let i = index(&self.axes[0], x[0])?;
        let cell = if self.dim == 1 {
            i
        } else {
            let j = index(&self.axes[1], x[1])?;
            let sx = (x[0] - self.axes[0][i]) / (self.axes[0][i + 1] - self.axes[0][i]);
            let sy = (x[1] - self.axes[1][j]) / (self.axes[1][j + 1] - self.axes[1][j]);
            2 * (j * n + i) + usize::from(sy > sx)
        };
        let b = self.barycentric(cell, x);
        b[..=self.dim].iter().all(|&l| l >= -1e-9).then_some((cell, b))
    }

    pub fn barycentric(&self, cell: usize, x: &Vector) -> [f64; 3] {
        let vs = self.cell(cell);
        let g = self.basis_gradients(cell);
        let p0 = self.vertices[vs[0]];
        let mut b = [0.0; 3];
        // λ_k(x) = λ_k(p0) + ∇λ_k · (x - p0), with λ_k(p0) = δ_k0
        for k in 0..=self.dim {
            b[k] = if k == 0 { 1.0 } else { 0.0 } + g[k].dot(&(x - p0));
        }
        b
    }

    fn axes_are_consistent(&self) -> bool {
        if self.axes.iter().any(|a| a.len() < 2) {
            return false;
        }
        let n = self.axes[0].len() - 1;
        let expected_cells = if self.dim == 1 { n } else { 2 * n * n };
        if self.num_cells() != expected_cells {
            return false;
        }
        // spot check: centroid of each cell locates back to it
        (0..self.num_cells()).step_by(1 + self.num_cells() / 16).all(|c| {
            let x = self.centroid(c);
            self.locate_structured(&x).map(|(k, _)| k) == Some(c)
        })
    }
}

fn simplex_geometry(dim: usize, vertices: &[Vector], cell: &[usize; 3]) -> (f64, [Vector; 3], f64) {
    if dim == 1 {
        let (a, b) = (vertices[cell[0]][0], vertices[cell[1]][0]);
        let len = b - a;
        let g = [Vector::new(-1.0 / len, 0.0), Vector::new(1.0 / len, 0.0), Vector::zeros()];
        (len, g, len.abs())
    } else {
        let p0 = vertices[cell[0]];
        let e1 = vertices[cell[1]] - p0;
        let e2 = vertices[cell[2]] - p0;
        let det = e1[0] * e2[1] - e1[1] * e2[0];
        // rows of J^{-1}, J = [e1 e2]
        let g1 = Vector::new(e2[1], -e2[0]) / det;
        let g2 = Vector::new(-e1[1], e1[0]) / det;
        let g0 = -(g1 + g2);
        let diam = e1.norm().max(e2.norm()).max((e2 - e1).norm());
        (0.5 * det, [g0, g1, g2], diam)
    }
}

fn infer_axes(dim: usize, vertices: &[Vector]) -> Vec<Vec<f64>> {
    (0..dim)
        .map(|k| {
            let mut a: Vec<f64> = vertices.iter().map(|v| v[k]).collect();
            a.sort_by(f64::total_cmp);
            a.dedup_by(|x, y| (*x - *y).abs() <= INTERFACE_SNAP_TOL);
            a
        })
        .collect()
}

fn on_face(t: f64, value: f64) -> bool {
    (t - value).abs() <= 1e-12
}

type ConstraintMap = (Vec<Option<usize>>, Vec<usize>, Option<usize>);

fn constraint_map(dim: usize, vertices: &[Vector], boundary: BoundaryKind) -> ConstraintMap {
    let nv = vertices.len();
    match boundary {
        BoundaryKind::Unconstrained => ((0..nv).map(Some).collect(), (0..nv).collect(), None),
        BoundaryKind::DirichletZero => {
            let mut free_of_node = vec![None; nv];
            let mut node_of_free = Vec::new();
            for (v, p) in vertices.iter().enumerate() {
                let on_boundary = (0..dim).any(|k| on_face(p[k], 0.0) || on_face(p[k], 1.0));
                if !on_boundary {
                    free_of_node[v] = Some(node_of_free.len());
                    node_of_free.push(v);
                }
            }
            (free_of_node, node_of_free, None)
        }
        BoundaryKind::Periodic => {
            // representative: wrap coordinate 1 to 0 along each axis
            let key = |p: &Vector| -> (i64, i64) {
                let wrap = |t: f64| if on_face(t, 1.0) { 0.0 } else { t };
                let q = |t: f64| (wrap(t) * 1e9).round() as i64;
                (q(p[0]), if dim == 2 { q(p[1]) } else { 0 })
            };
            let mut rep_index = std::collections::HashMap::new();
            let mut rep_of_node = Vec::with_capacity(nv);
            let mut reps = Vec::new();
            for (v, p) in vertices.iter().enumerate() {
                let r = *rep_index.entry(key(p)).or_insert_with(|| {
                    reps.push(v);
                    reps.len() - 1
                });
                rep_of_node.push(r);
            }
            // pin the representative class containing the origin (or the first class)
            let origin_class = rep_index.get(&(0, 0)).copied().unwrap_or(0);
            let pinned = reps[origin_class];
            let mut free_of_class = vec![None; reps.len()];
            let mut node_of_free = Vec::new();
            for (class, &node) in reps.iter().enumerate() {
                if class != origin_class {
                    free_of_class[class] = Some(node_of_free.len());
                    node_of_free.push(node);
                }
            }
            let free_of_node = rep_of_node.iter().map(|&r| free_of_class[r]).collect();
            (free_of_node, node_of_free, Some(pinned))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dirichlet_1d_counts() {
        let m = build_mesh(1, 4, BoundaryKind::DirichletZero, &[]).unwrap();
        assert_eq!(m.num_vertices(), 5);
        assert_eq!(m.num_cells(), 4);
        assert_eq!(m.num_free(), 3);
        assert_eq!(m.free_index(0), None);
        assert_eq!(m.free_index(4), None);
    }

    #[test]
    fn periodic_1d_identifies_endpoints_and_pins_one_node() {
        let m = build_mesh(1, 4, BoundaryKind::Periodic, &[]).unwrap();
        assert_eq!(m.num_free(), 3);
        assert_eq!(m.free_index(0), m.free_index(4));
        assert_eq!(m.pinned_node(), Some(0));
        assert_eq!(m.free_index(0), None);
    }

    #[test]
    fn periodic_2d_with_interface() {
        let m = build_mesh(2, 8, BoundaryKind::Periodic, &[0.5]).unwrap();
        assert_eq!(m.num_cells(), 2 * 8 * 8);
        assert_eq!(m.num_free(), 8 * 8 - 1);
        assert!(m.interfaces_aligned());
        // corner nodes all identified with the pinned origin
        for v in [0, 8, 9 * 8, 9 * 9 - 1] {
            assert_eq!(m.free_index(v), None);
        }
        // (1, 0.5) identified with (0, 0.5)
        assert_eq!(m.free_index(4 * 9 + 8), m.free_index(4 * 9));
    }

    #[test]
    fn cells_are_positively_oriented_and_cover_the_square() {
        let m = build_mesh(2, 5, BoundaryKind::DirichletZero, &[0.3]).unwrap();
        let total: f64 = (0..m.num_cells()).map(|c| m.measure(c)).sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert!((0..m.num_cells()).all(|c| m.measure(c) > 0.0));
        assert!(m.interfaces_aligned());
    }

    #[test]
    fn snapping_moves_the_nearest_line() {
        let m = build_mesh(1, 4, BoundaryKind::DirichletZero, &[0.3]).unwrap();
        assert!(m.vertices().iter().any(|v| (v[0] - 0.3).abs() < 1e-15));
        assert!(m.interfaces_aligned());
    }

    #[test]
    fn unresolvable_interfaces_are_rejected() {
        let err = build_mesh(1, 4, BoundaryKind::DirichletZero, &[0.3, 0.32]);
        assert!(matches!(err, Err(Error::Refinement(_))));
        assert!(build_mesh(1, 4, BoundaryKind::DirichletZero, &[1.0]).is_err());
        assert!(build_mesh(1, 1, BoundaryKind::DirichletZero, &[]).is_err());
    }

    #[test]
    fn locate_finds_containing_cell() {
        let m = build_mesh(2, 4, BoundaryKind::DirichletZero, &[]).unwrap();
        for &(x, y) in &[(0.1, 0.05), (0.05, 0.1), (0.99, 0.99), (0.5, 0.25), (1.0, 1.0), (0.0, 0.0)] {
            let p = Vector::new(x, y);
            let (c, b) = m.locate(&p).unwrap();
            assert!(b.iter().all(|&l| l >= -1e-12), "{c} {b:?}");
            assert!((m.map_point(c, &b) - p).norm() < 1e-12);
        }
        assert!(m.locate(&Vector::new(1.5, 0.5)).is_none());
    }
}
