//! Periodic cell problem, the homogenized operator Â, the effective
//! N-functions f and h*, and structural checks on Â.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::{Arc, Mutex};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{build_mesh, BoundaryKind, DiscreteField, Mesh, QuadRule};
use crate::grid::TensorGrid;
use crate::linalg::{truncate, Matrix, Vector};
use crate::msolve::{solve_law, Discretization, FluxLaw, OperatorLaw, Source, SolverSettings};
use crate::nfunc::{legendre_scalar, ConjugationSettings, NFunction};
use crate::opcat::MonotoneOperator;
use crate::sampling;

/// Periodic unit-cell mesh aligned to the operator's interfaces.
pub fn cell_mesh(op: &MonotoneOperator, n: usize) -> Result<Arc<Mesh>> {
    Ok(Arc::new(build_mesh(op.dim(), n, BoundaryKind::Periodic, op.interfaces())?))
}

#[derive(Debug, Clone)]
pub struct CellSolution {
    pub xi: Vector,
    /// Corrector w_ξ, zero mean.
    pub w: DiscreteField,
    /// Per-cell average of A(y, ξ + ∇w_ξ).
    pub flux_field: Vec<Vector>,
    /// Â(ξ), the cell average of the flux.
    pub ahat: Vector,
    /// (∫_Y M(y, ξ + ∇w), ∫_Y M*(y, A(y, ξ + ∇w))).
    pub modulars: (f64, f64),
    /// |∫_Y A(y, ξ + ∇w)·∇w|.
    pub orthogonality: f64,
    pub iterations: usize,
    pub final_residual: f64,
}

impl CellSolution {
    /// Cellwise total gradient ξ + ∇w_ξ.
    pub fn total_gradients(&self) -> Vec<Vector> {
        self.w.gradients().into_iter().map(|g| g + self.xi).collect()
    }

    /// Both sides of `c(∫M + ½∫M*) ≤ ∫_Y M(y, (2/c)ξ)`.
    pub fn modular_estimate(&self, nf: &NFunction, c: f64, order: usize) -> (f64, f64) {
        let mesh = self.w.mesh();
        let rule = QuadRule::new(mesh.dim(), order);
        let scaled = self.xi * (2.0 / c);
        let mut rhs = 0.0;
        for cell in 0..mesh.num_cells() {
            for (y, w) in mesh.quad_points(cell, &rule) {
                rhs += w * nf.eval(&y, &scaled);
            }
        }
        (c * (self.modulars.0 + 0.5 * self.modulars.1), rhs)
    }
}

/// Solves the cell problem for macroscopic gradient ξ from w = 0.
pub fn solve_cell(op: &MonotoneOperator, mesh: &Arc<Mesh>, xi: &Vector, settings: &SolverSettings) -> Result<CellSolution> {
    solve_cell_from(op, mesh, xi, settings, None)
}

/// As [`solve_cell`], warm-started from corrector coefficients.
pub fn solve_cell_from(
    op: &MonotoneOperator,
    mesh: &Arc<Mesh>,
    xi: &Vector,
    settings: &SolverSettings,
    initial: Option<&[f64]>,
) -> Result<CellSolution> {
    if !mesh.is_periodic() {
        return Err(Error::InputDomain("cell problem needs a periodic mesh".into()));
    }
    let xi = truncate(*xi, op.dim());
    if xi.iter().any(|v| !v.is_finite()) {
        return Err(Error::InputDomain(format!("non-finite macroscopic gradient {:?}", [xi[0], xi[1]])));
    }
    let disc = Discretization::new(mesh.clone(), &Source::zero(op.dim()), settings.quad_order);
    let law = OperatorLaw::new(op, None, settings.jacobian_mode).shifted(xi);
    let sol = solve_law(&disc, &law, initial, settings)?;
    let grads = disc.gradients(&sol.coefficients);
    let nf = op.nfunction();
    let mut flux_field = Vec::with_capacity(mesh.num_cells());
    let (mut ahat, mut orth, mut m_int, mut mstar_int) = (Vector::zeros(), 0.0, 0.0, 0.0);
    for (c, g) in grads.iter().enumerate() {
        let meas = mesh.measure(c);
        let total = g + xi;
        let mut avg = Vector::zeros();
        for (y, w) in &disc.points[c] {
            let a = op.eval_checked(y, &total)?;
            avg += a * *w;
            m_int += w * meas * nf.eval(y, &total);
            mstar_int += w * meas * nf.conjugate(y, &a)?;
        }
        ahat += avg * meas;
        orth += meas * avg.dot(g);
        flux_field.push(avg);
    }
    Ok(CellSolution {
        xi,
        w: DiscreteField::from_coefficients(mesh.clone(), sol.coefficients)?,
        flux_field,
        ahat,
        modulars: (m_int, mstar_int),
        orthogonality: orth.abs(),
        iterations: sol.iterations,
        final_residual: sol.final_residual,
    })
}

/// Tabulated Â on a rectangular ξ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct HomogTable {
    pub grid: TensorGrid,
    /// Â per grid point; NaN marks a failed cell solve.
    pub values: Vec<Vector>,
    pub cell_h: f64,
}

impl HomogTable {
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn is_partial(&self) -> bool {
        self.values.iter().any(|v| v.iter().any(|x| x.is_nan()))
    }

    pub fn failed_points(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i].iter().any(|x| x.is_nan())).collect()
    }

    /// Multilinear interpolation; errors outside the hull.
    pub fn interp(&self, xi: &Vector) -> Result<Vector> {
        let v = self.grid.interpolate(&self.values, xi)?;
        if v.iter().any(|x| x.is_nan()) {
            return Err(Error::InputDomain(format!("table entry near {:?} is missing", [xi[0], xi[1]])));
        }
        Ok(v)
    }

    pub fn header(dim: usize) -> String {
        let mut cols = vec!["dim".to_string()];
        cols.extend((1..=dim).map(|k| format!("xi_{k}")));
        cols.extend((1..=dim).map(|k| format!("ahat_{k}")));
        cols.push("cell_h".into());
        cols.join(",")
    }

    /// CSV with 17 significant digits per value, one row per grid point.
    pub fn write_csv(&self, mut out: impl Write) -> Result<()> {
        let d = self.dim();
        writeln!(out, "{}", Self::header(d))?;
        for (i, v) in self.values.iter().enumerate() {
            let p = self.grid.point(i);
            let mut row = vec![d.to_string()];
            row.extend((0..d).map(|k| format!("{:.16e}", p[k])));
            row.extend((0..d).map(|k| format!("{:.16e}", v[k])));
            row.push(format!("{:.16e}", self.cell_h));
            writeln!(out, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut file = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_csv(&mut file)?;
        file.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let err = |msg: String| Error::Parse { path: path.to_path_buf(), msg };
        let mut reader = csv::ReaderBuilder::new().from_path(path)?;
        let headers = reader.headers()?.clone();
        let dim = match headers.len() {
            4 => 1,
            6 => 2,
            n => return Err(err(format!("unexpected column count {n}"))),
        };
        if headers.iter().collect::<Vec<_>>().join(",") != Self::header(dim) {
            return Err(err(format!("header must be `{}`", Self::header(dim))));
        }
        let mut rows = Vec::new();
        let mut cell_h = None;
        for (line, rec) in reader.records().enumerate() {
            let rec = rec?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|t| t.trim().parse::<f64>().map_err(|_| err(format!("row {}: bad number `{t}`", line + 1))))
                .collect::<Result<_>>()?;
            if vals[0] != dim as f64 {
                return Err(err(format!("row {}: dim column disagrees with header", line + 1)));
            }
            let mut x = Vector::zeros();
            let mut a = Vector::zeros();
            for k in 0..dim {
                x[k] = vals[1 + k];
                a[k] = vals[1 + dim + k];
            }
            cell_h = Some(vals[1 + 2 * dim]);
            rows.push((x, a));
        }
        let mut axes = vec![Vec::new(); dim];
        for (x, _) in &rows {
            for (k, axis) in axes.iter_mut().enumerate() {
                axis.push(x[k]);
            }
        }
        for axis in &mut axes {
            axis.sort_by(f64::total_cmp);
            axis.dedup();
        }
        let grid = TensorGrid::new(axes).map_err(|e| err(e.to_string()))?;
        if grid.len() != rows.len() {
            return Err(err("rows do not form a rectangular grid".into()));
        }
        let mut values = vec![Vector::repeat(f64::NAN); grid.len()];
        for (x, a) in rows {
            let mut idx = [0usize; 2];
            for k in 0..dim {
                idx[k] = grid.axes()[k].binary_search_by(|v| v.total_cmp(&x[k])).unwrap();
            }
            values[grid.flat_index(idx)] = a;
        }
        Ok(Self { grid, values, cell_h: cell_h.unwrap_or(f64::NAN) })
    }
}

/// Multilinear interpolation of a table; see [`HomogTable::interp`].
pub fn interp_ahat(table: &HomogTable, xi: &Vector) -> Result<Vector> {
    table.interp(xi)
}

/// Solves the cell problem at every grid point. Points are processed in
/// rings of growing Chebyshev index distance from the point nearest the
/// origin; each point warm-starts from its neighbour one step closer, so
/// the output does not depend on scheduling. Failed points become NaN.
pub fn tabulate_ahat(op: &MonotoneOperator, mesh: &Arc<Mesh>, grid: &TensorGrid, settings: &SolverSettings) -> Result<HomogTable> {
    if grid.dim() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), got: grid.dim() });
    }
    let center = grid.multi_index(grid.nearest(&Vector::zeros()));
    let ring = |i: usize| {
        let m = grid.multi_index(i);
        (0..grid.dim()).map(|k| m[k].abs_diff(center[k])).max().unwrap_or(0)
    };
    let parent = |i: usize| {
        let mut m = grid.multi_index(i);
        for k in 0..grid.dim() {
            if m[k] > center[k] {
                m[k] -= 1;
            } else if m[k] < center[k] {
                m[k] += 1;
            }
        }
        grid.flat_index(m)
    };
    let max_ring = (0..grid.len()).map(ring).max().unwrap_or(0);
    let mut correctors: Vec<Option<Vec<f64>>> = vec![None; grid.len()];
    let mut values = vec![Vector::repeat(f64::NAN); grid.len()];
    for r in 0..=max_ring {
        let members: Vec<usize> = (0..grid.len()).filter(|&i| ring(i) == r).collect();
        let solved: Vec<(usize, Option<CellSolution>)> = members
            .par_iter()
            .map(|&i| {
                let warm = if r == 0 { None } else { correctors[parent(i)].as_deref() };
                let xi = grid.point(i);
                let sol = solve_cell_from(op, mesh, &xi, settings, warm)
                    .or_else(|_| solve_cell_from(op, mesh, &xi, settings, None))
                    .ok();
                (i, sol)
            })
            .collect();
        for (i, sol) in solved {
            if let Some(s) = sol {
                values[i] = s.ahat;
                correctors[i] = Some(s.w.into_coefficients());
            }
        }
    }
    Ok(HomogTable { grid: grid.clone(), values, cell_h: mesh.h() })
}

/// Â(ξ) from the table, extended linearly outside the hull from the
/// nearest boundary point so Newton iterates may leave it temporarily.
#[derive(Debug, Clone)]
pub struct TableLaw {
    pub table: Arc<HomogTable>,
}

impl FluxLaw for TableLaw {
    fn dim(&self) -> usize {
        self.table.dim()
    }

    fn flux(&self, _x: &Vector, g: &Vector) -> Result<Vector> {
        let (v, d, clamped) = self.eval(g)?;
        Ok(v + d * (g - clamped))
    }

    fn jacobian(&self, _x: &Vector, g: &Vector) -> Result<Matrix> {
        Ok(self.eval(g)?.1)
    }
}

impl TableLaw {
    fn eval(&self, g: &Vector) -> Result<(Vector, Matrix, Vector)> {
        let mut clamped = truncate(*g, self.dim());
        for (k, axis) in self.table.grid.axes().iter().enumerate() {
            clamped[k] = clamped[k].clamp(axis[0], axis[axis.len() - 1]);
        }
        let (v, d) = self.table.grid.interpolate_with_gradient(&self.table.values, &clamped)?;
        if v.iter().any(|x| x.is_nan()) {
            return Err(Error::InputDomain("homogenized table has a missing entry".into()));
        }
        Ok((v, truncate_cols(d, self.dim()), clamped))
    }
}

fn truncate_cols(m: Matrix, dim: usize) -> Matrix {
    crate::linalg::truncate_matrix(m, dim)
}

/// Â(ξ) by a fresh cell solve at every distinct ξ, with a central
/// difference Jacobian. Results are memoised per gradient value.
pub struct NestedLaw {
    op: MonotoneOperator,
    mesh: Arc<Mesh>,
    settings: SolverSettings,
    cache: Mutex<HashMap<[u64; 2], Vector>>,
}

impl NestedLaw {
    pub fn new(op: MonotoneOperator, mesh: Arc<Mesh>, settings: SolverSettings) -> Self {
        Self { op, mesh, settings, cache: Mutex::new(HashMap::new()) }
    }

    fn ahat(&self, g: &Vector) -> Result<Vector> {
        let key = [g[0].to_bits(), g[1].to_bits()];
        if let Some(v) = self.cache.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = solve_cell(&self.op, &self.mesh, g, &self.settings)?.ahat;
        self.cache.lock().unwrap().insert(key, v);
        Ok(v)
    }
}

impl FluxLaw for NestedLaw {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn flux(&self, _x: &Vector, g: &Vector) -> Result<Vector> {
        self.ahat(g)
    }

    fn jacobian(&self, _x: &Vector, g: &Vector) -> Result<Matrix> {
        let h = 1e-6 * (1.0 + g.norm());
        let mut m = Matrix::zeros();
        for k in 0..self.dim() {
            let mut e = Vector::zeros();
            e[k] = h;
            m.set_column(k, &((self.ahat(&(g + e))? - self.ahat(&(g - e))?) / (2.0 * h)));
        }
        Ok(m)
    }
}

/// ∇_ξ M(y, g + shift) as a flux law, Jacobian by central differences.
struct GradientLaw<'a> {
    nf: &'a NFunction,
    shift: Vector,
}

impl FluxLaw for GradientLaw<'_> {
    fn dim(&self) -> usize {
        self.nf.dim()
    }

    fn flux(&self, y: &Vector, g: &Vector) -> Result<Vector> {
        Ok(self.nf.gradient(y, &(g + self.shift)))
    }

    fn jacobian(&self, y: &Vector, g: &Vector) -> Result<Matrix> {
        let xi = g + self.shift;
        let h = 1e-6 * (1.0 + xi.norm());
        let mut m = Matrix::zeros();
        for k in 0..self.dim() {
            let mut e = Vector::zeros();
            e[k] = h;
            m.set_column(k, &((self.nf.gradient(y, &(xi + e)) - self.nf.gradient(y, &(xi - e))) / (2.0 * h)));
        }
        Ok(crate::linalg::truncate_matrix(m, self.dim()))
    }
}

/// Minimum of ∫_Y M(y, ξ + ∇W) over periodic P1 fields W.
#[derive(Debug, Clone)]
pub struct FValue {
    pub value: f64,
    /// Cellwise ξ + ∇W at the minimiser.
    pub gradients: Vec<Vector>,
}

/// f(ξ) for an operator with potential Φ = M: the cell corrector minimises
/// the energy, so f is the energy of the cell solution.
pub fn eval_f(op: &MonotoneOperator, mesh: &Arc<Mesh>, xi: &Vector, settings: &SolverSettings) -> Result<FValue> {
    if !op.has_potential() {
        return Err(Error::InputDomain(format!("{} has no potential", op.name())));
    }
    let sol = solve_cell(op, mesh, xi, settings)?;
    let rule = QuadRule::new(mesh.dim(), settings.quad_order);
    let gradients = sol.total_gradients();
    let mut value = 0.0;
    for (c, g) in gradients.iter().enumerate() {
        for (y, w) in mesh.quad_points(c, &rule) {
            value += w * op.potential(&y, g).expect("potential present");
        }
    }
    Ok(FValue { value, gradients })
}

/// f(ξ) for a general N-function by Newton on the Euler–Lagrange system
/// ∫ ∇M(y, ξ + ∇W)·∇φ = 0.
pub fn eval_f_nfunction(nf: &NFunction, mesh: &Arc<Mesh>, xi: &Vector, settings: &SolverSettings) -> Result<FValue> {
    let xi = truncate(*xi, nf.dim());
    let disc = Discretization::new(mesh.clone(), &Source::zero(nf.dim()), settings.quad_order);
    let law = GradientLaw { nf, shift: xi };
    let sol = solve_law(&disc, &law, None, settings)?;
    let rule = QuadRule::new(mesh.dim(), settings.quad_order);
    let gradients: Vec<Vector> = disc.gradients(&sol.coefficients).into_iter().map(|g| g + xi).collect();
    let mut value = 0.0;
    for (c, g) in gradients.iter().enumerate() {
        for (y, w) in mesh.quad_points(c, &rule) {
            value += w * nf.eval(&y, g);
        }
    }
    Ok(FValue { value, gradients })
}

/// Numeric conjugate f*(η) along the ray through η: sup_t t|η| − f(t η̂).
/// In 1D this is the exact Legendre transform of f.
pub fn fstar_numeric(op: &MonotoneOperator, mesh: &Arc<Mesh>, eta: &Vector, settings: &SolverSettings) -> Result<f64> {
    let eta = truncate(*eta, op.dim());
    let s = eta.norm();
    if s == 0.0 {
        return Ok(0.0);
    }
    let dir = eta / s;
    legendre_scalar(|t| eval_f(op, mesh, &(dir * t), settings).map(|f| f.value), s, &ConjugationSettings::default())
}

/// h*(ξ) = ∫_Y M*(y, ξ) dy (1D only).
pub fn eval_hstar(nf: &NFunction, xi: &Vector, mesh: &Mesh, order: usize) -> Result<f64> {
    if nf.dim() != 1 || mesh.dim() != 1 {
        return Err(Error::UnsupportedDimension(nf.dim().max(mesh.dim())));
    }
    let rule = QuadRule::new(1, order);
    let mut total = 0.0;
    for c in 0..mesh.num_cells() {
        for (y, w) in mesh.quad_points(c, &rule) {
            total += w * nf.conjugate(&y, xi)?;
        }
    }
    Ok(total)
}

/// h**(ξ) by numeric Legendre transform of h* (1D only).
pub fn eval_hstarstar(nf: &NFunction, xi: &Vector, mesh: &Mesh, order: usize) -> Result<f64> {
    legendre_scalar(|t| eval_hstar(nf, &Vector::new(t, 0.0), mesh, order), xi[0], &ConjugationSettings::default())
}

/// Which effective pair bounds Â·ξ from below.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoercivityBranch {
    /// f(ξ) + f*(Â(ξ)).
    F,
    /// h**(ξ) + h*(Â(ξ)), 1D only.
    H,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoercivitySample {
    pub xi: Vector,
    pub pairing: f64,
    pub bound: f64,
}

#[derive(Debug, Clone)]
pub struct AhatReport {
    pub pairs: usize,
    pub min_pairing: f64,
    pub monotone_violations: Vec<(Vector, Vector, f64)>,
    pub coercivity: Vec<CoercivitySample>,
    pub coercivity_failures: usize,
    /// Largest |ΔÂ|/|Δξ| between grid neighbours.
    pub max_difference_quotient: f64,
    pub origin_value: Option<f64>,
}

impl AhatReport {
    pub fn passed(&self) -> bool {
        self.monotone_violations.is_empty()
            && self.coercivity_failures == 0
            && self.max_difference_quotient.is_finite()
            && self.origin_value.is_none_or(|v| v <= 1e-9)
    }
}

/// Structural checks of a complete table: monotonicity on sampled pairs of
/// grid points, coercivity `Â·ξ ≥ (1 − slack) c (bound)` at sampled grid
/// points, and finite difference quotients between neighbours.
#[allow(clippy::too_many_arguments)]
pub fn check_ahat_structure(
    table: &HomogTable,
    op: &MonotoneOperator,
    mesh: &Arc<Mesh>,
    settings: &SolverSettings,
    branch: CoercivityBranch,
    c: f64,
    sample_pairs: usize,
    rng_seed: u64,
) -> Result<AhatReport> {
    use rand::Rng;
    if table.is_partial() {
        return Err(Error::InputDomain("table is partial".into()));
    }
    let n = table.grid.len();
    let mut rng = sampling::rng(rng_seed);
    let mut min_pairing = f64::INFINITY;
    let mut violations = Vec::new();
    if n > 1 {
        for _ in 0..sample_pairs {
            let i = rng.gen_range(0..n);
            let mut j = rng.gen_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            let (xi, xj) = (table.grid.point(i), table.grid.point(j));
            let p = (table.values[i] - table.values[j]).dot(&(xi - xj));
            min_pairing = min_pairing.min(p);
            if !(p > 0.0) {
                violations.push((xi, xj, p));
            }
        }
    }
    let coercivity_points: Vec<usize> = (0..sample_pairs.min(n)).map(|_| rng.gen_range(0..n)).collect();
    let coercivity = coercivity_points
        .par_iter()
        .map(|&i| {
            let xi = table.grid.point(i);
            let a = table.values[i];
            let bound = match branch {
                CoercivityBranch::F => eval_f(op, mesh, &xi, settings)?.value + fstar_numeric(op, mesh, &a, settings)?,
                CoercivityBranch::H => {
                    eval_hstarstar(op.nfunction(), &xi, mesh, settings.quad_order)?
                        + eval_hstar(op.nfunction(), &a, mesh, settings.quad_order)?
                }
            };
            Ok(CoercivitySample { xi, pairing: a.dot(&xi), bound })
        })
        .collect::<Result<Vec<_>>>()?;
    let coercivity_failures = coercivity.iter().filter(|s| s.pairing < 0.99 * c * s.bound).count();
    let mut max_dq: f64 = 0.0;
    for i in 0..n {
        let m = table.grid.multi_index(i);
        for k in 0..table.dim() {
            if m[k] + 1 < table.grid.axes()[k].len() {
                let mut m2 = m;
                m2[k] += 1;
                let j = table.grid.flat_index(m2);
                let dq = (table.values[j] - table.values[i]).norm() / (table.grid.point(j) - table.grid.point(i)).norm();
                max_dq = max_dq.max(dq);
            }
        }
    }
    let origin_value = table
        .grid
        .points()
        .position(|p| p == Vector::zeros())
        .map(|i| table.values[i].norm());
    Ok(AhatReport {
        pairs: sample_pairs,
        min_pairing,
        monotone_violations: violations,
        coercivity,
        coercivity_failures,
        max_difference_quotient: max_dq,
        origin_value,
    })
}

/// Monotonicity of Â by direct cell solves at seeded pairs ξ₁ ≠ ξ₂ with
/// magnitudes in [10⁻², 10^{0.5}].
pub fn check_ahat_monotone(op: &MonotoneOperator, mesh: &Arc<Mesh>, pairs: usize, rng_seed: u64, settings: &SolverSettings) -> Result<(f64, usize)> {
    let mut rng = sampling::rng(rng_seed);
    let samples: Vec<(Vector, Vector)> = (0..pairs)
        .map(|_| {
            let a = sampling::vector_in_shell(&mut rng, op.dim(), -2.0, 0.5);
            let b = sampling::vector_in_shell(&mut rng, op.dim(), -2.0, 0.5);
            (a, b)
        })
        .collect();
    let pairings = samples
        .par_iter()
        .map(|(a, b)| {
            let fa = solve_cell(op, mesh, a, settings)?.ahat;
            let fb = solve_cell(op, mesh, b, settings)?.ahat;
            Ok((fa - fb).dot(&(a - b)))
        })
        .collect::<Result<Vec<f64>>>()?;
    let min = pairings.iter().copied().fold(f64::INFINITY, f64::min);
    Ok((min, pairings.iter().filter(|p| !(**p > 0.0)).count()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::linspace;
    use crate::opcat::parse_operator;

    fn v(x: f64) -> Vector {
        Vector::new(x, 0.0)
    }

    #[test]
    fn zero_gradient_gives_zero() {
        let op = parse_operator("plaplace:3,1,16", 1).unwrap();
        let mesh = cell_mesh(&op, 32).unwrap();
        let s = solve_cell(&op, &mesh, &Vector::zeros(), &SolverSettings::default()).unwrap();
        assert_eq!(s.ahat, Vector::zeros());
        assert!(s.w.coefficients().iter().all(|c| *c == 0.0));
    }

    #[test]
    fn laminate_harmonic_mean() {
        let op = parse_operator("linear:1,3", 1).unwrap();
        let mesh = cell_mesh(&op, 64).unwrap();
        let s = solve_cell(&op, &mesh, &v(2.0), &SolverSettings::default()).unwrap();
        assert!((s.ahat[0] - 3.0).abs() < 1e-10);
        assert!(s.orthogonality <= 10.0 * 1e-10 * 3.0);
    }

    #[test]
    fn plaplace_flux_constancy() {
        let op = parse_operator("plaplace:3,1,16", 1).unwrap();
        let mesh = cell_mesh(&op, 64).unwrap();
        let s = solve_cell(&op, &mesh, &v(1.0), &SolverSettings::default()).unwrap();
        // ξ = σ^{1/2} ∫ a^{-1/2} = σ^{1/2} (1 + 1/4)/2
        assert!((s.ahat[0] - (1.0f64 / 0.625).powi(2)).abs() < 1e-9);
        for f in &s.flux_field {
            assert!((f[0] - s.ahat[0]).abs() < 1e-9);
        }
    }

    #[test]
    fn table_examples_and_round_trip() {
        let op = parse_operator("linear:1,3", 1).unwrap();
        let mesh = cell_mesh(&op, 32).unwrap();
        let grid = TensorGrid::new(vec![linspace(-2.0, 2.0, 5)]).unwrap();
        let t = tabulate_ahat(&op, &mesh, &grid, &SolverSettings::default()).unwrap();
        for (p, a) in grid.points().zip(&t.values) {
            assert!((a[0] - 1.5 * p[0]).abs() < 1e-10);
        }
        assert!((t.interp(&v(0.5)).unwrap()[0] - 0.75).abs() < 1e-10);
        assert!(matches!(t.interp(&v(2.5)), Err(Error::Extrapolation(_))));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        t.save(&path).unwrap();
        let back = HomogTable::load(&path).unwrap();
        assert_eq!(back, t);
        let single = tabulate_ahat(&op, &mesh, &TensorGrid::new(vec![vec![0.0]]).unwrap(), &SolverSettings::default()).unwrap();
        assert_eq!(single.values, vec![Vector::zeros()]);
    }

    #[test]
    fn table_round_trip_2d() {
        let op = parse_operator("aniso", 2).unwrap();
        let mesh = cell_mesh(&op, 4).unwrap();
        let grid = TensorGrid::new(vec![linspace(-1.0, 1.0, 3), vec![-0.3, 0.1]]).unwrap();
        let t = tabulate_ahat(&op, &mesh, &grid, &SolverSettings::default()).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        std::fs::write(&path, &buf).unwrap();
        assert_eq!(HomogTable::load(&path).unwrap(), t);
        assert!(String::from_utf8(buf).unwrap().starts_with("dim,xi_1,xi_2,ahat_1,ahat_2,cell_h\n"));
    }

    #[test]
    fn effective_functionals_for_laminate() {
        let op = parse_operator("linear:1,3", 1).unwrap();
        let mesh = cell_mesh(&op, 64).unwrap();
        let s = SolverSettings::default();
        assert_eq!(eval_f(&op, &mesh, &Vector::zeros(), &s).unwrap().value, 0.0);
        let f1 = eval_f(&op, &mesh, &v(1.0), &s).unwrap().value;
        assert!((f1 - 0.75).abs() < 1e-10);
        let fm = eval_f(&op, &mesh, &v(-1.0), &s).unwrap().value;
        assert!((f1 - fm).abs() < 1e-12);
        let hs = eval_hstar(op.nfunction(), &v(1.0), &mesh, 3).unwrap();
        assert!((hs - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(eval_hstar(op.nfunction(), &Vector::zeros(), &mesh, 3).unwrap(), 0.0);
        let fstar = fstar_numeric(&op, &mesh, &v(1.0), &s).unwrap();
        assert!((fstar - 1.0 / 3.0).abs() < 1e-6, "{fstar}");
        let op2 = parse_operator("aniso", 2).unwrap();
        assert!(matches!(
            eval_hstar(op2.nfunction(), &v(1.0), &cell_mesh(&op2, 4).unwrap(), 3),
            Err(Error::UnsupportedDimension(2))
        ));
    }

    #[test]
    fn energy_minimiser_matches_corrector() {
        let op = parse_operator("plaplace:3,1,16", 1).unwrap();
        let mesh = cell_mesh(&op, 32).unwrap();
        let s = SolverSettings::default();
        let xi = v(0.7);
        let f = eval_f_nfunction(op.nfunction(), &mesh, &xi, &s).unwrap();
        let cell = solve_cell(&op, &mesh, &xi, &s).unwrap();
        for (a, b) in f.gradients.iter().zip(cell.total_gradients()) {
            assert!((a - b).norm() < 1e-6);
        }
        assert!((f.value - eval_f(&op, &mesh, &xi, &s).unwrap().value).abs() < 1e-9);
    }

    #[test]
    fn structure_report_for_laminate() {
        let op = parse_operator("linear:1,3", 1).unwrap();
        let mesh = cell_mesh(&op, 32).unwrap();
        let s = SolverSettings::default();
        let grid = TensorGrid::new(vec![linspace(-2.0, 2.0, 9)]).unwrap();
        let t = tabulate_ahat(&op, &mesh, &grid, &s).unwrap();
        let report = check_ahat_structure(&t, &op, &mesh, &s, CoercivityBranch::F, 1.0, 6, 5).unwrap();
        assert!(report.passed(), "{report:?}");
        assert!((report.max_difference_quotient - 1.5).abs() < 1e-9);
        let report = check_ahat_structure(&t, &op, &mesh, &s, CoercivityBranch::H, 1.0, 4, 5).unwrap();
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn nested_law_agrees_with_table() {
        let op = parse_operator("plaplace:3,1,16", 1).unwrap();
        let mesh = cell_mesh(&op, 16).unwrap();
        let law = NestedLaw::new(op.clone(), mesh, SolverSettings::default());
        let a = law.flux(&Vector::zeros(), &v(1.0)).unwrap();
        assert!((a[0] - 2.56).abs() < 1e-9);
        let j = law.jacobian(&Vector::zeros(), &v(1.0)).unwrap();
        assert!((j[(0, 0)] - 5.12).abs() < 1e-4);
    }
}
