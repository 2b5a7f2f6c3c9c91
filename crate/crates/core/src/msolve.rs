//! Nonlinear Galerkin solver for `∫ A(x/ε, ∇u)·∇φ = ∫ F·∇φ` on P1 meshes and
//! the 1D dual-flux solver.
//!
//! The solver works on any [`FluxLaw`]: the fine-scale operator, the cell
//! problem (operator with a constant gradient shift) and the tabulated
//! homogenized operator all use the same assembly and Newton loop.

use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{BoundaryKind, DiscreteField, Mesh, QuadRule, DEFAULT_ORDER};
use crate::grid::TensorGrid;
use crate::linalg::{norm2, truncate, Matrix, SparseSystem, Vector};
use crate::opcat::{JacobianMode, MonotoneOperator};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSettings {
    /// Bound on the Euclidean norm of the discrete residual.
    pub residual_tol: f64,
    pub max_newton: usize,
    pub max_backtracks: usize,
    pub jacobian_mode: JacobianMode,
    /// Iteration cap of the relaxed Picard fallback.
    pub max_picard: usize,
    pub picard_relaxation: f64,
    pub quad_order: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            max_newton: 50,
            max_backtracks: 40,
            jacobian_mode: JacobianMode::Analytic,
            max_picard: 2000,
            picard_relaxation: 0.5,
            quad_order: DEFAULT_ORDER,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0) {
            return Err(Error::Config(format!("residual_tol must be positive, got {}", self.residual_tol)));
        }
        if self.max_newton == 0 || self.max_backtracks == 0 || self.max_picard == 0 {
            return Err(Error::Config("iteration caps must be at least 1".into()));
        }
        if !(self.picard_relaxation > 0.0 && self.picard_relaxation <= 1.0) {
            return Err(Error::Config("picard relaxation must lie in (0, 1]".into()));
        }
        Ok(())
    }
}

/// Pointwise flux law a(x, g) with its derivative in g.
pub trait FluxLaw: Send + Sync {
    fn dim(&self) -> usize;
    fn flux(&self, x: &Vector, g: &Vector) -> Result<Vector>;
    fn jacobian(&self, x: &Vector, g: &Vector) -> Result<Matrix>;
}

/// `A(x/ε, g + shift)`; `eps = None` evaluates at y = x.
#[derive(Debug, Clone)]
pub struct OperatorLaw<'a> {
    pub op: &'a MonotoneOperator,
    pub eps: Option<f64>,
    pub shift: Vector,
    pub mode: JacobianMode,
}

impl<'a> OperatorLaw<'a> {
    pub fn new(op: &'a MonotoneOperator, eps: Option<f64>, mode: JacobianMode) -> Self {
        Self { op, eps, shift: Vector::zeros(), mode }
    }

    pub fn shifted(mut self, shift: Vector) -> Self {
        self.shift = truncate(shift, self.op.dim());
        self
    }

    pub fn y(&self, x: &Vector) -> Vector {
        match self.eps {
            Some(e) => x / e,
            None => *x,
        }
    }
}

impl FluxLaw for OperatorLaw<'_> {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn flux(&self, x: &Vector, g: &Vector) -> Result<Vector> {
        self.op.eval_checked(&self.y(x), &(g + self.shift))
    }

    fn jacobian(&self, x: &Vector, g: &Vector) -> Result<Matrix> {
        Ok(self.op.jacobian(&self.y(x), &(g + self.shift), self.mode))
    }
}

pub type SourceFn = Arc<dyn Fn(&Vector) -> Vector + Send + Sync>;

/// Right-hand side flux F(x).
#[derive(Clone)]
pub struct Source {
    label: String,
    dim: usize,
    f: SourceFn,
}

impl std::fmt::Debug for Source {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Source").field("label", &self.label).field("dim", &self.dim).finish()
    }
}

impl Source {
    pub fn from_fn(label: impl Into<String>, dim: usize, f: impl Fn(&Vector) -> Vector + Send + Sync + 'static) -> Self {
        Self { label: label.into(), dim, f: Arc::new(f) }
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_fn("zero", dim, |_| Vector::zeros())
    }

    pub fn constant(dim: usize, c: f64) -> Self {
        let v = truncate(Vector::new(c, c), dim);
        Self::from_fn(format!("const:{c}"), dim, move |_| v)
    }

    /// F(x) = x (componentwise in 2D).
    pub fn linear(dim: usize) -> Self {
        Self::from_fn("linear", dim, move |x| truncate(*x, dim))
    }

    /// Nodal CSV with columns `x,F` (1D) or `x1,x2,F1,F2` (2D) on a tensor
    /// grid covering the unit cube, interpolated multilinearly.
    pub fn table(path: &Path, dim: usize) -> Result<Self> {
        let parse_err = |msg: String| Error::Parse { path: path.to_path_buf(), msg };
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let mut rows: Vec<(Vector, Vector)> = Vec::new();
        for (line, rec) in reader.records().enumerate() {
            let rec = rec?;
            if rec.len() != 2 * dim {
                return Err(parse_err(format!("row {}: expected {} columns, got {}", line + 1, 2 * dim, rec.len())));
            }
            let vals: Vec<f64> = rec
                .iter()
                .map(|t| t.parse::<f64>().map_err(|_| parse_err(format!("row {}: bad number `{t}`", line + 1))))
                .collect::<Result<_>>()?;
            let mut x = Vector::zeros();
            let mut f = Vector::zeros();
            for k in 0..dim {
                x[k] = vals[k];
                f[k] = vals[dim + k];
            }
            if f.iter().any(|v| !v.is_finite()) {
                return Err(parse_err(format!("row {}: F must be bounded", line + 1)));
            }
            rows.push((x, f));
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
        let grid = TensorGrid::new(axes).map_err(|e| parse_err(e.to_string()))?;
        if rows.len() != grid.len() {
            return Err(parse_err(format!("{} rows do not form a tensor grid of {} points", rows.len(), grid.len())));
        }
        let mut values = vec![None; grid.len()];
        for (x, f) in rows {
            let mut idx = [0usize; 2];
            for k in 0..dim {
                idx[k] = grid.axes()[k].binary_search_by(|v| v.total_cmp(&x[k])).unwrap();
            }
            values[grid.flat_index(idx)] = Some(f);
        }
        let values: Vec<Vector> = values
            .into_iter()
            .collect::<Option<_>>()
            .ok_or_else(|| parse_err("duplicate grid points".into()))?;
        let corner_lo = Vector::zeros();
        let corner_hi = truncate(Vector::new(1.0, 1.0), dim);
        if !grid.contains(&corner_lo) || !grid.contains(&corner_hi) {
            return Err(parse_err("table must cover the unit domain".into()));
        }
        let label = format!("table:{}", path.display());
        Ok(Self::from_fn(label, dim, move |x| {
            let clamped = x.map(|t| t.clamp(0.0, 1.0));
            grid.interpolate(&values, &clamped).unwrap_or_else(|_| Vector::zeros())
        }))
    }

    /// Parses `zero`, `const:c`, `linear` or `table:<file>`; relative table
    /// paths resolve against `base`.
    pub fn parse(spec: &str, dim: usize, base: Option<&Path>) -> Result<Self> {
        let spec = spec.trim();
        match spec.split_once(':') {
            None if spec == "zero" => Ok(Self::zero(dim)),
            None if spec == "linear" => Ok(Self::linear(dim)),
            Some(("const", c)) => {
                let c: f64 = c.trim().parse().map_err(|_| Error::Config(format!("bad constant in `{spec}`")))?;
                if !c.is_finite() {
                    return Err(Error::Config(format!("F must be bounded, got `{spec}`")));
                }
                Ok(Self::constant(dim, c))
            }
            Some(("table", file)) => {
                let p = Path::new(file.trim());
                let full = match base {
                    Some(b) if p.is_relative() => b.join(p),
                    _ => p.to_path_buf(),
                };
                Self::table(&full, dim)
            }
            _ => Err(Error::Config(format!("unknown F specification `{spec}`"))),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: &Vector) -> Vector {
        truncate((self.f)(x), self.dim)
    }
}

/// Per-cell quadrature data shared by assembly and post-processing.
pub(crate) struct Discretization {
    pub mesh: Arc<Mesh>,
    /// Physical quadrature points and weights normalised to sum one.
    pub points: Vec<Vec<(Vector, f64)>>,
    /// Cell average of F.
    pub fbar: Vec<Vector>,
}

impl Discretization {
    pub fn new(mesh: Arc<Mesh>, source: &Source, order: usize) -> Self {
        let rule = QuadRule::new(mesh.dim(), order);
        let mut points = Vec::with_capacity(mesh.num_cells());
        let mut fbar = Vec::with_capacity(mesh.num_cells());
        for c in 0..mesh.num_cells() {
            let m = mesh.measure(c);
            let pts: Vec<(Vector, f64)> = mesh.quad_points(c, &rule).map(|(x, w)| (x, w / m)).collect();
            fbar.push(pts.iter().fold(Vector::zeros(), |acc, (x, w)| acc + source.eval(x) * *w));
            points.push(pts);
        }
        Self { mesh, points, fbar }
    }

    /// Full nodal vector from free coefficients (constrained nodes zero).
    pub fn nodal(&self, coeffs: &[f64]) -> Vec<f64> {
        (0..self.mesh.num_vertices())
            .map(|v| self.mesh.free_index(v).map_or(0.0, |k| coeffs[k]))
            .collect()
    }

    pub fn gradients(&self, coeffs: &[f64]) -> Vec<Vector> {
        crate::fem::cell_gradients(&self.mesh, &self.nodal(coeffs))
    }

    /// Cell average of the flux and, optionally, of its Jacobian.
    pub fn cell_flux(&self, law: &dyn FluxLaw, c: usize, g: &Vector, with_jac: bool) -> Result<(Vector, Matrix)> {
        let mut a = Vector::zeros();
        let mut j = Matrix::zeros();
        for (x, w) in &self.points[c] {
            a += law.flux(x, g)? * *w;
            if with_jac {
                j += law.jacobian(x, g)? * *w;
            }
        }
        Ok((a, j))
    }

    /// Residual ∫(a(x,∇u) − F)·∇φ_i per free index, with the tangent matrix
    /// when requested.
    pub fn assemble(&self, law: &dyn FluxLaw, coeffs: &[f64], with_jac: bool) -> Result<(Vec<f64>, Option<SparseSystem>)> {
        let mesh = &self.mesh;
        let n = mesh.num_free();
        let grads = self.gradients(coeffs);
        let mut r = vec![0.0; n];
        let mut k = with_jac.then(|| SparseSystem::with_capacity(n, mesh.num_cells() * 9));
        for (c, g) in grads.iter().enumerate() {
            let (a, j) = self.cell_flux(law, c, g, with_jac)?;
            let m = mesh.measure(c);
            let bg = mesh.basis_gradients(c);
            let q = (a - self.fbar[c]) * m;
            for (li, &vi) in mesh.cell(c).iter().enumerate() {
                let Some(fi) = mesh.free_index(vi) else { continue };
                r[fi] += q.dot(&bg[li]);
                if let Some(k) = k.as_mut() {
                    let jt = j.transpose() * bg[li] * m;
                    for (lj, &vj) in mesh.cell(c).iter().enumerate() {
                        if let Some(fj) = mesh.free_index(vj) {
                            k.add(fi, fj, jt.dot(&bg[lj]));
                        }
                    }
                }
            }
        }
        Ok((r, k))
    }

    /// Secant stiffness: per cell the scalar modulus a·g/|g|² (the Jacobian
    /// when g = 0), assembled as an isotropic diffusion matrix.
    fn secant_matrix(&self, law: &dyn FluxLaw, coeffs: &[f64]) -> Result<SparseSystem> {
        let mesh = &self.mesh;
        let grads = self.gradients(coeffs);
        let mut k = SparseSystem::with_capacity(mesh.num_free(), mesh.num_cells() * 9);
        for (c, &g) in grads.iter().enumerate() {
            let (a, j) = self.cell_flux(law, c, &g, true)?;
            let g2 = g.norm_squared();
            let modulus = if g2 > 1e-24 { a.dot(&g) / g2 } else { j.trace() / mesh.dim() as f64 };
            let modulus = modulus.max(1e-12);
            let m = mesh.measure(c);
            let bg = mesh.basis_gradients(c);
            for (li, &vi) in mesh.cell(c).iter().enumerate() {
                let Some(fi) = mesh.free_index(vi) else { continue };
                for (lj, &vj) in mesh.cell(c).iter().enumerate() {
                    if let Some(fj) = mesh.free_index(vj) {
                        k.add(fi, fj, modulus * m * bg[li].dot(&bg[lj]));
                    }
                }
            }
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Newton,
    Picard,
}

/// Converged coefficients of a [`FluxLaw`] solve.
#[derive(Debug, Clone)]
pub struct LawSolution {
    pub coefficients: Vec<f64>,
    pub iterations: usize,
    pub final_residual: f64,
    pub method: SolveMethod,
    /// Residual norms, Newton phase then any Picard phase.
    pub history: Vec<f64>,
}

fn check_mesh_for(mesh: &Mesh, law_dim: usize) -> Result<()> {
    if mesh.dim() != law_dim {
        return Err(Error::DimensionMismatch { expected: law_dim, got: mesh.dim() });
    }
    if mesh.boundary() == BoundaryKind::Unconstrained {
        return Err(Error::InputDomain("solver needs a Dirichlet or periodic mesh".into()));
    }
    Ok(())
}

/// Damped Newton with backtracking on the residual norm, falling back to a
/// relaxed secant (Kačanov) iteration when Newton stalls.
pub(crate) fn solve_law(disc: &Discretization, law: &dyn FluxLaw, initial: Option<&[f64]>, settings: &SolverSettings) -> Result<LawSolution> {
    settings.validate()?;
    check_mesh_for(&disc.mesh, law.dim())?;
    let n = disc.mesh.num_free();
    let mut u = match initial {
        Some(u0) if u0.len() == n => u0.to_vec(),
        Some(u0) => return Err(Error::DimensionMismatch { expected: n, got: u0.len() }),
        None => vec![0.0; n],
    };
    let tol = settings.residual_tol;
    let mut history = Vec::new();
    let (mut r, mut k) = disc.assemble(law, &u, true)?;
    let mut rn = norm2(&r);
    history.push(rn);
    let mut iterations = 0;
    while rn > tol && iterations < settings.max_newton {
        let step = k.take().expect("tangent assembled").solve(&r);
        let Ok(step) = step else { break };
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..settings.max_backtracks {
            let trial: Vec<f64> = u.iter().zip(&step).map(|(a, d)| a - alpha * d).collect();
            if let Ok((rt, _)) = disc.assemble(law, &trial, false) {
                let rtn = norm2(&rt);
                if rtn < rn {
                    accepted = Some((trial, rt, rtn));
                    break;
                }
            }
            alpha *= 0.5;
        }
        iterations += 1;
        let Some((trial, rt, rtn)) = accepted else { break };
        u = trial;
        r = rt;
        rn = rtn;
        history.push(rn);
        if rn > tol {
            k = disc.assemble(law, &u, true)?.1;
        }
    }
    if rn <= tol {
        return Ok(LawSolution { coefficients: u, iterations, final_residual: rn, method: SolveMethod::Newton, history });
    }

    let omega = settings.picard_relaxation;
    for it in 0..settings.max_picard {
        let s = disc.secant_matrix(law, &u)?;
        // secant system S u_new = b with b = S u − r
        let su = s.apply(&u);
        let b: Vec<f64> = su.iter().zip(&r).map(|(a, b)| a - b).collect();
        let Ok(target) = s.solve(&b) else { break };
        for (ui, ti) in u.iter_mut().zip(&target) {
            *ui = (1.0 - omega) * *ui + omega * ti;
        }
        r = disc.assemble(law, &u, false)?.0;
        rn = norm2(&r);
        history.push(rn);
        if rn <= tol {
            return Ok(LawSolution {
                coefficients: u,
                iterations: iterations + it + 1,
                final_residual: rn,
                method: SolveMethod::Picard,
                history,
            });
        }
        if !rn.is_finite() {
            break;
        }
    }
    Err(Error::NonConvergence { what: "nonlinear Galerkin solve", iterations: history.len() - 1, residual: rn, history })
}

/// Result of a fine-scale Dirichlet solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: DiscreteField,
    pub iterations: usize,
    pub final_residual: f64,
    pub method: SolveMethod,
    pub history: Vec<f64>,
    /// |∫A(x/ε,∇u)·∇u − ∫F·∇u|.
    pub energy_identity_gap: f64,
    /// (∫M(x/ε,∇u), ∫M*(x/ε,A(x/ε,∇u))).
    pub modular_bounds: (f64, f64),
}

/// Residual vector of the weak form at `u`; `eps = None` evaluates the
/// operator at y = x.
pub fn assemble_residual(op: &MonotoneOperator, mesh: &Arc<Mesh>, u: &DiscreteField, source: &Source, eps: Option<f64>) -> Result<Vec<f64>> {
    if !Arc::ptr_eq(u.mesh(), mesh) && u.coefficients().len() != mesh.num_free() {
        return Err(Error::DimensionMismatch { expected: mesh.num_free(), got: u.coefficients().len() });
    }
    check_mesh_for(mesh, op.dim())?;
    let disc = Discretization::new(mesh.clone(), source, DEFAULT_ORDER);
    let law = OperatorLaw::new(op, eps, JacobianMode::Analytic);
    Ok(disc.assemble(&law, u.coefficients(), false)?.0)
}

/// Solves the fine-scale Dirichlet problem from u = 0.
pub fn solve_dirichlet(op: &MonotoneOperator, mesh: &Arc<Mesh>, source: &Source, eps: Option<f64>, settings: &SolverSettings) -> Result<SolveResult> {
    solve_dirichlet_from(op, mesh, source, eps, settings, None)
}

/// As [`solve_dirichlet`] with an explicit initial guess.
pub fn solve_dirichlet_from(
    op: &MonotoneOperator,
    mesh: &Arc<Mesh>,
    source: &Source,
    eps: Option<f64>,
    settings: &SolverSettings,
    initial: Option<&[f64]>,
) -> Result<SolveResult> {
    if mesh.boundary() != BoundaryKind::DirichletZero {
        return Err(Error::InputDomain("fine-scale problem needs a Dirichlet mesh".into()));
    }
    let disc = Discretization::new(mesh.clone(), source, settings.quad_order);
    let law = OperatorLaw::new(op, eps, settings.jacobian_mode);
    let sol = solve_law(&disc, &law, initial, settings)?;
    let grads = disc.gradients(&sol.coefficients);
    let nf = op.nfunction();
    let (mut work, mut forcing, mut m_int, mut mstar_int) = (0.0, 0.0, 0.0, 0.0);
    for (c, g) in grads.iter().enumerate() {
        let meas = mesh.measure(c);
        for (x, w) in &disc.points[c] {
            let y = law.y(x);
            let a = op.eval_checked(&y, g)?;
            work += w * meas * a.dot(g);
            forcing += w * meas * source.eval(x).dot(g);
            m_int += w * meas * nf.eval(&y, g);
            mstar_int += w * meas * nf.conjugate(&y, &a)?;
        }
    }
    Ok(SolveResult {
        u: DiscreteField::from_coefficients(mesh.clone(), sol.coefficients)?,
        iterations: sol.iterations,
        final_residual: sol.final_residual,
        method: sol.method,
        history: sol.history,
        energy_identity_gap: (work - forcing).abs(),
        modular_bounds: (m_int, mstar_int),
    })
}

/// Both sides of the uniform a-priori estimate
/// `c(½∫M + ∫M*) ≤ ∫ m₁*((2/c)|F|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AprioriCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub c: f64,
}

impl AprioriCheck {
    pub fn holds(&self, slack: f64) -> bool {
        self.lhs <= (1.0 + slack) * self.rhs
    }
}

/// ε-independent right-hand side ∫_Ω m₁*((2/c)|F|).
pub fn apriori_constant(op: &MonotoneOperator, source: &Source, c: f64, order: usize) -> Result<f64> {
    let mesh = crate::fem::build_mesh(op.dim(), 64, BoundaryKind::DirichletZero, &[])?;
    let rule = QuadRule::new(mesh.dim(), order);
    let lower = op.nfunction().lower();
    let mut total = 0.0;
    for cell in 0..mesh.num_cells() {
        for (x, w) in mesh.quad_points(cell, &rule) {
            total += w * lower.conjugate(2.0 / c * source.eval(&x).norm())?;
        }
    }
    Ok(total)
}

pub fn apriori_check(result: &SolveResult, op: &MonotoneOperator, source: &Source, c: f64) -> Result<AprioriCheck> {
    let (m, mstar) = result.modular_bounds;
    Ok(AprioriCheck { lhs: c * (0.5 * m + mstar), rhs: apriori_constant(op, source, c, DEFAULT_ORDER)?, c })
}

/// Solution of the 1D dual problem.
#[derive(Debug, Clone)]
pub struct DualSolution {
    /// The constant divergence-free flux T.
    pub t: f64,
    /// Cellwise gradient B(·, T + F) of the reconstruction.
    pub gradients: Vec<f64>,
    /// u reconstructed by integrating the gradient from x = 0.
    pub u_from_dual: DiscreteField,
    /// |u(1)| before the boundary node is dropped.
    pub closure_gap: f64,
    pub iterations: usize,
}

/// Safeguarded Newton for a scalar increasing function: returns t with
/// f(t) = target. `df` may be inaccurate; bisection keeps the bracket.
fn monotone_root(f: impl Fn(f64) -> Result<(f64, f64)>, target: f64, guess: f64, xtol: f64) -> Result<(f64, usize)> {
    let (f0, _) = f(guess)?;
    if f0 == target {
        return Ok((guess, 0));
    }
    let mut step = (1.0 + guess.abs()) * 0.5;
    let (mut lo, mut hi) = (guess, guess);
    let up = f0 < target;
    let mut found = false;
    for _ in 0..200 {
        let probe = if up { hi + step } else { lo - step };
        let (fp, _) = f(probe)?;
        if up {
            lo = hi;
            hi = probe;
        } else {
            hi = lo;
            lo = probe;
        }
        if (fp >= target) == up {
            found = true;
            break;
        }
        step *= 2.0;
    }
    if !found {
        return Err(Error::Bracket(format!("no sign change for target {target:.6e} near {guess:.6e}")));
    }
    let mut t = 0.5 * (lo + hi);
    for it in 0..300 {
        let (ft, dft) = f(t)?;
        if ft == target {
            return Ok((t, it));
        }
        if ft < target {
            lo = t;
        } else {
            hi = t;
        }
        if hi - lo <= xtol * (1.0 + t.abs()) {
            return Ok((0.5 * (lo + hi), it));
        }
        let newton = t - (ft - target) / dft;
        t = if dft > 0.0 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
        if (hi - lo) <= f64::EPSILON * (1.0 + t.abs()) * 4.0 {
            return Ok((t, it));
        }
    }
    Ok((t, 300))
}

/// Dual solve in 1D: the flux T + F̄_c is constant up to the cell average
/// of F, so on each cell ∇u = L_c⁻¹(T + F̄_c) with L_c the cell-averaged
/// law, and T is fixed by the zero boundary condition ∫∇u = 0.
pub fn solve_dual_1d(op: &MonotoneOperator, mesh: &Arc<Mesh>, source: &Source, settings: &SolverSettings) -> Result<DualSolution> {
    if mesh.dim() != 1 || op.dim() != 1 {
        return Err(Error::UnsupportedDimension(mesh.dim().max(op.dim())));
    }
    if mesh.boundary() != BoundaryKind::DirichletZero {
        return Err(Error::InputDomain("dual solve needs a Dirichlet mesh".into()));
    }
    let disc = Discretization::new(mesh.clone(), source, settings.quad_order);
    let law = OperatorLaw::new(op, None, settings.jacobian_mode);
    let ncell = mesh.num_cells();
    let cell_law = |c: usize, g: f64| -> Result<(f64, f64)> {
        let (a, j) = disc.cell_flux(&law, c, &Vector::new(g, 0.0), true)?;
        Ok((a[0], j[(0, 0)]))
    };
    let gradients_for = |t: f64, warm: &[f64]| -> Result<Vec<f64>> {
        (0..ncell)
            .map(|c| {
                let target = t + disc.fbar[c][0];
                let guess = warm.get(c).copied().unwrap_or(0.0);
                monotone_root(|g| cell_law(c, g), target, guess, 1e-15).map(|(g, _)| g)
            })
            .collect()
    };
    let warm = std::cell::RefCell::new(Vec::new());
    let total = |t: f64| -> Result<(f64, f64)> {
        let g = gradients_for(t, &warm.borrow())?;
        let mut s = 0.0;
        let mut ds = 0.0;
        for (c, gc) in g.iter().enumerate() {
            let h = mesh.measure(c);
            s += h * gc;
            let (_, d) = cell_law(c, *gc)?;
            ds += if d > 0.0 { h / d } else { 0.0 };
        }
        *warm.borrow_mut() = g;
        Ok((s, ds.max(1e-300)))
    };
    let guess = -disc.fbar.iter().enumerate().map(|(c, f)| f[0] * mesh.measure(c)).sum::<f64>();
    let (t, iterations) = monotone_root(total, 0.0, guess, 1e-15)?;
    let gradients = gradients_for(t, &[])?;

    // integrate from the left end along the sorted vertices
    let mut order: Vec<usize> = (0..mesh.num_vertices()).collect();
    order.sort_by(|&a, &b| mesh.vertices()[a][0].total_cmp(&mesh.vertices()[b][0]));
    let mut nodal = vec![0.0; mesh.num_vertices()];
    let mut cell_of_left = vec![usize::MAX; mesh.num_vertices()];
    for c in 0..ncell {
        let vs = mesh.cell(c);
        let left = if mesh.vertices()[vs[0]][0] < mesh.vertices()[vs[1]][0] { vs[0] } else { vs[1] };
        cell_of_left[left] = c;
    }
    for w in order.windows(2) {
        let c = cell_of_left[w[0]];
        nodal[w[1]] = nodal[w[0]] + gradients[c] * mesh.measure(c);
    }
    let closure_gap = nodal[*order.last().unwrap()].abs();
    let coeffs = (0..mesh.num_free()).map(|k| nodal[mesh.node_of_free(k)]).collect();
    Ok(DualSolution { t, gradients, u_from_dual: DiscreteField::from_coefficients(mesh.clone(), coeffs)?, closure_gap, iterations })
}

/// Cellwise L¹ distance between the primal gradient and the dual one.
pub fn primal_dual_l1(primal: &DiscreteField, dual: &DualSolution) -> f64 {
    let mesh = primal.mesh();
    primal
        .gradients()
        .iter()
        .zip(&dual.gradients)
        .enumerate()
        .map(|(c, (g, d))| mesh.measure(c) * (g[0] - d).abs())
        .sum()
}

/// Max nodal difference between two fields on the same mesh.
pub fn nodal_max_diff(a: &DiscreteField, b: &DiscreteField) -> f64 {
    a.nodal_values().iter().zip(b.nodal_values()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_mesh;
    use crate::opcat::parse_operator;

    fn dirichlet(n: usize) -> Arc<Mesh> {
        Arc::new(build_mesh(1, n, BoundaryKind::DirichletZero, &[]).unwrap())
    }

    /// Two-point BVP oracle for (|u'|u')' = (x)': flux |u'|u' = x + k with
    /// k fixed by ∫u' = 0, via bisection and a fine midpoint rule.
    fn plap3_oracle_at_half() -> f64 {
        let g = |x: f64, k: f64| {
            let s: f64 = x + k;
            s.signum() * s.abs().sqrt()
        };
        let integral = |k: f64, a: f64, b: f64| {
            let n = 200_000;
            let h = (b - a) / n as f64;
            (0..n).map(|i| g(a + (i as f64 + 0.5) * h, k) * h).sum::<f64>()
        };
        let (mut lo, mut hi) = (-1.0, 0.0);
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if integral(mid, 0.0, 1.0) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        integral(0.5 * (lo + hi), 0.0, 0.5)
    }

    #[test]
    fn residual_examples() {
        let op = parse_operator("linear:1", 1).unwrap();
        let mesh = dirichlet(16);
        let zero = DiscreteField::zeros(mesh.clone());
        let r = assemble_residual(&op, &mesh, &zero, &Source::zero(1), None).unwrap();
        assert!(r.iter().all(|v| *v == 0.0));
        let r = assemble_residual(&op, &mesh, &zero, &Source::constant(1, 2.5), None).unwrap();
        assert!(norm2(&r) < 1e-14);
        let exact = DiscreteField::interpolate(mesh.clone(), |x| 0.5 * x[0] * x[0] - 0.5 * x[0]);
        let r = assemble_residual(&op, &mesh, &exact, &Source::linear(1), None).unwrap();
        assert!(norm2(&r) < 1e-12, "{}", norm2(&r));
    }

    #[test]
    fn linear_solve_matches_closed_form() {
        let op = parse_operator("linear:1", 1).unwrap();
        let mesh = dirichlet(64);
        let res = solve_dirichlet(&op, &mesh, &Source::linear(1), None, &SolverSettings::default()).unwrap();
        assert!((res.u.eval_at(&Vector::new(0.5, 0.0)).unwrap() + 0.125).abs() < 1e-12);
        assert!(res.energy_identity_gap <= 10.0 * 1e-10 * (1.0 + norm2(res.u.coefficients())));
    }

    #[test]
    fn zero_source_gives_zero_solution() {
        for name in ["plaplace:3", "exp:1", "varexp"] {
            let op = parse_operator(name, 1).unwrap();
            let res = solve_dirichlet(&op, &dirichlet(16), &Source::zero(1), Some(0.25), &SolverSettings::default()).unwrap();
            assert!(res.u.coefficients().iter().all(|v| *v == 0.0), "{name}");
        }
    }

    #[test]
    fn plaplace_matches_bvp_oracle() {
        let op = parse_operator("plaplace:3", 1).unwrap();
        let oracle = plap3_oracle_at_half();
        let mut errs = Vec::new();
        for n in [32, 64, 128] {
            let res = solve_dirichlet(&op, &dirichlet(n), &Source::linear(1), None, &SolverSettings::default()).unwrap();
            errs.push((res.u.eval_at(&Vector::new(0.5, 0.0)).unwrap() - oracle).abs());
        }
        assert!(errs[2] < 1e-4, "{errs:?}");
        assert!(errs[0] >= errs[1] && errs[1] >= errs[2], "{errs:?}");
    }

    #[test]
    fn fd_jacobian_mode_converges_too() {
        let op = parse_operator("plaplace:3,1,16", 1).unwrap();
        let settings = SolverSettings { jacobian_mode: JacobianMode::FiniteDifference, ..Default::default() };
        let a = solve_dirichlet(&op, &dirichlet(64), &Source::linear(1), Some(0.25), &settings).unwrap();
        let b = solve_dirichlet(&op, &dirichlet(64), &Source::linear(1), Some(0.25), &SolverSettings::default()).unwrap();
        assert!(nodal_max_diff(&a.u, &b.u) < 1e-8);
    }

    #[test]
    fn picard_fallback_converges_when_newton_is_capped() {
        let op = parse_operator("plaplace:3", 1).unwrap();
        let settings = SolverSettings { max_newton: 1, ..Default::default() };
        let res = solve_dirichlet(&op, &dirichlet(32), &Source::linear(1), None, &settings).unwrap();
        assert_eq!(res.method, SolveMethod::Picard);
        let reference = solve_dirichlet(&op, &dirichlet(32), &Source::linear(1), None, &SolverSettings::default()).unwrap();
        assert!(nodal_max_diff(&res.u, &reference.u) < 1e-8);
    }

    #[test]
    fn nonconvergence_reports_history() {
        let op = parse_operator("fixture:nonmonotone", 1).unwrap();
        let settings = SolverSettings { max_newton: 3, max_picard: 3, ..Default::default() };
        match solve_dirichlet(&op, &dirichlet(8), &Source::linear(1), None, &settings) {
            Err(Error::NonConvergence { history, .. }) => assert!(!history.is_empty()),
            other => {
                // A = -ξ is linear, so Newton may land on the (unstable) root
                let res = other.unwrap();
                assert!(res.final_residual <= settings.residual_tol);
            }
        }
    }

    #[test]
    fn dual_examples() {
        let op = parse_operator("linear:1", 1).unwrap();
        let mesh = dirichlet(32);
        let d = solve_dual_1d(&op, &mesh, &Source::linear(1), &SolverSettings::default()).unwrap();
        assert!((d.t + 0.5).abs() < 1e-12);
        for (c, g) in d.gradients.iter().enumerate() {
            let xc = mesh.centroid(c)[0];
            assert!((g - (xc - 0.5)).abs() < 1e-12);
        }
        let z = solve_dual_1d(&op, &mesh, &Source::zero(1), &SolverSettings::default()).unwrap();
        assert_eq!(z.t, 0.0);
        assert!(z.u_from_dual.coefficients().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dual_agrees_with_primal() {
        let op = parse_operator("plaplace:3", 1).unwrap();
        let mesh = dirichlet(128);
        let s = SolverSettings::default();
        let primal = solve_dirichlet(&op, &mesh, &Source::linear(1), None, &s).unwrap();
        let dual = solve_dual_1d(&op, &mesh, &Source::linear(1), &s).unwrap();
        assert!(nodal_max_diff(&primal.u, &dual.u_from_dual) < 1e-6);
        assert!(primal_dual_l1(&primal.u, &dual) < 1e-6);
        assert!(dual.closure_gap < 1e-10);
    }

    #[test]
    fn source_specs() {
        assert!(Source::parse("const:x", 1, None).is_err());
        assert!(Source::parse("cubic", 1, None).is_err());
        assert_eq!(Source::parse("const:2", 2, None).unwrap().eval(&Vector::zeros()), Vector::new(2.0, 2.0));
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        std::fs::write(&path, "x,F\n0,0\n0.5,1\n1,0\n").unwrap();
        let f = Source::parse("table:f.csv", 1, Some(dir.path())).unwrap();
        assert!((f.eval(&Vector::new(0.25, 0.0))[0] - 0.5).abs() < 1e-15);
        std::fs::write(&path, "x,F\n0,0\n0.5,1\n").unwrap();
        assert!(Source::parse("table:f.csv", 1, Some(dir.path())).is_err());
    }

    #[test]
    fn apriori_bound_holds_for_plaplace() {
        let op = parse_operator("plaplace:3,1,16", 1).unwrap();
        let source = Source::linear(1);
        for eps in [0.25, 0.125] {
            let res = solve_dirichlet(&op, &dirichlet(64), &source, Some(eps), &SolverSettings::default()).unwrap();
            let check = apriori_check(&res, &op, &source, 1.0).unwrap();
            assert!(check.holds(0.05), "{check:?}");
        }
    }
}
