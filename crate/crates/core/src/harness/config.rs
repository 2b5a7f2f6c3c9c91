use std::path::{Path, PathBuf};

use ini::Ini;

use crate::error::{Error, Result};
use crate::grid::{linspace, TensorGrid};
use crate::msolve::{SolverSettings, Source};
use crate::nfunc::{parse_nfunction, NFunction};
use crate::opcat::{parse_operator, JacobianMode, MonotoneOperator};

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemConfig {
    pub dim: usize,
    pub operator: String,
    /// Defaults to the operator's associated N-function.
    pub nfunction: Option<String>,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeshConfig {
    /// Fine-scale mesh rule h = ε / ratio.
    pub ratio: usize,
    /// Subdivisions per side of the periodic cell mesh.
    pub cell_n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableConfig {
    pub xi_min: f64,
    pub xi_max: f64,
    /// Grid points per axis.
    pub points: usize,
    /// Persisted table to load instead of tabulating.
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    pub mesh: MeshConfig,
    pub solver: SolverSettings,
    /// Strictly decreasing reciprocals of integers.
    pub eps: Vec<f64>,
    pub seed: u64,
    /// Corrector probe coordinates (1D).
    pub probes: Vec<f64>,
    pub table: TableConfig,
    pub output: PathBuf,
    /// Directory that relative paths in the file resolve against.
    pub base_dir: Option<PathBuf>,
    pub nested: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::default_for(1)
    }
}

impl ExperimentConfig {
    /// Linear laminate a ∈ {1, 3} with F(x) = x.
    pub fn default_for(dim: usize) -> Self {
        Self {
            problem: ProblemConfig { dim, operator: "linear:1,3".into(), nfunction: None, source: "linear".into() },
            mesh: MeshConfig { ratio: if dim == 1 { 32 } else { 8 }, cell_n: if dim == 1 { 256 } else { 16 } },
            solver: SolverSettings::default(),
            eps: vec![0.25, 0.125, 0.0625],
            seed: 1,
            probes: vec![0.1, 0.2, 0.35, 0.65, 0.85],
            table: TableConfig { xi_min: -2.0, xi_max: 2.0, points: if dim == 1 { 81 } else { 21 }, file: None },
            output: PathBuf::from("out"),
            base_dir: None,
            nested: false,
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_ini_str(&text, path.parent().map(Path::to_path_buf)).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn from_ini_str(text: &str, base_dir: Option<PathBuf>) -> Result<Self> {
        let ini = Ini::load_from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let dim = match ini.section(Some("problem")).and_then(|s| s.get("dim")) {
            Some(v) => parse_num::<usize>("problem", "dim", v)?,
            None => 1,
        };
        let mut cfg = Self::default_for(dim);
        cfg.base_dir = base_dir;
        for (section, props) in ini.iter() {
            let section = section.unwrap_or("");
            for (key, value) in props.iter() {
                let value = value.trim();
                match (section, key) {
                    ("problem", "dim") => {}
                    ("problem", "operator") => cfg.problem.operator = value.into(),
                    ("problem", "nfunction") => cfg.problem.nfunction = Some(value.into()),
                    ("problem", "source") => cfg.problem.source = value.into(),
                    ("mesh", "ratio") => cfg.mesh.ratio = parse_num(section, key, value)?,
                    ("mesh", "cell_n") => cfg.mesh.cell_n = parse_num(section, key, value)?,
                    ("solver", "residual_tol") => cfg.solver.residual_tol = parse_num(section, key, value)?,
                    ("solver", "max_newton") => cfg.solver.max_newton = parse_num(section, key, value)?,
                    ("solver", "max_backtracks") => cfg.solver.max_backtracks = parse_num(section, key, value)?,
                    ("solver", "max_picard") => cfg.solver.max_picard = parse_num(section, key, value)?,
                    ("solver", "picard_relaxation") => cfg.solver.picard_relaxation = parse_num(section, key, value)?,
                    ("solver", "quad_order") => cfg.solver.quad_order = parse_num(section, key, value)?,
                    ("solver", "jacobian") => {
                        cfg.solver.jacobian_mode = match value {
                            "analytic" => JacobianMode::Analytic,
                            "finite_difference" | "fd" => JacobianMode::FiniteDifference,
                            _ => return Err(Error::Config(format!("[solver] jacobian must be analytic or finite_difference, got `{value}`"))),
                        }
                    }
                    ("sweep", "eps") => cfg.eps = parse_eps_list(value)?,
                    ("sweep", "seed") => cfg.seed = parse_num(section, key, value)?,
                    ("sweep", "probes") => cfg.probes = parse_list(section, key, value)?,
                    ("table", "xi_min") => cfg.table.xi_min = parse_num(section, key, value)?,
                    ("table", "xi_max") => cfg.table.xi_max = parse_num(section, key, value)?,
                    ("table", "points") => cfg.table.points = parse_num(section, key, value)?,
                    ("table", "file") => cfg.table.file = Some(PathBuf::from(value)),
                    ("table", "nested") => cfg.nested = parse_num(section, key, value)?,
                    ("output", "dir") => cfg.output = PathBuf::from(value),
                    _ => return Err(Error::Config(format!("unknown key `{key}` in section [{section}]"))),
                }
            }
        }
        if let Some(base) = &cfg.base_dir {
            if cfg.output.is_relative() {
                cfg.output = base.join(&cfg.output);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg_err = |m: String| Err(Error::Config(m));
        if !(1..=2).contains(&self.problem.dim) {
            return cfg_err(format!("dim must be 1 or 2, got {}", self.problem.dim));
        }
        if self.eps.is_empty() {
            return cfg_err("eps list is empty".into());
        }
        if self.eps.windows(2).any(|w| w[1] >= w[0]) {
            return cfg_err(format!("eps list {:?} must be strictly decreasing", self.eps));
        }
        for &e in &self.eps {
            if !(e > 0.0 && e <= 1.0) || !crate::unfold::is_commensurate(e) {
                return cfg_err(format!("eps {e} is not the reciprocal of a positive integer"));
            }
        }
        if self.mesh.ratio < 2 {
            return cfg_err(format!("mesh ratio must be at least 2, got {}", self.mesh.ratio));
        }
        if self.mesh.cell_n < 2 {
            return cfg_err(format!("cell_n must be at least 2, got {}", self.mesh.cell_n));
        }
        if !(self.table.xi_min < self.table.xi_max) && self.table.points > 1 {
            return cfg_err("table xi_min must be below xi_max".into());
        }
        if self.table.points == 0 {
            return cfg_err("table needs at least one point".into());
        }
        self.solver.validate()?;
        let op = self.operator()?;
        for s in op.interfaces() {
            for n in [self.mesh.ratio, self.mesh.cell_n] {
                let t = s * n as f64;
                if (t - t.round()).abs() > 1e-9 {
                    return cfg_err(format!("{n} subdivisions do not resolve interface {s}"));
                }
            }
        }
        self.nfunction()?;
        if self.probes.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return cfg_err("probes must lie in (0,1)".into());
        }
        self.source_checked()?;
        Ok(())
    }

    fn source_checked(&self) -> Result<Source> {
        Source::parse(&self.problem.source, self.problem.dim, self.base_dir.as_deref()).map_err(|e| match e {
            Error::Config(m) => Error::Config(m),
            other => Error::Config(other.to_string()),
        })
    }

    pub fn operator(&self) -> Result<MonotoneOperator> {
        parse_operator(&self.problem.operator, self.problem.dim).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn nfunction(&self) -> Result<NFunction> {
        match &self.problem.nfunction {
            Some(name) => parse_nfunction(name, self.problem.dim).map_err(|e| Error::Config(e.to_string())),
            None => Ok(self.operator()?.nfunction().clone()),
        }
    }

    pub fn source(&self) -> Result<Source> {
        self.source_checked()
    }

    pub fn xi_grid(&self) -> Result<TensorGrid> {
        let axis = if self.table.points == 1 {
            vec![0.0]
        } else {
            linspace(self.table.xi_min, self.table.xi_max, self.table.points)
        };
        TensorGrid::new(vec![axis; self.problem.dim])
    }

    /// Fine-scale subdivisions per side for a given ε.
    pub fn fine_n(&self, eps: f64) -> usize {
        (self.mesh.ratio as f64 / eps).round() as usize
    }

    pub fn table_file(&self) -> Option<PathBuf> {
        self.table.file.as_ref().map(|f| match &self.base_dir {
            Some(b) if f.is_relative() => b.join(f),
            _ => f.clone(),
        })
    }
}

fn parse_num<T: std::str::FromStr>(section: &str, key: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::Config(format!("[{section}] {key}: cannot parse `{value}`")))
}

fn parse_list(section: &str, key: &str, value: &str) -> Result<Vec<f64>> {
    value.split(',').filter(|t| !t.trim().is_empty()).map(|t| parse_num(section, key, t)).collect()
}

/// Parses `1/4, 1/8, 0.0625` style lists.
pub fn parse_eps_list(value: &str) -> Result<Vec<f64>> {
    value
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let t = t.trim();
            let v = match t.split_once('/') {
                Some((a, b)) => {
                    let a: f64 = parse_num("sweep", "eps", a)?;
                    let b: f64 = parse_num("sweep", "eps", b)?;
                    a / b
                }
                None => parse_num("sweep", "eps", t)?,
            };
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(Error::Config(format!("eps entry `{t}` must be positive")))
            }
        })
        .collect()
}
