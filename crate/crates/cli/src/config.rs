//! Config file schemas and the translation into core problem objects.
//!
//! A run config points at a mesh file and a coefficient file; both are TOML.
//! Mesh file keys: `kind` (interval | radial | rectangle) plus the kind's
//! geometry fields and boundary classes. Coefficient file: `sigma`, `tau`,
//! one block per coefficient (`constant`, optional `r_power`, `bump`, or a
//! per-node `values` table; present parts are summed) and a `[[g]]` list of
//! (coefficient, exponent) terms.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use lichsolve_core::fields::PowerTerm;
use lichsolve_core::mesh::{
    build_exhaustion, build_interval_mesh, build_radial_mesh, build_rectangle_mesh,
    Exhaustion, GrowthPolicy,
};
use lichsolve_core::{
    BoundaryClass, BoundaryNonlinearity, DiscreteDomain, Exponents, ProblemSpec, ScalarField,
};
use serde::Deserialize;

#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<lichsolve_core::CoreError> for CliError {
    fn from(e: lichsolve_core::CoreError) -> Self {
        use lichsolve_core::CoreError::*;
        let code = match &e {
            InvalidArgument(_) | DomainError { .. } => 2,
            NumericError(_) => 3,
            HypothesisFailure { .. } => 4,
            ConstructionFailure { .. } => 5,
            SchemeFailure { .. } | Nonconvergence { .. } => 6,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub const REPORT_VERSION: &str = "lichsolve-report/1";

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: Option<String>,
    pub mesh: PathBuf,
    pub coefficients: PathBuf,
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub solver: SolverConfig,
    /// resolved at load time; not part of the file
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    /// a number, or the string "auto"
    pub theta: Option<toml::Value>,
    /// exhaustion member count; 1 means a direct solve
    pub exhaustion: Option<usize>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol: None,
            max_iter: None,
            theta: None,
            exhaustion: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ThetaChoice {
    Auto,
    Fixed(f64),
}

impl SolverConfig {
    pub fn theta_choice(&self) -> CliResult<ThetaChoice> {
        match &self.theta {
            None => Ok(ThetaChoice::Fixed(1.0)),
            Some(toml::Value::String(s)) if s == "auto" => Ok(ThetaChoice::Auto),
            Some(toml::Value::Float(x)) => Ok(ThetaChoice::Fixed(*x)),
            Some(toml::Value::Integer(x)) => Ok(ThetaChoice::Fixed(*x as f64)),
            Some(other) => Err(CliError::config(format!(
                "solver.theta must be a number or \"auto\", got {other}"
            ))),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshFile {
    kind: String,
    n: Option<usize>,
    length: Option<f64>,
    left: Option<String>,
    right: Option<String>,
    r0: Option<f64>,
    r_outer: Option<f64>,
    m: Option<usize>,
    warp: Option<toml::Value>,
    lx: Option<f64>,
    ly: Option<f64>,
    nx: Option<usize>,
    ny: Option<usize>,
    sides: Option<Vec<String>>,
}

#[derive(Debug, Deserialize, Default, Clone)]
#[serde(deny_unknown_fields)]
struct CoeffSpec {
    constant: Option<f64>,
    r_power: Option<RPower>,
    bump: Option<Bump>,
    values: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct RPower {
    scale: f64,
    power: f64,
}

/// Additive indicator bump: `height` on `|r - center| < halfwidth`.
#[derive(Debug, Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct Bump {
    center: f64,
    halfwidth: f64,
    height: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GTerm {
    coeff: f64,
    exponent: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoeffFile {
    sigma: f64,
    tau: f64,
    theta: Option<f64>,
    a: Option<CoeffSpec>,
    b: Option<CoeffSpec>,
    c: Option<CoeffSpec>,
    #[serde(default)]
    g: Vec<GTerm>,
}

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| {
        // toml errors carry line/column spans in their display form
        CliError::config(format!("parse error in {}: {e}", path.display()))
    })
}

pub fn load_run_config(path: &Path) -> CliResult<RunConfig> {
    let mut cfg: RunConfig = read_toml(path)?;
    cfg.base_dir = path
        .parent()
        .map(Path::to_path_buf)
        .unwrap_or_else(|| PathBuf::from("."));
    if let Some(v) = &cfg.version {
        if v != "1" {
            return Err(CliError::config(format!("unsupported config version {v}")));
        }
    }
    if let Some(t) = cfg.solver.tol {
        if !(t > 0.0) {
            return Err(CliError::config("solver.tol must be positive"));
        }
    }
    if let Some(c) = cfg.solver.exhaustion {
        if c < 1 {
            return Err(CliError::config("solver.exhaustion must be >= 1"));
        }
    }
    Ok(cfg)
}

fn boundary_class(s: &str) -> CliResult<BoundaryClass> {
    match s {
        "dirichlet" => Ok(BoundaryClass::Boundary0),
        "neumann" => Ok(BoundaryClass::Boundary1),
        other => Err(CliError::config(format!(
            "boundary class must be dirichlet or neumann, got {other}"
        ))),
    }
}

fn build_warp(v: &Option<toml::Value>) -> CliResult<Box<dyn Fn(f64) -> f64>> {
    match v {
        None => Ok(Box::new(|r| r)),
        Some(toml::Value::String(s)) => match s.as_str() {
            "one" => Ok(Box::new(|_| 1.0)),
            "r" => Ok(Box::new(|r| r)),
            other => Err(CliError::config(format!("unknown warp profile {other}"))),
        },
        Some(toml::Value::Array(rows)) => {
            let mut table: Vec<(f64, f64)> = Vec::new();
            for row in rows {
                let pair = row.as_array().filter(|p| p.len() == 2).ok_or_else(|| {
                    CliError::config("warp table rows must be [r, value] pairs")
                })?;
                let r = pair[0].as_float().or(pair[0].as_integer().map(|i| i as f64));
                let w = pair[1].as_float().or(pair[1].as_integer().map(|i| i as f64));
                match (r, w) {
                    (Some(r), Some(w)) => table.push((r, w)),
                    _ => return Err(CliError::config("warp table entries must be numbers")),
                }
            }
            if table.len() < 2 || table.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(CliError::config(
                    "warp table needs at least 2 rows with strictly increasing r",
                ));
            }
            Ok(Box::new(move |r| {
                // linear interpolation, clamped at the ends
                if r <= table[0].0 {
                    return table[0].1;
                }
                if r >= table[table.len() - 1].0 {
                    return table[table.len() - 1].1;
                }
                let k = table.partition_point(|&(x, _)| x <= r) - 1;
                let (r0, w0) = table[k];
                let (r1, w1) = table[k + 1];
                w0 + (w1 - w0) * (r - r0) / (r1 - r0)
            }))
        }
        Some(other) => Err(CliError::config(format!(
            "warp must be a profile name or a table, got {other}"
        ))),
    }
}

pub fn build_mesh(cfg: &RunConfig) -> CliResult<Arc<DiscreteDomain>> {
    let path = cfg.base_dir.join(&cfg.mesh);
    let mf: MeshFile = read_toml(&path)?;
    let need = |opt: Option<f64>, name: &str| {
        opt.ok_or_else(|| CliError::config(format!("mesh key {name} required for kind {}", mf.kind)))
    };
    let need_n = |opt: Option<usize>, name: &str| {
        opt.ok_or_else(|| CliError::config(format!("mesh key {name} required for kind {}", mf.kind)))
    };
    let d = match mf.kind.as_str() {
        "interval" => {
            let n = need_n(mf.n, "n")?;
            let length = mf.length.unwrap_or(1.0);
            let left = boundary_class(mf.left.as_deref().unwrap_or("neumann"))?;
            let right = boundary_class(mf.right.as_deref().unwrap_or("neumann"))?;
            build_interval_mesh(length, n, left, right)?
        }
        "radial" => {
            let n = need_n(mf.n, "n")?;
            let r0 = need(mf.r0, "r0")?;
            let r_outer = need(mf.r_outer, "r_outer")?;
            let m = mf.m.unwrap_or(3);
            let warp = build_warp(&mf.warp)?;
            build_radial_mesh(r0, r_outer, n, &*warp, m)?
        }
        "rectangle" => {
            let nx = need_n(mf.nx, "nx")?;
            let ny = need_n(mf.ny, "ny")?;
            let lx = mf.lx.unwrap_or(1.0);
            let ly = mf.ly.unwrap_or(1.0);
            let names = mf
                .sides
                .clone()
                .unwrap_or_else(|| vec!["dirichlet".into(); 4]);
            if names.len() != 4 {
                return Err(CliError::config("rectangle sides must list 4 classes"));
            }
            let mut sides = [BoundaryClass::Boundary0; 4];
            for (k, s) in names.iter().enumerate() {
                sides[k] = boundary_class(s)?;
            }
            build_rectangle_mesh(lx, ly, nx, ny, sides)?
        }
        other => return Err(CliError::config(format!("unknown mesh kind {other}"))),
    };
    Ok(Arc::new(d))
}

fn build_field(d: &Arc<DiscreteDomain>, spec: &CoeffSpec, name: &str) -> CliResult<ScalarField> {
    if let Some(values) = &spec.values {
        if values.len() != d.node_count() {
            return Err(CliError::config(format!(
                "coefficient {name}: {} values for {} nodes",
                values.len(),
                d.node_count()
            )));
        }
        if spec.constant.is_some() || spec.r_power.is_some() || spec.bump.is_some() {
            return Err(CliError::config(format!(
                "coefficient {name}: per-node values exclude other parts"
            )));
        }
        return Ok(ScalarField::new(d, values.clone())?);
    }
    let base = spec.constant.unwrap_or(0.0);
    let rp = spec.r_power.clone();
    let bump = spec.bump.clone();
    if rp.is_some() || bump.is_some() {
        let mut out = Vec::with_capacity(d.node_count());
        for i in 0..d.node_count() {
            let r = d.radius(i).ok_or_else(|| {
                CliError::config(format!("coefficient {name}: radial profile needs coordinates"))
            })?;
            let mut v = base;
            if let Some(rp) = &rp {
                v += rp.scale * r.powf(rp.power);
            }
            if let Some(b) = &bump {
                if (r - b.center).abs() < b.halfwidth {
                    v += b.height;
                }
            }
            out.push(v);
        }
        Ok(ScalarField::new(d, out)?)
    } else {
        Ok(ScalarField::constant(d, base))
    }
}

pub fn build_spec(cfg: &RunConfig, d: &Arc<DiscreteDomain>) -> CliResult<ProblemSpec> {
    let path = cfg.base_dir.join(&cfg.coefficients);
    let cf: CoeffFile = read_toml(&path)?;
    let exponents = Exponents::new(cf.sigma, cf.tau)?;
    let a = build_field(d, &cf.a.clone().unwrap_or_default(), "a")?;
    let b = build_field(d, &cf.b.clone().unwrap_or_default(), "b")?;
    let c = build_field(d, &cf.c.clone().unwrap_or_default(), "c")?;
    let mut terms: Vec<PowerTerm> = cf
        .g
        .iter()
        .map(|t| PowerTerm {
            coeff: ScalarField::constant(d, t.coeff),
            exponent: t.exponent,
        })
        .collect();
    terms.sort_by(|x, y| x.exponent.total_cmp(&y.exponent));
    let g = BoundaryNonlinearity::power_sum(terms)?;
    let theta = cf.theta.unwrap_or(1.0);
    Ok(ProblemSpec::new(d.clone(), a, b, c, exponents, theta, g)?)
}

pub fn build_exhaustion_from(
    cfg: &RunConfig,
    d: &Arc<DiscreteDomain>,
) -> CliResult<Exhaustion> {
    let count = cfg.solver.exhaustion.unwrap_or(4).max(2);
    Ok(build_exhaustion(d, count, GrowthPolicy::UniformRadius)?)
}
