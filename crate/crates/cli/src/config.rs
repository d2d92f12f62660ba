//! Run configuration.
//!
//! Line-oriented `key = value` text with `[section]` headers and `#`
//! comments. Keys before the first header belong to `[problem]`. Overrides
//! from the command line use `section.key=value` (a bare key means
//! `problem.key`) and replace file values.
//!
//! ```text
//! [problem]
//! kind = taylor_green      # taylor_green | step_channel | cylinder | custom
//! scheme = modular         # plain | monolithic | modular
//! gamma = 1
//! beta = 0.2
//! re = 100                 # or nu
//! tau = 100                # taylor_green only
//! omega = 1                # taylor_green only
//! dt = 0.0625
//! t_final = 1
//! m = 16                   # or mesh = path/to/file.msh
//! h = 0.5                  # step_channel grid spacing
//! start = stokes           # step_channel: stokes | rest
//!
//! [solver]
//! linear = gmres           # gmres | direct
//! preconditioner = ilu0    # ilu0 | jacobi | none
//! tol = 1e-8
//! restart = 200
//! max_iters = 2000
//!
//! [output]
//! dir = out
//! snapshot_stride = 0      # 0 disables VTK snapshots
//!
//! [convergence]
//! m_list = 16, 24, 32
//!
//! [sweep]
//! schemes = monolithic, modular
//! gammas = 0, 0.2, 2, 20, 200, 2000, 20000
//! betas = 0
//! stop_on_failure = true
//! parallel = false
//!
//! [boundary]               # custom only: constant velocity per tag
//! lid = 1, 0
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use mgd_bench::ChannelStart;
use mgd_core::linalg::GmresOptions;
use mgd_core::stepper::{LinearSolver, PreconditionerKind, Scheme, SolverSettings, StabilizationParams};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("{key}: {reason}")]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

impl ConfigError {
    pub fn new(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

const KNOWN_KEYS: &[&str] = &[
    "problem.kind",
    "problem.scheme",
    "problem.gamma",
    "problem.beta",
    "problem.nu",
    "problem.re",
    "problem.tau",
    "problem.omega",
    "problem.dt",
    "problem.t_final",
    "problem.m",
    "problem.mesh",
    "problem.h",
    "problem.start",
    "solver.linear",
    "solver.preconditioner",
    "solver.tol",
    "solver.restart",
    "solver.max_iters",
    "output.dir",
    "output.snapshot_stride",
    "convergence.m_list",
    "sweep.schemes",
    "sweep.gammas",
    "sweep.betas",
    "sweep.stop_on_failure",
    "sweep.parallel",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Problem {
    TaylorGreen,
    StepChannel,
    Cylinder,
    Custom,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::TaylorGreen => "taylor_green",
            Problem::StepChannel => "step_channel",
            Problem::Cylinder => "cylinder",
            Problem::Custom => "custom",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Problem::TaylorGreen, Problem::StepChannel, Problem::Cylinder, Problem::Custom]
            .into_iter()
            .find(|p| p.name() == s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    UnitSquare(usize),
    File(PathBuf),
    /// The problem's own generator (step channel grid, cylinder O-grid).
    Builtin,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub problem: Problem,
    pub scheme: Scheme,
    pub params: StabilizationParams,
    pub nu: f64,
    pub tau: f64,
    pub omega: f64,
    /// `None` only when no mesh source fixes a default.
    pub dt: Option<f64>,
    pub t_final: f64,
    /// `None` when neither `m` nor `mesh` is given for a problem that needs one.
    pub mesh: Option<MeshSource>,
    pub channel_h: f64,
    pub start: ChannelStart,
    pub solver: SolverSettings,
    pub out_dir: PathBuf,
    pub snapshot_stride: usize,
    pub m_list: Vec<usize>,
    pub sweep_schemes: Vec<Scheme>,
    pub sweep_gammas: Vec<f64>,
    pub sweep_betas: Vec<f64>,
    pub stop_on_failure: bool,
    pub parallel: bool,
    /// Constant Dirichlet velocity per tag; unspecified tags are no-slip.
    pub boundary: BTreeMap<String, [f64; 2]>,
}

impl Config {
    pub fn mesh_source(&self) -> Result<&MeshSource, ConfigError> {
        self.mesh
            .as_ref()
            .ok_or_else(|| ConfigError::new("problem.m", "a mesh source (m or mesh) is required"))
    }

    pub fn time_step(&self) -> Result<f64, ConfigError> {
        self.dt.ok_or_else(|| ConfigError::new("problem.dt", "required when the mesh is read from a file"))
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    origin: String,
}

type Entries = BTreeMap<String, Entry>;

fn qualify(section: &str, key: &str) -> String {
    if key.contains('.') {
        key.to_string()
    } else {
        format!("{section}.{key}")
    }
}

fn parse_text(text: &str, entries: &mut Entries) -> Result<(), ConfigError> {
    let mut section = "problem".to_string();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        let origin = format!("line {}", i + 1);
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::new(&origin, "unterminated section header"))?
                .trim();
            if name.is_empty() || name.contains('.') {
                return Err(ConfigError::new(&origin, format!("bad section name {name:?}")));
            }
            section = name.to_string();
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::new(&origin, "expected `key = value`"))?;
        let key = k.trim();
        if key.is_empty() || key.contains('.') {
            return Err(ConfigError::new(&origin, format!("bad key {key:?}")));
        }
        let key = qualify(&section, key);
        let entry = Entry {
            value: v.trim().to_string(),
            origin: origin.clone(),
        };
        if let Some(prev) = entries.insert(key.clone(), entry) {
            return Err(ConfigError::new(key, format!("duplicate (first set on {})", prev.origin)));
        }
    }
    Ok(())
}

fn apply_override(spec: &str, entries: &mut Entries) -> Result<(), ConfigError> {
    let (k, v) = spec
        .split_once('=')
        .ok_or_else(|| ConfigError::new(spec, "override must be `key=value`"))?;
    let key = qualify("problem", k.trim());
    entries.insert(
        key,
        Entry {
            value: v.trim().to_string(),
            origin: "--set".into(),
        },
    );
    Ok(())
}

struct Reader {
    entries: Entries,
}

impl Reader {
    fn raw(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|e| e.value.as_str())
    }

    fn has(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn f64(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.raw(key)
            .map(|v| {
                v.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| ConfigError::new(key, format!("expected a number, got {v:?}")))
            })
            .transpose()
    }

    fn positive(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.f64(key)?.unwrap_or(default);
        if v > 0.0 {
            Ok(v)
        } else {
            Err(ConfigError::new(key, format!("must be positive, got {v}")))
        }
    }

    fn non_negative(&self, key: &str, default: f64) -> Result<f64, ConfigError> {
        let v = self.f64(key)?.unwrap_or(default);
        if v >= 0.0 {
            Ok(v)
        } else {
            Err(ConfigError::new(key, format!("must be non-negative, got {v}")))
        }
    }

    fn usize(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        self.raw(key)
            .map(|v| {
                v.parse::<usize>()
                    .map_err(|_| ConfigError::new(key, format!("expected a non-negative integer, got {v:?}")))
            })
            .transpose()
    }

    fn count(&self, key: &str, default: usize) -> Result<usize, ConfigError> {
        match self.usize(key)?.unwrap_or(default) {
            0 => Err(ConfigError::new(key, "must be at least 1")),
            n => Ok(n),
        }
    }

    fn bool(&self, key: &str, default: bool) -> Result<bool, ConfigError> {
        match self.raw(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(ConfigError::new(key, format!("expected true or false, got {v:?}"))),
        }
    }

    fn list<T>(&self, key: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Option<Vec<T>>, ConfigError> {
        let Some(v) = self.raw(key) else { return Ok(None) };
        let items: Option<Vec<T>> = v.split(',').map(|s| parse(s.trim())).collect();
        match items {
            Some(items) if !items.is_empty() => Ok(Some(items)),
            _ => Err(ConfigError::new(key, format!("bad list {v:?}"))),
        }
    }

    fn scheme(&self, key: &str, s: &str) -> Result<Scheme, ConfigError> {
        Scheme::parse(s).ok_or_else(|| ConfigError::new(key, format!("unknown scheme {s:?}")))
    }
}

fn nonneg_f64(s: &str) -> Option<f64> {
    s.parse::<f64>().ok().filter(|v| v.is_finite() && *v >= 0.0)
}

fn parse_velocity(key: &str, v: &str) -> Result<[f64; 2], ConfigError> {
    let parts: Vec<f64> = v
        .split(',')
        .map(|s| s.trim().parse::<f64>().ok().filter(|x| x.is_finite()))
        .collect::<Option<_>>()
        .ok_or_else(|| ConfigError::new(key, format!("expected `ux, uy`, got {v:?}")))?;
    match parts[..] {
        [ux, uy] => Ok([ux, uy]),
        _ => Err(ConfigError::new(key, format!("expected two components, got {}", parts.len()))),
    }
}

/// Builds a validated configuration from optional file text and overrides.
pub fn parse_config_str(text: Option<&str>, overrides: &[String]) -> Result<Config, ConfigError> {
    let mut entries = Entries::new();
    if let Some(text) = text {
        parse_text(text, &mut entries)?;
    }
    for o in overrides {
        apply_override(o, &mut entries)?;
    }
    for key in entries.keys() {
        if !key.starts_with("boundary.") && !KNOWN_KEYS.contains(&key.as_str()) {
            return Err(ConfigError::new(key, "unknown key"));
        }
    }
    build(Reader { entries })
}

/// Reads `path` (if any) and applies the overrides.
pub fn parse_config(path: Option<&Path>, overrides: &[String]) -> Result<Config, ConfigError> {
    let text = path
        .map(|p| fs::read_to_string(p).map_err(|e| ConfigError::new(p.display().to_string(), e.to_string())))
        .transpose()?;
    parse_config_str(text.as_deref(), overrides)
}

fn build(r: Reader) -> Result<Config, ConfigError> {
    let problem = match r.raw("problem.kind") {
        None => return Err(ConfigError::new("problem.kind", "required")),
        Some(s) => Problem::parse(s).ok_or_else(|| ConfigError::new("problem.kind", format!("unknown problem {s:?}")))?,
    };
    let scheme = match r.raw("problem.scheme") {
        Some(s) => r.scheme("problem.scheme", s)?,
        None => Scheme::Modular,
    };

    let only_for = |key: &str, allowed: bool| {
        if r.has(key) && !allowed {
            Err(ConfigError::new(key, format!("not used by the {} problem", problem.name())))
        } else {
            Ok(())
        }
    };
    only_for("problem.tau", problem == Problem::TaylorGreen)?;
    only_for("problem.omega", problem == Problem::TaylorGreen)?;
    only_for("problem.h", problem == Problem::StepChannel)?;
    only_for("problem.start", problem == Problem::StepChannel)?;
    only_for("problem.m", matches!(problem, Problem::TaylorGreen | Problem::Custom))?;
    if problem != Problem::Custom {
        if let Some(k) = r.entries.keys().find(|k| k.starts_with("boundary.")) {
            return Err(ConfigError::new(k, "boundary data is fixed by the problem"));
        }
    }

    let nu = match (r.has("problem.nu"), r.has("problem.re")) {
        (true, true) => return Err(ConfigError::new("problem.re", "give either nu or re, not both")),
        (true, false) => r.positive("problem.nu", 0.0)?,
        (false, true) => 1.0 / r.positive("problem.re", 0.0)?,
        (false, false) => match problem {
            Problem::TaylorGreen => 1.0 / 100.0,
            Problem::StepChannel => 1.0 / 600.0,
            Problem::Cylinder => 1e-3,
            Problem::Custom => return Err(ConfigError::new("problem.nu", "required (or re)")),
        },
    };

    let mesh = match (r.usize("problem.m")?, r.raw("problem.mesh")) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::new("problem.mesh", "ambiguous mesh source: both m and mesh are set"))
        }
        (Some(0), None) => return Err(ConfigError::new("problem.m", "must be at least 1")),
        (Some(m), None) => Some(MeshSource::UnitSquare(m)),
        (None, Some(p)) => {
            if problem == Problem::StepChannel && r.has("problem.h") {
                return Err(ConfigError::new("problem.mesh", "ambiguous mesh source: both h and mesh are set"));
            }
            Some(MeshSource::File(PathBuf::from(p)))
        }
        (None, None) => match problem {
            Problem::StepChannel | Problem::Cylinder => Some(MeshSource::Builtin),
            Problem::TaylorGreen | Problem::Custom => None,
        },
    };

    let (gamma_default, beta_default, dt_default, t_default) = match problem {
        Problem::TaylorGreen | Problem::Custom => {
            let dt = match &mesh {
                Some(MeshSource::UnitSquare(m)) => Some(1.0 / *m as f64),
                _ => None,
            };
            (1.0, 0.2, dt, Some(1.0))
        }
        Problem::StepChannel => (1.0, 0.0, Some(0.01), Some(40.0)),
        Problem::Cylinder => (5.0 * nu, 0.0, Some(1e-3), Some(8.0)),
    };
    let t_default = if problem == Problem::Custom { None } else { t_default };
    let params = StabilizationParams {
        gamma: r.non_negative("problem.gamma", gamma_default)?,
        beta: r.non_negative("problem.beta", beta_default)?,
    };
    let dt = match (r.f64("problem.dt")?, dt_default) {
        (Some(_), _) => Some(r.positive("problem.dt", 0.0)?),
        (None, d) => d,
    };
    let t_final = match t_default {
        Some(d) => r.positive("problem.t_final", d)?,
        None if r.has("problem.t_final") => r.positive("problem.t_final", 0.0)?,
        None => return Err(ConfigError::new("problem.t_final", "required")),
    };
    let start = match r.raw("problem.start") {
        None | Some("stokes") => ChannelStart::Stokes,
        Some("rest") => ChannelStart::Rest,
        Some(s) => return Err(ConfigError::new("problem.start", format!("expected stokes or rest, got {s:?}"))),
    };

    let preconditioner = match r.raw("solver.preconditioner") {
        None | Some("ilu0") => PreconditionerKind::Ilu0,
        Some("jacobi") => PreconditionerKind::Jacobi,
        Some("none") => PreconditionerKind::None,
        Some(s) => return Err(ConfigError::new("solver.preconditioner", format!("unknown preconditioner {s:?}"))),
    };
    let d = GmresOptions::default();
    let gmres = GmresOptions {
        restart: r.count("solver.restart", d.restart)?,
        tol: r.positive("solver.tol", d.tol)?,
        max_iters: r.count("solver.max_iters", d.max_iters)?,
    };
    let solver = match r.raw("solver.linear") {
        None | Some("gmres") => SolverSettings {
            linear: LinearSolver::Gmres(gmres),
            preconditioner,
        },
        Some("direct") => {
            if let Some(k) = ["solver.tol", "solver.restart", "solver.max_iters", "solver.preconditioner"]
                .into_iter()
                .find(|k| r.has(k))
            {
                return Err(ConfigError::new(k, "only used by the gmres solver"));
            }
            SolverSettings::direct()
        }
        Some(s) => return Err(ConfigError::new("solver.linear", format!("expected gmres or direct, got {s:?}"))),
    };

    let m_list = r
        .list("convergence.m_list", |s| s.parse::<usize>().ok().filter(|&m| m > 0))?
        .unwrap_or_else(|| vec![16, 24, 32]);
    if m_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ConfigError::new("convergence.m_list", "must be strictly ascending"));
    }
    let sweep_schemes = r
        .list("sweep.schemes", Scheme::parse)?
        .unwrap_or_else(|| vec![Scheme::Monolithic, Scheme::Modular]);
    let sweep_gammas = r
        .list("sweep.gammas", nonneg_f64)?
        .unwrap_or_else(|| vec![0.0, 0.2, 2.0, 20.0, 200.0, 2000.0, 20000.0]);
    let sweep_betas = r.list("sweep.betas", nonneg_f64)?.unwrap_or_else(|| vec![0.0]);

    let mut boundary = BTreeMap::new();
    for (k, e) in r.entries.iter().filter(|(k, _)| k.starts_with("boundary.")) {
        boundary.insert(k["boundary.".len()..].to_string(), parse_velocity(k, &e.value)?);
    }

    Ok(Config {
        problem,
        scheme,
        params,
        nu,
        tau: r.positive("problem.tau", 100.0)?,
        omega: r.positive("problem.omega", 1.0)?,
        dt,
        t_final,
        mesh,
        channel_h: r.positive("problem.h", 0.5)?,
        start,
        solver,
        out_dir: PathBuf::from(r.raw("output.dir").unwrap_or("out")),
        snapshot_stride: r.usize("output.snapshot_stride")?.unwrap_or(0),
        m_list,
        sweep_schemes,
        sweep_gammas,
        sweep_betas,
        stop_on_failure: r.bool("sweep.stop_on_failure", true)?,
        parallel: r.bool("sweep.parallel", false)?,
        boundary,
    })
}
