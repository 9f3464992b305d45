//! Benchmark configuration files.
//!
//! A configuration is a TOML document holding any number of `[[case]]`
//! tables. Each case names a model, optionally overrides its parameters and
//! lists the grid to sweep:
//!
//! ```toml
//! [[case]]
//! name = "advdiff1d"          # required, see `CaseKind`
//! n = 400                     # model parameters, all optional
//! nu = 0.025
//! t_end = 3.0
//! methods = ["expeuler"]      # expeuler exprb2 exprb3 rk2 rk3 rk4 cn reference
//! subdomains = [1, 2, 4, 5, 10, 20]
//! oracle = "fourier_exact"    # defaults per model
//! refresh = 5                 # steps between Jacobian rebuilds
//! phi_mode = "dense"          # or "krylov"
//! krylov_tol = 1e-10
//! krylov_m_max = 60
//! exterior = "frozen"         # or "zero"
//! reference_tol = 1e-9
//!
//! [[case.cell]]               # one row of a table: step target and buffer
//! courant = 1.0               # or `mu = ...` or `dt = ...`
//! buffer = 8
//! ```
//!
//! Model parameters and their defaults:
//!
//! | case             | keys (default)                                                        |
//! |------------------|-----------------------------------------------------------------------|
//! | `advdiff1d`      | `n` (400), `length` (10), `velocity` (1), `nu` (0.025), `t_end` (3)   |
//! | `schrodinger1d`  | `n` (400), `length` (10), `kappa` (10), `t_end` (1)                   |
//! | `fv_advection1d` | `n` (400), `length` (10), `velocity` (1), `t_end` (4)                 |
//! | `burgers1d`      | `n` (400), `length` (10), `nu` (0.05), `t_end` (5)                    |
//! | `porous1d`       | `n` (400), `length` (10), `m` (3), `amp` (1), `t0` (0.5), `t_end` (1) |
//! | `advdiff2d`      | `n` (64), `ny` (64), `length` (1), `height` (1), `omega` (2π), `nu` (1e-4), `t_end` (0.25) |
//! | `burgers2d`      | `n` (64), `ny` (64), `length` (1), `nu` (1e-3), `anisotropy` (10), `t_end` (0.25) |
//!
//! For `burgers2d` the vertical extent follows from `anisotropy = dx / dy`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use lem_core::expm::{KrylovSettings, PhiMode};
use lem_core::partition::ExteriorData;
use lem_core::steppers::{Method, DEFAULT_REFERENCE_TOL, DEFAULT_REFRESH};
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Deserialize)]
pub enum CaseKind {
    #[serde(rename = "advdiff1d")]
    AdvDiff1d,
    #[serde(rename = "schrodinger1d")]
    Schrodinger1d,
    #[serde(rename = "fv_advection1d")]
    FvAdvection1d,
    #[serde(rename = "burgers1d")]
    Burgers1d,
    #[serde(rename = "porous1d")]
    Porous1d,
    #[serde(rename = "advdiff2d")]
    AdvDiff2d,
    #[serde(rename = "burgers2d")]
    Burgers2d,
}

impl CaseKind {
    pub const ALL: [CaseKind; 7] =
        [Self::AdvDiff1d, Self::Schrodinger1d, Self::FvAdvection1d, Self::Burgers1d, Self::Porous1d, Self::AdvDiff2d, Self::Burgers2d];

    pub fn name(self) -> &'static str {
        match self {
            Self::AdvDiff1d => "advdiff1d",
            Self::Schrodinger1d => "schrodinger1d",
            Self::FvAdvection1d => "fv_advection1d",
            Self::Burgers1d => "burgers1d",
            Self::Porous1d => "porous1d",
            Self::AdvDiff2d => "advdiff2d",
            Self::Burgers2d => "burgers2d",
        }
    }

    pub fn is_2d(self) -> bool {
        matches!(self, Self::AdvDiff2d | Self::Burgers2d)
    }

    pub fn default_oracle(self) -> Oracle {
        match self {
            Self::AdvDiff1d => Oracle::FourierExact,
            Self::Porous1d => Oracle::BarenblattExact,
            Self::FvAdvection1d => Oracle::ExactTranslation,
            _ => Oracle::AdaptiveReference,
        }
    }

    fn default_method(self) -> Method {
        match self {
            Self::AdvDiff1d | Self::Schrodinger1d => Method::ExpEuler,
            _ => Method::ExpRB2,
        }
    }

    /// Model keys accepted for this case besides `t_end`.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Self::AdvDiff1d => &["n", "length", "velocity", "nu"],
            Self::Schrodinger1d => &["n", "length", "kappa"],
            Self::FvAdvection1d => &["n", "length", "velocity"],
            Self::Burgers1d => &["n", "length", "nu"],
            Self::Porous1d => &["n", "length", "m", "amp", "t0"],
            Self::AdvDiff2d => &["n", "ny", "length", "height", "omega", "nu"],
            Self::Burgers2d => &["n", "ny", "length", "nu", "anisotropy"],
        }
    }
}

impl fmt::Display for CaseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CaseKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| anyhow!("unknown case '{s}' (expected one of {})", Self::ALL.map(|k| k.name()).join(", ")))
    }
}

/// Where a case's error reference comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Oracle {
    /// Exact Fourier solution of the periodic advection-diffusion equation.
    FourierExact,
    /// Barenblatt self-similar solution.
    BarenblattExact,
    /// Adaptive embedded Runge-Kutta solution of the same semi-discretization
    /// (pseudospectral for the Schrödinger case).
    AdaptiveReference,
    /// Translated initial cell averages.
    ExactTranslation,
}

impl Oracle {
    fn supports(self, kind: CaseKind) -> bool {
        match self {
            Oracle::FourierExact => kind == CaseKind::AdvDiff1d,
            Oracle::BarenblattExact => kind == CaseKind::Porous1d,
            Oracle::ExactTranslation => kind == CaseKind::FvAdvection1d,
            Oracle::AdaptiveReference => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    /// Unknowns along x.
    pub n: usize,
    /// Unknowns along y, 2D cases only.
    pub ny: usize,
    pub length: f64,
    pub height: f64,
    pub velocity: f64,
    pub nu: f64,
    pub kappa: f64,
    pub m: f64,
    pub amp: f64,
    pub t0: f64,
    pub omega: f64,
    pub anisotropy: f64,
}

impl ModelParams {
    pub fn defaults(kind: CaseKind) -> Self {
        let mut p = Self {
            n: 400,
            ny: 0,
            length: 10.0,
            height: 0.0,
            velocity: 1.0,
            nu: 0.0,
            kappa: 10.0,
            m: 3.0,
            amp: 1.0,
            t0: 0.5,
            omega: 2.0 * std::f64::consts::PI,
            anisotropy: 1.0,
        };
        match kind {
            CaseKind::AdvDiff1d => p.nu = 0.025,
            CaseKind::Burgers1d => p.nu = 0.05,
            CaseKind::AdvDiff2d => {
                (p.n, p.ny, p.length, p.height, p.nu) = (64, 64, 1.0, 1.0, 1e-4);
            }
            CaseKind::Burgers2d => {
                (p.n, p.ny, p.length, p.nu, p.anisotropy) = (64, 64, 1.0, 1e-3, 10.0);
            }
            _ => {}
        }
        p
    }
}

pub fn default_t_end(kind: CaseKind) -> f64 {
    match kind {
        CaseKind::AdvDiff1d => 3.0,
        CaseKind::Schrodinger1d | CaseKind::Porous1d => 1.0,
        CaseKind::FvAdvection1d => 4.0,
        CaseKind::Burgers1d => 5.0,
        CaseKind::AdvDiff2d | CaseKind::Burgers2d => 0.25,
    }
}

/// How a cell's time step is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepTarget {
    Courant(f64),
    Mu(f64),
    Dt(f64),
}

/// One row of a results table: a time step target and a buffer width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cell {
    pub target: StepTarget,
    pub buffer: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchCase {
    pub kind: CaseKind,
    pub params: ModelParams,
    pub t_end: f64,
    pub oracle: Oracle,
    pub methods: Vec<Method>,
    pub subdomains: Vec<usize>,
    pub cells: Vec<Cell>,
    pub refresh: usize,
    pub phi_mode: PhiMode,
    pub krylov: KrylovSettings,
    pub exterior: ExteriorData,
    pub reference_tol: f64,
}

impl BenchCase {
    /// A case with every default filled in and an empty grid.
    pub fn new(kind: CaseKind) -> Self {
        Self {
            kind,
            params: ModelParams::defaults(kind),
            t_end: default_t_end(kind),
            oracle: kind.default_oracle(),
            methods: vec![kind.default_method()],
            subdomains: vec![1],
            cells: Vec::new(),
            refresh: DEFAULT_REFRESH,
            phi_mode: if kind.is_2d() { PhiMode::KrylovAction } else { PhiMode::DenseStored },
            krylov: KrylovSettings::default(),
            exterior: ExteriorData::Frozen,
            reference_tol: DEFAULT_REFERENCE_TOL,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    #[serde(default)]
    case: Vec<toml::Spanned<RawCase>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCase {
    name: CaseKind,
    n: Option<usize>,
    ny: Option<usize>,
    length: Option<f64>,
    height: Option<f64>,
    velocity: Option<f64>,
    nu: Option<f64>,
    kappa: Option<f64>,
    m: Option<f64>,
    amp: Option<f64>,
    t0: Option<f64>,
    omega: Option<f64>,
    anisotropy: Option<f64>,
    t_end: Option<f64>,
    oracle: Option<Oracle>,
    methods: Option<Vec<String>>,
    subdomains: Option<Vec<usize>>,
    refresh: Option<usize>,
    phi_mode: Option<String>,
    krylov_tol: Option<f64>,
    krylov_m_max: Option<usize>,
    exterior: Option<String>,
    reference_tol: Option<f64>,
    #[serde(default)]
    cell: Vec<RawCell>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCell {
    courant: Option<f64>,
    mu: Option<f64>,
    dt: Option<f64>,
    #[serde(default)]
    buffer: usize,
}

impl RawCase {
    fn given_keys(&self) -> Vec<&'static str> {
        let pairs: [(&'static str, bool); 12] = [
            ("n", self.n.is_some()),
            ("ny", self.ny.is_some()),
            ("length", self.length.is_some()),
            ("height", self.height.is_some()),
            ("velocity", self.velocity.is_some()),
            ("nu", self.nu.is_some()),
            ("kappa", self.kappa.is_some()),
            ("m", self.m.is_some()),
            ("amp", self.amp.is_some()),
            ("t0", self.t0.is_some()),
            ("omega", self.omega.is_some()),
            ("anisotropy", self.anisotropy.is_some()),
        ];
        pairs.into_iter().filter(|(_, given)| *given).map(|(k, _)| k).collect()
    }

    fn resolve(self) -> Result<BenchCase> {
        let kind = self.name;
        if let Some(key) = self.given_keys().into_iter().find(|k| !kind.keys().contains(k)) {
            bail!("key '{key}' does not apply to {kind}");
        }
        let mut case = BenchCase::new(kind);
        let p = &mut case.params;
        p.n = self.n.unwrap_or(p.n);
        p.ny = self.ny.unwrap_or(p.ny);
        p.length = self.length.unwrap_or(p.length);
        p.height = self.height.unwrap_or(p.height);
        p.velocity = self.velocity.unwrap_or(p.velocity);
        p.nu = self.nu.unwrap_or(p.nu);
        p.kappa = self.kappa.unwrap_or(p.kappa);
        p.m = self.m.unwrap_or(p.m);
        p.amp = self.amp.unwrap_or(p.amp);
        p.t0 = self.t0.unwrap_or(p.t0);
        p.omega = self.omega.unwrap_or(p.omega);
        p.anisotropy = self.anisotropy.unwrap_or(p.anisotropy);
        case.t_end = self.t_end.unwrap_or(case.t_end);
        if !(case.t_end > 0.0 && case.t_end.is_finite()) {
            bail!("t_end must be positive, got {}", case.t_end);
        }
        if let Some(oracle) = self.oracle {
            if !oracle.supports(kind) {
                bail!("oracle {oracle:?} is not available for {kind}");
            }
            case.oracle = oracle;
        }
        if let Some(methods) = self.methods {
            case.methods = methods.iter().map(|m| m.parse::<Method>()).collect::<Result<_, _>>()?;
        }
        if let Some(subdomains) = self.subdomains {
            if subdomains.contains(&0) {
                bail!("subdomain counts must be at least 1");
            }
            case.subdomains = subdomains;
        }
        if let Some(refresh) = self.refresh {
            if refresh == 0 {
                bail!("refresh must be at least 1");
            }
            case.refresh = refresh;
        }
        if let Some(mode) = self.phi_mode {
            case.phi_mode = match mode.as_str() {
                "dense" => PhiMode::DenseStored,
                "krylov" => PhiMode::KrylovAction,
                other => bail!("phi_mode must be \"dense\" or \"krylov\", got \"{other}\""),
            };
        }
        if let Some(tol) = self.krylov_tol {
            if !(tol > 0.0 && tol < 1.0) {
                bail!("krylov_tol must lie in (0, 1), got {tol}");
            }
            case.krylov.tol = tol;
        }
        if let Some(m) = self.krylov_m_max {
            if m == 0 {
                bail!("krylov_m_max must be at least 1");
            }
            case.krylov.m_max = m;
        }
        if let Some(exterior) = self.exterior {
            case.exterior = match exterior.as_str() {
                "frozen" => ExteriorData::Frozen,
                "zero" => ExteriorData::Zero,
                other => bail!("exterior must be \"frozen\" or \"zero\", got \"{other}\""),
            };
        }
        if let Some(tol) = self.reference_tol {
            if !(tol > 0.0 && tol <= 1e-6) {
                bail!("reference_tol must lie in (0, 1e-6], got {tol}");
            }
            case.reference_tol = tol;
        }
        case.cells = self.cell.into_iter().map(RawCell::resolve).collect::<Result<_>>()?;
        Ok(case)
    }
}

impl RawCell {
    fn resolve(self) -> Result<Cell> {
        let target = match (self.courant, self.mu, self.dt) {
            (Some(c), None, None) => StepTarget::Courant(c),
            (None, Some(mu), None) => StepTarget::Mu(mu),
            (None, None, Some(dt)) => StepTarget::Dt(dt),
            _ => bail!("each cell needs exactly one of courant, mu or dt"),
        };
        let value = match target {
            StepTarget::Courant(v) | StepTarget::Mu(v) | StepTarget::Dt(v) => v,
        };
        if !(value > 0.0 && value.is_finite()) {
            bail!("step target must be positive, got {value}");
        }
        Ok(Cell { target, buffer: self.buffer })
    }
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

/// Parses configuration text; errors carry the line of the offending case.
pub fn parse_config_str(source: &str) -> Result<Vec<BenchCase>> {
    let raw: RawFile = toml::from_str(source).map_err(|e| anyhow!("{e}"))?;
    raw.case
        .into_iter()
        .map(|spanned| {
            let line = line_of(source, spanned.span().start);
            spanned.into_inner().resolve().with_context(|| format!("case at line {line}"))
        })
        .collect()
}

pub fn parse_config(path: &Path) -> Result<Vec<BenchCase>> {
    let source = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_config_str(&source).with_context(|| format!("in {}", path.display()))
}
