//! Experiment configs: TOML files checked into a validated [`Experiment`].

use std::fmt;
use std::path::Path;

use fredlab_core::geometry::{ModalDomain, ModalFunction, ModeProfile};
use fredlab_core::halfline::LocalPotential;
use fredlab_core::lab::{NystromRule, SwapConfig};
use fredlab_core::potential::{make_potential, FiniteRankPotential};
use fredlab_core::Complex64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Environment variable overriding the built-in tolerance tiers, e.g.
/// `FREDLAB_TOLERANCES="exact=1e-9,oracle=1e-5"`. Values set in a config
/// file take precedence.
pub const TOLERANCE_ENV: &str = "FREDLAB_TOLERANCES";

pub const DEFAULT_EXACT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_ORACLE_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    #[serde(rename = "jost-pais-1d")]
    JostPais1d,
    #[serde(rename = "ratio-1d")]
    Ratio1d,
    #[serde(rename = "theorem42")]
    DirichletChain,
    #[serde(rename = "remark43")]
    NeumannChain,
    DetSwap,
    DtnInverse,
}

impl ExperimentKind {
    pub fn label(&self) -> &'static str {
        match self {
            ExperimentKind::JostPais1d => "jost-pais-1d",
            ExperimentKind::Ratio1d => "ratio-1d",
            ExperimentKind::DirichletChain => "theorem42",
            ExperimentKind::NeumannChain => "remark43",
            ExperimentKind::DetSwap => "det-swap",
            ExperimentKind::DtnInverse => "dtn-inverse",
        }
    }

    fn is_halfline(&self) -> bool {
        matches!(self, ExperimentKind::JostPais1d | ExperimentKind::Ratio1d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryKind {
    Halfline,
    Disk,
    BallRadial,
}

/// One finite-rank term `kappa <phi, .> psi`; `left` is `psi`, `right` is
/// `phi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermSpec {
    pub coupling: Complex64,
    pub left: Vec<ModeProfile>,
    pub right: Vec<ModeProfile>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    SquareWell { depth: Complex64, width: f64 },
    Gaussian { amplitude: Complex64, width: f64 },
    Exponential { amplitude: Complex64, rate: f64 },
    FiniteRank { terms: Vec<TermSpec> },
}

/// Grid parameters. Unset fields take the defaults of the geometry; ladder
/// rungs are merged over the base resolution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Resolution {
    /// Half-line Nyström nodes.
    pub n: Option<usize>,
    /// Half-line truncation length.
    pub length: Option<f64>,
    pub n_radial: Option<usize>,
    pub mode_cutoff: Option<usize>,
    pub n_boundary: Option<usize>,
    /// Full-grid Nyström oracle; enabled when `oracle_radial` is set.
    pub oracle_radial: Option<usize>,
    pub oracle_angular: Option<usize>,
}

impl Resolution {
    fn merged(&self, over: &Resolution) -> Resolution {
        Resolution {
            n: over.n.or(self.n),
            length: over.length.or(self.length),
            n_radial: over.n_radial.or(self.n_radial),
            mode_cutoff: over.mode_cutoff.or(self.mode_cutoff),
            n_boundary: over.n_boundary.or(self.n_boundary),
            oracle_radial: over.oracle_radial.or(self.oracle_radial),
            oracle_angular: over.oracle_angular.or(self.oracle_angular),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToleranceSpec {
    pub exact_route: Option<f64>,
    pub oracle_route: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwapSpec {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub max_rank: Option<usize>,
    pub max_size: Option<usize>,
}

/// The file format, field for field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub geometry: Option<GeometryKind>,
    pub potential: Option<PotentialSpec>,
    #[serde(default)]
    pub z: Vec<Complex64>,
    /// Permit `z` on `[0, inf)` where the experiment can evaluate there.
    #[serde(default)]
    pub allow_cut: bool,
    #[serde(default)]
    pub resolution: Resolution,
    #[serde(default)]
    pub ladder: Vec<Resolution>,
    #[serde(default)]
    pub tolerances: ToleranceSpec,
    pub nystrom_rule: Option<NystromRule>,
    pub swap: Option<SwapSpec>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Read { path: String, message: String },
    #[error("{0}")]
    Parse(String),
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
}

fn field(field: impl Into<String>, message: impl fmt::Display) -> ConfigError {
    ConfigError::Field {
        field: field.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub exact_route: f64,
    pub oracle_route: f64,
}

impl Tolerances {
    /// Built-in tiers, overridden by [`TOLERANCE_ENV`] when set.
    pub fn defaults() -> Result<Self, ConfigError> {
        let mut t = Tolerances {
            exact_route: DEFAULT_EXACT_TOLERANCE,
            oracle_route: DEFAULT_ORACLE_TOLERANCE,
        };
        if let Ok(spec) = std::env::var(TOLERANCE_ENV) {
            for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
                let (key, value) = part
                    .split_once('=')
                    .ok_or_else(|| field(TOLERANCE_ENV, format!("expected key=value, got `{part}`")))?;
                let value: f64 = value
                    .trim()
                    .parse()
                    .map_err(|_| field(TOLERANCE_ENV, format!("`{value}` is not a number")))?;
                check_tolerance(TOLERANCE_ENV, value)?;
                match key.trim() {
                    "exact" | "exact_route" => t.exact_route = value,
                    "oracle" | "oracle_route" => t.oracle_route = value,
                    other => return Err(field(TOLERANCE_ENV, format!("unknown tier `{other}`"))),
                }
            }
        }
        Ok(t)
    }
}

fn check_tolerance(name: &str, t: f64) -> Result<(), ConfigError> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(field(name, format!("tolerance {t} must be positive and finite")));
    }
    Ok(())
}

/// Validated grid parameters for one evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Grid {
    Halfline {
        n: usize,
        length: f64,
    },
    Modal {
        n_radial: usize,
        mode_cutoff: usize,
        n_boundary: usize,
        oracle: Option<(usize, usize)>,
    },
    None,
}

impl Grid {
    pub fn label(&self) -> String {
        match self {
            Grid::Halfline { n, length } => format!("n={n};L={length}"),
            Grid::Modal {
                n_radial,
                mode_cutoff,
                n_boundary,
                oracle,
            } => {
                let mut s = format!("radial={n_radial};modes={mode_cutoff};boundary={n_boundary}");
                if let Some((r, a)) = oracle {
                    s.push_str(&format!(";oracle={r}x{a}"));
                }
                s
            }
            Grid::None => String::new(),
        }
    }

    /// Componentwise order used to check that ladders refine.
    fn key(&self) -> Vec<f64> {
        match *self {
            Grid::Halfline { n, length } => vec![n as f64, length],
            Grid::Modal {
                n_radial,
                mode_cutoff,
                n_boundary,
                oracle,
            } => {
                let (r, a) = oracle.unwrap_or((0, 0));
                vec![n_radial as f64, mode_cutoff as f64, n_boundary as f64, r as f64, a as f64]
            }
            Grid::None => Vec::new(),
        }
    }

    pub fn domain(&self, geometry: GeometryKind) -> Result<ModalDomain, ConfigError> {
        let Grid::Modal {
            n_radial,
            mode_cutoff,
            n_boundary,
            ..
        } = *self
        else {
            return Err(field("resolution", "not a modal resolution"));
        };
        match geometry {
            GeometryKind::Disk => ModalDomain::disk(mode_cutoff, n_radial, n_boundary),
            GeometryKind::BallRadial => ModalDomain::ball_radial(n_radial),
            GeometryKind::Halfline => return Err(field("geometry", "half-line has no modal domain")),
        }
        .map_err(|e| field("resolution", e))
    }
}

/// The potential in the form the engines take.
#[derive(Debug, Clone)]
pub enum Potential {
    Local(LocalPotential),
    /// Factor tables, instantiated per domain.
    FiniteRank(Vec<TermSpec>),
    Zero,
    None,
}

impl Potential {
    pub fn finite_rank(&self, domain: &ModalDomain) -> Result<FiniteRankPotential, ConfigError> {
        match self {
            Potential::Zero | Potential::None => FiniteRankPotential::zero(domain).map_err(|e| field("potential", e)),
            Potential::FiniteRank(terms) => {
                let mut couplings = Vec::new();
                let mut left = Vec::new();
                let mut right = Vec::new();
                for (i, t) in terms.iter().enumerate() {
                    couplings.push(t.coupling);
                    left.push(
                        ModalFunction::new(t.left.clone())
                            .map_err(|e| field(format!("potential.terms[{i}].left"), e))?,
                    );
                    right.push(
                        ModalFunction::new(t.right.clone())
                            .map_err(|e| field(format!("potential.terms[{i}].right"), e))?,
                    );
                }
                make_potential(couplings, left, right, domain).map_err(|e| field("potential.terms", e))
            }
            Potential::Local(_) => Err(field("potential", "a local potential needs the half-line geometry")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub kind: ExperimentKind,
    pub geometry: Option<GeometryKind>,
    pub potential: Potential,
    pub z: Vec<Complex64>,
    pub grid: Grid,
    pub ladder: Vec<Grid>,
    pub tolerances: Tolerances,
    pub rule: NystromRule,
    pub swap: SwapConfig,
    /// SHA-256 of the normalized config.
    pub config_hash: String,
}

pub fn load(path: &Path) -> Result<Experiment, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse(&text)
}

pub fn parse(text: &str) -> Result<Experiment, ConfigError> {
    let config: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    validate(&config)
}

fn local_potential(spec: &PotentialSpec) -> Result<Potential, ConfigError> {
    let p = match *spec {
        PotentialSpec::Zero => Ok(LocalPotential::zero()),
        PotentialSpec::SquareWell { depth, width } => LocalPotential::square_well(depth, width),
        PotentialSpec::Gaussian { amplitude, width } => LocalPotential::gaussian(amplitude, width),
        PotentialSpec::Exponential { amplitude, rate } => LocalPotential::exponential(amplitude, rate),
        PotentialSpec::FiniteRank { .. } => {
            return Err(field("potential.kind", "finite-rank potentials need a disk or ball geometry"))
        }
    };
    p.map(Potential::Local).map_err(|e| field("potential", e))
}

fn grid_for(kind: ExperimentKind, geometry: Option<GeometryKind>, r: &Resolution, at: &str) -> Result<Grid, ConfigError> {
    let positive = |name: &str, v: usize| -> Result<usize, ConfigError> {
        if v == 0 {
            return Err(field(format!("{at}.{name}"), "must be positive"));
        }
        Ok(v)
    };
    match geometry {
        None => Ok(Grid::None),
        Some(GeometryKind::Halfline) => {
            let n = positive("n", r.n.unwrap_or(2000))?;
            let length = r.length.unwrap_or(30.0);
            if !(length > 0.0) || !length.is_finite() {
                return Err(field(format!("{at}.length"), "must be positive"));
            }
            Ok(Grid::Halfline { n, length })
        }
        Some(g) => {
            let n_radial = positive("n_radial", r.n_radial.unwrap_or(64))?;
            let mode_cutoff = match g {
                GeometryKind::BallRadial => r.mode_cutoff.unwrap_or(0),
                _ => positive("mode_cutoff", r.mode_cutoff.unwrap_or(24))?,
            };
            let n_boundary = positive("n_boundary", r.n_boundary.unwrap_or(2 * mode_cutoff + 1))?;
            let oracle = match (r.oracle_radial, r.oracle_angular) {
                (None, None) => None,
                (Some(nr), na) => {
                    if !matches!(kind, ExperimentKind::DirichletChain | ExperimentKind::NeumannChain) {
                        return Err(field(format!("{at}.oracle_radial"), "only chain experiments take an oracle"));
                    }
                    let na = match g {
                        GeometryKind::BallRadial => na.unwrap_or(1),
                        _ => na.ok_or_else(|| field(format!("{at}.oracle_angular"), "required with oracle_radial"))?,
                    };
                    Some((positive("oracle_radial", nr)?, positive("oracle_angular", na)?))
                }
                (None, Some(_)) => return Err(field(format!("{at}.oracle_radial"), "required with oracle_angular")),
            };
            Ok(Grid::Modal {
                n_radial,
                mode_cutoff,
                n_boundary,
                oracle,
            })
        }
    }
}

pub fn validate(config: &ExperimentConfig) -> Result<Experiment, ConfigError> {
    let kind = config.experiment;
    let geometry = match (kind, config.geometry) {
        (ExperimentKind::DetSwap, None) => None,
        (ExperimentKind::DetSwap, Some(_)) => return Err(field("geometry", "det-swap takes no geometry")),
        (_, None) => return Err(field("geometry", "missing")),
        (k, Some(GeometryKind::Halfline)) if !k.is_halfline() => {
            return Err(field("geometry", format!("{} needs a disk or ball-radial geometry", k.label())))
        }
        (k, Some(g)) if k.is_halfline() && g != GeometryKind::Halfline => {
            return Err(field("geometry", format!("{} needs the halfline geometry", k.label())))
        }
        (_, g) => g,
    };

    let potential = match (kind, &config.potential) {
        (ExperimentKind::DetSwap | ExperimentKind::DtnInverse, None) => Potential::None,
        (ExperimentKind::DetSwap | ExperimentKind::DtnInverse, Some(_)) => {
            return Err(field("potential", format!("{} takes no potential", kind.label())))
        }
        (_, None) => return Err(field("potential", "missing")),
        (k, Some(spec)) if k.is_halfline() => local_potential(spec)?,
        (_, Some(PotentialSpec::Zero)) => Potential::Zero,
        (_, Some(PotentialSpec::FiniteRank { terms })) => {
            if terms.is_empty() {
                return Err(field("potential.terms", "at least one term required"));
            }
            Potential::FiniteRank(terms.clone())
        }
        (_, Some(_)) => return Err(field("potential.kind", "disk and ball take finite-rank potentials")),
    };

    if kind == ExperimentKind::DetSwap {
        if !config.z.is_empty() {
            return Err(field("z", "det-swap takes no spectral points"));
        }
    } else if config.z.is_empty() {
        return Err(field("z", "at least one spectral point required"));
    }
    for (i, z) in config.z.iter().enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(field(format!("z[{i}]"), "not finite"));
        }
        let on_cut = z.im == 0.0 && z.re >= 0.0;
        if on_cut && (!config.allow_cut || kind.is_halfline()) {
            return Err(field(
                format!("z[{i}]"),
                format!("{z} lies on [0, inf); set allow_cut = true where the experiment supports it"),
            ));
        }
    }

    let grid = grid_for(kind, geometry, &config.resolution, "resolution")?;
    let mut ladder = Vec::new();
    for (i, rung) in config.ladder.iter().enumerate() {
        ladder.push(grid_for(kind, geometry, &config.resolution.merged(rung), &format!("ladder[{i}]"))?);
    }
    for (i, w) in ladder.windows(2).enumerate() {
        let (a, b) = (w[0].key(), w[1].key());
        let refines = a.iter().zip(&b).all(|(x, y)| y >= x) && a != b;
        if !refines {
            return Err(field(format!("ladder[{}]", i + 1), "ladder must refine strictly"));
        }
    }

    let mut tolerances = Tolerances::defaults()?;
    if let Some(t) = config.tolerances.exact_route {
        check_tolerance("tolerances.exact_route", t)?;
        tolerances.exact_route = t;
    }
    if let Some(t) = config.tolerances.oracle_route {
        check_tolerance("tolerances.oracle_route", t)?;
        tolerances.oracle_route = t;
    }

    let mut swap = SwapConfig::default();
    match (kind, &config.swap) {
        (ExperimentKind::DetSwap, Some(s)) => {
            swap.trials = s.trials.unwrap_or(swap.trials);
            swap.seed = s.seed.unwrap_or(swap.seed);
            swap.max_rank = s.max_rank.unwrap_or(swap.max_rank);
            swap.max_size = s.max_size.unwrap_or(swap.max_size);
            if swap.trials == 0 || swap.max_rank == 0 || swap.max_size < swap.max_rank {
                return Err(field("swap", "need trials >= 1 and 1 <= max_rank <= max_size"));
            }
        }
        (ExperimentKind::DetSwap, None) => {}
        (_, Some(_)) => return Err(field("swap", "only det-swap takes a swap table")),
        (_, None) => {}
    }
    if config.nystrom_rule.is_some() && !matches!(grid, Grid::Modal { oracle: Some(_), .. }) {
        return Err(field("nystrom_rule", "set without an oracle resolution"));
    }

    // hash of the normalized config, so formatting does not matter
    let normalized = serde_json::to_vec(config).expect("configs serialize");
    let config_hash = Sha256::digest(&normalized)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();

    Ok(Experiment {
        kind,
        geometry,
        potential,
        z: config.z.clone(),
        grid,
        ladder,
        tolerances,
        rule: config.nystrom_rule.unwrap_or_default(),
        swap,
        config_hash,
    })
}

impl Experiment {
    /// Overrides the det-swap seed (the `--seed` flag).
    pub fn with_seed(mut self, seed: Option<u64>) -> Self {
        if let Some(s) = seed {
            self.swap.seed = s;
        }
        self
    }
}
