//! Scenario files.
//!
//! ```toml
//! name = "half-space"
//!
//! [problem]
//! scenario = "half_space"
//! h = 0.0078125
//!
//! [solver]
//! method = "active_set"
//!
//! [[analysis]]
//! points = "nearest 0,0"
//! radii = "default"
//! kinds = ["weiss", "classify"]
//! ```
//!
//! Without `scenario`, `coefficients`, `rhs`, `boundary` and `p` are
//! required; with it they override the built-in values.

use std::fmt;
use std::path::Path;

use nalgebra::{Matrix2, Vector2};
use obstacle_core::problem::{
    scenarios, BoundaryData, CoefficientFamily, Coefficients, ObstacleShape, ProblemSpec, Rhs,
};
use obstacle_core::solve::{InitialGuess, SolverOptions};
use obstacle_core::Point;
use serde::{Deserialize, Serialize};
use toml::Spanned;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub name: String,
    pub problem: Spanned<ProblemConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default, rename = "analysis")]
    pub analyses: Vec<Spanned<AnalysisConfig>>,
    #[serde(skip)]
    source: String,
    #[serde(skip)]
    path: String,
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    HalfSpace,
    Radial,
    Disc,
    HolderHalfSpace,
    HolderRadial,
    Rotated,
    Indefinite,
}

impl ScenarioName {
    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::HalfSpace => "half_space",
            ScenarioName::Radial => "radial",
            ScenarioName::Disc => "disc",
            ScenarioName::HolderHalfSpace => "holder_half_space",
            ScenarioName::HolderRadial => "holder_radial",
            ScenarioName::Rotated => "rotated",
            ScenarioName::Indefinite => "indefinite",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub scenario: Option<ScenarioName>,
    pub h: Option<f64>,
    /// Nodes along `x`; exclusive with `h`.
    pub resolution: Option<usize>,
    pub lower: Option<[f64; 2]>,
    pub upper: Option<[f64; 2]>,
    pub coefficients: Option<CoefficientsConfig>,
    pub obstacle: Option<ObstacleConfig>,
    pub rhs: Option<RhsConfig>,
    pub boundary: Option<BoundaryConfig>,
    pub p: Option<f64>,
    pub dini_a: Option<f64>,
    /// Multiplies `A` and `h` by the same constant.
    pub scale: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientsConfig {
    Identity,
    Constant {
        matrix: [[f64; 2]; 2],
    },
    Rotated {
        lambdas: [f64; 2],
        angle: f64,
        amplitude: f64,
        wavenumber: [f64; 2],
    },
    Holder {
        eps: f64,
        alpha: f64,
        #[serde(default)]
        center: [f64; 2],
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObstacleConfig {
    Zero,
    Affine {
        c: f64,
        b: [f64; 2],
    },
    Quadratic {
        hessian: [[f64; 2]; 2],
        #[serde(default)]
        center: [f64; 2],
        #[serde(default)]
        c: f64,
    },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RhsConfig {
    Constant { value: f64 },
    Affine { c: f64, b: [f64; 2] },
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryConfig {
    Constant {
        value: f64,
    },
    HalfSpace {
        direction: [f64; 2],
        #[serde(default)]
        offset: f64,
    },
    Quadratic {
        q: [[f64; 2]; 2],
        #[serde(default)]
        center: [f64; 2],
    },
    DiscContact {
        #[serde(default)]
        center: [f64; 2],
        radius: f64,
    },
    RadialProfile {
        #[serde(default)]
        center: [f64; 2],
        eps: f64,
        alpha: f64,
        forcing: f64,
        #[serde(default)]
        offset: f64,
    },
}

#[derive(Clone, Copy, Debug, Default, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    ActiveSet,
    Psor,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ActiveSet => "active_set",
            Method::Psor => "psor",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Initial {
    Zero,
    Unconstrained,
    #[default]
    Nested,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub method: Method,
    pub tol: f64,
    pub omega: f64,
    pub max_sweeps: usize,
    pub initial: Initial,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolverOptions::default();
        Self {
            method: Method::ActiveSet,
            tol: d.tol,
            omega: d.omega,
            max_sweeps: d.max_sweeps,
            initial: Initial::Nested,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            omega: self.omega,
            max_sweeps: self.max_sweeps,
            initial: match self.initial {
                Initial::Zero => InitialGuess::Zero,
                Initial::Unconstrained => InitialGuess::Unconstrained,
                Initial::Nested => InitialGuess::Nested,
            },
        }
    }
}

/// Which free-boundary points an analysis runs at.
#[derive(Clone, Debug, PartialEq)]
pub enum Selector {
    All,
    Nearest(Point),
    Every(usize),
}

impl Default for Selector {
    fn default() -> Self {
        Selector::Nearest(Point::zeros())
    }
}

impl TryFrom<String> for Selector {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        let words: Vec<&str> = s.split_whitespace().collect();
        match words.as_slice() {
            ["all"] => Ok(Selector::All),
            ["nearest", rest @ ..] if !rest.is_empty() => {
                let joined = rest.join("");
                let parts: Vec<&str> = joined.split(',').collect();
                let coords: Vec<f64> = parts.iter().filter_map(|p| p.parse().ok()).collect();
                if parts.len() != 2 || coords.len() != 2 {
                    return Err(format!("expected `nearest x,y`, got {s:?}"));
                }
                Ok(Selector::Nearest(Point::new(coords[0], coords[1])))
            }
            ["every", k] => {
                let k = k.trim_end_matches("-th").trim_end_matches("th");
                match k.parse::<usize>() {
                    Ok(k) if k > 0 => Ok(Selector::Every(k)),
                    _ => Err(format!("expected `every k` with k >= 1, got {s:?}")),
                }
            }
            _ => Err(format!("unknown point selector {s:?} (use `all`, `nearest x,y` or `every k`)")),
        }
    }
}

impl<'de> Deserialize<'de> for Selector {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Selector::try_from(String::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

impl fmt::Display for Selector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Selector::All => write!(f, "all"),
            Selector::Nearest(p) => write!(f, "nearest {},{}", p.x, p.y),
            Selector::Every(k) => write!(f, "every {k}"),
        }
    }
}

/// `"default"`, an explicit list, or a geometric range in the normalized
/// frame.
#[derive(Clone, Debug, PartialEq)]
pub enum RadiiConfig {
    Default,
    List(Vec<f64>),
    Range {
        min: Option<f64>,
        max: Option<f64>,
        per_octave: usize,
    },
}

impl Default for RadiiConfig {
    fn default() -> Self {
        RadiiConfig::Default
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawRadii {
    Name(String),
    List(Vec<f64>),
    Range {
        min: Option<f64>,
        max: Option<f64>,
        per_octave: Option<usize>,
    },
}

impl<'de> Deserialize<'de> for RadiiConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        use serde::de::Error;
        match RawRadii::deserialize(d)? {
            RawRadii::Name(s) if s == "default" => Ok(RadiiConfig::Default),
            RawRadii::Name(s) => Err(D::Error::custom(format!("unknown radii {s:?} (use \"default\", a list or a table)"))),
            RawRadii::List(v) => {
                if v.is_empty() || v.iter().any(|r| !(*r > 0.0)) || v.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(D::Error::custom("radii must be positive and strictly increasing"));
                }
                Ok(RadiiConfig::List(v))
            }
            RawRadii::Range { min, max, per_octave } => Ok(RadiiConfig::Range {
                min,
                max,
                per_octave: per_octave.unwrap_or(4).max(1),
            }),
        }
    }
}

impl fmt::Display for RadiiConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadiiConfig::Default => write!(f, "default"),
            RadiiConfig::List(v) => write!(f, "{v:?}"),
            RadiiConfig::Range { min, max, per_octave } => write!(f, "range {min:?}..{max:?} x{per_octave}"),
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize, PartialEq, Eq, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Weiss,
    Monneau,
    Classify,
    Growth,
    Freezing,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Weiss => "weiss",
            Kind::Monneau => "monneau",
            Kind::Classify => "classify",
            Kind::Growth => "growth",
            Kind::Freezing => "freezing",
        }
    }
}

fn default_kinds() -> Vec<Kind> {
    vec![Kind::Weiss, Kind::Classify]
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default)]
    pub points: Selector,
    #[serde(default)]
    pub radii: RadiiConfig,
    #[serde(default = "default_kinds")]
    pub kinds: Vec<Kind>,
    /// Monneau profile; `Id / 2` when absent.
    pub q: Option<[[f64; 2]; 2]>,
}

impl AnalysisConfig {
    pub fn profile(&self) -> Matrix2<f64> {
        self.q.map(matrix).unwrap_or_else(|| Matrix2::identity() * 0.5)
    }

    /// Plan line used to check that two runs are comparable.
    pub fn describe(&self) -> String {
        let kinds: Vec<&str> = self.kinds.iter().map(|k| k.as_str()).collect();
        let q = self.profile();
        format!(
            "points={}; radii={}; kinds={}; q=[{}, {}, {}]",
            self.points,
            self.radii,
            kinds.join(","),
            q[(0, 0)],
            q[(0, 1)],
            q[(1, 1)]
        )
    }
}

fn matrix(m: [[f64; 2]; 2]) -> Matrix2<f64> {
    Matrix2::new(m[0][0], m[0][1], m[1][0], m[1][1])
}

fn vector(v: [f64; 2]) -> Vector2<f64> {
    Vector2::new(v[0], v[1])
}

fn line_of(source: &str, offset: usize) -> usize {
    source[..offset.min(source.len())].matches('\n').count() + 1
}

impl Config {
    pub fn parse(source: &str, path: &str) -> Result<Config, CliError> {
        let mut config: Config = toml::from_str(source).map_err(|e| CliError::Config {
            path: path.to_string(),
            message: e.to_string().trim_end().to_string(),
        })?;
        config.source = source.to_string();
        config.path = path.to_string();
        if config.name.trim().is_empty() || config.name.contains(['/', '\\']) {
            return Err(config.error_at(0, "`name` must be a non-empty plain file name"));
        }
        config.spec()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Config, CliError> {
        let source = std::fs::read_to_string(path).map_err(|e| CliError::Config {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Config::parse(&source, &path.display().to_string())
    }

    pub fn error_at(&self, offset: usize, message: impl fmt::Display) -> CliError {
        CliError::Config {
            path: self.path.clone(),
            message: format!("line {}: {message}", line_of(&self.source, offset)),
        }
    }

    pub fn plan(&self) -> Vec<String> {
        self.analyses.iter().map(|a| a.get_ref().describe()).collect()
    }

    /// The problem spec, with line diagnostics for inconsistent entries.
    pub fn spec(&self) -> Result<ProblemSpec, CliError> {
        let at = self.problem.span().start;
        let fail = |m: String| self.error_at(at, format!("[problem] {m}"));
        let p = self.problem.get_ref();
        let lower = p.lower.map(|v| Point::new(v[0], v[1])).unwrap_or(Point::new(-1.0, -1.0));
        let upper = p.upper.map(|v| Point::new(v[0], v[1])).unwrap_or(Point::new(1.0, 1.0));
        if !(upper.x > lower.x && upper.y > lower.y) {
            return Err(fail("`upper` must exceed `lower` in both coordinates".into()));
        }
        let resolution = match (p.h, p.resolution) {
            (Some(_), Some(_)) => return Err(fail("give `h` or `resolution`, not both".into())),
            (Some(h), None) if h > 0.0 => ((upper.x - lower.x) / h).round() as usize + 1,
            (Some(h), None) => return Err(fail(format!("`h` must be positive, got {h}"))),
            (None, Some(n)) => n,
            (None, None) => return Err(fail("`h` or `resolution` is required".into())),
        };
        if resolution < 5 {
            return Err(fail(format!("at least 5 nodes per axis are needed, got {resolution}")));
        }
        let mut spec = match p.scenario {
            Some(name) => scenarios::by_name(name.as_str(), resolution).map_err(|e| fail(e.to_string()))?,
            None => {
                let missing: Vec<&str> = [
                    ("coefficients", p.coefficients.is_none()),
                    ("rhs", p.rhs.is_none()),
                    ("boundary", p.boundary.is_none()),
                    ("p", p.p.is_none()),
                ]
                .iter()
                .filter(|m| m.1)
                .map(|m| m.0)
                .collect();
                if !missing.is_empty() {
                    return Err(fail(format!("without `scenario`, {} must be given", missing.join(", "))));
                }
                ProblemSpec {
                    lower,
                    upper,
                    resolution,
                    coefficients: CoefficientFamily::Identity.into(),
                    obstacle: ObstacleShape::Zero,
                    rhs: Rhs::Constant(1.0),
                    boundary: BoundaryData::Constant(0.0),
                    p: 4.0,
                    dini_a: 1.0,
                }
            }
        };
        spec.lower = lower;
        spec.upper = upper;
        if let Some(c) = &p.coefficients {
            spec.coefficients = Coefficients::from(match c {
                CoefficientsConfig::Identity => CoefficientFamily::Identity,
                CoefficientsConfig::Constant { matrix: m } => CoefficientFamily::Constant(matrix(*m)),
                CoefficientsConfig::Rotated {
                    lambdas,
                    angle,
                    amplitude,
                    wavenumber,
                } => CoefficientFamily::Rotated {
                    lambdas: *lambdas,
                    angle: *angle,
                    amplitude: *amplitude,
                    wavenumber: vector(*wavenumber),
                },
                CoefficientsConfig::Holder { eps, alpha, center } => CoefficientFamily::Holder {
                    eps: *eps,
                    alpha: *alpha,
                    center: vector(*center),
                },
            });
        }
        if let Some(o) = &p.obstacle {
            spec.obstacle = match o {
                ObstacleConfig::Zero => ObstacleShape::Zero,
                ObstacleConfig::Affine { c, b } => ObstacleShape::Affine { c: *c, b: vector(*b) },
                ObstacleConfig::Quadratic { hessian, center, c } => ObstacleShape::Quadratic {
                    hessian: matrix(*hessian),
                    center: vector(*center),
                    c: *c,
                },
            };
        }
        if let Some(r) = &p.rhs {
            spec.rhs = match r {
                RhsConfig::Constant { value } => Rhs::Constant(*value),
                RhsConfig::Affine { c, b } => Rhs::Affine { c: *c, b: vector(*b) },
            };
        }
        if let Some(b) = &p.boundary {
            spec.boundary = match b {
                BoundaryConfig::Constant { value } => BoundaryData::Constant(*value),
                BoundaryConfig::HalfSpace { direction, offset } => {
                    let d = vector(*direction);
                    if !(d.norm() > 0.0) {
                        return Err(fail("half-space direction must be nonzero".into()));
                    }
                    BoundaryData::HalfSpace {
                        direction: d.normalize(),
                        offset: *offset,
                    }
                }
                BoundaryConfig::Quadratic { q, center } => BoundaryData::Quadratic {
                    q: matrix(*q),
                    center: vector(*center),
                },
                BoundaryConfig::DiscContact { center, radius } => BoundaryData::DiscContact {
                    center: vector(*center),
                    radius: *radius,
                },
                BoundaryConfig::RadialProfile {
                    center,
                    eps,
                    alpha,
                    forcing,
                    offset,
                } => BoundaryData::RadialProfile {
                    center: vector(*center),
                    eps: *eps,
                    alpha: *alpha,
                    forcing: *forcing,
                    offset: *offset,
                },
            };
        }
        if let Some(pv) = p.p {
            spec.p = pv;
        }
        if let Some(a) = p.dini_a {
            spec.dini_a = a;
        }
        if let Some(s) = p.scale {
            if !(s > 0.0 && s.is_finite()) {
                return Err(fail(format!("`scale` must be positive, got {s}")));
            }
            spec = scenarios::scaled(&spec, s);
        }
        Ok(spec)
    }
}
