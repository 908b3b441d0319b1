use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use conefix_core::ordered_space::Layout;
use conefix_core::{ConeMetric, ConeMetricSpace, Interval, MapTriple, MetricKind, NormKind, RealMap};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: parse error at `{key}`: {message}")]
    Parse {
        path: PathBuf,
        key: String,
        message: String,
    },
    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ScenarioError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Key path or field name the error refers to, if any.
    pub fn field(&self) -> Option<&str> {
        match self {
            Self::Io { .. } => None,
            Self::Parse { key, .. } => Some(key),
            Self::Invalid { field, .. } => Some(field),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Axioms,
    Modulus,
    Solve,
    SolveLocalized,
    SolvePower,
    Uniqueness,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Mode::Axioms => "axioms",
            Mode::Modulus => "modulus",
            Mode::Solve => "solve",
            Mode::SolveLocalized => "solve-localized",
            Mode::SolvePower => "solve-power",
            Mode::Uniqueness => "uniqueness",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MetricTag {
    #[default]
    Product,
    Exp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NormTag {
    #[default]
    Euclidean,
    Sup,
    Skew,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[f64; 2]>,
    #[serde(default)]
    pub metric: MetricTag,
    #[serde(default = "defaults::alpha")]
    pub alpha: f64,
    #[serde(default = "defaults::grid_m")]
    pub grid_m: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<NormTag>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub skew_eps: Option<f64>,
    /// Declared normal constant; measured or implied by the norm otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

impl Default for SpaceSpec {
    fn default() -> Self {
        Self {
            domain: None,
            metric: MetricTag::Product,
            alpha: defaults::alpha(),
            grid_m: defaults::grid_m(),
            norm: None,
            skew_eps: None,
            k: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapsSpec {
    #[serde(rename = "S")]
    pub s: String,
    #[serde(rename = "T")]
    pub t: String,
    #[serde(rename = "R")]
    pub r: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keyword {
    Estimate,
}

/// `solver.a`: the literal `"estimate"` or a number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModulusSpec {
    Value(f64),
    Keyword(Keyword),
}

impl Default for ModulusSpec {
    fn default() -> Self {
        ModulusSpec::Keyword(Keyword::Estimate)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    #[serde(default)]
    pub x0: f64,
    #[serde(default = "defaults::epsilon")]
    pub epsilon: f64,
    #[serde(default = "defaults::epsilon_res")]
    pub epsilon_res: f64,
    #[serde(default = "defaults::max_iter")]
    pub max_iter: usize,
    #[serde(default)]
    pub a: ModulusSpec,
    #[serde(rename = "box", default = "defaults::sample_box")]
    pub sample_box: [f64; 2],
    #[serde(default = "defaults::n_pairs")]
    pub n_pairs: usize,
    #[serde(default = "defaults::seed")]
    pub seed: u64,
    /// Ball radius for `solve-localized`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<Vec<f64>>,
    /// Exponent for `solve-power`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub power: Option<usize>,
    /// Starting points for `uniqueness`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub starts: Option<Vec<f64>>,
}

impl Default for SolverSpec {
    fn default() -> Self {
        Self {
            x0: 0.0,
            epsilon: defaults::epsilon(),
            epsilon_res: defaults::epsilon_res(),
            max_iter: defaults::max_iter(),
            a: ModulusSpec::default(),
            sample_box: defaults::sample_box(),
            n_pairs: defaults::n_pairs(),
            seed: defaults::seed(),
            c: None,
            power: None,
            starts: None,
        }
    }
}

mod defaults {
    pub fn alpha() -> f64 {
        1.0
    }
    pub fn grid_m() -> usize {
        conefix_core::ordered_space::DEFAULT_GRID_POINTS
    }
    pub fn epsilon() -> f64 {
        1e-10
    }
    pub fn epsilon_res() -> f64 {
        1e-8
    }
    pub fn max_iter() -> usize {
        10_000
    }
    pub fn sample_box() -> [f64; 2] {
        [-5.0, 5.0]
    }
    pub fn n_pairs() -> usize {
        100_000
    }
    pub fn seed() -> u64 {
        42
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub mode: Mode,
    #[serde(default)]
    pub space: SpaceSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub maps: Option<MapsSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
}

pub fn load_scenario(path: &Path) -> Result<Scenario, ScenarioError> {
    let text = fs::read_to_string(path).map_err(|source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_scenario(&text, path)
}

/// Parses and validates scenario text; `origin` is only used in messages.
pub fn parse_scenario(text: &str, origin: &Path) -> Result<Scenario, ScenarioError> {
    let de = toml::Deserializer::parse(text).map_err(|e| ScenarioError::Parse {
        path: origin.to_path_buf(),
        key: ".".into(),
        message: e.message().to_string(),
    })?;
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let key = e.path().to_string();
        ScenarioError::Parse {
            path: origin.to_path_buf(),
            key,
            message: e.into_inner().message().to_string(),
        }
    })?;
    scenario.validate()?;
    Ok(scenario)
}

fn interval(field: &str, pair: [f64; 2]) -> Result<Interval<f64>, ScenarioError> {
    Interval::new(pair[0], pair[1])
        .ok_or_else(|| ScenarioError::invalid(field, format!("need lo <= hi, got {pair:?}")))
}

fn positive(field: &str, v: f64) -> Result<(), ScenarioError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(ScenarioError::invalid(field, format!("must be positive, got {v}")))
    }
}

impl Scenario {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario is always representable")
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return Err(ScenarioError::invalid(
                "name",
                "must be nonempty and use only letters, digits, '_' or '-'",
            ));
        }
        let sp = &self.space;
        if let Some(d) = sp.domain {
            let dom = interval("space.domain", d)?;
            if !(dom.lo < dom.hi) {
                return Err(ScenarioError::invalid("space.domain", "must have lo < hi"));
            }
        }
        if !(sp.alpha >= 0.0 && sp.alpha.is_finite()) {
            return Err(ScenarioError::invalid("space.alpha", "must be finite and >= 0"));
        }
        if sp.grid_m == 0 {
            return Err(ScenarioError::invalid("space.grid_m", "must be at least 1"));
        }
        match (sp.norm, sp.skew_eps) {
            (Some(NormTag::Skew), Some(e)) => positive("space.skew_eps", e)?,
            (Some(NormTag::Skew), None) => {
                return Err(ScenarioError::invalid("space.skew_eps", "required for norm = \"skew\""))
            }
            (_, Some(_)) => {
                return Err(ScenarioError::invalid("space.skew_eps", "only allowed with norm = \"skew\""))
            }
            _ => {}
        }
        if sp.metric == MetricTag::Exp && sp.norm == Some(NormTag::Skew) {
            return Err(ScenarioError::invalid("space.norm", "skew norm needs the product metric"));
        }
        if let Some(k) = sp.k {
            if !(k >= 1.0 && k.is_finite()) {
                return Err(ScenarioError::invalid("space.k", "must be finite and >= 1"));
            }
        }

        let so = &self.solver;
        positive("solver.epsilon", so.epsilon)?;
        positive("solver.epsilon_res", so.epsilon_res)?;
        if so.max_iter == 0 {
            return Err(ScenarioError::invalid("solver.max_iter", "must be at least 1"));
        }
        if so.n_pairs == 0 {
            return Err(ScenarioError::invalid("solver.n_pairs", "must be at least 1"));
        }
        let bx = interval("solver.box", so.sample_box)?;
        if !(bx.lo < bx.hi) {
            return Err(ScenarioError::invalid("solver.box", "must have lo < hi"));
        }
        if let ModulusSpec::Value(a) = so.a {
            if !(0.0..1.0).contains(&a) {
                return Err(ScenarioError::invalid("solver.a", format!("must lie in [0, 1), got {a}")));
            }
        }
        if !so.x0.is_finite() || !self.domain().contains(so.x0) {
            return Err(ScenarioError::invalid("solver.x0", "must be finite and inside space.domain"));
        }

        if self.mode == Mode::Axioms {
            return Ok(());
        }
        let maps = self
            .maps
            .as_ref()
            .ok_or_else(|| ScenarioError::invalid("maps", format!("required for mode {}", self.mode)))?;
        for (key, text) in [("maps.S", &maps.s), ("maps.T", &maps.t), ("maps.R", &maps.r)] {
            RealMap::<f64>::parse(text).map_err(|e| ScenarioError::invalid(key, e.to_string()))?;
        }
        match self.mode {
            Mode::SolveLocalized => {
                let c = so
                    .c
                    .as_ref()
                    .ok_or_else(|| ScenarioError::invalid("solver.c", "required for solve-localized"))?;
                if c.len() != self.cone_layout().len() {
                    return Err(ScenarioError::invalid(
                        "solver.c",
                        format!("expected {} components, got {}", self.cone_layout().len(), c.len()),
                    ));
                }
                if c.iter().any(|v| !v.is_finite()) {
                    return Err(ScenarioError::invalid("solver.c", "components must be finite"));
                }
            }
            Mode::SolvePower => match so.power {
                Some(n) if n >= 1 => {}
                _ => return Err(ScenarioError::invalid("solver.power", "must be at least 1")),
            },
            Mode::Uniqueness => match &so.starts {
                Some(s) if s.len() >= 2 => {
                    if let Some(bad) = s.iter().find(|v| !v.is_finite() || !self.domain().contains(**v)) {
                        return Err(ScenarioError::invalid(
                            "solver.starts",
                            format!("{bad} is not a finite point of the domain"),
                        ));
                    }
                }
                _ => return Err(ScenarioError::invalid("solver.starts", "need at least two starts")),
            },
            _ => {}
        }
        Ok(())
    }

    pub fn domain(&self) -> Interval<f64> {
        self.space
            .domain
            .and_then(|[lo, hi]| Interval::new(lo, hi))
            .unwrap_or_else(Interval::real_line)
    }

    pub fn sample_box(&self) -> Interval<f64> {
        let [lo, hi] = self.solver.sample_box;
        Interval::new(lo, hi).expect("validated")
    }

    fn cone_layout(&self) -> Layout {
        match self.space.metric {
            MetricTag::Product => Layout::FiniteDim(2),
            MetricTag::Exp => Layout::GridFunction(self.space.grid_m),
        }
    }

    pub fn norm_kind(&self) -> NormKind<f64> {
        match (self.space.norm, self.space.metric) {
            (Some(NormTag::Euclidean), _) => NormKind::Euclidean,
            (Some(NormTag::Sup), _) => NormKind::Supremum,
            (Some(NormTag::Skew), _) => NormKind::Skew(self.space.skew_eps.unwrap_or(0.1)),
            (None, MetricTag::Product) => NormKind::Euclidean,
            (None, MetricTag::Exp) => NormKind::Supremum,
        }
    }

    pub fn build_space(&self) -> Result<ConeMetricSpace<f64>, ScenarioError> {
        let metric = match self.space.metric {
            MetricTag::Product => MetricKind::Product {
                alpha: self.space.alpha,
            },
            MetricTag::Exp => MetricKind::ExpWeighted {
                grid_points: self.space.grid_m,
            },
        };
        let space = ConeMetricSpace::new(self.domain(), metric, self.norm_kind())
            .map_err(|e| ScenarioError::invalid("space", e.to_string()))?;
        match self.space.k {
            Some(k) => space
                .with_normal_constant(k)
                .map_err(|e| ScenarioError::invalid("space.k", e.to_string())),
            None => Ok(space),
        }
    }

    /// Unprobed triple restricted to the scenario domain.
    pub fn build_triple(&self) -> Result<MapTriple<f64>, ScenarioError> {
        let maps = self
            .maps
            .as_ref()
            .ok_or_else(|| ScenarioError::invalid("maps", "missing"))?;
        let dom = self.domain();
        let map = |key: &str, text: &str| {
            RealMap::parse(text)
                .map(|m| m.with_domain(dom))
                .map_err(|e| ScenarioError::invalid(key, e.to_string()))
        };
        Ok(MapTriple::new(
            map("maps.S", &maps.s)?,
            map("maps.T", &maps.t)?,
            map("maps.R", &maps.r)?,
        ))
    }

    /// Ball radius as an element of the metric's value space.
    pub fn radius(&self, space: &ConeMetricSpace<f64>) -> Result<conefix_core::SpaceElement<f64>, ScenarioError> {
        let c = self
            .solver
            .c
            .clone()
            .ok_or_else(|| ScenarioError::invalid("solver.c", "missing"))?;
        let el = match space.cone().layout() {
            Layout::FiniteDim(_) => conefix_core::SpaceElement::finite(c),
            Layout::GridFunction(_) => conefix_core::SpaceElement::grid(c),
        };
        el.map_err(|e| ScenarioError::invalid("solver.c", e.to_string()))
    }
}
