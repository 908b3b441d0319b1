//! The maps `S`, `T`, `R` and the sampled probes run on them.
//!
//! Injectivity, family membership and subsequential convergence cannot be
//! decided from finitely many samples; the probes here only ever report a
//! concrete witness or the absence of one. The TR-contraction modulus is
//! estimated in the cone order itself, component by component.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone_metric::{diagnose_sequence, leq_rounded, ConeMetric, MetricError};
use crate::expr::{EvalError, Expr, ParseError};
use crate::ordered_space::SpaceElement;
use crate::sampling::{pairs_in_box, Interval, SampleSpec};
use crate::scalar::Scalar;

/// Pairs whose modulus is below `1 − margin` count as certified contractions.
pub const CERTIFICATION_MARGIN: f64 = 1e-9;

/// Ratio slack for calling a map nonexpansive.
pub const NONEXPANSIVE_SLACK: f64 = 1e-12;

/// Sampled ratios within this gap of 1 are treated as approaching 1.
pub const CONTRACTIVE_GAP: f64 = 1e-3;

/// Default collision tolerance for injectivity probes.
pub const DEFAULT_COLLISION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MappingError {
    #[error("parse error in {map}: {source}")]
    Parse {
        map: String,
        #[source]
        source: ParseError,
    },
    #[error("evaluation of {map} failed at x = {x}: {source}")]
    Eval {
        map: String,
        x: f64,
        #[source]
        source: EvalError,
    },
    #[error("{map}: point {x} outside domain")]
    OutsideDomain { map: String, x: f64 },
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("unknown builtin map `{0}`")]
    UnknownBuiltin(String),
    #[error("sampling box [{lo}, {hi}] not inside the domain of {map}")]
    BoxOutsideDomain { map: String, lo: f64, hi: f64 },
    #[error("sampling box must be bounded")]
    UnboundedBox,
    #[error("{0}")]
    InvalidArgument(String),
}

/// Maps available by name without parsing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Builtin {
    Identity,
    Half,
    ExpNeg,
    TwoExpNeg,
    ShiftOne,
    Cube,
}

impl Builtin {
    pub const ALL: [Builtin; 6] = [
        Builtin::Identity,
        Builtin::Half,
        Builtin::ExpNeg,
        Builtin::TwoExpNeg,
        Builtin::ShiftOne,
        Builtin::Cube,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Builtin::Identity => "identity",
            Builtin::Half => "half",
            Builtin::ExpNeg => "exp_neg",
            Builtin::TwoExpNeg => "two_exp_neg",
            Builtin::ShiftOne => "shift_one",
            Builtin::Cube => "cube",
        }
    }

    fn eval<T: Scalar>(self, x: T) -> T {
        match self {
            Builtin::Identity => x,
            Builtin::Half => x / T::of(2.0),
            Builtin::ExpNeg => (-x).exp(),
            Builtin::TwoExpNeg => T::of(2.0) * (-x).exp(),
            Builtin::ShiftOne => x + T::one(),
            Builtin::Cube => x * x * x,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MapSource {
    Expr(Expr),
    Builtin(Builtin),
    /// `inner` composed with itself `times` times.
    Iterate(Box<MapSource>, usize),
}

impl fmt::Display for MapSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapSource::Expr(e) => write!(f, "{e}"),
            MapSource::Builtin(b) => write!(f, "<{}>", b.id()),
            MapSource::Iterate(inner, n) => write!(f, "[{inner}]^{n}"),
        }
    }
}

/// A real map `ℝ ⊇ domain → ℝ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealMap<T> {
    source: MapSource,
    domain: Interval<T>,
}

impl<T: Scalar> RealMap<T> {
    pub fn parse(text: &str) -> Result<Self, MappingError> {
        let e = Expr::parse(text).map_err(|source| MappingError::Parse {
            map: text.to_string(),
            source,
        })?;
        Ok(Self::from_expr(e))
    }

    pub fn from_expr(e: Expr) -> Self {
        Self {
            source: MapSource::Expr(e),
            domain: Interval::real_line(),
        }
    }

    pub fn builtin(id: &str) -> Result<Self, MappingError> {
        let b = Builtin::ALL
            .into_iter()
            .find(|b| b.id() == id)
            .ok_or_else(|| MappingError::UnknownBuiltin(id.to_string()))?;
        Ok(Self {
            source: MapSource::Builtin(b),
            domain: Interval::real_line(),
        })
    }

    pub fn with_domain(mut self, domain: Interval<T>) -> Self {
        self.domain = domain;
        self
    }

    pub fn domain(&self) -> Interval<T> {
        self.domain
    }

    pub fn source(&self) -> &MapSource {
        &self.source
    }

    /// `self` composed with itself `n` times (`n ≥ 1`).
    pub fn power(&self, n: usize) -> Self {
        assert!(n >= 1, "map power must be at least 1");
        if n == 1 {
            return self.clone();
        }
        Self {
            source: MapSource::Iterate(Box::new(self.source.clone()), n),
            domain: self.domain,
        }
    }

    fn eval_source(&self, source: &MapSource, x: T) -> Result<T, MappingError> {
        if !self.domain.contains(x) {
            return Err(MappingError::OutsideDomain {
                map: self.to_string(),
                x: x.as_f64(),
            });
        }
        match source {
            MapSource::Expr(e) => e.eval(x).map_err(|source| MappingError::Eval {
                map: self.to_string(),
                x: x.as_f64(),
                source,
            }),
            MapSource::Builtin(b) => {
                let v = b.eval(x);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(MappingError::Eval {
                        map: self.to_string(),
                        x: x.as_f64(),
                        source: EvalError::NonFinite { x: x.as_f64() },
                    })
                }
            }
            MapSource::Iterate(inner, n) => {
                let mut v = x;
                for _ in 0..*n {
                    v = self.eval_source(inner, v)?;
                }
                Ok(v)
            }
        }
    }

    pub fn eval(&self, x: T) -> Result<T, MappingError> {
        self.eval_source(&self.source, x)
    }
}

impl<T> fmt::Display for RealMap<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.source)
    }
}

fn check_box<T: Scalar>(map: &RealMap<T>, sample_box: Interval<T>) -> Result<(), MappingError> {
    if !sample_box.is_bounded() {
        return Err(MappingError::UnboundedBox);
    }
    if !map.domain().contains_interval(&sample_box) {
        return Err(MappingError::BoxOutsideDomain {
            map: map.to_string(),
            lo: sample_box.lo.as_f64(),
            hi: sample_box.hi.as_f64(),
        });
    }
    Ok(())
}

/// Result of a sampled collision search. Heuristic: absence of a witness is
/// not a proof of injectivity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InjectivityProbe<T> {
    /// `(x, y)` with `x ≠ y` and `f(x) ≈ f(y)`.
    pub witness: Option<(T, T)>,
    pub samples: usize,
    pub tolerance: T,
}

impl<T> InjectivityProbe<T> {
    pub fn no_witness_found(&self) -> bool {
        self.witness.is_none()
    }
}

/// Bisection for `f(y) = target` on `[lo, hi]` given a sign change.
fn bisect_level<T: Scalar>(
    map: &RealMap<T>,
    target: T,
    mut lo: T,
    mut hi: T,
) -> Option<T> {
    let g = |y: T| map.eval(y).ok().map(|v| v - target);
    let mut glo = g(lo)?;
    let ghi = g(hi)?;
    if glo.is_zero() {
        return Some(lo);
    }
    if ghi.is_zero() {
        return Some(hi);
    }
    if glo.signum() == ghi.signum() {
        return None;
    }
    for _ in 0..200 {
        let mid = lo + (hi - lo) / T::of(2.0);
        if mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid)?;
        if gm.is_zero() {
            return Some(mid);
        }
        if gm.signum() == glo.signum() {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
    Some(lo + (hi - lo) / T::of(2.0))
}

/// Searches `sample_box` for a collision `x ≠ y` with
/// `|f(x) − f(y)| < δ·|x − y|` and `|f(x) − f(y)| < δ`.
///
/// Samples are sorted by value; neighbours in value order that are far apart
/// in `x` are collision candidates, refined by bisecting for the level set
/// `f(y) = f(x)` between the `x`-neighbours of the second point. Pairs closer
/// than `10⁻⁶` of the box width are not considered distinct.
pub fn probe_injectivity<T: Scalar>(
    map: &RealMap<T>,
    sample_box: Interval<T>,
    spec: SampleSpec,
    tolerance: T,
) -> Result<InjectivityProbe<T>, MappingError> {
    if !(tolerance > T::zero()) {
        return Err(MappingError::InvalidArgument("collision tolerance must be positive".into()));
    }
    check_box(map, sample_box)?;
    let separation = sample_box.width() * T::of(1e-6);
    let is_collision = |x: T, y: T, fx: T, fy: T| {
        let gap = (fx - fy).abs();
        (x - y).abs() > separation && gap < tolerance * (x - y).abs() && gap < tolerance
    };

    let mut pts: Vec<(T, T)> = pairs_in_box(sample_box, sample_box, spec)
        .flat_map(|(a, b)| [a, b])
        .chain([sample_box.lo, sample_box.hi])
        .filter_map(|x| map.eval(x).ok().map(|v| (x, v)))
        .collect();
    let samples = pts.len();
    let mut by_x = pts.clone();
    by_x.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
    pts.sort_by(|a, b| a.1.partial_cmp(&b.1).expect("finite"));

    let mut candidates: Vec<(T, usize)> = Vec::new();
    for i in 0..pts.len().saturating_sub(1) {
        let (x, fx) = pts[i];
        let (y, fy) = pts[i + 1];
        if is_collision(x, y, fx, fy) {
            return Ok(InjectivityProbe {
                witness: Some((x, y)),
                samples,
                tolerance,
            });
        }
        let dx = (x - y).abs();
        if dx > separation {
            candidates.push(((fx - fy).abs() / dx, i));
        }
    }

    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
    for &(_, i) in candidates.iter().take(32) {
        let (x, fx) = pts[i];
        let (y, _) = pts[i + 1];
        let k = by_x.partition_point(|p| p.0 < y);
        let lo = by_x[k.saturating_sub(1)].0;
        let hi = by_x[(k + 1).min(by_x.len() - 1)].0;
        if let Some(root) = bisect_level(map, fx, lo, hi) {
            if let Ok(froot) = map.eval(root) {
                if is_collision(x, root, fx, froot) {
                    return Ok(InjectivityProbe {
                        witness: Some((x, root)),
                        samples,
                        tolerance,
                    });
                }
            }
        }
    }

    Ok(InjectivityProbe {
        witness: None,
        samples,
        tolerance,
    })
}

/// Per-pair modulus: the least `a` with `a·d(Tx,Ry) − d(TSx,RSy) ∈ P`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairModulus<T> {
    pub numerator: SpaceElement<T>,
    pub denominator: SpaceElement<T>,
    pub per_component: Vec<T>,
    pub a: T,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModulusEstimate<T> {
    pub a_hat: T,
    pub witness: Option<(T, T)>,
    pub n_pairs: usize,
    pub sample_box: Interval<T>,
    /// Diagnostic only: `sup ‖d(TSx,RSy)‖ / ‖d(Tx,Ry)‖`.
    pub norm_ratio_sup: T,
}

impl<T: Scalar> ModulusEstimate<T> {
    /// `a_hat < 1` with a margin above floating point noise.
    pub fn is_certified(&self) -> bool {
        self.a_hat < T::one() - T::of(CERTIFICATION_MARGIN)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapTriple<T> {
    pub s: RealMap<T>,
    pub t: RealMap<T>,
    pub r: RealMap<T>,
    pub injective_t: Option<InjectivityProbeRecord<T>>,
    pub injective_r: Option<InjectivityProbeRecord<T>>,
    pub family_t: Option<FamilyClassification<T>>,
    pub family_r: Option<FamilyClassification<T>>,
    pub modulus: Option<ModulusRecord<T>>,
}

/// Serializable summary of an [`InjectivityProbe`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InjectivityProbeRecord<T> {
    pub witness: Option<(T, T)>,
    pub samples: usize,
}

/// Serializable summary of a [`ModulusEstimate`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModulusRecord<T> {
    pub a_hat: T,
    pub certified: bool,
}

impl<T: Scalar> MapTriple<T> {
    pub fn new(s: RealMap<T>, t: RealMap<T>, r: RealMap<T>) -> Self {
        Self {
            s,
            t,
            r,
            injective_t: None,
            injective_r: None,
            family_t: None,
            family_r: None,
            modulus: None,
        }
    }

    pub fn parse(s: &str, t: &str, r: &str) -> Result<Self, MappingError> {
        Ok(Self::new(RealMap::parse(s)?, RealMap::parse(t)?, RealMap::parse(r)?))
    }

    /// Same `T`, `R` (and their probes) with `S` replaced by `Sⁿ`.
    pub fn with_power(&self, n: usize) -> Self {
        Self {
            s: self.s.power(n),
            modulus: None,
            ..self.clone()
        }
    }

    /// Runs the injectivity probes on `T` and `R`.
    pub fn probe(
        mut self,
        sample_box: Interval<T>,
        spec: SampleSpec,
        tolerance: T,
    ) -> Result<Self, MappingError> {
        let rec = |p: InjectivityProbe<T>| InjectivityProbeRecord {
            witness: p.witness,
            samples: p.samples,
        };
        self.injective_t = Some(rec(probe_injectivity(&self.t, sample_box, spec, tolerance)?));
        self.injective_r = Some(rec(probe_injectivity(&self.r, sample_box, spec, tolerance)?));
        Ok(self)
    }

    pub fn classify<M: ConeMetric<T>>(
        mut self,
        space: &M,
        sample_box: Interval<T>,
        spec: SampleSpec,
    ) -> Result<Self, MappingError> {
        self.family_t = Some(classify_family(&self.t, space, sample_box, spec, None)?);
        self.family_r = Some(classify_family(&self.r, space, sample_box, spec, None)?);
        Ok(self)
    }

    pub fn record_modulus(mut self, est: &ModulusEstimate<T>) -> Self {
        self.modulus = Some(ModulusRecord {
            a_hat: est.a_hat,
            certified: est.is_certified(),
        });
        self
    }

    /// Probes must have run on both `T` and `R` and found no collision.
    pub fn is_solver_eligible(&self) -> bool {
        matches!((&self.injective_t, &self.injective_r),
            (Some(t), Some(r)) if t.witness.is_none() && r.witness.is_none())
    }

    /// Both auxiliary maps classified into the family of contractive,
    /// nonexpansive or α-contraction maps.
    pub fn aux_maps_in_family(&self) -> bool {
        matches!((&self.family_t, &self.family_r),
            (Some(t), Some(r)) if t.class.in_family() && r.class.in_family())
    }
}

fn eval_at<T: Scalar>(map: &RealMap<T>, x: T) -> Result<T, MappingError> {
    map.eval(x)
}

fn component_ratios<T: Scalar>(num: &SpaceElement<T>, den: &SpaceElement<T>) -> Vec<T> {
    num.coords()
        .iter()
        .zip(den.coords())
        .map(|(&n, &d)| {
            if d.is_zero() {
                if n.is_zero() {
                    T::zero()
                } else {
                    T::infinity()
                }
            } else {
                n / d
            }
        })
        .collect()
}

/// Componentwise modulus of the TR-contraction inequality at `(x, y)`.
pub fn pair_modulus<T: Scalar, M: ConeMetric<T>>(
    triple: &MapTriple<T>,
    space: &M,
    x: T,
    y: T,
) -> Result<PairModulus<T>, MappingError> {
    let sx = eval_at(&triple.s, x)?;
    let sy = eval_at(&triple.s, y)?;
    let numerator = space.distance(eval_at(&triple.t, sx)?, eval_at(&triple.r, sy)?)?;
    let denominator = space.distance(eval_at(&triple.t, x)?, eval_at(&triple.r, y)?)?;
    let per_component = component_ratios(&numerator, &denominator);
    let a = per_component
        .iter()
        .fold(T::zero(), |acc, &v| if v > acc { v } else { acc });
    Ok(PairModulus {
        numerator,
        denominator,
        per_component,
        a,
    })
}

/// Estimates the least `a` with `d(TSx,RSy) ≤ a·d(Tx,Ry)` over `n_pairs`
/// pairs from `sample_box²`.
///
/// Pairs come from a prefix-stable stream, so for a fixed seed the estimate
/// never decreases as `n_pairs` grows. The result is box-relative.
pub fn estimate_tr_modulus<T: Scalar, M: ConeMetric<T>>(
    triple: &MapTriple<T>,
    space: &M,
    sample_box: Interval<T>,
    n_pairs: usize,
    seed: u64,
) -> Result<ModulusEstimate<T>, MappingError> {
    if n_pairs == 0 {
        return Err(MappingError::InvalidArgument("n_pairs must be >= 1".into()));
    }
    for map in [&triple.s, &triple.t, &triple.r] {
        check_box(map, sample_box)?;
    }
    let cone = space.cone();
    let mut est = ModulusEstimate {
        a_hat: T::zero(),
        witness: None,
        n_pairs,
        sample_box,
        norm_ratio_sup: T::zero(),
    };
    for (x, y) in pairs_in_box(sample_box, sample_box, SampleSpec::new(seed, n_pairs)) {
        let pm = pair_modulus(triple, space, x, y)?;
        if est.witness.is_none() || pm.a > est.a_hat {
            est.a_hat = pm.a;
            est.witness = Some((x, y));
        }
        let nd = cone.norm(&pm.denominator).map_err(MetricError::from)?;
        if !nd.is_zero() {
            let nn = cone.norm(&pm.numerator).map_err(MetricError::from)?;
            est.norm_ratio_sup = est.norm_ratio_sup.max(nn / nd);
        }
    }
    Ok(est)
}

/// Checks `a·d(Tx,Ry) − d(TSx,RSy) ∈ P` at one pair, after rounding.
pub fn modulus_holds_at<T: Scalar, M: ConeMetric<T>>(
    triple: &MapTriple<T>,
    space: &M,
    a: T,
    x: T,
    y: T,
) -> Result<bool, MappingError> {
    let pm = pair_modulus(triple, space, x, y)?;
    let scaled = pm.denominator.scale(a).map_err(MetricError::from)?;
    Ok(leq_rounded(space.cone(), &pm.numerator, &scaled).map_err(MetricError::from)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FamilyClass<T> {
    AlphaContraction { alpha: T },
    Nonexpansive,
    Contractive,
    OutsideFamily,
}

impl<T> FamilyClass<T> {
    pub fn in_family(&self) -> bool {
        !matches!(self, FamilyClass::OutsideFamily)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FamilyClassification<T> {
    pub class: FamilyClass<T>,
    pub ratio_sup: T,
    /// `min(ratio_sup, 1)`: the per-map factor in the family argument.
    pub factor: T,
    pub pairs: usize,
}

/// Classifies `map` by its sampled Lipschitz ratio in the space's metric.
///
/// Pairs closer than `10⁻³` of the box width are skipped, keeping rounding
/// in `f(x) − f(y)` well below the classification slacks.
///
/// * α-contraction if `ratio_sup ≤ α < 1` for the given `alpha`, or when no
///   `alpha` is given and `ratio_sup ≤ 1 − 10⁻³` (then `α = ratio_sup`);
/// * contractive if every sampled ratio is below `1 − 10⁻¹²` but the
///   supremum is within `10⁻³` of 1;
/// * nonexpansive if `ratio_sup ≤ 1 + 10⁻¹²`;
/// * otherwise outside the family.
pub fn classify_family<T: Scalar, M: ConeMetric<T>>(
    map: &RealMap<T>,
    space: &M,
    sample_box: Interval<T>,
    spec: SampleSpec,
    alpha: Option<T>,
) -> Result<FamilyClassification<T>, MappingError> {
    check_box(map, sample_box)?;
    let min_gap = sample_box.width() * T::of(1e-3);
    let mut ratio_sup = T::zero();
    let mut pairs = 0usize;
    for (x, y) in pairs_in_box(sample_box, sample_box, spec) {
        if (x - y).abs() < min_gap {
            continue;
        }
        let dxy = space.scalar_distance(x, y)?;
        if dxy.is_zero() {
            continue;
        }
        let fx = map.eval(x)?;
        let fy = map.eval(y)?;
        let ratio = space.scalar_distance(fx, fy)? / dxy;
        ratio_sup = ratio_sup.max(ratio);
        pairs += 1;
    }
    if pairs == 0 {
        return Err(MappingError::InvalidArgument("no usable pairs in sampling box".into()));
    }

    let one = T::one();
    let class = match alpha {
        Some(a) if a < one && ratio_sup <= a => FamilyClass::AlphaContraction { alpha: a },
        None if ratio_sup <= one - T::of(CONTRACTIVE_GAP) => {
            FamilyClass::AlphaContraction { alpha: ratio_sup }
        }
        _ if ratio_sup < one - T::of(NONEXPANSIVE_SLACK) => FamilyClass::Contractive,
        _ if ratio_sup <= one + T::of(NONEXPANSIVE_SLACK) => FamilyClass::Nonexpansive,
        _ => FamilyClass::OutsideFamily,
    };
    Ok(FamilyClassification {
        class,
        ratio_sup,
        factor: ratio_sup.min(one),
        pairs,
    })
}

/// Trial sequence for [`probe_subsequential_convergence`].
pub enum TrialSequence<'a, T> {
    /// `yₙ = n`.
    Linear,
    /// `yₙ = Sⁿ x₀`.
    Picard { s: &'a RealMap<T>, x0: T },
    Explicit(Vec<T>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SubsequentialVerdict {
    SuspectNonSubsequential,
    NoEvidence,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubsequentialProbe {
    pub verdict: SubsequentialVerdict,
    /// Index of the trial sequence that produced the suspicion.
    pub trial: Option<usize>,
    pub note: String,
}

/// Looks for a trial sequence whose image under `map` settles while the
/// sequence itself escapes monotonically beyond `bound`. Heuristic only.
pub fn probe_subsequential_convergence<T: Scalar, M: ConeMetric<T>>(
    map: &RealMap<T>,
    space: &M,
    trials: &[TrialSequence<'_, T>],
    bound: T,
    n_max: usize,
    threshold: T,
) -> Result<SubsequentialProbe, MappingError> {
    if !(bound > T::zero()) {
        return Err(MappingError::InvalidArgument("bound must be positive".into()));
    }
    if n_max < 10 {
        return Err(MappingError::InvalidArgument("n_max must be >= 10".into()));
    }
    let window = (n_max / 4).clamp(2, 10);
    for (index, trial) in trials.iter().enumerate() {
        let ys: Vec<T> = match trial {
            TrialSequence::Linear => (1..=n_max).map(T::of_usize).collect(),
            TrialSequence::Explicit(v) => v.iter().copied().take(n_max).collect(),
            TrialSequence::Picard { s, x0 } => {
                let mut ys = Vec::with_capacity(n_max);
                let mut y = *x0;
                for _ in 0..n_max {
                    ys.push(y);
                    match s.eval(y) {
                        Ok(next) => y = next,
                        Err(_) => break,
                    }
                }
                ys
            }
        };
        if ys.len() < window + 1 {
            continue;
        }
        let images: Option<Vec<T>> = ys.iter().map(|&y| map.eval(y).ok()).collect();
        let Some(images) = images else { continue };
        let diag = match diagnose_sequence(space, |n| images[n - 1], None, window, threshold, images.len()) {
            Ok(d) => d,
            Err(MetricError::OutsideDomain { .. }) => continue,
            Err(e) => return Err(e.into()),
        };
        let tail = &ys[ys.len() - window..];
        let escaping = tail.iter().all(|y| y.abs() > bound)
            && tail.windows(2).all(|w| w[1].abs() > w[0].abs());
        if diag.cauchy && escaping {
            return Ok(SubsequentialProbe {
                verdict: SubsequentialVerdict::SuspectNonSubsequential,
                trial: Some(index),
                note: format!(
                    "image of trial {index} settles while |y_n| escapes past {bound} (heuristic)"
                ),
            });
        }
    }
    Ok(SubsequentialProbe {
        verdict: SubsequentialVerdict::NoEvidence,
        trial: None,
        note: "no trial sequence escaped with a settling image (heuristic)".into(),
    })
}
