//! Cone metric spaces `d: M × M → E` over the real line, axiom checking and
//! sequence diagnostics.
//!
//! Convergence is judged through `‖d(xₙ, x)‖`, which is equivalent to the
//! order-based definition whenever the cone is normal. Every space carries the
//! normal constant `K` that licenses this reduction.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ordered_space::{
    estimate_normal_constant, ConeKind, Layout, NormKind, OrderCone, SpaceElement, SpaceError,
};
use crate::report::{AxiomOutcome, AxiomReport, Witness};
use crate::sampling::{Interval, SampleSpec};
use crate::scalar::Scalar;

/// Relative magnitude below which derived order gaps are rounded to zero.
pub const ORDER_ROUNDING: f64 = 1e-12;

/// Default convergence window.
pub const DEFAULT_WINDOW: usize = 10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("point {point} outside domain [{lo}, {hi}]")]
    OutsideDomain { point: f64, lo: f64, hi: f64 },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("invalid metric parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid diagnostic settings: {0}")]
    InvalidDiagnostics(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MetricKind<T> {
    /// `d(x,y) = (|x−y|, α|x−y|)` into the orthant of `ℝ²`.
    Product { alpha: T },
    /// `d(x,y) = |x−y|·eᵗ` sampled on an `m`-point grid of `[0,1]`.
    ExpWeighted { grid_points: usize },
}

/// Where the normal constant in use came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormalConstantSource {
    /// Norm is monotone on the cone, so `K = 1`.
    MonotoneNorm,
    Declared,
    Measured,
}

/// Vector-valued distance on a subset of `ℝ`.
pub trait ConeMetric<T: Scalar> {
    fn cone(&self) -> &OrderCone<T>;
    fn domain(&self) -> Interval<T>;
    fn distance(&self, x: T, y: T) -> Result<SpaceElement<T>, MetricError>;
    /// Normal constant `K` in use for norm-based convergence tests.
    fn normal_constant(&self) -> T;

    fn scalar_distance(&self, x: T, y: T) -> Result<T, MetricError> {
        let d = self.distance(x, y)?;
        Ok(self.cone().norm(&d)?)
    }

    fn check_point(&self, x: T) -> Result<(), MetricError> {
        let dom = self.domain();
        if dom.contains(x) {
            Ok(())
        } else {
            Err(MetricError::OutsideDomain {
                point: x.as_f64(),
                lo: dom.lo.as_f64(),
                hi: dom.hi.as_f64(),
            })
        }
    }
}

/// One of the two builtin cone metrics on an interval of `ℝ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeMetricSpace<T> {
    domain: Interval<T>,
    metric: MetricKind<T>,
    cone: OrderCone<T>,
    k: T,
    k_source: NormalConstantSource,
    /// Fixed cone vector `v₀` with `d(x,y) = |x−y|·v₀`.
    unit: SpaceElement<T>,
}

impl<T: Scalar> ConeMetricSpace<T> {
    /// Samples used when a skew norm forces measuring `K` at construction.
    pub const DEFAULT_K_SAMPLES: SampleSpec = SampleSpec {
        seed: 0,
        count: 100_000,
    };

    pub fn new(
        domain: Interval<T>,
        metric: MetricKind<T>,
        norm: NormKind<T>,
    ) -> Result<Self, MetricError> {
        let (kind, unit) = match metric {
            MetricKind::Product { alpha } => {
                if !(alpha >= T::zero() && alpha.is_finite()) {
                    return Err(MetricError::InvalidParameter(format!(
                        "alpha must be finite and nonnegative, got {alpha}"
                    )));
                }
                (
                    ConeKind::Orthant(2),
                    SpaceElement::finite(vec![T::one(), alpha])?,
                )
            }
            MetricKind::ExpWeighted { grid_points } => {
                if grid_points == 0 {
                    return Err(MetricError::InvalidParameter(
                        "grid must have at least one point".into(),
                    ));
                }
                if matches!(norm, NormKind::Skew(_)) {
                    return Err(SpaceError::SkewDimension(Layout::GridFunction(grid_points)).into());
                }
                (
                    ConeKind::NonnegGrid(grid_points),
                    SpaceElement::grid_from_fn(grid_points, T::exp)?,
                )
            }
        };
        let cone = OrderCone::new(kind, norm)?;
        let (k, k_source, cone) = match norm {
            NormKind::Skew(_) => {
                let est = estimate_normal_constant(&cone, Self::DEFAULT_K_SAMPLES);
                let cone = cone.with_measured_normal_constant(Self::DEFAULT_K_SAMPLES);
                (est.k_hat.max(T::one()), NormalConstantSource::Measured, cone)
            }
            _ => (T::one(), NormalConstantSource::MonotoneNorm, cone),
        };
        Ok(Self {
            domain,
            metric,
            cone,
            k,
            k_source,
            unit,
        })
    }

    /// Product space: `(|x−y|, α|x−y|)` on the whole real line.
    pub fn product(alpha: T, norm: NormKind<T>) -> Result<Self, MetricError> {
        Self::new(Interval::real_line(), MetricKind::Product { alpha }, norm)
    }

    /// Exponentially weighted grid space: `|x−y|·eᵗ` with the discrete sup norm.
    pub fn exp_weighted(grid_points: usize) -> Result<Self, MetricError> {
        Self::new(
            Interval::real_line(),
            MetricKind::ExpWeighted { grid_points },
            NormKind::Supremum,
        )
    }

    pub fn with_domain(mut self, domain: Interval<T>) -> Self {
        self.domain = domain;
        self
    }

    /// Uses a declared normal constant; it must be at least 1.
    pub fn with_normal_constant(mut self, k: T) -> Result<Self, MetricError> {
        if !(k >= T::one() && k.is_finite()) {
            return Err(MetricError::InvalidParameter(format!(
                "normal constant must be finite and >= 1, got {k}"
            )));
        }
        self.k = k;
        self.k_source = NormalConstantSource::Declared;
        Ok(self)
    }

    /// Measures `K` by sampling and uses `max(1, K̂)`.
    pub fn with_measured_normal_constant(mut self, spec: SampleSpec) -> Self {
        let est = estimate_normal_constant(&self.cone, spec);
        self.cone = self.cone.with_measured_normal_constant(spec);
        self.k = est.k_hat.max(T::one());
        self.k_source = NormalConstantSource::Measured;
        self
    }

    pub fn metric_kind(&self) -> MetricKind<T> {
        self.metric
    }

    pub fn normal_constant_source(&self) -> NormalConstantSource {
        self.k_source
    }

    /// The vector `v₀ = d(0, 1)`.
    pub fn unit_vector(&self) -> &SpaceElement<T> {
        &self.unit
    }
}

impl<T: Scalar> ConeMetric<T> for ConeMetricSpace<T> {
    fn cone(&self) -> &OrderCone<T> {
        &self.cone
    }

    fn domain(&self) -> Interval<T> {
        self.domain
    }

    fn distance(&self, x: T, y: T) -> Result<SpaceElement<T>, MetricError> {
        self.check_point(x)?;
        self.check_point(y)?;
        Ok(self.unit.scale((x - y).abs())?)
    }

    fn normal_constant(&self) -> T {
        self.k
    }
}

/// Cone metric backed by an arbitrary closure. Used to inject faults into
/// the axiom checkers.
pub struct FnMetric<T, F> {
    cone: OrderCone<T>,
    domain: Interval<T>,
    k: T,
    f: F,
}

impl<T, F> FnMetric<T, F>
where
    T: Scalar,
    F: Fn(T, T) -> Result<SpaceElement<T>, MetricError>,
{
    pub fn new(cone: OrderCone<T>, domain: Interval<T>, k: T, f: F) -> Self {
        Self { cone, domain, k, f }
    }
}

impl<T, F> ConeMetric<T> for FnMetric<T, F>
where
    T: Scalar,
    F: Fn(T, T) -> Result<SpaceElement<T>, MetricError>,
{
    fn cone(&self) -> &OrderCone<T> {
        &self.cone
    }

    fn domain(&self) -> Interval<T> {
        self.domain
    }

    fn distance(&self, x: T, y: T) -> Result<SpaceElement<T>, MetricError> {
        self.check_point(x)?;
        self.check_point(y)?;
        (self.f)(x, y)
    }

    fn normal_constant(&self) -> T {
        self.k
    }
}

/// Deliberately broken metrics with analytically known violations.
pub mod faults {
    use super::*;

    /// `d′(x,y) = d(x,y) − offset`; breaks `d(x,x) = 0`.
    pub fn shifted<T: Scalar>(
        space: ConeMetricSpace<T>,
        offset: SpaceElement<T>,
    ) -> FnMetric<T, impl Fn(T, T) -> Result<SpaceElement<T>, MetricError>> {
        let cone = space.cone().clone();
        let domain = space.domain();
        let k = space.normal_constant();
        FnMetric::new(cone, domain, k, move |x, y| {
            Ok(space.distance(x, y)?.sub(&offset)?)
        })
    }

    /// `d′(x,y) = (max(x−y, 0), 0)`; breaks symmetry.
    pub fn one_sided<T: Scalar>(
        domain: Interval<T>,
    ) -> FnMetric<T, impl Fn(T, T) -> Result<SpaceElement<T>, MetricError>> {
        let cone = OrderCone::orthant(2, NormKind::Euclidean).expect("orthant(2)");
        FnMetric::new(cone, domain, T::one(), |x: T, y: T| {
            Ok(SpaceElement::finite(vec![(x - y).max(T::zero()), T::zero()])?)
        })
    }
}

fn rounding_tolerance<T: Scalar>(scale: T) -> T {
    T::of(ORDER_ROUNDING) * scale.max(T::one())
}

/// `a ≤ b` after rounding `b − a` at the derived-vector tolerance.
pub(crate) fn leq_rounded<T: Scalar>(
    cone: &OrderCone<T>,
    a: &SpaceElement<T>,
    b: &SpaceElement<T>,
) -> Result<bool, SpaceError> {
    let gap = b.sub(a)?;
    let tol = rounding_tolerance(a.max_abs().max(b.max_abs()));
    cone.contains(&gap.round_small(tol))
}

/// Sampled check of `(d1)`–`(d3)` on triples drawn from `sample_box`.
///
/// About one triple in eight reuses `x` as `y` so that `d(x,x) = 0` is
/// exercised. The triangle inequality is tested in the cone order after
/// rounding the gap vector at `1e−12` relative magnitude.
pub fn check_metric_axioms<T: Scalar, M: ConeMetric<T>>(
    metric: &M,
    sample_box: Interval<T>,
    spec: SampleSpec,
) -> AxiomReport<T> {
    let mut rng = spec.rng();
    let cone = metric.cone();
    let zero = cone.zero();
    let mut d1 = AxiomOutcome::new("d1");
    let mut d2 = AxiomOutcome::new("d2");
    let mut d3 = AxiomOutcome::new("d3");
    let draw = |rng: &mut rand_chacha::ChaCha8Rng| sample_box.lerp(rng.random::<f64>());

    for _ in 0..spec.count.max(1) {
        let x = draw(&mut rng);
        let y = if rng.random_range(0..8u8) == 0 { x } else { draw(&mut rng) };
        let z = draw(&mut rng);
        let (dxy, dyx, dxz, dyz) = match (
            metric.distance(x, y),
            metric.distance(y, x),
            metric.distance(x, z),
            metric.distance(y, z),
        ) {
            (Ok(a), Ok(b), Ok(c), Ok(d)) => (a, b, c, d),
            _ => {
                let w = || Witness {
                    values: vec![x, y, z],
                    note: "distance evaluation failed".into(),
                };
                d1.record(false, w);
                continue;
            }
        };

        let positivity = if x == y {
            dxy.is_zero()
        } else {
            cone.leq(&zero, &dxy).unwrap_or(false) && !dxy.is_zero()
        };
        d1.record(positivity, || Witness {
            values: vec![x, y],
            note: format!("d({x}, {y}) = {:?}", dxy.coords()),
        });

        d2.record(dxy == dyx, || Witness {
            values: vec![x, y],
            note: format!("d(x,y) = {:?} but d(y,x) = {:?}", dxy.coords(), dyx.coords()),
        });

        let triangle = dxz
            .add(&dyz)
            .ok()
            .and_then(|sum| leq_rounded(cone, &dxy, &sum).ok())
            .unwrap_or(false);
        d3.record(triangle, || Witness {
            values: vec![x, y, z],
            note: "d(x,y) not below d(x,z) + d(y,z)".into(),
        });
    }

    AxiomReport {
        outcomes: vec![d1, d2, d3],
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Converging,
    Cauchy,
    Diverging,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequenceDiagnostics<T> {
    /// `‖d(xₙ, limit)‖` when a limit candidate is given, otherwise the
    /// consecutive gaps `‖d(xₙ, xₙ₊₁)‖`.
    pub tail_norms: Vec<T>,
    pub verdict: Verdict,
    pub window: usize,
    pub threshold: T,
    pub converging: bool,
    pub cauchy: bool,
    pub diverging: bool,
}

fn window_min<T: Scalar>(values: &[T], end: usize, w: usize) -> T {
    values[end + 1 - w..=end]
        .iter()
        .fold(T::infinity(), |acc, &v| acc.min(v))
}

/// Affine-escape test on drift norms `rₙ = ‖d(xₙ, x₀)‖`.
///
/// Fires when, at both of the last two indices `N`, the minimum of `r` over
/// the `w` values ending at `N` exceeds twice the (positive) minimum over the
/// `w` values ending at `⌊N/2⌋`.
pub fn escape_detected<T: Scalar>(drift: &[T], w: usize) -> bool {
    if w == 0 || drift.len() < 2 * w + 2 {
        return false;
    }
    let two = T::of(2.0);
    let last = drift.len() - 1;
    [last - 1, last].iter().all(|&end| {
        let earlier = window_min(drift, end / 2, w);
        earlier > T::zero() && window_min(drift, end, w) > two * earlier
    })
}

/// Classifies the sequence `x₁, …, x_max_n` produced by `sequence(n)`.
///
/// * converging: a limit is given and the last `w` values of
///   `‖d(xₙ, limit)‖` are `< ε`;
/// * cauchy: `‖d(xₙ, xₘ)‖ < 2Kε` over the last `w × w` window (the factor
///   `2K` is the triangle/normality constant, so converging implies cauchy);
/// * diverging: [`escape_detected`] on the drift from `x₁`.
pub fn diagnose_sequence<T, M, F>(
    metric: &M,
    mut sequence: F,
    limit: Option<T>,
    window: usize,
    threshold: T,
    max_n: usize,
) -> Result<SequenceDiagnostics<T>, MetricError>
where
    T: Scalar,
    M: ConeMetric<T>,
    F: FnMut(usize) -> T,
{
    if window < 2 {
        return Err(MetricError::InvalidDiagnostics("window must be >= 2".into()));
    }
    if !(threshold > T::zero()) {
        return Err(MetricError::InvalidDiagnostics("threshold must be positive".into()));
    }
    if max_n < window {
        return Err(MetricError::InvalidDiagnostics("max_n must be >= window".into()));
    }

    let xs: Vec<T> = (1..=max_n).map(&mut sequence).collect();
    let tail_norms = match limit {
        Some(l) => xs
            .iter()
            .map(|&x| metric.scalar_distance(x, l))
            .collect::<Result<Vec<_>, _>>()?,
        None => xs
            .windows(2)
            .map(|p| metric.scalar_distance(p[0], p[1]))
            .collect::<Result<Vec<_>, _>>()?,
    };

    let converging = limit.is_some()
        && tail_norms.len() >= window
        && tail_norms[tail_norms.len() - window..]
            .iter()
            .all(|&r| r < threshold);

    let cauchy_bound = T::of(2.0) * metric.normal_constant() * threshold;
    let tail = &xs[xs.len() - window..];
    let mut cauchy = true;
    'outer: for (i, &a) in tail.iter().enumerate() {
        for &b in &tail[i + 1..] {
            if metric.scalar_distance(a, b)? >= cauchy_bound {
                cauchy = false;
                break 'outer;
            }
        }
    }

    let drift = xs
        .iter()
        .map(|&x| metric.scalar_distance(x, xs[0]))
        .collect::<Result<Vec<_>, _>>()?;
    let diverging = escape_detected(&drift, window);

    let verdict = if converging {
        Verdict::Converging
    } else if cauchy {
        Verdict::Cauchy
    } else if diverging {
        Verdict::Diverging
    } else {
        Verdict::Inconclusive
    };

    Ok(SequenceDiagnostics {
        tail_norms,
        verdict,
        window,
        threshold,
        converging,
        cauchy,
        diverging,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn product(alpha: f64) -> ConeMetricSpace<f64> {
        ConeMetricSpace::product(alpha, NormKind::Euclidean).unwrap()
    }

    fn unit_box() -> Interval<f64> {
        Interval::new(-10.0, 10.0).unwrap()
    }

    #[test]
    fn distance_examples() {
        let s = product(2.0);
        assert_eq!(s.distance(1.0, 3.0).unwrap().coords(), &[2.0, 4.0]);
        assert!(s.distance(7.5, 7.5).unwrap().is_zero());

        let e = ConeMetricSpace::exp_weighted(3).unwrap();
        let d = e.distance(0.0, 1.0).unwrap();
        let want = [1.0, 0.5f64.exp(), 1.0f64.exp()];
        for (a, b) in d.coords().iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((d.coords()[1] - 1.648_721_270_700_128).abs() < 1e-15);
    }

    #[test]
    fn scalar_distance_examples() {
        let s = product(2.0);
        assert!((s.scalar_distance(1.0, 3.0).unwrap() - 20f64.sqrt()).abs() < 1e-15);
        assert_eq!(s.scalar_distance(4.0, 4.0).unwrap(), 0.0);
        let e = ConeMetricSpace::exp_weighted(33).unwrap();
        assert_eq!(e.scalar_distance(0.0, 1.0).unwrap(), std::f64::consts::E);
    }

    #[test]
    fn distance_rejects_points_outside_domain() {
        let s = product(1.0).with_domain(Interval::new(0.0, 1.0).unwrap());
        assert!(matches!(
            s.distance(0.5, 2.0),
            Err(MetricError::OutsideDomain { .. })
        ));
        // inclusive bounds
        assert!(s.distance(0.0, 1.0).is_ok());
    }

    #[test]
    fn invalid_parameters() {
        assert!(ConeMetricSpace::<f64>::product(-1.0, NormKind::Euclidean).is_err());
        assert!(ConeMetricSpace::<f64>::exp_weighted(0).is_err());
        assert!(product(1.0).with_normal_constant(0.5).is_err());
    }

    #[test]
    fn skew_space_measures_k() {
        let s = ConeMetricSpace::product(1.0, NormKind::Skew(0.1)).unwrap();
        assert_eq!(s.normal_constant_source(), NormalConstantSource::Measured);
        assert!(s.normal_constant() >= 5.5);
    }

    #[test]
    fn builtin_metrics_pass_axioms() {
        let spec = SampleSpec::new(11, 2000);
        assert!(check_metric_axioms(&product(1.0), unit_box(), spec).all_passed());
        let e = ConeMetricSpace::exp_weighted(33).unwrap();
        assert!(check_metric_axioms(&e, unit_box(), spec).all_passed());
    }

    #[test]
    fn shifted_metric_breaks_d1() {
        let offset = SpaceElement::finite(vec![0.1, 0.1]).unwrap();
        let bad = faults::shifted(product(1.0), offset);
        let report = check_metric_axioms(&bad, unit_box(), SampleSpec::new(2, 500));
        let d1 = report.outcome("d1").unwrap();
        assert!(!d1.passed());
        assert!(d1.witness.is_some());
    }

    #[test]
    fn one_sided_metric_breaks_d2() {
        let bad = faults::one_sided(Interval::real_line());
        let report = check_metric_axioms(&bad, unit_box(), SampleSpec::new(2, 500));
        let d2 = report.outcome("d2").unwrap();
        assert!(!d2.passed());
        let w = &d2.witness.as_ref().unwrap().values;
        assert_ne!(bad.distance(w[0], w[1]), bad.distance(w[1], w[0]));
    }

    #[test]
    fn diagnose_reciprocal_converges() {
        let s = product(1.0);
        let d = diagnose_sequence(&s, |n| 1.0 / n as f64, Some(0.0), 10, 1e-2, 1000).unwrap();
        assert_eq!(d.verdict, Verdict::Converging);
        assert!(d.cauchy);
    }

    #[test]
    fn diagnose_linear_diverges() {
        let s = product(1.0);
        let d = diagnose_sequence(&s, |n| n as f64, None, 10, 1e-10, 100).unwrap();
        assert_eq!(d.verdict, Verdict::Diverging);
    }

    #[test]
    fn diagnose_alternating_is_inconclusive() {
        let s = product(1.0);
        let d = diagnose_sequence(
            &s,
            |n| if n % 2 == 0 { 1.0 } else { -1.0 },
            None,
            10,
            0.1,
            200,
        )
        .unwrap();
        assert_eq!(d.verdict, Verdict::Inconclusive);
        let gap = s.scalar_distance(-1.0, 1.0).unwrap();
        assert!(d.tail_norms.iter().all(|&t| t == gap));
    }

    #[test]
    fn diagnose_rejects_bad_settings() {
        let s = product(1.0);
        assert!(diagnose_sequence(&s, |n| n as f64, None, 1, 0.1, 100).is_err());
        assert!(diagnose_sequence(&s, |n| n as f64, None, 10, 0.0, 100).is_err());
        assert!(diagnose_sequence(&s, |n| n as f64, None, 10, 0.1, 5).is_err());
    }

    #[test]
    fn escape_needs_enough_history() {
        let drift: Vec<f64> = (0..15).map(|n| n as f64).collect();
        assert!(!escape_detected(&drift, 10));
        let drift: Vec<f64> = (0..40).map(|n| n as f64).collect();
        assert!(escape_detected(&drift, 10));
        let bounded: Vec<f64> = (0..40).map(|n| (n % 2) as f64).collect();
        assert!(!escape_detected(&bounded, 10));
    }
}
