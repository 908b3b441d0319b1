//! Picard iteration for TR-contractions.
//!
//! For `xₙ = Sⁿx₀` the solver tracks two interleaved image chains,
//! `d(TSⁿx₀, RSⁿ⁺¹x₀)` and `d(RSⁿx₀, TSⁿ⁺¹x₀)`. Each shrinks by the factor
//! `a` per step in the cone order, so with a normal cone its norm stays under
//! `aⁿ·K·D₀`. Any row above that envelope falsifies the declared modulus.
//!
//! Convergence is declared only when the image gap *and* the iterate step are
//! both below `epsilon` and the residual `‖d(S v₀, v₀)‖` passes.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cone_metric::{escape_detected, leq_rounded, ConeMetric, MetricError, DEFAULT_WINDOW};
use crate::mappings::{estimate_tr_modulus, MapTriple, MappingError, RealMap};
use crate::ordered_space::SpaceElement;
use crate::sampling::Interval;
use crate::scalar::Scalar;

/// Relative slack allowed above the envelope before declaring a violation.
pub const ENVELOPE_SLACK: f64 = 1e-6;

/// Multiple of machine epsilon treated as rounding noise in image gaps.
const NOISE_ULPS: f64 = 64.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("triple is not solver-eligible: {0}")]
    NotEligible(String),
    #[error("iterate left the domain at step {step}: {source}")]
    DomainEscape {
        step: usize,
        #[source]
        source: MappingError,
    },
    #[error(transparent)]
    Mapping(#[from] MappingError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("precondition failed: {message} (order gap {gap:?})")]
    Precondition { message: String, gap: Vec<f64> },
    #[error("image left the ball at step {step} (order gap {gap:?})")]
    BallExit { step: usize, gap: Vec<f64> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig<T> {
    pub x0: T,
    /// Threshold on the image gap and on the iterate step.
    pub epsilon: T,
    /// Threshold on the fixed-point residual.
    pub epsilon_res: T,
    pub max_iter: usize,
    pub window: usize,
    /// Contraction modulus, declared or estimated.
    pub a: T,
    /// Normal constant; `None` uses the space's.
    pub k: Option<T>,
}

impl<T: Scalar> SolveConfig<T> {
    pub fn new(x0: T, a: T) -> Self {
        Self {
            x0,
            epsilon: T::of(1e-10),
            epsilon_res: T::of(1e-8),
            max_iter: 10_000,
            window: DEFAULT_WINDOW,
            a,
            k: None,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.to_string()));
        if !(self.a >= T::zero() && self.a < T::one()) {
            return bad("modulus a must lie in [0, 1)");
        }
        if !(self.epsilon > T::zero()) || !(self.epsilon_res > T::zero()) {
            return bad("epsilon and epsilon_res must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        if self.window < 2 {
            return bad("window must be at least 2");
        }
        if let Some(k) = self.k {
            if !(k >= T::one() && k.is_finite()) {
                return bad("normal constant must be finite and >= 1");
            }
        }
        if !self.x0.is_finite() {
            return bad("x0 must be finite");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SolveStatus {
    FixedPointFound,
    ImageConvergedIteratesDiverged,
    MaxIterExceeded,
    NotAContraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow<T> {
    pub n: usize,
    pub x_n: T,
    /// `‖d(TSⁿx₀, RSⁿ⁺¹x₀)‖`
    pub image_gap: T,
    /// `‖d(RSⁿx₀, TSⁿ⁺¹x₀)‖`
    pub alt_gap: T,
    /// `‖d(Sⁿx₀, Sⁿ⁺¹x₀)‖`
    pub step: T,
    /// `aⁿ·K·D₀`
    pub envelope: T,
    /// `aⁿ⁻¹·K·D₀′` for `n ≥ 1`
    pub alt_envelope: Option<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationTrace<T> {
    pub rows: Vec<TraceRow<T>>,
    pub a: T,
    pub k: T,
    pub d0: T,
    pub d0_alt: Option<T>,
}

impl<T: Scalar> IterationTrace<T> {
    pub const CSV_HEADER: &'static str = "n,x_n,image_gap,step,envelope";

    /// CSV with 17 significant digits per value.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{}", Self::CSV_HEADER)?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.n,
                r.x_n.as_f64(),
                r.image_gap.as_f64(),
                r.step.as_f64(),
                r.envelope.as_f64()
            )?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ascii")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult<T> {
    pub status: SolveStatus,
    pub v0: Option<T>,
    /// Estimate of `lim TSⁿx₀`.
    pub y0: Option<T>,
    /// Estimate of `lim RSⁿx₀`.
    pub z0: Option<T>,
    pub residual: Option<T>,
    pub iterations: usize,
    pub final_envelope: T,
    /// Row whose gap exceeded the envelope.
    pub violation_row: Option<usize>,
    /// `T`, `R` classified into the contractive family and `S` certified, yet
    /// the iteration did not settle: the classification is suspect.
    pub family_warning: bool,
}

/// `a^{n−1}·K·D₀`, the norm bound on `d(TSⁿ⁻¹x₀, RSⁿx₀)`.
pub fn error_bound<T: Scalar>(n: usize, a: T, k: T, d0: T) -> T {
    assert!(n >= 1, "error_bound is defined for n >= 1");
    if d0.is_zero() {
        return T::zero();
    }
    let exp = i32::try_from(n - 1).unwrap_or(i32::MAX);
    a.powi(exp) * k * d0
}

/// `Sⁿ x₀`.
pub fn picard<T: Scalar>(s: &RealMap<T>, x0: T, n: usize) -> Result<T, SolverError> {
    let mut x = x0;
    for step in 1..=n {
        x = s
            .eval(x)
            .map_err(|source| SolverError::DomainEscape { step, source })?;
    }
    Ok(x)
}

fn check_eligible<T: Scalar>(triple: &MapTriple<T>) -> Result<(), SolverError> {
    if triple.is_solver_eligible() {
        return Ok(());
    }
    let describe = |name: &str, p: &Option<crate::mappings::InjectivityProbeRecord<T>>| match p {
        None => Some(format!("{name} not probed for injectivity")),
        Some(rec) => rec
            .witness
            .map(|(x, y)| format!("{name} collides at ({x}, {y})")),
    };
    let msg = [describe("T", &triple.injective_t), describe("R", &triple.injective_r)]
        .into_iter()
        .flatten()
        .collect::<Vec<_>>()
        .join("; ");
    Err(SolverError::NotEligible(msg))
}

/// Norm of `d(p, p + 1)`, used to scale rounding noise.
fn unit_norm<T: Scalar, M: ConeMetric<T>>(space: &M, x0: T) -> T {
    let dom = space.domain();
    let one = T::one();
    if dom.contains(x0 + one) {
        space.scalar_distance(x0, x0 + one).unwrap_or(one)
    } else if dom.contains(x0 - one) {
        space.scalar_distance(x0 - one, x0).unwrap_or(one)
    } else if dom.is_bounded() && dom.width() > T::zero() {
        space.scalar_distance(dom.lo, dom.hi).unwrap_or(one) / dom.width()
    } else {
        one
    }
}

fn eval_step<T: Scalar>(map: &RealMap<T>, x: T, step: usize) -> Result<T, SolverError> {
    map.eval(x)
        .map_err(|source| SolverError::DomainEscape { step, source })
}

/// Core loop; `observe(n, x_{n+1})` runs after every row.
fn run<T, M, F>(
    triple: &MapTriple<T>,
    space: &M,
    cfg: &SolveConfig<T>,
    mut observe: F,
) -> Result<(SolveResult<T>, IterationTrace<T>), SolverError>
where
    T: Scalar,
    M: ConeMetric<T>,
    F: FnMut(usize, T) -> Result<(), SolverError>,
{
    cfg.validate()?;
    check_eligible(triple)?;
    space.check_point(cfg.x0)?;

    let k = cfg.k.unwrap_or_else(|| space.normal_constant());
    let a = cfg.a;
    let slack = T::one() + T::of(ENVELOPE_SLACK);
    let noise_scale = T::of(NOISE_ULPS) * T::epsilon() * unit_norm(space, cfg.x0) * k;
    let w = cfg.window;

    let mut trace = IterationTrace {
        rows: Vec::new(),
        a,
        k,
        d0: T::zero(),
        d0_alt: None,
    };
    let mut result = SolveResult {
        status: SolveStatus::MaxIterExceeded,
        v0: None,
        y0: None,
        z0: None,
        residual: None,
        iterations: 0,
        final_envelope: T::zero(),
        violation_row: None,
        family_warning: false,
    };

    let mut x = cfg.x0;
    let mut tx = eval_step(&triple.t, x, 0)?;
    let mut rx = eval_step(&triple.r, x, 0)?;
    let mut drift: Vec<T> = vec![T::zero()];
    let mut a_pow = T::one();
    let mut a_pow_alt = T::one();

    for n in 0..cfg.max_iter {
        let step_no = n + 1;
        let x_next = eval_step(&triple.s, x, step_no)?;
        space.check_point(x_next).map_err(|e| SolverError::DomainEscape {
            step: step_no,
            source: e.into(),
        })?;
        let tx_next = eval_step(&triple.t, x_next, step_no)?;
        let rx_next = eval_step(&triple.r, x_next, step_no)?;

        let image_gap = space.scalar_distance(tx, rx_next)?;
        let alt_gap = space.scalar_distance(rx, tx_next)?;
        let step = space.scalar_distance(x, x_next)?;

        if n == 0 {
            trace.d0 = image_gap;
        } else {
            a_pow *= a;
        }
        if n == 1 {
            trace.d0_alt = Some(alt_gap);
        } else if n > 1 {
            a_pow_alt *= a;
        }
        let envelope = a_pow * k * trace.d0;
        let alt_envelope = trace.d0_alt.map(|d| a_pow_alt * k * d);

        trace.rows.push(TraceRow {
            n,
            x_n: x,
            image_gap,
            alt_gap,
            step,
            envelope,
            alt_envelope,
        });
        result.iterations = step_no;
        result.final_envelope = envelope;

        let noise = noise_scale * (tx.abs() + rx_next.abs() + rx.abs() + tx_next.abs());
        let violated = image_gap > envelope * slack + noise
            || alt_envelope.is_some_and(|env| alt_gap > env * slack + noise);
        if violated {
            result.status = SolveStatus::NotAContraction;
            result.violation_row = Some(n);
            return Ok((result, trace));
        }

        observe(n, x_next)?;

        if image_gap <= cfg.epsilon && step <= cfg.epsilon {
            let s_v = eval_step(&triple.s, x_next, step_no + 1)?;
            let residual = space.scalar_distance(s_v, x_next)?;
            if residual <= cfg.epsilon_res {
                result.status = SolveStatus::FixedPointFound;
                result.v0 = Some(x_next);
                result.y0 = Some(tx_next);
                result.z0 = Some(rx_next);
                result.residual = Some(residual);
                return Ok((result, trace));
            }
        }

        drift.push(space.scalar_distance(x_next, cfg.x0)?);
        let rows = &trace.rows;
        let images_settled = rows.len() >= w
            && rows[rows.len() - w..]
                .iter()
                .all(|r| r.image_gap <= cfg.epsilon && r.alt_gap <= cfg.epsilon);
        if images_settled && escape_detected(&drift, w) {
            result.status = SolveStatus::ImageConvergedIteratesDiverged;
            result.y0 = Some(tx_next);
            result.z0 = Some(rx_next);
            return Ok((result, trace));
        }

        x = x_next;
        tx = tx_next;
        rx = rx_next;
    }

    result.family_warning = triple.aux_maps_in_family()
        && triple.modulus.as_ref().is_some_and(|m| m.certified);
    Ok((result, trace))
}

/// Picard iteration from `cfg.x0`.
pub fn solve<T: Scalar, M: ConeMetric<T>>(
    triple: &MapTriple<T>,
    space: &M,
    cfg: &SolveConfig<T>,
) -> Result<(SolveResult<T>, IterationTrace<T>), SolverError> {
    run(triple, space, cfg, |_, _| Ok(()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BallEntry<T> {
    pub n: usize,
    /// `R Sⁿ⁺¹ x₀`
    pub image: T,
    /// `c − d(Tx₀, R Sⁿ⁺¹ x₀)`, rounded at the derived-vector tolerance.
    pub slack: SpaceElement<T>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalizedSolve<T> {
    pub result: SolveResult<T>,
    pub trace: IterationTrace<T>,
    /// `(1 − a)c − d(TSx₀, Tx₀)`, which must lie in the cone.
    pub hypothesis_gap: SpaceElement<T>,
    pub ball_log: Vec<BallEntry<T>>,
}

fn to_f64_vec<T: Scalar>(v: &SpaceElement<T>) -> Vec<f64> {
    v.coords().iter().map(|c| c.as_f64()).collect()
}

/// Solve restricted to the ball `B(Tx₀, c) = {y : d(Tx₀, y) ≤ c}`.
///
/// Requires `0 ≪ c` and `d(TSx₀, Tx₀) ≤ (1 − a)c` exactly; then checks at
/// every step that `RSxₙ` stays in the ball.
pub fn solve_localized<T: Scalar, M: ConeMetric<T>>(
    triple: &MapTriple<T>,
    space: &M,
    radius: &SpaceElement<T>,
    cfg: &SolveConfig<T>,
) -> Result<LocalizedSolve<T>, SolverError> {
    cfg.validate()?;
    let cone = space.cone();
    let zero = cone.zero();
    if !cone.strictly_less(&zero, radius).map_err(MetricError::from)? {
        return Err(SolverError::Precondition {
            message: "ball radius c must be an interior point of the cone".into(),
            gap: to_f64_vec(radius),
        });
    }
    let x0 = cfg.x0;
    let tx0 = triple.t.eval(x0)?;
    let tsx0 = triple.t.eval(triple.s.eval(x0)?)?;
    let first_move = space.distance(tsx0, tx0)?;
    let hypothesis_gap = radius
        .scale(T::one() - cfg.a)
        .and_then(|r| r.sub(&first_move))
        .map_err(MetricError::from)?;
    if !cone.contains(&hypothesis_gap).map_err(MetricError::from)? {
        return Err(SolverError::Precondition {
            message: "d(TSx0, Tx0) is not below (1 - a)c".into(),
            gap: to_f64_vec(&hypothesis_gap),
        });
    }

    let mut ball_log = Vec::new();
    let (result, trace) = run(triple, space, cfg, |n, x_next| {
        let image = triple.r.eval(x_next)?;
        let d = space.distance(tx0, image)?;
        let inside = leq_rounded(cone, &d, radius).map_err(MetricError::from)?;
        let slack = radius.sub(&d).map_err(MetricError::from)?;
        if !inside {
            return Err(SolverError::BallExit {
                step: n,
                gap: to_f64_vec(&slack),
            });
        }
        let tol = T::of(crate::cone_metric::ORDER_ROUNDING) * radius.max_abs().max(T::one());
        ball_log.push(BallEntry {
            n,
            image,
            slack: slack.round_small(tol),
        });
        Ok(())
    })?;
    Ok(LocalizedSolve {
        result,
        trace,
        hypothesis_gap,
        ball_log,
    })
}

/// How the modulus of `Sⁿ` is obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PowerModulus<T> {
    Declared(T),
    Estimate {
        sample_box: Interval<T>,
        n_pairs: usize,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSolve<T> {
    pub result: SolveResult<T>,
    pub trace: Option<IterationTrace<T>>,
    pub power: usize,
    pub power_modulus: T,
    /// `‖d(Sⁿ v₀, v₀)‖`
    pub power_residual: Option<T>,
    /// `‖d(S v₀, v₀)‖`
    pub single_residual: Option<T>,
}

/// Solves for a fixed point of `Sⁿ`, then confirms it is fixed by `S` too.
///
/// An uncertified modulus for `Sⁿ` yields `NotAContraction` without
/// iterating. A fixed point of `Sⁿ` that `S` moves by more than
/// `epsilon_res` is reported as `MaxIterExceeded`.
pub fn solve_power<T: Scalar, M: ConeMetric<T>>(
    triple: &MapTriple<T>,
    space: &M,
    n: usize,
    cfg: &SolveConfig<T>,
    modulus: PowerModulus<T>,
) -> Result<PowerSolve<T>, SolverError> {
    if n == 0 {
        return Err(SolverError::InvalidConfig("power must be at least 1".into()));
    }
    let powered = triple.with_power(n);
    let a = match modulus {
        PowerModulus::Declared(a) => a,
        PowerModulus::Estimate {
            sample_box,
            n_pairs,
            seed,
        } => {
            let est = estimate_tr_modulus(&powered, space, sample_box, n_pairs, seed)?;
            if !est.is_certified() {
                return Ok(PowerSolve {
                    result: SolveResult {
                        status: SolveStatus::NotAContraction,
                        v0: None,
                        y0: None,
                        z0: None,
                        residual: None,
                        iterations: 0,
                        final_envelope: T::zero(),
                        violation_row: None,
                        family_warning: false,
                    },
                    trace: None,
                    power: n,
                    power_modulus: est.a_hat,
                    power_residual: None,
                    single_residual: None,
                });
            }
            est.a_hat
        }
    };
    let cfg_n = SolveConfig { a, ..*cfg };
    let (mut result, trace) = solve(&powered, space, &cfg_n)?;
    let mut power_residual = None;
    let mut single_residual = None;
    if let (SolveStatus::FixedPointFound, Some(z)) = (result.status, result.v0) {
        power_residual = result.residual;
        let sz = triple.s.eval(z)?;
        let r1 = space.scalar_distance(sz, z)?;
        single_residual = Some(r1);
        if r1 > cfg.epsilon_res {
            result.status = SolveStatus::MaxIterExceeded;
            result.v0 = None;
        }
    }
    Ok(PowerSolve {
        result,
        trace: Some(trace),
        power: n,
        power_modulus: a,
        power_residual,
        single_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UniquenessVerdict {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessRun<T> {
    pub start: T,
    pub status: Option<SolveStatus>,
    pub v0: Option<T>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport<T> {
    pub runs: Vec<UniquenessRun<T>>,
    pub verdict: UniquenessVerdict,
    /// Largest `|v − v′|` among the fixed points found.
    pub spread: T,
    pub tolerance: T,
}

/// Solves from every start and checks the fixed points agree within
/// `10·epsilon_res`.
pub fn verify_uniqueness<T: Scalar, M: ConeMetric<T>>(
    triple: &MapTriple<T>,
    space: &M,
    cfg: &SolveConfig<T>,
    starts: &[T],
) -> Result<UniquenessReport<T>, SolverError> {
    if starts.len() < 2 {
        return Err(SolverError::InvalidConfig("uniqueness needs at least two starts".into()));
    }
    let runs: Vec<UniquenessRun<T>> = starts
        .iter()
        .map(|&start| {
            let cfg_i = SolveConfig { x0: start, ..*cfg };
            match solve(triple, space, &cfg_i) {
                Ok((res, _)) => UniquenessRun {
                    start,
                    status: Some(res.status),
                    v0: res.v0,
                    error: None,
                },
                Err(e) => UniquenessRun {
                    start,
                    status: None,
                    v0: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let found: Vec<T> = runs.iter().filter_map(|r| r.v0).collect();
    let spread = found.iter().fold(T::zero(), |acc, &v| {
        found.iter().fold(acc, |acc, &u| acc.max((v - u).abs()))
    });
    let tolerance = T::of(10.0) * cfg.epsilon_res;
    let all_found = runs
        .iter()
        .all(|r| r.status == Some(SolveStatus::FixedPointFound));
    let verdict = if !all_found {
        UniquenessVerdict::Inconclusive
    } else if spread <= tolerance {
        UniquenessVerdict::Pass
    } else {
        UniquenessVerdict::Fail
    };
    Ok(UniquenessReport {
        runs,
        verdict,
        spread,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cone_metric::ConeMetricSpace;
    use crate::mappings::DEFAULT_COLLISION_TOLERANCE;
    use crate::ordered_space::NormKind;
    use crate::sampling::SampleSpec;

    fn triple(s: &str, t: &str, r: &str) -> MapTriple<f64> {
        MapTriple::parse(s, t, r)
            .unwrap()
            .probe(
                Interval::new(-5.0, 5.0).unwrap(),
                SampleSpec::new(1, 2000),
                DEFAULT_COLLISION_TOLERANCE,
            )
            .unwrap()
    }

    fn product() -> ConeMetricSpace<f64> {
        ConeMetricSpace::product(1.0, NormKind::Euclidean).unwrap()
    }

    #[test]
    fn picard_examples() {
        let half = RealMap::parse("x/2").unwrap();
        assert_eq!(picard(&half, 1.0, 3).unwrap(), 0.125);
        assert_eq!(picard(&RealMap::parse("x+1").unwrap(), 0.0, 5).unwrap(), 5.0);
        assert_eq!(picard(&RealMap::parse("exp(x)").unwrap(), 0.3, 0).unwrap(), 0.3);
    }

    #[test]
    fn picard_reports_escape_step() {
        let s = RealMap::parse("x+1")
            .unwrap()
            .with_domain(Interval::new(0.0, 2.5).unwrap());
        match picard(&s, 0.0, 5) {
            Err(SolverError::DomainEscape { step, .. }) => assert_eq!(step, 4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn error_bound_examples() {
        assert_eq!(error_bound(1, 0.3, 2.0, 5.0), 10.0);
        assert_eq!(error_bound(4, 0.5, 1.0, 2.0), 0.25);
        for n in 1..20 {
            assert_eq!(error_bound(n, 0.9, 3.0, 0.0), 0.0);
        }
    }

    #[test]
    #[should_panic]
    fn error_bound_rejects_zero_index() {
        error_bound(0, 0.5, 1.0, 1.0);
    }

    #[test]
    fn identity_triple_is_fixed_immediately() {
        let t = triple("x", "x", "x");
        let (res, trace) = solve(&t, &product(), &SolveConfig::new(1.0, 0.5)).unwrap();
        assert_eq!(res.status, SolveStatus::FixedPointFound);
        assert_eq!(res.v0, Some(1.0));
        assert_eq!(res.residual, Some(0.0));
        assert_eq!(trace.rows.len(), 1);
    }

    #[test]
    fn too_small_modulus_is_falsified_at_row_one() {
        let t = triple("x/2", "x", "x");
        let (res, _) = solve(&t, &product(), &SolveConfig::new(1.0, 0.1)).unwrap();
        assert_eq!(res.status, SolveStatus::NotAContraction);
        assert_eq!(res.violation_row, Some(1));
    }

    #[test]
    fn half_map_steps_halve() {
        let t = triple("x/2", "x", "x");
        let (res, trace) = solve(&t, &product(), &SolveConfig::new(1.0, 0.5)).unwrap();
        assert_eq!(res.status, SolveStatus::FixedPointFound);
        for w in trace.rows.windows(2) {
            assert_eq!(w[1].step / w[0].step, 0.5);
        }
    }

    #[test]
    fn rejects_invalid_config() {
        let t = triple("x/2", "x", "x");
        for a in [1.0, -0.1, f64::NAN] {
            assert!(matches!(
                solve(&t, &product(), &SolveConfig::new(1.0, a)),
                Err(SolverError::InvalidConfig(_))
            ));
        }
        let mut cfg = SolveConfig::new(1.0, 0.5);
        cfg.epsilon = 0.0;
        assert!(solve(&t, &product(), &cfg).is_err());
    }

    #[test]
    fn rejects_unprobed_or_colliding_triples() {
        let unprobed = MapTriple::parse("x/2", "x", "x").unwrap();
        assert!(matches!(
            solve(&unprobed, &product(), &SolveConfig::new(1.0, 0.5)),
            Err(SolverError::NotEligible(_))
        ));
        let colliding = triple("x/2", "x*x", "x");
        assert!(matches!(
            solve(&colliding, &product(), &SolveConfig::new(1.0, 0.5)),
            Err(SolverError::NotEligible(_))
        ));
    }

    #[test]
    fn max_iter_exceeded_when_budget_small() {
        let t = triple("x/2", "x", "x");
        let mut cfg = SolveConfig::new(1.0, 0.5);
        cfg.max_iter = 5;
        let (res, trace) = solve(&t, &product(), &cfg).unwrap();
        assert_eq!(res.status, SolveStatus::MaxIterExceeded);
        assert_eq!(trace.rows.len(), 5);
        assert!(!res.family_warning);
    }

    #[test]
    fn localized_preconditions() {
        let t = triple("x/2", "x", "x");
        let cfg = SolveConfig::new(1.0, 0.5);
        let c = |v: f64| SpaceElement::finite(vec![v, v]).unwrap();
        let ok = solve_localized(&t, &product(), &c(1.2), &cfg).unwrap();
        assert_eq!(ok.result.status, SolveStatus::FixedPointFound);
        match solve_localized(&t, &product(), &c(0.9), &cfg) {
            Err(SolverError::Precondition { gap, .. }) => {
                assert!(gap.iter().all(|g| (g + 0.05).abs() < 1e-15))
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            solve_localized(&t, &product(), &c(0.0), &cfg),
            Err(SolverError::Precondition { .. })
        ));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let t = triple("x/2", "x", "x");
        let (_, trace) = solve(&t, &product(), &SolveConfig::new(1.0, 0.5)).unwrap();
        let csv = trace.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("n,x_n,image_gap,step,envelope"));
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first[0], "0");
        assert_eq!(first[1], "1.0000000000000000e0");
        assert_eq!(csv.lines().count(), trace.rows.len() + 1);
        let parsed: f64 = first[2].parse().unwrap();
        assert_eq!(parsed, trace.rows[0].image_gap);
    }

    #[test]
    fn single_precision_solve() {
        let t = MapTriple::<f32>::parse("x/2", "x", "x")
            .unwrap()
            .probe(Interval::new(-5.0, 5.0).unwrap(), SampleSpec::new(1, 500), 1e-6)
            .unwrap();
        let space = ConeMetricSpace::<f32>::product(1.0, NormKind::Euclidean).unwrap();
        let mut cfg = SolveConfig::new(1.0f32, 0.5);
        cfg.epsilon = 1e-6;
        cfg.epsilon_res = 1e-5;
        let (res, _) = solve(&t, &space, &cfg).unwrap();
        assert_eq!(res.status, SolveStatus::FixedPointFound);
        assert!(res.v0.unwrap().abs() < 1e-5);
    }
}
