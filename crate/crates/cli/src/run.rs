use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use conefix_core::cone_metric::check_metric_axioms;
use conefix_core::mappings::{estimate_tr_modulus, ModulusEstimate, DEFAULT_COLLISION_TOLERANCE};
use conefix_core::ordered_space::{estimate_normal_constant, verify_cone_axioms};
use conefix_core::solver::{
    solve, solve_localized, solve_power, verify_uniqueness, IterationTrace, PowerModulus,
    UniquenessVerdict,
};
use conefix_core::{ConeMetric, ConeMetricSpace, MapTriple, SampleSpec, SolveConfig, SolveStatus};
use serde::Serialize;
use serde_json::{json, Value};

use crate::scenario::{Mode, ModulusSpec, Scenario};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_CONTRACTION: i32 = 2;
pub const EXIT_IMAGE_ONLY: i32 = 3;
pub const EXIT_MAX_ITER: i32 = 4;
pub const EXIT_CHECK_FAILED: i32 = 5;

/// Samples used by the injectivity probes and the family classifier.
const PROBE_SAMPLES: usize = 4_096;

pub fn exit_code(status: SolveStatus) -> i32 {
    match status {
        SolveStatus::FixedPointFound => EXIT_OK,
        SolveStatus::NotAContraction => EXIT_NOT_CONTRACTION,
        SolveStatus::ImageConvergedIteratesDiverged => EXIT_IMAGE_ONLY,
        SolveStatus::MaxIterExceeded => EXIT_MAX_ITER,
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Directory for report files; nothing is written when `None`.
    pub out_dir: Option<PathBuf>,
    pub timestamp: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyNumber {
    pub label: String,
    pub value: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub mode: Mode,
    pub seed: u64,
    pub exit_code: i32,
    pub outcome: String,
    pub key: KeyNumber,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp_unix: Option<u64>,
    pub details: Value,
    #[serde(skip)]
    pub trace: Option<IterationTrace<f64>>,
}

impl Report {
    fn new(s: &Scenario, exit_code: i32, outcome: impl Into<String>, key: (&str, Option<f64>)) -> Self {
        Self {
            scenario: s.name.clone(),
            mode: s.mode,
            seed: s.solver.seed,
            exit_code,
            outcome: outcome.into(),
            key: KeyNumber {
                label: key.0.to_string(),
                value: key.1,
            },
            timestamp_unix: None,
            details: Value::Null,
            trace: None,
        }
    }

    fn with(mut self, details: Value, trace: Option<IterationTrace<f64>>) -> Self {
        self.details = details;
        self.trace = trace;
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Writes `<name>.result.json` and, if present, `<name>.trace.csv`.
    pub fn write_files(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let json_path = dir.join(format!("{}.result.json", self.scenario));
        fs::write(&json_path, self.to_json() + "\n")
            .with_context(|| format!("writing {}", json_path.display()))?;
        let mut written = vec![json_path];
        if let Some(trace) = &self.trace {
            let csv_path = dir.join(format!("{}.trace.csv", self.scenario));
            fs::write(&csv_path, trace.to_csv())
                .with_context(|| format!("writing {}", csv_path.display()))?;
            written.push(csv_path);
        }
        Ok(written)
    }
}

pub fn run_scenario(s: &Scenario, opts: &RunOptions) -> Result<Report> {
    let space = s.build_space()?;
    let mut report = match s.mode {
        Mode::Axioms => run_axioms(s, &space),
        Mode::Modulus => run_modulus(s, &space)?,
        Mode::Solve => run_solve(s, &space)?,
        Mode::SolveLocalized => run_localized(s, &space)?,
        Mode::SolvePower => run_power(s, &space)?,
        Mode::Uniqueness => run_uniqueness(s, &space)?,
    };
    if opts.timestamp {
        report.timestamp_unix = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }
    if let Some(dir) = &opts.out_dir {
        report.write_files(dir)?;
    }
    Ok(report)
}

fn run_axioms(s: &Scenario, space: &ConeMetricSpace<f64>) -> Report {
    let spec = SampleSpec::new(s.solver.seed, s.solver.n_pairs);
    let cone = verify_cone_axioms(space.cone(), spec);
    let metric = check_metric_axioms(space, s.sample_box(), spec);
    let normal = estimate_normal_constant(space.cone(), spec);
    let passed = cone.all_passed() && metric.all_passed();
    let (code, outcome) = if passed {
        (EXIT_OK, "checks passed")
    } else {
        (EXIT_CHECK_FAILED, "axiom violations found")
    };
    Report::new(s, code, outcome, ("K_hat", Some(normal.k_hat))).with(
        json!({
            "cone_axioms": cone,
            "metric_axioms": metric,
            "normal_constant": normal,
            "normal_constant_in_use": space.normal_constant(),
        }),
        None,
    )
}

fn probed_triple(s: &Scenario, space: &ConeMetricSpace<f64>) -> Result<MapTriple<f64>> {
    let probe_spec = SampleSpec::new(s.solver.seed, PROBE_SAMPLES);
    let bx = s.sample_box();
    Ok(s
        .build_triple()?
        .probe(bx, probe_spec, DEFAULT_COLLISION_TOLERANCE)?
        .classify(space, bx, probe_spec)?)
}

fn estimate(s: &Scenario, space: &ConeMetricSpace<f64>, triple: &MapTriple<f64>) -> Result<ModulusEstimate<f64>> {
    Ok(estimate_tr_modulus(
        triple,
        space,
        s.sample_box(),
        s.solver.n_pairs,
        s.solver.seed,
    )?)
}

fn run_modulus(s: &Scenario, space: &ConeMetricSpace<f64>) -> Result<Report> {
    let triple = probed_triple(s, space)?;
    let est = estimate(s, space, &triple)?;
    let (code, outcome) = if est.is_certified() {
        (EXIT_OK, "certified TR-contraction on the sampled box")
    } else {
        (EXIT_NOT_CONTRACTION, "no modulus below 1 on the sampled box")
    };
    Ok(Report::new(s, code, outcome, ("a_hat", Some(est.a_hat))).with(
        json!({
            "estimate": est,
            "certified": est.is_certified(),
            "injectivity_t": triple.injective_t,
            "injectivity_r": triple.injective_r,
            "family_t": triple.family_t,
            "family_r": triple.family_r,
        }),
        None,
    ))
}

type Resolved = (f64, MapTriple<f64>, Option<ModulusEstimate<f64>>);

/// Resolves `solver.a`; `Err(report)` when the estimate is not certified.
fn resolve_modulus(
    s: &Scenario,
    space: &ConeMetricSpace<f64>,
    triple: MapTriple<f64>,
) -> Result<std::result::Result<Resolved, Report>> {
    match s.solver.a {
        ModulusSpec::Value(a) => Ok(Ok((a, triple, None))),
        ModulusSpec::Keyword(_) => {
            let est = estimate(s, space, &triple)?;
            if !est.is_certified() {
                let report = Report::new(
                    s,
                    EXIT_NOT_CONTRACTION,
                    format!("{:?}", SolveStatus::NotAContraction),
                    ("a_hat", Some(est.a_hat)),
                )
                .with(json!({ "estimate": est }), None);
                return Ok(Err(report));
            }
            let triple = triple.record_modulus(&est);
            Ok(Ok((est.a_hat, triple, Some(est))))
        }
    }
}

fn config(s: &Scenario, a: f64) -> SolveConfig<f64> {
    SolveConfig {
        epsilon: s.solver.epsilon,
        epsilon_res: s.solver.epsilon_res,
        max_iter: s.solver.max_iter,
        ..SolveConfig::new(s.solver.x0, a)
    }
}

fn solve_key(result: &conefix_core::SolveResult<f64>, trace: &IterationTrace<f64>) -> (&'static str, Option<f64>) {
    match result.status {
        SolveStatus::ImageConvergedIteratesDiverged => ("final_step", trace.rows.last().map(|r| r.step)),
        _ => ("v0", result.v0),
    }
}

fn run_solve(s: &Scenario, space: &ConeMetricSpace<f64>) -> Result<Report> {
    let triple = probed_triple(s, space)?;
    let (a, triple, est) = match resolve_modulus(s, space, triple)? {
        Ok(v) => v,
        Err(report) => return Ok(report),
    };
    let (result, trace) = solve(&triple, space, &config(s, a))?;
    let key = solve_key(&result, &trace);
    Ok(
        Report::new(s, exit_code(result.status), format!("{:?}", result.status), key).with(
            json!({
                "result": result,
                "a": a,
                "estimate": est,
                "normal_constant": trace.k,
                "d0": trace.d0,
                "d0_alt": trace.d0_alt,
            }),
            Some(trace),
        ),
    )
}

fn run_localized(s: &Scenario, space: &ConeMetricSpace<f64>) -> Result<Report> {
    let triple = probed_triple(s, space)?;
    let (a, triple, est) = match resolve_modulus(s, space, triple)? {
        Ok(v) => v,
        Err(report) => return Ok(report),
    };
    let radius = s.radius(space)?;
    let out = solve_localized(&triple, space, &radius, &config(s, a))?;
    let key = solve_key(&out.result, &out.trace);
    Ok(Report::new(
        s,
        exit_code(out.result.status),
        format!("{:?}", out.result.status),
        key,
    )
    .with(
        json!({
            "result": out.result,
            "a": a,
            "estimate": est,
            "radius": radius,
            "hypothesis_gap": out.hypothesis_gap,
            "ball_log": out.ball_log,
        }),
        Some(out.trace),
    ))
}

fn run_power(s: &Scenario, space: &ConeMetricSpace<f64>) -> Result<Report> {
    let triple = probed_triple(s, space)?;
    let n = s.solver.power.unwrap_or(1);
    let modulus = match s.solver.a {
        ModulusSpec::Value(a) => PowerModulus::Declared(a),
        ModulusSpec::Keyword(_) => PowerModulus::Estimate {
            sample_box: s.sample_box(),
            n_pairs: s.solver.n_pairs,
            seed: s.solver.seed,
        },
    };
    let cfg = config(s, 0.0);
    let out = solve_power(&triple, space, n, &cfg, modulus)?;
    let key = match &out.trace {
        Some(trace) => solve_key(&out.result, trace),
        None => ("a_hat", Some(out.power_modulus)),
    };
    Ok(Report::new(
        s,
        exit_code(out.result.status),
        format!("{:?}", out.result.status),
        key,
    )
    .with(
        json!({
            "result": out.result,
            "power": out.power,
            "power_modulus": out.power_modulus,
            "power_residual": out.power_residual,
            "single_residual": out.single_residual,
        }),
        out.trace,
    ))
}

fn run_uniqueness(s: &Scenario, space: &ConeMetricSpace<f64>) -> Result<Report> {
    let triple = probed_triple(s, space)?;
    let (a, triple, est) = match resolve_modulus(s, space, triple)? {
        Ok(v) => v,
        Err(report) => return Ok(report),
    };
    let starts = s.solver.starts.clone().unwrap_or_default();
    let rep = verify_uniqueness(&triple, space, &config(s, a), &starts)?;
    let code = match rep.verdict {
        UniquenessVerdict::Pass => EXIT_OK,
        UniquenessVerdict::Inconclusive => EXIT_MAX_ITER,
        UniquenessVerdict::Fail => EXIT_CHECK_FAILED,
    };
    let v0 = rep.runs.first().and_then(|r| r.v0);
    Ok(Report::new(s, code, format!("{:?}", rep.verdict), ("v0", v0)).with(
        json!({ "uniqueness": rep, "a": a, "estimate": est }),
        None,
    ))
}
