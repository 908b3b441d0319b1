use std::path::{Path, PathBuf};
use std::thread;

use serde::Serialize;

use crate::run::{run_scenario, RunOptions, EXIT_IMAGE_ONLY, EXIT_OK, EXIT_USAGE};
use crate::scenario::load_scenario;

/// Reference value for one bundled scenario.
#[derive(Debug, Clone, Copy)]
pub struct Expectation {
    pub name: &'static str,
    pub key: &'static str,
    pub expected: f64,
    pub tolerance: f64,
    pub exit_code: i32,
}

pub const EXPECTATIONS: [Expectation; 7] = [
    Expectation { name: "example1_axioms", key: "K_hat", expected: 1.0, tolerance: 1e-12, exit_code: EXIT_OK },
    Expectation { name: "example2_axioms", key: "K_hat", expected: 1.0, tolerance: 1e-12, exit_code: EXIT_OK },
    Expectation {
        name: "example_3_2_modulus",
        key: "a_hat",
        expected: 0.36787944117144233,
        tolerance: 1e-3,
        exit_code: EXIT_OK,
    },
    Expectation { name: "banach", key: "v0", expected: 0.0, tolerance: 1e-8, exit_code: EXIT_OK },
    Expectation { name: "t_contraction", key: "v0", expected: 0.0, tolerance: 1e-8, exit_code: EXIT_OK },
    Expectation { name: "localized_ball", key: "v0", expected: 0.0, tolerance: 1e-8, exit_code: EXIT_OK },
    Expectation {
        name: "counterexample",
        key: "final_step",
        expected: std::f64::consts::E,
        tolerance: 1e-12,
        exit_code: EXIT_IMAGE_ONLY,
    },
];

pub fn bundled_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub name: String,
    pub mode: String,
    pub key: String,
    pub value: Option<f64>,
    pub expected: f64,
    pub exit_code: Option<i32>,
    pub pass: bool,
    pub note: String,
}

#[derive(Debug, Clone, Default)]
pub struct ReproduceOptions {
    pub seed: Option<u64>,
    pub jobs: usize,
    pub run: RunOptions,
}

fn reproduce_one(dir: &Path, exp: &Expectation, opts: &ReproduceOptions) -> Row {
    let mut row = Row {
        name: exp.name.to_string(),
        mode: "-".into(),
        key: exp.key.to_string(),
        value: None,
        expected: exp.expected,
        exit_code: None,
        pass: false,
        note: String::new(),
    };
    let path = dir.join(format!("{}.toml", exp.name));
    if !path.exists() {
        row.note = "missing".into();
        return row;
    }
    let mut scenario = match load_scenario(&path) {
        Ok(s) => s,
        Err(e) => {
            row.note = e.to_string();
            return row;
        }
    };
    row.mode = scenario.mode.to_string();
    if let Some(seed) = opts.seed {
        scenario.solver.seed = seed;
    }
    match run_scenario(&scenario, &opts.run) {
        Ok(report) => {
            row.exit_code = Some(report.exit_code);
            row.value = report.key.value;
            let close = report.key.label == exp.key
                && report
                    .key
                    .value
                    .is_some_and(|v| (v - exp.expected).abs() <= exp.tolerance);
            row.pass = close && report.exit_code == exp.exit_code;
            row.note = report.outcome;
        }
        Err(e) => row.note = format!("{e:#}"),
    }
    row
}

/// Runs every bundled scenario found in `dir`; one row per expectation.
pub fn reproduce_bundled(dir: &Path, opts: &ReproduceOptions) -> Vec<Row> {
    let jobs = opts.jobs.clamp(1, EXPECTATIONS.len());
    let chunk = EXPECTATIONS.len().div_ceil(jobs);
    thread::scope(|scope| {
        let handles: Vec<_> = EXPECTATIONS
            .chunks(chunk)
            .map(|group| {
                scope.spawn(move || {
                    group
                        .iter()
                        .map(|exp| reproduce_one(dir, exp, opts))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("scenario worker panicked"))
            .collect()
    })
}

pub fn exit_code(rows: &[Row]) -> i32 {
    if rows.iter().all(|r| r.pass) {
        EXIT_OK
    } else {
        EXIT_USAGE
    }
}

pub fn render_table(rows: &[Row]) -> String {
    let mut out = format!(
        "{:<22} {:<16} {:<11} {:>24} {:>24}  {}\n",
        "scenario", "mode", "key", "value", "expected", "verdict"
    );
    for r in rows {
        let value = r
            .value
            .map(|v| format!("{v:.16e}"))
            .unwrap_or_else(|| "-".into());
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        out.push_str(&format!(
            "{:<22} {:<16} {:<11} {:>24} {:>24}  {}",
            r.name,
            r.mode,
            r.key,
            value,
            format!("{:.16e}", r.expected),
            verdict
        ));
        if !r.pass && !r.note.is_empty() {
            out.push_str(&format!(" ({})", r.note));
        }
        out.push('\n');
    }
    out
}
