use std::fs;
use std::path::Path;

use conefix::reproduce::{bundled_dir, reproduce_bundled, ReproduceOptions, EXPECTATIONS};
use conefix::run::{exit_code, EXIT_IMAGE_ONLY, EXIT_MAX_ITER, EXIT_NOT_CONTRACTION, EXIT_OK};
use conefix::scenario::parse_scenario;
use conefix::{load_scenario, run_scenario, Mode, RunOptions, Scenario, ScenarioError};
use conefix_core::SolveStatus;

fn bundled(name: &str) -> Scenario {
    load_scenario(&bundled_dir().join(format!("{name}.toml"))).unwrap()
}

fn parse(text: &str) -> Result<Scenario, ScenarioError> {
    parse_scenario(text, Path::new("inline.toml"))
}

const MINIMAL: &str = r#"
name = "inline"
mode = "solve"

[maps]
S = "x/2"
T = "x"
R = "x"
"#;

#[test]
fn bundled_modulus_scenario_loads_maps() {
    let s = bundled("example_3_2_modulus");
    assert_eq!(s.mode, Mode::Modulus);
    let maps = s.maps.unwrap();
    assert_eq!((maps.s.as_str(), maps.t.as_str(), maps.r.as_str()), ("x+1", "exp(-x)", "2*exp(-x)"));
}

#[test]
fn defaults_are_applied() {
    let s = parse(MINIMAL).unwrap();
    assert_eq!(s.solver.epsilon, 1e-10);
    assert_eq!(s.solver.epsilon_res, 1e-8);
    assert_eq!(s.solver.max_iter, 10_000);
    assert_eq!(s.solver.n_pairs, 100_000);
    assert_eq!(s.solver.seed, 42);
    assert_eq!(s.solver.sample_box, [-5.0, 5.0]);
}

#[test]
fn integer_literals_are_accepted_for_reals() {
    let s = parse(&format!("{MINIMAL}\n[solver]\nx0 = 1\na = 0\n")).unwrap();
    assert_eq!(s.solver.x0, 1.0);
}

#[test]
fn negative_epsilon_names_the_field() {
    let err = parse(&format!("{MINIMAL}\n[solver]\nepsilon = -1.0\n")).unwrap_err();
    assert_eq!(err.field(), Some("solver.epsilon"), "{err}");
}

#[test]
fn bad_expression_names_the_map() {
    let err = parse(&MINIMAL.replace("\"x/2\"", "\"x++\"")).unwrap_err();
    assert_eq!(err.field(), Some("maps.S"), "{err}");
    assert!(err.to_string().contains("position"), "{err}");
}

#[test]
fn unknown_keys_are_rejected_with_their_path() {
    let err = parse(&format!("{MINIMAL}\n[solver]\ntolerance = 1.0\n")).unwrap_err();
    assert!(matches!(err, ScenarioError::Parse { .. }));
    assert!(err.to_string().contains("tolerance"), "{err}");

    let err = parse(&format!("{MINIMAL}\n[solver]\nmax_iter = \"many\"\n")).unwrap_err();
    assert_eq!(err.field(), Some("solver.max_iter"), "{err}");
}

#[test]
fn mode_specific_fields_are_required() {
    let localized = MINIMAL.replace("mode = \"solve\"", "mode = \"solve-localized\"");
    assert_eq!(parse(&localized).unwrap_err().field(), Some("solver.c"));
    let wrong_len = format!("{localized}\n[solver]\nc = [1.0]\n");
    assert_eq!(parse(&wrong_len).unwrap_err().field(), Some("solver.c"));
    let uniq = MINIMAL.replace("mode = \"solve\"", "mode = \"uniqueness\"");
    assert_eq!(parse(&format!("{uniq}\n[solver]\nstarts = [1.0]\n")).unwrap_err().field(), Some("solver.starts"));
    let power = MINIMAL.replace("mode = \"solve\"", "mode = \"solve-power\"");
    assert_eq!(parse(&power).unwrap_err().field(), Some("solver.power"));
    let no_maps = "name = \"x\"\nmode = \"modulus\"\n";
    assert_eq!(parse(no_maps).unwrap_err().field(), Some("maps"));
    let skew = "name = \"x\"\nmode = \"axioms\"\n[space]\nnorm = \"skew\"\n";
    assert_eq!(parse(skew).unwrap_err().field(), Some("space.skew_eps"));
    let a = format!("{MINIMAL}\n[solver]\na = 1.5\n");
    assert_eq!(parse(&a).unwrap_err().field(), Some("solver.a"));
}

#[test]
fn missing_file_is_an_io_error() {
    let err = load_scenario(Path::new("/nonexistent/scenario.toml")).unwrap_err();
    assert!(matches!(err, ScenarioError::Io { .. }));
}

#[test]
fn config_round_trips() {
    for exp in EXPECTATIONS {
        let s = bundled(exp.name);
        let again = parse(&s.to_toml()).unwrap();
        assert_eq!(s, again, "{}", exp.name);
    }
    let s = parse(&format!("{MINIMAL}\n[solver]\na = 0.25\nstarts = [1.0, 2.0]\n")).unwrap();
    assert_eq!(parse(&s.to_toml()).unwrap(), s);
}

#[test]
fn exit_codes_are_distinct_per_status() {
    let statuses = [
        SolveStatus::FixedPointFound,
        SolveStatus::NotAContraction,
        SolveStatus::ImageConvergedIteratesDiverged,
        SolveStatus::MaxIterExceeded,
    ];
    let codes: Vec<i32> = statuses.iter().map(|&s| exit_code(s)).collect();
    assert_eq!(codes, [EXIT_OK, EXIT_NOT_CONTRACTION, EXIT_IMAGE_ONLY, EXIT_MAX_ITER]);
}

#[test]
fn bundled_runs_report_expected_exit_codes() {
    let opts = RunOptions::default();
    assert_eq!(run_scenario(&bundled("banach"), &opts).unwrap().exit_code, EXIT_OK);
    assert_eq!(run_scenario(&bundled("counterexample"), &opts).unwrap().exit_code, EXIT_IMAGE_ONLY);
    let modulus = run_scenario(&bundled("example_3_2_modulus"), &opts).unwrap();
    assert_eq!(modulus.exit_code, EXIT_OK);
    assert!((modulus.key.value.unwrap() - (-1.0f64).exp()).abs() < 1e-3);
}

#[test]
fn declared_modulus_that_is_too_small_exits_two() {
    let s = parse(&format!("{MINIMAL}\n[solver]\nx0 = 1.0\na = 0.1\n")).unwrap();
    let report = run_scenario(&s, &RunOptions::default()).unwrap();
    assert_eq!(report.exit_code, EXIT_NOT_CONTRACTION);
}

#[test]
fn translation_uniqueness_is_inconclusive() {
    let mut s = bundled("counterexample");
    s.mode = Mode::Uniqueness;
    s.solver.starts = Some(vec![0.0, 3.0]);
    s.solver.n_pairs = 2_000;
    let report = run_scenario(&s, &RunOptions::default()).unwrap();
    assert_eq!(report.exit_code, EXIT_MAX_ITER);
    assert_eq!(report.outcome, "Inconclusive");
}

#[test]
fn reports_are_byte_identical_without_timestamp() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let s = bundled("counterexample");
    for dir in [a.path(), b.path()] {
        let opts = RunOptions {
            out_dir: Some(dir.to_path_buf()),
            timestamp: false,
        };
        run_scenario(&s, &opts).unwrap();
    }
    for file in ["counterexample.result.json", "counterexample.trace.csv"] {
        let x = fs::read(a.path().join(file)).unwrap();
        let y = fs::read(b.path().join(file)).unwrap();
        assert_eq!(x, y, "{file}");
    }
    let with_ts = run_scenario(
        &s,
        &RunOptions {
            out_dir: None,
            timestamp: true,
        },
    )
    .unwrap();
    assert!(with_ts.timestamp_unix.is_some());
}

#[test]
fn reproduce_reports_missing_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    for exp in EXPECTATIONS.iter().filter(|e| e.name != "banach") {
        let name = format!("{}.toml", exp.name);
        fs::copy(bundled_dir().join(&name), dir.path().join(&name)).unwrap();
    }
    let rows = reproduce_bundled(dir.path(), &ReproduceOptions { jobs: 4, ..Default::default() });
    assert_eq!(rows.len(), 7);
    let banach = rows.iter().find(|r| r.name == "banach").unwrap();
    assert!(!banach.pass);
    assert_eq!(banach.note, "missing");
    assert!(rows.iter().filter(|r| r.name != "banach").all(|r| r.pass));
    assert_eq!(conefix::reproduce::exit_code(&rows), 1);
}

#[test]
fn reproduce_verdicts_do_not_depend_on_seed() {
    for seed in [42, 7] {
        let rows = reproduce_bundled(
            &bundled_dir(),
            &ReproduceOptions {
                seed: Some(seed),
                jobs: 2,
                ..Default::default()
            },
        );
        assert!(rows.iter().all(|r| r.pass), "seed {seed}: {rows:?}");
    }
}
