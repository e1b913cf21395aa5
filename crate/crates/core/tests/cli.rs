use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mobility_equity::cli::{emit_scenario, parse_scenario_str};
use mobility_equity::model::{MarketInstance, Matrix};
use proptest::prelude::*;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mobility-equity"))
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn write(dir: &tempfile::TempDir, name: &str, text: &str) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn gen_is_byte_identical_for_a_seed() {
    let args = [
        "gen",
        "--travelers",
        "3",
        "--services",
        "2",
        "--scenarios",
        "2",
        "--seed",
        "42",
    ];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = run(&[
        "gen",
        "--travelers",
        "3",
        "--services",
        "2",
        "--scenarios",
        "2",
        "--seed",
        "43",
    ]);
    assert_ne!(a.stdout, c.stdout);
}

#[test]
fn generated_file_parses_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.json");
    let o = run(&[
        "gen",
        "--travelers",
        "2",
        "--services",
        "2",
        "--scenarios",
        "1",
        "--seed",
        "5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = run(&["solve", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn reference_verifies() {
    let o = run(&["verify", fixture("reference.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["properties"].as_array().unwrap().len(), 6);
}

#[test]
fn halved_payments_exit_with_a_witness() {
    let o = run(&[
        "verify",
        fixture("halved_payments.json").to_str().unwrap(),
        "--payment-scale",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("truthfulness failed"), "{err}");
    assert!(err.contains("\"misreport\""), "{err}");
}

#[test]
fn solve_and_verify_are_reproducible() {
    for cmd in ["solve", "verify"] {
        let path = fixture("halved_payments.json");
        let a = run(&[cmd, path.to_str().unwrap()]);
        let b = run(&[cmd, path.to_str().unwrap()]);
        assert_eq!(a.status.code(), Some(0));
        assert!(!a.stdout.is_empty());
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn parallel_verify_keeps_input_order() {
    let r = fixture("reference.json");
    let h = fixture("halved_payments.json");
    let args = ["verify", r.to_str().unwrap(), h.to_str().unwrap(), "--jobs"];
    let serial = run(&[&args[..], &["1"]].concat());
    let parallel = run(&[&args[..], &["4"]].concat());
    assert_eq!(serial.status.code(), Some(0));
    assert_eq!(serial.stdout, parallel.stdout);
    let reports: Vec<serde_json::Value> = serde_json::from_slice(&serial.stdout).unwrap();
    assert_eq!(reports[0]["input"]["name"], "reference-2x2");
    assert_eq!(reports[1]["input"]["name"], "halved-payments");
}

#[test]
fn table_output_lists_properties() {
    let o = run(&[
        "verify",
        fixture("reference.json").to_str().unwrap(),
        "--format",
        "table",
    ]);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("truthfulness"));
    assert!(text.contains("result: pass"));
}

#[test]
fn price_out_of_range_is_an_input_error() {
    let o = run(&["price", fixture("reference.json").to_str().unwrap(), "--realized", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("out of range"));
}

#[test]
fn price_reports_one_outcome() {
    let o = run(&[
        "price",
        fixture("halved_payments.json").to_str().unwrap(),
        "--realized",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["outcomes"].as_array().unwrap().len(), 1);
    assert_eq!(report["outcomes"][0]["scenario"], 1);
}

#[test]
fn malformed_input_exits_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("truncated.json", "{\"travelers\": [", "line 1"),
        (
            "negative.json",
            r#"{"travelers":[{"budget":"-1"},{"budget":"2"}],"services":[{"capacity":1},{"capacity":1},{"capacity":1}],"valuation_scenarios":[[["1","2","3"],["1","2","3"]]]}"#,
            "budget negative",
        ),
        (
            "missing.json",
            r#"{"travelers":[{"budget":"1"},{"budget":"2"}],"services":[{"capacity":1},{"capacity":1},{"capacity":1}]}"#,
            "scenario set is empty",
        ),
        (
            "unknown.json",
            r#"{"travelers":[],"services":[],"extra":1}"#,
            "unknown field",
        ),
        (
            "badnum.json",
            r#"{"travelers":[{"budget":"ten"}],"services":[]}"#,
            "travelers[0].budget",
        ),
    ];
    for (name, text, needle) in cases {
        let path = write(&dir, name, text);
        let o = run(&["verify", &path]);
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(stderr(&o).contains(needle), "{name}: {}", stderr(&o));
    }
    let o = run(&["solve", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&["frobnicate"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn service_limit_defaults_to_one() {
    let text = r#"{"travelers":[{"budget":"4"},{"budget":"5.5"}],
        "services":[{"capacity":1},{"capacity":2},{"capacity":1}],
        "valuation_scenarios":[[["1","2","3"],["0.5","2","1"]]]}"#;
    let loaded = parse_scenario_str(text, Path::new("inline")).unwrap();
    assert_eq!(loaded.instance.service_limits, vec![1, 1]);
    assert_eq!(loaded.instance.budgets, vec![4.0, 5.5]);
    assert!(loaded.warnings.is_empty());
}

#[test]
fn output_file_receives_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = run(&[
        "solve",
        fixture("reference.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(o.stdout.is_empty());
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
    assert_eq!(report["command"], "solve");
}

fn instance_strategy() -> impl Strategy<Value = MarketInstance> {
    (2usize..=4, 1usize..=3, 1usize..=3).prop_flat_map(|(i, j, s)| {
        let finite = prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL;
        (
            prop::collection::vec(0.0f64..1e6, i),
            prop::collection::vec(1u32..=5, i),
            prop::collection::vec(1u32..=5, j),
            prop::collection::vec(prop::collection::vec(finite, i * j), s),
        )
            .prop_map(move |(budgets, limits, caps, scenarios)| MarketInstance {
                budgets,
                service_limits: limits,
                capacities: caps,
                scenarios: scenarios
                    .into_iter()
                    .map(|vals| Matrix::from_fn(i, j, |r, c| vals[r * j + c]))
                    .collect(),
            })
    })
}

proptest! {
    #[test]
    fn emitted_files_parse_to_the_same_instance(inst in instance_strategy()) {
        let text = emit_scenario(&inst, Some("rt".into()));
        let loaded = parse_scenario_str(&text, Path::new("rt")).unwrap();
        prop_assert_eq!(loaded.instance, inst);
        prop_assert_eq!(loaded.name.as_deref(), Some("rt"));
    }
}
