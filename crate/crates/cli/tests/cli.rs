use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};

use ehsense::io::{read_csv, write_csv, TradeoffRecord};
use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, args: &[&str], config: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ehsense"));
    cmd.args(args).arg("--out").arg(dir.join("out")).arg("--quiet");
    if let Some(text) = config {
        let path = dir.join("config.json");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn summary(dir: &Path, command: &str) -> serde_json::Map<String, Value> {
    let text = std::fs::read_to_string(dir.join("out").join(format!("{command}_summary.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn csv_rows(path: &Path) -> Vec<HashMap<String, String>> {
    read_csv(path).unwrap()
}

// Every CSV column present in the summary must hold the identical value.
fn assert_summary_matches_row(summary: &serde_json::Map<String, Value>, row: &HashMap<String, String>) {
    let mut compared = 0;
    for (key, text) in row {
        let Some(value) = summary.get(key) else { continue };
        match value {
            Value::Number(n) => assert_eq!(n.as_f64().unwrap(), text.parse::<f64>().unwrap(), "{key}"),
            Value::String(s) => assert_eq!(s, text, "{key}"),
            Value::Null => assert!(text.is_empty(), "{key}"),
            other => panic!("{key}: unexpected {other}"),
        }
        compared += 1;
    }
    assert_eq!(compared, row.len());
}

#[test]
fn fixed_at_defaults() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["fixed"], None);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let s = summary(dir.path(), "fixed");
    assert_eq!(s["complete"], Value::Bool(true));
    assert!((s["power"].as_f64().unwrap() - 12.1666).abs() < 1e-4);
    let rows = csv_rows(&dir.path().join("out/fixed.csv"));
    assert_eq!(rows.len(), 1);
    assert_summary_matches_row(&s, &rows[0]);
}

#[test]
fn save_and_fading_summaries_match_their_csv() {
    let dir = TempDir::new().unwrap();
    for command in ["save", "fading"] {
        let out = run(dir.path(), &[command], Some(r#"{"params": {"w": 75.5}}"#));
        assert!(out.status.success());
        let s = summary(dir.path(), command);
        let rows = csv_rows(&dir.path().join(format!("out/{command}.csv")));
        assert_summary_matches_row(&s, &rows[0]);
        assert_eq!(s["w"].as_f64(), Some(75.5));
    }
    let save = summary(dir.path(), "save");
    assert!(save["period"].as_f64().unwrap() > 0.0);
}

#[test]
fn fading_without_a_gain_is_a_config_error() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["fading"], Some(r#"{"params": {"sigma2_fd": null}}"#));
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sigma2_fd"));
}

#[test]
fn tradeoff_save_rows_are_monotone() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        &["tradeoff"],
        Some(r#"{"sweep": {"w_list": "20:25:500", "methods": ["fixed", "save"]}}"#),
    );
    assert!(out.status.success());
    let path = dir.path().join("out/tradeoff.csv");
    let records: Vec<TradeoffRecord> = read_csv(&path).unwrap();
    assert_eq!(records.len(), 40);
    let save: Vec<&TradeoffRecord> = records.iter().filter(|r| r.method == "save").collect();
    assert_eq!(save.len(), 20);
    for pair in save.windows(2) {
        assert!(pair[1].w > pair[0].w);
        assert!(pair[1].avg_aoi >= pair[0].avg_aoi);
        assert!(pair[1].avg_distortion <= pair[0].avg_distortion);
    }
    let copy = dir.path().join("copy.csv");
    write_csv(&copy, &records).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&copy).unwrap());
    let s = summary(dir.path(), "tradeoff");
    assert_eq!(s["rows"].as_u64(), Some(40));
    assert_eq!(s["failed"].as_u64(), Some(0));
}

#[test]
fn tradeoff_reports_failed_entries_and_exits_nonzero() {
    let dir = TempDir::new().unwrap();
    let config = r#"{"params": {"sigma2_fd": null}, "sweep": {"w_list": "50:50:100", "methods": ["save", "fading"]}}"#;
    let out = run(dir.path(), &["tradeoff"], Some(config));
    assert_eq!(out.status.code(), Some(2));
    let records: Vec<TradeoffRecord> = read_csv(&dir.path().join("out/tradeoff.csv")).unwrap();
    assert_eq!(records.len(), 2);
    let failures = csv_rows(&dir.path().join("out/tradeoff_failures.csv"));
    assert_eq!(failures.len(), 2);
    assert!(failures.iter().all(|f| f["method"] == "fading"));
    let s = summary(dir.path(), "tradeoff");
    assert_eq!(s["complete"], Value::Bool(false));
    assert_eq!(s["failed"].as_u64(), Some(2));
}

#[test]
fn unknown_keys_are_all_listed() {
    let dir = TempDir::new().unwrap();
    let out = run(
        dir.path(),
        &["fixed"],
        Some(r#"{"params": {"w": 10, "omega": 2}, "extra": true, "vi": {"tol": 1}}"#),
    );
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    for key in ["params.omega", "extra", "vi.tol"] {
        assert!(err.contains(key), "{err}");
    }
    assert!(!dir.path().join("out").exists());
}

#[test]
fn bad_values_and_missing_files_are_config_errors() {
    let dir = TempDir::new().unwrap();
    for config in [r#"{"params": {"lambda": 0}}"#, r#"{"sim": {"seed": 1.5}}"#, "not json"] {
        assert_eq!(run(dir.path(), &["save"], Some(config)).status.code(), Some(2), "{config}");
    }
    let out = Command::new(env!("CARGO_BIN_EXE_ehsense"))
        .args(["fixed", "--config"])
        .arg(dir.path().join("missing.json"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn online_at_defaults_passes_every_structure_check() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["online"], Some(r#"{"sim": {"K": 20000}}"#));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path(), "online");
    assert_eq!(s["structure_passed"].as_u64(), Some(7));
    let table = csv_rows(&dir.path().join("out/online_table.csv"));
    assert_eq!(table.len() as u64, s["states"].as_u64().unwrap());
    let report: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/online_structure.json")).unwrap()).unwrap();
    assert_eq!(report["checks"].as_array().unwrap().len(), 7);

    let sim: Vec<TradeoffRecord> = read_csv(&dir.path().join("out/online_sim.csv")).unwrap();
    let listed: Vec<TradeoffRecord> = serde_json::from_value(s["simulated"].clone()).unwrap();
    assert_eq!(sim, listed);
    assert_eq!(sim.iter().map(|r| r.method.as_str()).collect::<Vec<_>>(), ["mdp", "save"]);
    assert!(sim[0].weighted_cost < 1.1 * sim[1].weighted_cost);
}

#[test]
fn non_convergence_flags_the_summary() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["online"], Some(r#"{"vi": {"max_sweeps": 3}}"#));
    assert_eq!(out.status.code(), Some(3));
    let s = summary(dir.path(), "online");
    assert_eq!(s["complete"], Value::Bool(false));
    assert_eq!(s["exit_code"].as_u64(), Some(3));
}

#[test]
fn offline_schedule_replays_to_the_same_cost() {
    let dir = TempDir::new().unwrap();
    let config = r#"{"params": {"horizon_k": 40}, "ga": {"n_pop": 30, "n_iter": 40, "d_cross": 5}, "sim": {"seed": 1}}"#;
    let out = run(dir.path(), &["offline", "--seed", "8"], Some(config));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = summary(dir.path(), "offline");
    assert_eq!(s["seed"].as_u64(), Some(8));
    assert_eq!(s["K"].as_u64(), Some(40));
    let rows = csv_rows(&dir.path().join("out/offline.csv"));
    assert_summary_matches_row(&s, &rows[0]);
    let best = s["best_cost"].as_f64().unwrap();
    assert!((s["weighted_cost"].as_f64().unwrap() - best).abs() < 1e-9);
    let history = csv_rows(&dir.path().join("out/offline_history.csv"));
    assert_eq!(history.len(), 41);

    let schedule = dir.path().join("schedule.csv");
    std::fs::copy(dir.path().join("out/offline_schedule.csv"), &schedule).unwrap();
    let replay = format!(
        r#"{{"params": {{"horizon_k": 40}}, "offline": {{"replay": {:?}}}}}"#,
        schedule.to_str().unwrap()
    );
    let out = run(dir.path(), &["offline", "--seed", "8"], Some(&replay));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let replayed = csv_rows(&dir.path().join("out/offline_replay.csv"));
    let cost: f64 = replayed[0]["weighted_cost"].parse().unwrap();
    assert!((cost - best).abs() < 1e-9, "{cost} vs {best}");
}

#[test]
fn acausal_replay_exits_with_four() {
    let dir = TempDir::new().unwrap();
    let schedule = dir.path().join("acausal.csv");
    std::fs::write(&schedule, "l,X_l,P_l,nu_l\n1,2,5.0,\n2,98,,\n").unwrap();
    let config = format!(r#"{{"offline": {{"replay": {:?}}}}}"#, schedule.to_str().unwrap());
    let out = run(dir.path(), &["offline"], Some(&config));
    assert_eq!(out.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&out.stderr).contains("causality"));
    let s = summary(dir.path(), "offline");
    assert_eq!(s["complete"], Value::Bool(false));
}

#[test]
fn verify_runs_the_property_suite() {
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["verify"], None);
    let rows = csv_rows(&dir.path().join("out/verify.csv"));
    let s = summary(dir.path(), "verify");
    let passed = rows.iter().filter(|r| r["passed"] == "true").count();
    assert_eq!(s["passed"].as_u64(), Some(passed as u64));
    assert_eq!(s["total"].as_u64(), Some(rows.len() as u64));
    assert!(rows.len() > 10);
    assert!(out.status.success(), "{rows:?}");
}

#[test]
fn a_config_of_schema_defaults_reproduces_a_bare_run() {
    fn defaults(schema: &Value) -> Value {
        match schema.get("properties") {
            Some(Value::Object(props)) => Value::Object(props.iter().map(|(k, v)| (k.clone(), defaults(v))).collect()),
            _ => schema["default"].clone(),
        }
    }
    let schema: Value = serde_json::from_str(include_str!("../config.schema.json")).unwrap();
    let dir = TempDir::new().unwrap();
    let out = run(dir.path(), &["save"], Some(&defaults(&schema).to_string()));
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bare = TempDir::new().unwrap();
    assert!(run(bare.path(), &["save"], None).status.success());
    assert_eq!(summary(dir.path(), "save"), summary(bare.path(), "save"));
}
