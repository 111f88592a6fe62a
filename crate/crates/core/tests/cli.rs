use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const HEADER: &str = "tbs_id,window_start,window_len,service_time,gcbt,icbt,pmbt,pc,crr,qcrr,qwt,psqr,dss,dus,urs,uus,rac,gau,ugau,gas,ugas,ich,uich,gch,ugch,spgc,upgc,spic,upic,segc,uegc,seic,ueic,dam,udam,um,uum,srp,crp";

fn row(tbs: &str, hour: u32, gcbt: u64, qcrr: u64) -> String {
    format!(
        "{tbs},2024-01-01T{hour:02}:00:00,3600,3600,{gcbt},0,0,7200,10,{qcrr},0,0,100,10,100,10,0,4,1,0,0,0,0,0,0,5,0,0,0,0,0,0,0,0,0,0,0,0,0"
    )
}

fn day_file(tbs: &str) -> String {
    let mut s = format!("{HEADER}\n");
    for h in 0..24 {
        s.push_str(&row(tbs, h, 100 * h as u64, 2));
        s.push('\n');
    }
    s
}

fn tq(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tetra-qos"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ingested() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.csv"), day_file("T1")).unwrap();
    let o = tq(dir.path(), &["ingest", "a.csv", "--store", "s.json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    dir
}

#[test]
fn ingest_one_day_summary() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.csv"), day_file("T1")).unwrap();
    let o = tq(dir.path(), &["ingest", "a.csv", "--store", "s.json"]);
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    assert!(out.contains("records: 24"));
    assert!(out.contains("stations: 1"));
    assert!(out.contains("days: 1"));
    assert!(out.contains("coverage: 100.0%"));
    assert!(dir.path().join("s.json").exists());
}

#[test]
fn ingest_invariant_violation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = format!("{HEADER}\n{}\n", row("T1", 0, 0, 11));
    std::fs::write(dir.path().join("bad.csv"), bad).unwrap();
    let o = tq(dir.path(), &["ingest", "bad.csv", "--store", "s.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("qcrr"));
    assert!(!dir.path().join("s.json").exists());
}

#[test]
fn ingest_overlapping_files_is_duplicate() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.csv"), day_file("T1")).unwrap();
    std::fs::write(dir.path().join("b.csv"), format!("{HEADER}\n{}\n", row("T1", 5, 0, 0))).unwrap();
    let o = tq(dir.path(), &["ingest", "a.csv", "b.csv", "--store", "s.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("duplicate window"));
}

#[test]
fn ingest_strict_rejects_unknown_station() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.csv"), day_file("T9")).unwrap();
    std::fs::write(
        dir.path().join("c.json"),
        r#"{"clusters": [{"cluster_id": "C", "members": [{"tbs_id": "T1", "tch_count": 2}]}]}"#,
    )
    .unwrap();
    let o = tq(dir.path(), &["ingest", "a.csv", "--store", "s.json", "--clusters", "c.json", "--strict"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("T9"));
    let o = tq(dir.path(), &["ingest", "a.csv", "--store", "s.json", "--clusters", "c.json"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn missing_file_is_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = tq(dir.path(), &["report", "--store", "nope.json"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn dimension_examples() {
    let dir = tempfile::tempdir().unwrap();
    let o = tq(dir.path(), &["dimension", "--offered", "2", "--target", "0.2", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["channels"], 4);
    let table = v["table"].as_array().unwrap();
    assert_eq!(table.len(), 2);
    assert_eq!(table[0]["channels"], 3);
    assert!((table[1]["wait_probability"].as_f64().unwrap() - 4.0 / 23.0).abs() < 1e-12);

    let o = tq(dir.path(), &["dimension", "--offered", "2", "--target", "0.45"]);
    assert!(stdout(&o).starts_with("channels: 3"));

    let o = tq(dir.path(), &["dimension", "--offered", "2", "--target", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = tq(dir.path(), &["dimension", "--offered", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_without_thresholds_has_no_verdicts() {
    let dir = ingested();
    let o = tq(dir.path(), &["report", "--store", "s.json", "--format", "md"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let md = stdout(&o);
    assert!(md.contains("# Daily QoS report"));
    assert!(!md.contains("verdict"));

    std::fs::write(dir.path().join("t.json"), r#"{"queuing_rate_bh": 10}"#).unwrap();
    let o = tq(dir.path(), &["report", "--store", "s.json", "--format", "md", "--thresholds", "t.json"]);
    let md = stdout(&o);
    assert!(md.contains("verdict"));
    assert!(md.contains("| queuing_rate_bh | T1 | 2024-01-01 |  | 23 | 20.000 | % | FAIL |"));

    std::fs::write(dir.path().join("t.json"), r#"{"not_a_kpi": 10}"#).unwrap();
    let o = tq(dir.path(), &["report", "--store", "s.json", "--thresholds", "t.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_files_and_formats() {
    let dir = ingested();
    let o = tq(
        dir.path(),
        &["report", "--store", "s.json", "--period", "monthly", "--format", "md,json,csv", "--out", "out"],
    );
    assert!(o.status.success(), "{}", stderr(&o));
    for ext in ["md", "json", "csv"] {
        assert!(dir.path().join(format!("out/report-monthly.{ext}")).exists());
    }
    let json: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/report-monthly.json")).unwrap()).unwrap();
    assert_eq!(json["periods"][0]["period"], "2024-01");
    assert_eq!(json["periods"][0]["last_day"], "2024-01-31");
}

#[test]
fn kpi_listing_filters() {
    let dir = ingested();
    let o = tq(dir.path(), &["kpi", "--store", "s.json", "--category", "attachment", "--format", "csv"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let rows: Vec<&str> = out.lines().skip(1).collect();
    assert_eq!(rows.len(), 48);
    assert!(rows.iter().all(|r| r.contains(",attachment,")));
    assert!(rows.iter().any(|r| r.starts_with("ms_group_attach_failure_rate,attachment,T1,2024-01-01,0,,25,")));

    let o = tq(dir.path(), &["kpi", "--store", "s.json", "--date", "2024-02-01"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulate_seed_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("sim.json"),
        r#"{"seed": 1, "duration": 7200, "stations": [{"tbs_id": "A", "tch_count": 2, "group_call_rate": 0.02,
            "mean_holding": 30, "message_rate": 0.1}]}"#,
    )
    .unwrap();
    let run = |seed: &str, out: &str| {
        let o = tq(dir.path(), &["simulate", "sim.json", "--out", out, "--seed", seed]);
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read_to_string(dir.path().join(out).join("counters.csv")).unwrap()
    };
    let a = run("5", "a");
    let b = run("5", "b");
    let c = run("6", "c");
    assert_eq!(a, b);
    assert_ne!(a, c);
    let truth = std::fs::read_to_string(dir.path().join("a/truth.json")).unwrap();
    assert!(truth.contains("\"seed\": 5"));
}

#[test]
fn qos_study_against_store() {
    let dir = ingested();
    std::fs::write(
        dir.path().join("study.json"),
        r#"{
            "required": {"kind": "required", "rows": [[99.0, 30.0], [99.9, 20.0]]},
            "perceived": {"kind": "perceived", "rows": [[98.0, 40.0], [99.0, 35.0]]},
            "mapping": {"rows": [
                {"key": "availability", "mode": "max", "weights": [1, 0, 1, 0]},
                {"key": "attach_failures", "mode": "weighted-mean", "weights": [0, 1, 0, 1]}
            ]},
            "planned": {"availability": 99.9, "attach_failures": 25.0},
            "bindings": [
                {"key": "availability", "kpi": "availability"},
                {"key": "attach_failures", "kpi": "ms_group_attach_failure_rate"}
            ]
        }"#,
    )
    .unwrap();
    let o = tq(dir.path(), &["qos", "study.json", "--store", "s.json", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["k_ru"]["entries"]["availability"], 99.9);
    assert_eq!(v["k_ru"]["entries"]["attach_failures"], 25.0);
    assert_eq!(v["k_a"]["entries"]["availability"], 100.0);
    assert_eq!(v["k_a"]["entries"]["attach_failures"], 25.0);
    assert_eq!(v["k_pu"]["entries"]["attach_failures"], 37.5);
    assert!((v["gap"]["aggregate"].as_f64().unwrap() - 12.5).abs() < 1e-12);
}
