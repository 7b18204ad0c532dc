use glg::datasets::task_registry;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn glg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_glg")).args(args).output().unwrap()
}

fn data_dir() -> PathBuf {
    std::env::var_os("GLG_DATA_DIR")
        .map(Into::into)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("glg-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn unknown_task_is_rejected() {
    let out = glg(&["run", "--task", "X2Y", "--model", "a1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown task"));
}

#[test]
fn missing_data_points_to_prepare() {
    let dir = scratch("missing");
    let out = glg(&["run", "--task", "CD2CO", "--model", "a1", "--runs", "1", "--data-dir", dir.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("glg prepare"));

    let prep = glg(&["prepare", "--data-dir", dir.to_str().unwrap()]);
    assert_eq!(prep.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&prep.stdout).contains("missing"));
}

#[test]
fn run_all_records_failed_cells() {
    let dir = scratch("failures");
    let cfg = dir.join("bench.json");
    let body = serde_json::json!({
        "tasks": ["G2A"],
        "models": ["A1"],
        "runs": 1,
        "data_dir": dir.join("nothing"),
        "out": dir.join("reports"),
    });
    std::fs::write(&cfg, body.to_string()).unwrap();
    let out = glg(&["run-all", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(dir.join("reports/errors.json").is_file());
    assert!(String::from_utf8_lossy(&out.stdout).contains("failed"));
}

#[test]
fn run_all_writes_one_report_per_cell() {
    let data = data_dir();
    if !data.is_dir() {
        eprintln!("skipping: no data at {}", data.display());
        return;
    }
    let dir = scratch("reports");
    let cfg = dir.join("bench.json");
    let body = serde_json::json!({
        "tasks": ["CO2CD", "CD2CO"],
        "models": ["DG", "A1", "CM"],
        "runs": 2,
        "data_dir": data,
        "out": dir.join("reports"),
    });
    std::fs::write(&cfg, body.to_string()).unwrap();
    let out = glg(&["run-all", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let mut names: Vec<String> = std::fs::read_dir(dir.join("reports"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let mut want = vec!["summary.txt".to_string()];
    for t in ["CD2CO", "CO2CD"] {
        for m in ["A1", "CM", "DG"] {
            want.push(format!("{t}_{m}.json"));
        }
    }
    want.sort();
    assert_eq!(names, want);

    let summary = std::fs::read_to_string(dir.join("reports/summary.txt")).unwrap();
    let order: Vec<&str> = task_registry().iter().map(|t| t.code).filter(|c| *c == "CD2CO" || *c == "CO2CD").collect();
    let rows: Vec<&str> = summary.lines().skip(1).filter_map(|l| l.split_whitespace().next()).collect();
    assert_eq!(rows, order);

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("reports/CD2CO_A1.json")).unwrap()).unwrap();
    assert_eq!(report["seeds"], serde_json::json!([0, 1]));
    assert!((report["avg"].as_f64().unwrap() - 444.0 / 683.0).abs() < 1e-12);
}
