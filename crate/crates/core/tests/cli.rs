use std::path::Path;
use std::process::{Command, Output};

fn taoi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_taoi")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn solve_writes_solution_and_summary() {
    let out = taoi(&["solve", "--tu", "10", "--delta-max", "200"]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["thresholds"]["F1"], 5);
    assert_eq!(doc["policy"].as_array().unwrap().len(), 400);
    let summary = String::from_utf8(out.stderr).unwrap();
    assert!(summary.contains("threshold F1 5"), "{summary}");
}

#[test]
fn unit_delay_thresholds_are_one() {
    let out = taoi(&["solve", "--tu", "1", "--q", "0.5"]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["thresholds"]["F0"], 1);
    assert_eq!(doc["thresholds"]["F1"], 1);
}

#[test]
fn exit_codes() {
    assert_eq!(code(&taoi(&["solve", "--q", "1.2"])), 1);
    assert_eq!(code(&taoi(&["solve", "--epsilon", "1.5"])), 1);
    assert_eq!(code(&taoi(&["solve", "--bogus"])), 1);
    assert_eq!(code(&taoi(&["solve", "--max-iters", "2"])), 2);
    assert_eq!(code(&taoi(&["oracle", "--tu", "2", "--delta-max", "64"])), 1);
    assert_eq!(code(&taoi(&["verify", "--single", "--tu", "3"])), 0);
    assert_eq!(code(&taoi(&["--help"])), 0);
}

#[test]
fn oracle_reports_gap_and_shape() {
    let out = taoi(&[
        "oracle",
        "--q",
        "0.9",
        "--pa",
        "0.1",
        "--pb",
        "0.1",
        "--tu",
        "2",
        "--delta-max",
        "8",
    ]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(doc["gap"].as_f64().unwrap() < 1e-6);
    assert_eq!(doc["oracle_threshold_type"], true);
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"params": {"q": 0.5, "t_u": 4}, "solver": {"tol": 1e-10}}"#).unwrap();
    let out = taoi(&["solve", "--config", cfg.to_str().unwrap(), "--tu", "6"]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["params"]["q"], 0.5);
    assert_eq!(doc["params"]["t_u"], 6);
    assert_eq!(doc["params"]["delta_max"], 120);

    std::fs::write(&cfg, r#"{"params": {"qq": 0.5}}"#).unwrap();
    assert_eq!(code(&taoi(&["solve", "--config", cfg.to_str().unwrap()])), 1);
    assert_eq!(code(&taoi(&["solve", "--config", "/nonexistent/cfg.json"])), 1);
}

#[test]
fn sweep_csv_and_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("fig4.csv");
    let out = taoi(&[
        "sweep",
        "--preset",
        "fig4",
        "--slots",
        "60000",
        "--reps",
        "2",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "axis,axis_value,policy,exact_avg_taoi,sim_avg_taoi,sim_stderr,threshold_f0,threshold_f1,iters"
    );
    assert_eq!(lines.count(), 30);
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(format!("{}.meta.json", csv.display())).unwrap()).unwrap();
    assert!(meta.to_string().contains("reconstructed"));
}

#[test]
fn simulate_with_trace() {
    let dir = tempfile::tempdir().unwrap();
    let tr = dir.path().join("trace.csv");
    let out = taoi(&[
        "simulate",
        "--tu",
        "3",
        "--slots",
        "20000",
        "--reps",
        "4",
        "--policy",
        "pre-id-based",
        "--trace",
        "25",
        "--trace-out",
        tr.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["policy"], "pre-id-based");
    assert_eq!(doc["sim"]["per_replication"].as_array().unwrap().len(), 4);
    let trace = std::fs::read_to_string(&tr).unwrap();
    assert!(trace.starts_with("step,slot,delta,pre_id,action,d,delta_next\n"));
    assert_eq!(trace.lines().count(), 26);
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> Vec<u8> {
    let path = dir.join(name);
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_owned();
    full.extend(["--out", &p]);
    let out = taoi(&full);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    std::fs::read(&path).unwrap()
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args: &[&[&str]] = &[
        &["solve", "--tu", "5"],
        &[
            "simulate", "--tu", "5", "--slots", "30000", "--reps", "3", "--seed", "9",
        ],
        &[
            "sweep", "--preset", "fig5", "--tu", "5", "--slots", "30000", "--reps", "2", "--seed", "4",
        ],
    ];
    for (i, a) in args.iter().enumerate() {
        let first = run_to(dir.path(), &format!("a{i}"), a);
        let second = run_to(dir.path(), &format!("b{i}"), a);
        assert_eq!(first, second, "{a:?}");
    }
}
