use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const PRESETS: [&str; 12] = [
    "LINEAR_1D_DOUBLING",
    "LINEAR_2D_DIAG23",
    "LINEAR_CONTRACTION",
    "E1_CONJUGATED",
    "E2_CHAIN",
    "E2_CHAIN_SQUARED",
    "E3_PRODUCT",
    "E5_IDENTITY_GROWTH",
    "E6_CONE_CANTOR",
    "CO4_CONJUGACY",
    "CO9_ITERATE_DEFECT",
    "LEM_SELF_PRODUCT",
];

fn cli(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_coarse-entropy"));
    cmd.args(args).env_remove("ORBIT_BUDGET");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn export(preset: &str, dir: &Path) -> String {
    let path = dir.join(format!("{preset}.config.json"));
    let o = cli(&["reproduce", preset, "--export-config", path.to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    path.to_str().unwrap().to_string()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn lists_every_preset() {
    let o = cli(&["list-presets"], &[]);
    assert_eq!(code(&o), 0);
    let names: Vec<String> = stdout(&o).lines().map(|l| l.split_whitespace().next().unwrap().to_string()).collect();
    assert_eq!(names, PRESETS);
}

#[test]
fn doubling_summary_line() {
    let dir = tempfile::tempdir().unwrap();
    let o = cli(&["reproduce", "LINEAR_1D_DOUBLING", "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(code(&o), 0);
    let line = stdout(&o);
    assert!(line.starts_with("LINEAR_1D_DOUBLING: h_inf ≈ 0.6"), "{line}");
    assert!(line.contains("(expected log 2)"), "{line}");
    let csv = fs::read_to_string(dir.path().join("LINEAR_1D_DOUBLING.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("n,delta,R,strategy,separated_lower,spanning_upper"));
    let report = json(&dir.path().join("LINEAR_1D_DOUBLING.json"));
    assert_eq!(report["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(report["status"], "OK");
}

#[test]
fn decreasing_deltas_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = export("LINEAR_1D_DOUBLING", dir.path());
    let mut v = json(Path::new(&path));
    v["tasks"][0]["schedule"]["cells"].as_array_mut().unwrap().reverse();
    fs::write(&path, v.to_string()).unwrap();
    let o = cli(&["estimate", "--config", &path, "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("strictly increasing"));
}

#[test]
fn malformed_inputs_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{\"schema_version\": 1,").unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&cli(&["estimate", "--config", bad.to_str().unwrap(), "--out", out], &[])), 2);
    assert_eq!(code(&cli(&["run", "--config", "/nonexistent/config.json", "--out", out], &[])), 2);
    assert_eq!(code(&cli(&["reproduce", "E7_UNKNOWN", "--out", out], &[])), 2);
    let o = cli(&["reproduce", "LEM_SELF_PRODUCT", "--out", out], &[("ORBIT_BUDGET", "lots")]);
    assert_eq!(code(&o), 2);
}

#[test]
fn subcommands_reject_foreign_tasks() {
    let dir = tempfile::tempdir().unwrap();
    let path = export("CO4_CONJUGACY", dir.path());
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&cli(&["estimate", "--config", &path, "--out", out], &[])), 2);
    assert_eq!(code(&cli(&["bcd", "--config", &path, "--out", out], &[])), 2);
    assert_eq!(code(&cli(&["check-map", "--config", &path, "--out", out], &[])), 0);
}

#[test]
fn tiny_budget_exits_three_with_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    // Enough for the smaller delta only.
    let o = cli(&["reproduce", "E2_CHAIN", "--out", out], &[("ORBIT_BUDGET", "12000")]);
    assert_eq!(code(&o), 3);
    let csv = fs::read_to_string(dir.path().join("E2_CHAIN.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.starts_with(|c: char| c.is_ascii_digit()) && r.contains(",2,4,ORBIT_FAMILY,")));
    let report = json(&dir.path().join("E2_CHAIN.json"));
    assert_eq!(report["status"], "BUDGET_EXCEEDED");
    assert_eq!(report["budget"]["orbits"], 12000);
}

#[test]
fn same_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let path = export("E6_CONE_CANTOR", dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for d in [&a, &b] {
        assert_eq!(code(&cli(&["run", "--config", &path, "--out", d.to_str().unwrap()], &[])), 0);
    }
    for file in ["E6_CONE_CANTOR.csv", "E6_CONE_CANTOR.json"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn exported_configs_reproduce_their_presets() {
    let dir = tempfile::tempdir().unwrap();
    for preset in PRESETS {
        let path = export(preset, dir.path());
        let (direct, exported) = (dir.path().join("direct"), dir.path().join("exported"));
        let o = cli(&["reproduce", preset, "--out", direct.to_str().unwrap()], &[]);
        assert_eq!(code(&o), 0, "{preset}: {}", stdout(&o));
        let o = cli(&["run", "--config", &path, "--out", exported.to_str().unwrap()], &[]);
        assert_eq!(code(&o), 0, "{preset}");
        for ext in ["csv", "json"] {
            let file = format!("{preset}.{ext}");
            assert_eq!(fs::read(direct.join(&file)).unwrap(), fs::read(exported.join(&file)).unwrap(), "{file}");
        }
    }
}

#[test]
fn output_paths_come_from_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = export("CO9_ITERATE_DEFECT", dir.path());
    let mut v = json(Path::new(&path));
    let (j, c) = (dir.path().join("x/report.json"), dir.path().join("y/grid.csv"));
    v["output"] = serde_json::json!({ "json": j, "csv": c });
    fs::write(&path, v.to_string()).unwrap();
    assert_eq!(code(&cli(&["check-map", "--config", &path], &[])), 0);
    assert!(j.exists() && c.exists());
}
