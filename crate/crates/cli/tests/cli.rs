use std::fs;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_msgossip"))
}

#[test]
fn run_writes_csv_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "vs_baselines", "--n", "100", "--seeds", "2", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("vs_baselines.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
    assert!(dir.path().join("vs_baselines.json").exists());
}

#[test]
fn sweep_reads_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out_dir = dir.path().join("out");
    fs::write(
        &cfg,
        format!(
            r#"{{"experiment":"levels_sweep","n":[100],"k":[1,2],"seeds":[5],"output_dir":{:?}}}"#,
            out_dir
        ),
    )
    .unwrap();
    let out = bin().arg("sweep").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(out_dir.join("levels_sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"experiment":"cdf","n":[100],"seeds":[1],"p":[2.0]}"#).unwrap();
    assert_eq!(bin().arg("sweep").arg(&cfg).status().unwrap().code(), Some(2));
    assert_eq!(bin().args(["run", "nonsense"]).status().unwrap().code(), Some(2));
    assert_eq!(
        bin().args(["run", "loss", "--p", "1.0"]).status().unwrap().code(),
        Some(2)
    );
    assert_eq!(bin().args(["bogus"]).status().unwrap().code(), Some(2));
}

#[test]
fn failed_runs_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    // No connected graph exists at this density, so every run fails.
    let out = bin()
        .args([
            "run",
            "vs_baselines",
            "--n",
            "300",
            "--seeds",
            "1",
            "--c",
            "0.01",
            "--out",
        ])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(dir.path().join("vs_baselines_failures.csv").exists());
}

#[test]
fn generate_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.json");
    let st = bin()
        .args(["generate", "--n", "50", "--seed", "3", "--out"])
        .arg(&g)
        .status()
        .unwrap();
    assert!(st.success());
    let graph = msgossip_graph(&g);
    assert_eq!(graph["n"], 50);

    let out = bin().args(["predict", "--n", "262144", "--k", "3"]).output().unwrap();
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["prediction"]["g"].as_f64().unwrap() - 1089.0).abs() < 1e-6);
    assert!(v["optimal_subdivision"]["b"].is_array());
    assert_eq!(
        bin()
            .args(["predict", "--n", "10", "--k", "0"])
            .status()
            .unwrap()
            .code(),
        Some(2)
    );
}

fn msgossip_graph(path: &std::path::Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}
