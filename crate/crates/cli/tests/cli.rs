use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chaintrial"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env("CHAINTRIAL_THREADS", "2").output().expect("spawn")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn chsh_run_reports_tsirelson_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("chsh.json");
    let o = run(&["run", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap(), "--seed", "7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("summary.json")).unwrap()).unwrap();
    let s = summary["results"]["S_exact"].as_f64().unwrap();
    assert!((s - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-12, "{s}");
    assert_eq!(summary["seed"], 7);
    assert!(summary["version"]["commit"].is_string());
    assert!(dir.path().join("correlators.csv").exists());
}

#[test]
fn every_example_config_parses() {
    for e in std::fs::read_dir(configs()).unwrap() {
        let p = e.unwrap().path();
        chaintrial_cli::RunConfig::load(&p).unwrap_or_else(|err| panic!("{}: {err}", p.display()));
    }
}

#[test]
fn empty_config_exits_with_validation_code() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("empty.json");
    std::fs::write(&p, "").unwrap();
    let o = run(&["run", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn schema_violation_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\n  \"scenario\": \"chsh\",\n  \"params\": {\n    \"random_quadruples\": \"many\"\n  }\n}\n").unwrap();
    let o = run(&["run", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("line 4"), "{}", stderr(&o));
}

#[test]
fn unknown_scenario_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\"scenario\": \"teleport\"}").unwrap();
    assert_eq!(run(&["run", p.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn absurd_compat_tolerance_fails_numerically() {
    let o = run(&["verify", "fast", "--tol-compat", "1e3", "--only", "4"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("criterion  4 FAIL"));
}

#[test]
fn verify_writes_json_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("report.json");
    let o = run(&["verify", "fast", "--only", "5", "--only", "6", "--json", p.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&p).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["criteria"].as_array().unwrap().len(), 2);
}

#[test]
fn doubleslit_run_writes_frames_and_heatmaps() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("doubleslit.json");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let names: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    for want in ["summary.json", "detector_plane_intensity.png", "detector_plane_intensity.pgm"] {
        assert!(names.iter().any(|n| n == want), "missing {want} in {names:?}");
    }
    assert!(names.iter().filter(|n| n.starts_with("counts_t")).count() >= 3, "{names:?}");
    assert!(names.iter().any(|n| n.ends_with(".pgm") || n.ends_with(".png")), "{names:?}");
}

#[test]
fn schema_command_prints_json() {
    let o = run(&["schema", "epr"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["properties"]["params"].is_object(), "{v}");
}
