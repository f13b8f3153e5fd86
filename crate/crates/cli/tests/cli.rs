use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use sha2::{Digest, Sha256};

const BASE: &str = r#""schema_version": 1, "weights": {"a": [1.0], "b": [1.0]}, "samples": 4, "seed": 7"#;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_latorbit"));
    cmd.env_remove("LATORBIT_THREADS");
    cmd
}

fn write_config(dir: &Path, name: &str, extra: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, format!("{{{BASE}{extra}}}")).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr_lines(o: &Output) -> Vec<String> {
    String::from_utf8_lossy(&o.stderr).lines().map(str::to_owned).collect()
}

#[test]
fn reference_rows_on_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let vol = write_config(dir.path(), "v.json", r#", "T_grid": [1.0]"#);
    let o = run(&["volume", "--config", vol.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), "region,method,value,std_error\nE,closed_form,4,0\n");

    let dy = write_config(dir.path(), "d.json", r#", "dyadic": {"s": 3, "k": [5]}"#);
    let o = run(&["dyadic", "--config", dy.to_str().unwrap()]);
    assert_eq!(stdout(&o), "s,k,cover_size\n3,5,2\n");

    let al = write_config(dir.path(), "a.json", "");
    let o = run(&["alpha", "--config", al.to_str().unwrap()]);
    assert_eq!(stdout(&o), "lattice_id,alpha,rank,exact\n0,1,1,true\n");
}

#[test]
fn headers_are_fixed() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("count", r#", "T_grid": [2, 3]"#, "theta_id,T,count,predicted,ratio"),
        ("rate", r#", "T_grid": [2, 3, 4, 5, 6]"#, "T,median_abs_error,normalized_error"),
        ("double-equi", r#", "T_grid": [0, 1], "double_equi": {"mean_samples": 8}"#, "t,w,estimate,std_error,deviation"),
    ];
    for (i, (cmd, extra, header)) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), &format!("h{i}.json"), extra);
        let o = run(&[cmd, "--config", cfg.to_str().unwrap()]);
        assert!(o.status.success(), "{cmd}: {:?}", stderr_lines(&o));
        assert_eq!(stdout(&o).lines().next().unwrap(), *header);
    }
}

fn assert_config_error(o: &Output) {
    assert_eq!(o.status.code(), Some(2));
    let lines = stderr_lines(o);
    assert_eq!(lines.len(), 1, "{lines:?}");
}

#[test]
fn invalid_configs_exit_2_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let empty_grid = write_config(dir.path(), "e.json", r#", "T_grid": []"#);
    assert_config_error(&run(&["count", "--config", empty_grid.to_str().unwrap()]));

    let unknown = write_config(dir.path(), "u.json", r#", "T_grid": [1], "colour": "red""#);
    assert_config_error(&run(&["count", "--config", unknown.to_str().unwrap()]));

    let short = write_config(dir.path(), "s.json", r#", "r": 2.0, "T_grid": [1.5]"#);
    assert_config_error(&run(&["sandwich", "--config", short.to_str().unwrap()]));

    let bad_schema = dir.path().join("b.json");
    std::fs::write(&bad_schema, r#"{"schema_version": 9, "weights": {"a": [1.0], "b": [1.0]}, "samples": 1, "seed": 0}"#).unwrap();
    assert_config_error(&run(&["volume", "--config", bad_schema.to_str().unwrap()]));

    let bad_weights = dir.path().join("w.json");
    std::fs::write(&bad_weights, r#"{"schema_version": 1, "weights": {"a": [0.7], "b": [1.0, 0.2]}, "samples": 1, "seed": 0}"#).unwrap();
    assert_config_error(&run(&["alpha", "--config", bad_weights.to_str().unwrap()]));

    let ok = write_config(dir.path(), "ok.json", r#", "T_grid": [1]"#);
    let o = bin().args(["volume", "--config", ok.to_str().unwrap()]).env("LATORBIT_THREADS", "many").output().unwrap();
    assert_config_error(&o);
}

#[test]
fn io_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    let o = run(&["volume", "--config", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_lines(&o).len(), 1);

    let cfg = write_config(dir.path(), "v.json", r#", "T_grid": [1.0]"#);
    let out = dir.path().join("no_such_dir").join("out.csv");
    let o = run(&["volume", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert_eq!(stderr_lines(&o).len(), 1);
}

#[test]
fn manifest_records_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#", "T_grid": [2, 4]"#);
    let out = dir.path().join("count.csv");
    let o = run(&["count", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", "11", "--threads", "2"]);
    assert!(o.status.success(), "{:?}", stderr_lines(&o));
    assert!(o.stdout.is_empty());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().count(), 1 + 4 * 2);

    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("count.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "count");
    assert_eq!(manifest["seed"], 11);
    assert_eq!(manifest["threads"], 2);
    assert_eq!(manifest["config"]["seed"], 11);
    assert_eq!(manifest["version"], env!("CARGO_PKG_VERSION"));
    assert!(manifest["wall_time_seconds"].as_f64().unwrap() >= 0.0);
    for key in ["median", "q05", "q95"] {
        assert!(manifest["summary"]["per_T"][0]["ratio"][key].is_number(), "{key}: {}", manifest["summary"]);
    }

    // the hash is recomputable from the embedded config
    let canonical = canonical(&manifest["config"]);
    let digest = hex::encode(Sha256::digest(canonical.as_bytes()));
    assert_eq!(manifest["config_hash"], digest);
}

fn canonical(v: &serde_json::Value) -> String {
    match v {
        serde_json::Value::Object(map) => {
            let mut keys: Vec<&String> = map.keys().collect();
            keys.sort();
            let body: Vec<String> =
                keys.iter().map(|k| format!("{}:{}", serde_json::to_string(k).unwrap(), canonical(&map[*k]))).collect();
            format!("{{{}}}", body.join(","))
        }
        serde_json::Value::Array(items) => format!("[{}]", items.iter().map(canonical).collect::<Vec<_>>().join(",")),
        other => other.to_string(),
    }
}

#[test]
fn json_format_carries_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#", "T_grid": [2, 4]"#);
    let o = run(&["count", "--config", cfg.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let cols: Vec<&str> = v["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    assert_eq!(cols, ["theta_id", "T", "count", "predicted", "ratio"]);
    assert_eq!(v["rows"].as_array().unwrap().len(), 8);
    let s = &v["summary"]["per_T"][1]["ratio"];
    assert!(s["q05"].as_f64().unwrap() <= s["median"].as_f64().unwrap());
    assert!(s["median"].as_f64().unwrap() <= s["q95"].as_f64().unwrap());
}

#[test]
fn seed_flag_changes_and_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#", "T_grid": [3, 5]"#);
    let c = cfg.to_str().unwrap();
    let a = stdout(&run(&["count", "--config", c, "--seed", "1"]));
    let b = stdout(&run(&["count", "--config", c, "--seed", "1"]));
    let other = stdout(&run(&["count", "--config", c, "--seed", "2"]));
    assert_eq!(a, b);
    assert_ne!(a, other);
}

#[test]
fn help_and_bad_subcommand() {
    let o = run(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("double-equi"));
    let o = run(&["frobnicate"]);
    assert_config_error(&o);
}
