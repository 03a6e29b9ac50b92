use kpzlab::cli::{manifest_path, sha256_hex, RunManifest};
use serde_json::Value;
use std::path::Path;
use std::process::{Command, Output};

fn kpzlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kpzlab")).args(args).output().expect("binary runs")
}

fn read_manifest(out: &Path) -> RunManifest {
    serde_json::from_str(&std::fs::read_to_string(manifest_path(out)).unwrap()).unwrap()
}

#[test]
fn verify_yang_baxter_report() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("yb.json");
    let out = kpzlab(&["verify", "yang-baxter", "--trials", "100", "--seed", "7", "--report", report.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["pass"], true);
    assert_eq!(v["seed"], "7");
    assert!(v["tests"][0]["statistic"].as_f64().unwrap() <= 1e-10);
    assert_eq!(v["tests"][0]["details"].as_array().map(Vec::len), Some(100));
    let m = read_manifest(&report);
    assert_eq!(m.outputs[0].sha256, sha256_hex(&std::fs::read(&report).unwrap()));
}

#[test]
fn sheet_grid_has_declared_shape() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sheet.csv");
    let out = kpzlab(&[
        "sheet", "--variant", "asep", "--alpha", "0", "--q", "0", "--eps-inv", "500", "--grid", "-2:2:0.25", "--replicas", "100", "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# seed=0");
    assert_eq!(lines[1].split(',').count(), 2 + 17);
    assert_eq!(lines.len(), 2 + 100 * 17);
    for row in &lines[2..] {
        let cells: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
        assert_eq!(cells.len(), 19);
        assert!(cells.iter().all(|c| c.is_finite()));
    }
}

#[test]
fn rerun_from_manifest_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("a.csv");
    let out = kpzlab(&[
        "sheet", "--variant", "s6v", "--alpha", "1", "--z", "0.25", "--q", "0.3", "--eps-inv", "125", "--grid", "-1:1:0.5", "--replicas", "4",
        "--seed", "0x2a", "--out", csv.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let first = read_manifest(&csv);
    assert_eq!(first.seed.as_deref(), Some("0x2a"));
    let status = Command::new(env!("CARGO_BIN_EXE_kpzlab")).args(&first.command_line[1..]).status().unwrap();
    assert!(status.success());
    let second = read_manifest(&csv);
    assert_eq!(first.outputs, second.outputs);
    assert_eq!(first.params, second.params);
}

#[test]
fn config_file_defaults_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# sweep\nq = 0.5\nt = 3\nys = -2:2\nseed = 5\n").unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["asep", "simulate", "--config", cfg.to_str().unwrap()];
        args.extend_from_slice(extra);
        let out = kpzlab(&args);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let recs: Vec<Value> = String::from_utf8(out.stdout).unwrap().lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        recs
    };
    let from_file = run(&[]);
    assert_eq!(from_file.len(), 5);
    assert!(from_file.iter().all(|r| r["q"] == 0.5 && r["seed"] == "5" && r["t"] == 3.0));
    let overridden = run(&["--q", "0.3"]);
    assert!(overridden.iter().all(|r| r["q"] == 0.3));

    std::fs::write(&cfg, "").unwrap();
    let defaults = run(&[]);
    assert!(defaults.iter().all(|r| r["q"] == 0.0 && r["seed"] == "0"));
}

#[test]
fn config_errors_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "q = 0.1\nbogus = 3\n").unwrap();
    let out = kpzlab(&["asep", "simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    std::fs::write(&cfg, "q = 1.2\n").unwrap();
    let out = kpzlab(&["asep", "simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("q must lie in [0,1)"));
}

#[test]
fn exit_codes() {
    assert_eq!(kpzlab(&["asep", "simulate", "--q", "1.2"]).status.code(), Some(2));
    assert_eq!(kpzlab(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(kpzlab(&["verify", "nope"]).status.code(), Some(2));
    assert_eq!(kpzlab(&["lpp", "eval", "--env", "/nonexistent", "--from", "0,1", "--to", "1,1"]).status.code(), Some(1));
    assert_eq!(kpzlab(&["--help"]).status.code(), Some(0));
}

#[test]
fn help_documents_columns() {
    for cmd in [&["asep", "simulate"][..], &["s6v", "simulate"], &["sheet"], &["landscape"], &["twopoint"], &["qboson", "sample"], &["verify"]] {
        let mut args = cmd.to_vec();
        args.push("--help");
        let text = String::from_utf8(kpzlab(&args).stdout).unwrap();
        assert!(text.contains("Output") || text.contains("Report"), "{cmd:?}");
    }
}

#[test]
fn every_subcommand_runs() {
    let dir = tempfile::tempdir().unwrap();
    let env = dir.path().join("env.txt");
    std::fs::write(&env, "5 5 4\n0 -1 -1\n").unwrap();
    let out = kpzlab(&["lpp", "eval", "--env", env.to_str().unwrap(), "--from", "0,2", "--to", "2,1"]);
    let v: Value = serde_json::from_str(String::from_utf8_lossy(&out.stdout).trim()).unwrap();
    assert_eq!(v["value"], -1);

    let out = kpzlab(&["s6v", "simulate", "--N", "3", "--t", "0,4", "--xs", "-3", "--ys", "-4"]);
    let recs: Vec<Value> = String::from_utf8_lossy(&out.stdout).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(recs.iter().all(|r| r["h"] == 7));

    let out = kpzlab(&["qboson", "enumerate", "--N", "1", "--M", "1", "--q", "0.5", "--z", "0.5", "--K", "40"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["partition_truncated"].as_f64().unwrap() - 1.5).abs() <= 1e-8);

    let out = kpzlab(&["qboson", "sample", "--N", "2", "--M", "2", "--K", "10", "--samples", "3", "--seed", "4"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).lines().count(), 3);

    let out = kpzlab(&["qboson", "verify", "merge"]);
    assert!(out.status.success());

    let out = kpzlab(&["landscape", "--alpha", "0.2", "--q", "0.1", "--eps-inv", "64", "--xs", "0", "--ys", "0", "--s", "0.5", "--t", "1.5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let tp = dir.path().join("tp.csv");
    let out = kpzlab(&["twopoint", "--eps-inv", "64", "--ring", "48", "--offsets", "-2:2", "--replicas", "20", "--out", tp.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&tp).unwrap();
    assert_eq!(text.lines().count(), 2 + 5);
    assert!(manifest_path(&tp).exists());
}
