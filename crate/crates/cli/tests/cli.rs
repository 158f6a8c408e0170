use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hyperdyn"))
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("hyperdyn-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    d
}

fn read_json(p: PathBuf) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn smoke_run_writes_every_report() {
    let out = scratch("smoke");
    let st = bin().args(["verify-all", "--smoke", "--out"]).arg(&out).status().unwrap();
    assert!(matches!(st.code(), Some(0 | 2)));
    let summary = read_json(out.join("summary.json"));
    assert_eq!(summary["reports"].as_array().unwrap().len(), 15);
    for r in summary["reports"].as_array().unwrap() {
        let rep = read_json(out.join(r["command"].as_str().unwrap()).join("report.json"));
        assert_eq!(rep["command"], r["command"]);
        assert_eq!(rep["config_hash"].as_str().unwrap().len(), 64);
    }
    let _ = std::fs::remove_dir_all(&out);
}

#[test]
fn single_command_passes_and_is_reproducible() {
    let (a, b) = (scratch("sft-a"), scratch("sft-b"));
    for d in [&a, &b] {
        let st = bin().args(["sft-hull", "--seed", "3", "--out"]).arg(d).status().unwrap();
        assert_eq!(st.code(), Some(0));
    }
    assert!(hyperdyn_cli::verify::compare_dirs(&a, &b).unwrap().is_empty());
    let _ = std::fs::remove_dir_all(&a);
    let _ = std::fs::remove_dir_all(&b);
}

#[test]
fn bad_config_exits_with_error() {
    let dir = scratch("bad");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("bad.toml");
    std::fs::write(&cfg, "[shadow]\norbits = 10\nnope = 1\n").unwrap();
    let out = bin().arg("config").arg("--config").arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn environment_and_flags_override_file() {
    let dir = scratch("env");
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("c.toml");
    std::fs::write(&cfg, "[shadow]\norbits = 10\n[run]\nseed = 1\n").unwrap();
    let out = bin()
        .arg("config")
        .arg("--config")
        .arg(&cfg)
        .args(["--seed", "9"])
        .env("HYPERDYN_SHADOW_ORBITS", "12")
        .env("HYPERDYN_RUN_SEED", "5")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("orbits = 12"));
    assert!(text.contains("seed = 9"));
    let _ = std::fs::remove_dir_all(&dir);
}

#[test]
fn failed_checks_exit_with_two() {
    let out = scratch("fail");
    // At N = 4 the leaf cannot visit 99% of the cells within this length.
    let st = bin()
        .args(["leaf-density", "--smoke", "--out"])
        .arg(&out)
        .env("HYPERDYN_LEAVES_LENGTH", "1.0")
        .status()
        .unwrap();
    assert_eq!(st.code(), Some(2));
    let rep = read_json(out.join("leaf-density").join("report.json"));
    assert_eq!(rep["status"], "failed");
    let _ = std::fs::remove_dir_all(&out);
}
