use std::path::Path;
use std::process::{Command, Output};

fn ecmkit(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecmkit"))
        .env_remove("ECMKIT_SEED")
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn unknown_subcommand_prints_usage() {
    let dir = tempfile::tempdir().unwrap();
    let o = ecmkit(dir.path(), &["bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage:"));
    assert!(stderr(&o).contains("generate"));
}

#[test]
fn bad_flag_prints_subcommand_usage() {
    let dir = tempfile::tempdir().unwrap();
    let o = ecmkit(dir.path(), &["filter", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--consecutive"));
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = ecmkit(dir.path(), &["--help"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("pipeline"));
}

#[test]
fn missing_input_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.csv");
    let o = ecmkit(dir.path(), &["filter", "--input", missing.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("absent.csv"));
}

#[test]
fn config_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"seeed": 3}"#).unwrap();
    let o = ecmkit(dir.path(), &["--config", cfg.to_str().unwrap(), "config"]);
    assert_eq!(o.status.code(), Some(2));
}

fn effective_seed(dir: &Path, env: Option<&str>, args: &[&str]) -> u64 {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ecmkit"));
    cmd.env_remove("ECMKIT_SEED").arg("--out").arg(dir).args(args).arg("config");
    if let Some(v) = env {
        cmd.env("ECMKIT_SEED", v);
    }
    let o = cmd.output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    v["seed"].as_u64().unwrap()
}

#[test]
fn seed_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"seed": 7}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(effective_seed(dir.path(), None, &[]), 0);
    assert_eq!(effective_seed(dir.path(), Some("9"), &[]), 9);
    assert_eq!(effective_seed(dir.path(), Some("9"), &["--config", cfg]), 7);
    assert_eq!(effective_seed(dir.path(), Some("9"), &["--config", cfg, "--seed", "3"]), 3);
}

#[test]
fn generate_then_filter_and_plot() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = ecmkit(d.path(), &["--seed", "5", "generate", "--scale", "0.002"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let data_a = std::fs::read(a.path().join("dataset.csv")).unwrap();
    assert_eq!(data_a, std::fs::read(b.path().join("dataset.csv")).unwrap());
    let text = String::from_utf8(data_a).unwrap();
    assert!(text.starts_with("id,circuit,freq,zreal,zimag\n"));
    assert!(text.lines().count() > 9);

    let input = a.path().join("dataset.csv");
    let input = input.to_str().unwrap();
    let o = ecmkit(a.path(), &["filter", "--input", input]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = ecmkit(a.path(), &["plot", "--input", input]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let svgs = std::fs::read_dir(a.path())
        .unwrap()
        .flatten()
        .filter(|e| e.path().extension().is_some_and(|x| x == "svg"))
        .count()
        + std::fs::read_dir(a.path())
            .unwrap()
            .flatten()
            .filter(|e| e.path().is_dir())
            .flat_map(|e| std::fs::read_dir(e.path()).unwrap().flatten())
            .filter(|e| e.path().extension().is_some_and(|x| x == "svg"))
            .count();
    assert!(svgs > 0);
}
