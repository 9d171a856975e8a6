use std::path::{Path, PathBuf};
use std::process::Command;

use ebmc::harness::{cli_main, read_curve, read_records};

const CONFIG: &str = r#"
name = "cli"
episodes = 15
runs = 3
base_seed = 1
env.kind = "gridworld"
agent.gamma = 0.99
agent.learning_rate = { kind = "constant", value = 0.7 }
strategy = { kind = "geometric", rho = 0.9 }
"#;

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = cli_main(std::iter::once("ebmc").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn run_writes_three_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.toml", CONFIG);
    let out = dir.path().join("out");
    let output = Command::new(env!("CARGO_BIN_EXE_ebmc"))
        .args(["run", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--parallelism", "2"])
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    assert_eq!(read_records(&out.join("records.csv")).unwrap().len(), 45);
    assert_eq!(read_curve(&out.join("curve.csv")).unwrap().len(), 15);
    assert!(std::fs::read_to_string(out.join("plot.svg")).unwrap().starts_with("<svg"));
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.toml", CONFIG);
    let run = |seed: &str, out: &str| {
        let out = dir.path().join(out);
        let (code, _, err) = call(&["run", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--seed", seed]);
        assert_eq!(code, 0, "{err}");
        std::fs::read(out.join("records.csv")).unwrap()
    };
    assert_eq!(run("9", "a"), run("9", "b"));
    assert_ne!(run("9", "a"), run("10", "c"));
}

#[test]
fn sweep_writes_one_directory_per_point() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{CONFIG}\n[sweep]\n\"strategy.rho\" = [0.85, 0.9, 0.95, 0.975, 0.99]\n");
    let config = write_config(dir.path(), "s.toml", &text);
    let out = dir.path().join("sweep");
    let (code, _, err) = call(&["sweep", config.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let mut subdirs: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_dir())
        .collect();
    subdirs.sort();
    assert_eq!(subdirs.len(), 5);
    for d in &subdirs {
        assert!(d.join("records.csv").is_file() && d.join("curve.csv").is_file() && d.join("plot.svg").is_file());
    }
    let svg = std::fs::read_to_string(out.join("sweep.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 5);
}

#[test]
fn malformed_config_fails_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.toml", &CONFIG.replace("rho = 0.9", "rho = 1.7"));
    let out = dir.path().join("out");
    let (code, _, err) = call(&["run", bad.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_ne!(code, 0);
    assert!(err.contains("strategy.rho"), "{err}");

    let typo = write_config(dir.path(), "typo.toml", &CONFIG.replace("episodes", "episodez"));
    let (code, _, err) = call(&["run", typo.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_ne!(code, 0);
    assert!(err.contains("episodez"), "{err}");

    let (code, _, err) = call(&["run", "/nonexistent/config.toml", "--out", out.to_str().unwrap()]);
    assert_ne!(code, 0);
    assert!(err.contains("/nonexistent/config.toml"), "{err}");
}

#[test]
fn bad_arguments_exit_with_usage_error() {
    let (code, _, err) = call(&["run"]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());
    let (code, _, _) = call(&["frobnicate"]);
    assert_eq!(code, 2);
    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("sweep") && out.contains("oracle"));
}

#[test]
fn oracle_prints_shortest_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "c.toml", CONFIG);
    let (code, out, err) = call(&["oracle", "gridworld", config.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    assert_eq!(out.trim(), "16");

    let shipped = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/gridworld_bmc.toml");
    let (code, out, _) = call(&["oracle", "gridworld", shipped.to_str().unwrap()]);
    assert_eq!((code, out.trim()), (0, "16"));
}
