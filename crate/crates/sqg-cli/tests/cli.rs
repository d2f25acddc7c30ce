//! End-to-end tests of the `sqg` binary: flag handling, defaults echo, exit
//! codes, and byte-level rerun determinism.

use std::path::Path;
use std::process::{Command, Output};

fn sqg() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sqg"))
}

fn stdout_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr_of(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// First whitespace token after "run " on the announcement line.
fn hash_line(stdout: &str) -> String {
    let line = stdout
        .lines()
        .find(|l| l.starts_with("run "))
        .unwrap_or_else(|| panic!("no run line in output:\n{stdout}"));
    line.split_whitespace().nth(1).unwrap().to_string()
}

const STEADY_SMALL: &str = r#"
scenario = "steady"

[grid]
n = 16

[physics]
kappa = 1.0
alpha = 1.0

[force]
rho0 = 2.0
rho1 = 4.0
"#;

#[test]
fn steady_run_echoes_defaults_and_reruns_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, STEADY_SMALL).unwrap();

    let mut outs = Vec::new();
    for sub in ["a", "b"] {
        let out = sqg()
            .args(["steady", "--config"])
            .arg(&cfg)
            .arg("--output")
            .arg(dir.path().join(sub))
            .output()
            .unwrap();
        assert!(
            out.status.success(),
            "steady run failed:\n{}\n{}",
            stdout_of(&out),
            stderr_of(&out)
        );
        outs.push(out);
    }

    let text = stdout_of(&outs[0]);
    let hash_a = hash_line(&text);
    let hash_b = hash_line(&stdout_of(&outs[1]));
    assert_eq!(hash_a, hash_b, "config hash must be stable across reruns");
    assert!(
        text.contains("default solver.dt = 0.001"),
        "defaulted fields must be echoed, got:\n{text}"
    );
    assert!(
        text.contains("check steady_residual_direct pass"),
        "expected a residual verdict line, got:\n{text}"
    );
    assert!(
        text.contains("check steady_contraction_direct pass"),
        "expected a contraction verdict line, got:\n{text}"
    );

    for name in ["trace_direct.ndjson", "checks.ndjson", "manifest.json"] {
        let a = std::fs::read(dir.path().join("a").join(&hash_a).join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(&hash_a).join(name)).unwrap();
        assert_eq!(a, b, "{name} must be byte-identical across reruns");
    }
}

#[test]
fn alpha_out_of_range_exits_two_and_names_the_interval() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, STEADY_SMALL.replace("alpha = 1.0", "alpha = 2.5")).unwrap();

    let out = sqg().args(["steady", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    let err = stderr_of(&out);
    assert!(
        err.contains("[1, 2)"),
        "error must name the admissible interval, got: {err}"
    );
}

#[test]
fn duplicate_key_is_a_strict_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("dup.toml");
    std::fs::write(
        &cfg,
        STEADY_SMALL.replace("kappa = 1.0", "kappa = 1.0\nkappa = 2.0"),
    )
    .unwrap();

    let out = sqg().args(["steady", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    assert!(
        stderr_of(&out).contains("duplicate"),
        "got: {}",
        stderr_of(&out)
    );
}

#[test]
fn unknown_key_is_a_strict_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("unk.toml");
    std::fs::write(&cfg, format!("{STEADY_SMALL}\n[physics2]\nx = 1\n")).unwrap();

    let out = sqg().args(["steady", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
}

#[test]
fn subcommand_and_config_scenario_must_agree() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, STEADY_SMALL).unwrap();

    let out = sqg().args(["verify", "--config"]).arg(&cfg).output().unwrap();
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr_of(&out));
    assert!(
        stderr_of(&out).contains("subcommand"),
        "got: {}",
        stderr_of(&out)
    );
}

#[test]
fn subcommand_supplies_the_scenario_when_the_file_omits_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, STEADY_SMALL.replace("scenario = \"steady\"\n", "")).unwrap();

    let out = sqg()
        .args(["steady", "--config"])
        .arg(&cfg)
        .arg("--output")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert!(stdout_of(&out).contains("scenario=steady"));
}

#[test]
fn missing_config_file_exits_four() {
    let out = sqg()
        .args(["steady", "--config", "/nonexistent/sqg.toml"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4), "stderr: {}", stderr_of(&out));
}

#[test]
fn empty_force_annulus_is_a_numerical_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.toml");
    // No lattice point has |k|^2 in [4.3^2, 4.45^2] = [18.49, 19.80].
    std::fs::write(
        &cfg,
        STEADY_SMALL
            .replace("rho0 = 2.0", "rho0 = 4.3")
            .replace("rho1 = 4.0", "rho1 = 4.45"),
    )
    .unwrap();

    let out = sqg()
        .args(["steady", "--config"])
        .arg(&cfg)
        .arg("--output")
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3), "stderr: {}", stderr_of(&out));
    assert!(
        stderr_of(&out).contains("empty annulus"),
        "got: {}",
        stderr_of(&out)
    );
}

#[test]
fn environment_variable_supplies_the_default_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, STEADY_SMALL).unwrap();
    let root = dir.path().join("env_root");

    let out = sqg()
        .args(["steady", "--config"])
        .arg(&cfg)
        .env("SQG_OUTPUT_ROOT", &root)
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    let hash = hash_line(&stdout_of(&out));
    assert!(
        root.join(&hash).join("manifest.json").is_file(),
        "artifacts must land under the environment root"
    );

    // An explicit --output flag still wins over the environment.
    let flag_root = dir.path().join("flag_root");
    let out = sqg()
        .args(["steady", "--config"])
        .arg(&cfg)
        .arg("--output")
        .arg(&flag_root)
        .env("SQG_OUTPUT_ROOT", dir.path().join("ignored"))
        .output()
        .unwrap();
    assert!(out.status.success(), "stderr: {}", stderr_of(&out));
    assert!(flag_root.join(&hash).join("manifest.json").is_file());
    assert!(!Path::new(&dir.path().join("ignored")).exists());
}

#[test]
fn seed_override_changes_the_hash_but_not_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, STEADY_SMALL).unwrap();

    let base = sqg()
        .args(["steady", "--config"])
        .arg(&cfg)
        .arg("--output")
        .arg(dir.path().join("o1"))
        .output()
        .unwrap();
    let seeded = sqg()
        .args(["steady", "--config"])
        .arg(&cfg)
        .arg("--output")
        .arg(dir.path().join("o2"))
        .args(["--seed-override", "424242"])
        .output()
        .unwrap();
    assert!(base.status.success() && seeded.status.success());
    assert_ne!(
        hash_line(&stdout_of(&base)),
        hash_line(&stdout_of(&seeded)),
        "a different seed family is a different run identity"
    );
}
