// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn strobo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strobo"))
        .args(args)
        .env_remove("STROBO_THREADS")
        .output()
        .expect("binary runs")
}

fn run(sub: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![sub, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    strobo(&args)
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = r#"
[system]
fock_dim = 8
tail_threshold = 1e-3

[bath]
h = 1.0
z = 0.1
modes = 60

[initial_state]
kind = "cat"
alpha_re = 1.0

[propagation]
steps_per_period = 400

[wigner]
n_q = 31
n_p = 31
times = [0.0, 3.0]
"#;

#[test]
fn success_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    let o = run("spectrum", &cfg, &out, &["--threads", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"status\": \"ok\""));
    assert!(out.join("spectrum.csv").exists());
}

#[test]
fn validation_failures_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        SMALL.replace("h = 1.0", "h = -1.0"),
        SMALL.replace("fock_dim = 8", "fock_dim = 0"),
        SMALL.replace("z = 0.1", "z = 0.1\nbogus = 3"),
        SMALL.replace("tail_threshold = 1e-3", "tail_threshold = 1e-12"),
        "not toml [".to_string(),
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write_config(dir.path(), text);
        let o = run("rates", &cfg, &dir.path().join(format!("o{i}")), &[]);
        assert_eq!(o.status.code(), Some(2), "case {i}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!o.stderr.is_empty());
    }
}

#[test]
fn richardson_failure_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL.replace("steps_per_period = 400", "steps_per_period = 100\nscheme = \"rk4\"");
    let cfg = write_config(dir.path(), &text);
    let o = run("spectrum", &cfg, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn missing_config_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run("rates", &dir.path().join("nope.toml"), &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for sub in ["rates", "evolve", "wigner", "bath", "divisibility"] {
        for (out, threads) in [(&a, "1"), (&b, "3")] {
            let o = run(sub, &cfg, &out.join(sub), &["--threads", threads]);
            assert_eq!(o.status.code(), Some(0), "{sub}");
        }
        for entry in fs::read_dir(a.join(sub)).unwrap() {
            let name = entry.unwrap().file_name();
            assert_eq!(
                fs::read(a.join(sub).join(&name)).unwrap(),
                fs::read(b.join(sub).join(&name)).unwrap(),
                "{sub}/{name:?}"
            );
        }
    }
}

#[test]
fn empty_time_grid_gives_header_only_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}\n[pendulum]\nk_max = 3\nt_points = 0\n"));
    let out = dir.path().join("out");
    let o = run("bath", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(out.join("bath_modes.csv")).unwrap(), "k,t,n_k,log_n_k,x_k,p_k\n");
}

#[test]
fn uncoupled_config_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = run("verify", &repo_config("uncoupled.toml"), &out, &["--seed", "11"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = fs::read_to_string(out.join("verify.csv")).unwrap();
    assert!(report.lines().skip(1).all(|l| l.ends_with(",true")), "{report}");
}

#[test]
fn wigner_sidecars_carry_simulation_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("out");
    assert_eq!(run("wigner", &cfg, &out, &[]).status.code(), Some(0));
    let side = fs::read_to_string(out.join("wigner_t3.0.csv.json")).unwrap();
    assert!(side.contains("\"time\": 3.0"));
    assert!(side.contains("\"config_hash\""));
    let rows = fs::read_to_string(out.join("wigner_t3.0.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 31 * 31);
}

#[test]
fn threads_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let o = Command::new(env!("CARGO_BIN_EXE_strobo"))
        .args(["rates", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()])
        .env("STROBO_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let bad = Command::new(env!("CARGO_BIN_EXE_strobo"))
        .args(["rates", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()])
        .env("STROBO_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}
