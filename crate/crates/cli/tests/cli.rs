use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn chaoscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chaoscope")).args(args).env_remove("CHAOSCOPE_MAX_WORKERS").output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

fn closed(out: &Path, g: &str) -> String {
    format!(
        "[model]\nj = 2\ng_over_gc = {g}\ncutoffs = [20, 24]\n[unfolding]\ndegree = 3\n[time]\npoints = 100\n\
         [dspf]\npoints = 10\n[run]\noutput_dir = \"{}\"\nworkers = 4\n",
        out.display()
    )
}

#[test]
fn run_then_report() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), &closed(&out, "0.5"));
    let o = chaoscope(&["run", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("1 points, 0 failed"));
    assert!(out.join("manifest.json").exists());

    let o = chaoscope(&["report", out.to_str().unwrap()]);
    assert!(o.status.success());
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["failed"], 0);
    assert!(r["points"][0]["eta"].is_f64());

    // second run reads every spectrum from the cache
    assert!(chaoscope(&["run", &cfg]).status.success());
    let o = chaoscope(&["report", out.to_str().unwrap()]);
    let r: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(r["eigensolves"], 0);
}

#[test]
fn out_and_workers_flags_override_the_config() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), &closed(&dir.path().join("ignored"), "[0.3, 0.5]"));
    let out = dir.path().join("elsewhere");
    let o = chaoscope(&["sweep", &cfg, "--out", out.to_str().unwrap(), "--workers", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("eta_scan.csv").exists());
    assert!(!dir.path().join("ignored").exists());
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["workers"], 2);
}

#[test]
fn worker_cap_env_var() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(dir.path(), &closed(&out, "[0.3, 0.5]"));
    let o = Command::new(env!("CARGO_BIN_EXE_chaoscope"))
        .args(["sweep", &cfg])
        .env("CHAOSCOPE_MAX_WORKERS", "1")
        .output()
        .unwrap();
    assert!(o.status.success());
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["workers"], 1);
}

#[test]
fn config_error_exits_2_and_names_the_key() {
    let dir = TempDir::new().unwrap();
    let body = closed(&dir.path().join("out"), "0.5").replace("cutoffs = [20, 24]", "cutoffs = [24, 20]");
    let o = chaoscope(&["run", &write_config(dir.path(), &body)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("model.cutoffs"), "{}", stderr(&o));

    let o = chaoscope(&["baseline", "--kind", "gue", "--n", "10"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--kind"));
}

#[test]
fn missing_files_exit_1() {
    let dir = TempDir::new().unwrap();
    let o = chaoscope(&["run", dir.path().join("nope.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let o = chaoscope(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_3_and_names_the_point() {
    let dir = TempDir::new().unwrap();
    let o = chaoscope(&["run", &write_config(dir.path(), &closed(&dir.path().join("out"), "4.0"))]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("g2.828427_gamma0"), "{}", stderr(&o));
}

#[test]
fn resource_cap_exits_4() {
    let dir = TempDir::new().unwrap();
    let body = format!(
        "[model]\nj = 1\ng_over_gc = 0.5\ngamma = 1.0\ncutoffs = [3, 4]\n[run]\noutput_dir = \"{}\"\nsuperoperator_cap = 100\n",
        dir.path().join("out").display()
    );
    let o = chaoscope(&["run", &write_config(dir.path(), &body)]);
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("cap"));
}

#[test]
fn baseline_writes_its_files() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("b");
    let o = chaoscope(&[
        "baseline", "--kind", "poisson2d", "--n", "200", "--realizations", "2", "--seed", "3", "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["spec"]["seed"], 3);
    for f in ["ref_nnsd_poisson2d.csv", "csr.csv", "baseline_dsff.csv", "baseline.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn help_lists_defaults_and_exit_codes() {
    let o = chaoscope(&["--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for needle in ["[model]", "[dspf]", "Exit codes", "CHAOSCOPE_MAX_WORKERS", "superoperator_cap"] {
        assert!(text.contains(needle), "{needle}");
    }
}
