use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cohsim::harness::io::{self, read_table};
use cohsim::harness::scenarios::builtin;

fn cohsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cohsim"))
        .args(args)
        .env_remove("COHSIM_SEED")
        .output()
        .unwrap()
}

fn short_config(dir: &Path, name: &str) -> String {
    let mut cfg = builtin(name).unwrap();
    cfg.plan.duration_s = 0.2;
    cfg.noise.sigma_fm_khz = vec![0.0, 317.6];
    let path = dir.join(format!("{name}.toml"));
    fs::write(&path, cfg.to_toml().unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap())
        })
        .collect();
    out.sort();
    out
}

#[test]
fn unknown_scenario_lists_catalog() {
    let out = cohsim(&["analytic", "--scenario", "fig9z"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("fig9z"));
    for name in ["fig2a", "fig4b", "fig5d", "fig3b"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn bad_arguments_exit_one() {
    assert_eq!(cohsim(&["simulate", "--bogus"]).status.code(), Some(1));
    assert_eq!(cohsim(&["simulate", "--scenario", "fig4b", "--seed", "x"]).status.code(), Some(1));
    assert_eq!(cohsim(&["--help"]).status.code(), Some(0));
}

#[test]
fn surface_mode_is_analytic_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = cohsim(&["--quiet", "simulate", "--scenario", "fig2a", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analytic_fig2a_writes_surface() {
    let dir = tempfile::tempdir().unwrap();
    let out = cohsim(&["--quiet", "analytic", "--scenario", "fig2a", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let surface = fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.file_name().unwrap().to_string_lossy().starts_with("surface_"))
        .expect("surface csv");
    let t = read_table(&surface).unwrap();
    assert!(t.has_columns(&io::SURFACE_COLUMNS));
    assert_eq!(t.rows.len(), 701 * 401);
    let c = t.column("coincidence_normalized").unwrap();
    let min = c.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!((min - 0.5).abs() < 1e-9);
}

#[test]
fn simulate_is_reproducible_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), "fig4b");
    let run = |sub: &str, seed: &str| {
        let out_dir = dir.path().join(sub);
        let out = cohsim(&["--quiet", "simulate", "--config", &cfg, "--seed", seed, "--out", out_dir.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        files(&out_dir)
    };
    let a = run("a", "7");
    let b = run("b", "7");
    let c = run("c", "8");
    assert_eq!(a, b);
    assert_ne!(a, c);
    let names: Vec<&str> = a.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"fit.csv") && names.contains(&"runs.csv"), "{names:?}");
    assert_eq!(names.iter().filter(|n| n.starts_with("histogram_")).count(), 2);
}

#[test]
fn seed_flag_overrides_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), "fig4b");
    let run = |sub: &str, env: Option<&str>, flag: Option<&str>| {
        let out_dir = dir.path().join(sub);
        let mut args = vec!["--quiet", "simulate", "--config", &cfg, "--out", out_dir.to_str().unwrap()];
        if let Some(f) = flag {
            args.extend(["--seed", f]);
        }
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_cohsim"));
        cmd.args(&args).env_remove("COHSIM_SEED");
        if let Some(e) = env {
            cmd.env("COHSIM_SEED", e);
        }
        assert!(cmd.output().unwrap().status.success());
        files(&out_dir)
    };
    let by_flag = run("flag", None, Some("11"));
    assert_eq!(run("env", Some("11"), None), by_flag);
    assert_eq!(run("both", Some("12"), Some("11")), by_flag);
}

#[test]
fn analyze_and_compare_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short_config(dir.path(), "fig4b");
    let d = dir.path().to_str().unwrap();
    assert!(cohsim(&["--quiet", "simulate", "--config", &cfg, "--seed", "3", "--out", d]).status.success());
    assert!(cohsim(&["--quiet", "analytic", "--config", &cfg, "--out", d]).status.success());

    let hist = dir.path().join("histogram_df3mhz_sfm0khz.csv");
    let fit = dir.path().join("refit.csv");
    let out = cohsim(&["--quiet", "analyze", hist.to_str().unwrap(), "--out", fit.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = read_table(&fit).unwrap();
    assert!(t.has_columns(&io::FIT_COLUMNS));
    let q = t.text_column("quantity").unwrap();
    let v = t.column("value").unwrap();
    let f = v[q.iter().position(|s| s == "beat_frequency_hz").unwrap()];
    assert!((f / 3e6 - 1.0).abs() < 0.02, "{f}");

    let reference = dir.path().join("analytic_df3mhz_sfm0khz.csv");
    let cmp = dir.path().join("cmp.csv");
    let out = cohsim(&[
        "--quiet",
        "compare",
        reference.to_str().unwrap(),
        hist.to_str().unwrap(),
        "--out",
        cmp.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = read_table(&cmp).unwrap();
    assert!(t.has_columns(&io::COMPARE_COLUMNS));
    let z = t.column("z").unwrap();
    let within = z.iter().filter(|z| z.abs() <= 3.0).count() as f64 / z.len() as f64;
    assert!(within >= 0.95, "{within}");
}

#[test]
fn scenarios_lists_and_shows() {
    let out = cohsim(&["scenarios"]);
    assert!(out.status.success());
    let s = String::from_utf8_lossy(&out.stdout);
    assert!(s.contains("fig4a") && s.contains("fig5c"));
    let out = cohsim(&["scenarios", "--show", "fig4b"]);
    assert!(out.status.success());
    let cfg = cohsim::harness::ScenarioConfig::parse(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(cfg, builtin("fig4b").unwrap());
}
