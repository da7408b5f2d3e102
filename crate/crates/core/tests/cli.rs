use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elastic-corner")).args(args).output().expect("binary runs")
}

fn run_cfg(dir: &Path, text: &str, out: &str) -> Output {
    let cfg = dir.join(format!("{out}.conf"));
    fs::write(&cfg, text).unwrap();
    bin(&["run", cfg.to_str().unwrap(), "--output-dir", dir.join(out).to_str().unwrap()])
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir).unwrap().map(|e| e.unwrap()).map(|e| (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())).collect();
    v.sort();
    v
}

#[test]
fn list_names_nine_experiments_with_what_they_verify() {
    let out = bin(&["list"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.matches("verifies:").count(), 9);
    for name in ["verify-cgo", "verify-herglotz", "verify-identities", "te-disk", "te-fem", "vanishing-profile", "scatter", "uniqueness", "reduce-3d"] {
        assert!(text.lines().any(|l| l == name), "{name} missing");
    }
}

#[test]
fn runs_are_deterministic_and_manifest_reproduces_them() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "experiment = verify-herglotz\nseed = 11\npoints = 20\n";
    assert!(run_cfg(tmp.path(), text, "a").status.success());
    assert!(run_cfg(tmp.path(), text, "b").status.success());
    let (a, b) = (files(&tmp.path().join("a")), files(&tmp.path().join("b")));
    let names: Vec<_> = a.iter().map(|f| f.0.as_str()).collect();
    for want in ["manifest.json", "report.json", "plot.gp", "series_errors.csv"] {
        assert!(names.contains(&want), "{want} missing");
    }
    for (fa, fb) in a.iter().zip(&b) {
        if fa.0 != "manifest.json" {
            assert_eq!(fa, fb, "{} differs", fa.0);
        }
    }
    let manifest = tmp.path().join("a/manifest.json");
    let c = tmp.path().join("c");
    assert!(bin(&["run", manifest.to_str().unwrap(), "--output-dir", c.to_str().unwrap()]).status.success());
    for (fa, fc) in a.iter().zip(&files(&c)) {
        if fa.0 != "manifest.json" {
            assert_eq!(fa, fc, "{} differs after manifest replay", fa.0);
        }
    }
}

#[test]
fn seed_override_changes_random_draws() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("h.conf");
    fs::write(&cfg, "experiment = verify-herglotz\npoints = 10\n").unwrap();
    let run = |seed: &str, out: &str| bin(&["run", cfg.to_str().unwrap(), "--seed", seed, "--output-dir", tmp.path().join(out).to_str().unwrap()]);
    assert!(run("1", "s1").status.success() && run("2", "s2").status.success());
    let m: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("s2/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 2);
    assert_ne!(fs::read(tmp.path().join("s1/series_errors.csv")).unwrap(), fs::read(tmp.path().join("s2/series_errors.csv")).unwrap());
}

#[test]
fn unknown_keys_and_degenerate_contrast_fail() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_cfg(tmp.path(), "experiment = te-disk\nradius_typo = 1\n", "bad");
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("radius_typo"));
    let out = run_cfg(tmp.path(), "experiment = te-disk\nq = 1\n", "q1");
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate"));
    assert!(!run_cfg(tmp.path(), "experiment = nope\n", "nope").status.success());
}

#[test]
fn zero_contrast_scatter_gives_zero_far_field_and_exit_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_cfg(tmp.path(), "experiment = scatter\nv0 = 0\n", "v0");
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let csv = fs::read_to_string(tmp.path().join("v0/far_field.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("angle,re_u_p,im_u_p,re_u_s,im_u_s"));
    let rows: Vec<_> = lines.collect();
    assert_eq!(rows.len(), 64);
    assert!(rows.iter().all(|r| r.split(',').skip(1).all(|v| v.parse::<f64>().unwrap() == 0.0)));
}

#[test]
fn failing_certificate_gives_nonzero_exit() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run_cfg(tmp.path(), "experiment = reduce-3d\nx_prime = 0.5\nl_max = 1\n", "r");
    assert_eq!(out.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(tmp.path().join("r/report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
}
