//! End-to-end runs of the `hnlab` binary on small configurations.

use std::path::Path;
use std::process::Command;

use hatano_nelson::runner::{sha256_hex, RunManifest, MANIFEST};

fn hnlab(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hnlab")).args(args).env_remove("HNLAB_OUT_DIR").output().expect("spawn hnlab")
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_slice(&std::fs::read(dir.join(MANIFEST)).unwrap()).unwrap()
}

#[test]
fn free_spectrum_matches_closed_form() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("nested/missing/dir");
    let r = hnlab(&["spectrum", "--out", out.to_str().unwrap(), "--g", "0.1"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let csv = std::fs::read_to_string(out.join("spectrum.csv")).unwrap();
    let rows: Vec<Vec<String>> = csv.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 4);
    let (c, s) = (2.0 * 0.1f64.cosh(), 2.0 * 0.1f64.sinh());
    let want = [(c, 0.0, true), (0.0, s, false), (0.0, -s, false), (-c, 0.0, true)];
    for (row, (re, im, real)) in rows.iter().zip(want) {
        let (x, y): (f64, f64) = (row[1].parse().unwrap(), row[2].parse().unwrap());
        assert!((x - re).abs() < 1e-12 && (y - im).abs() < 1e-12, "{row:?}");
        assert_eq!(row[3], real.to_string());
        assert!(row[4].parse::<f64>().unwrap() < 1e-9);
    }
    let m = manifest(&out);
    assert!(m.mismatches(&out).is_empty());
    assert_eq!(m.files.len(), 3);
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let args = |d: &str| {
        vec![
            "stats-vconv".to_string(),
            "--out".into(),
            tmp.path().join(d).to_str().unwrap().into(),
            "--n-reps".into(),
            "200".into(),
            "--seed".into(),
            "5".into(),
        ]
    };
    for d in ["a", "b"] {
        let a = args(d);
        let r = hnlab(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    }
    let (ma, mb) = (manifest(&tmp.path().join("a")), manifest(&tmp.path().join("b")));
    let digests = |m: &RunManifest| m.files.iter().map(|f| (f.path.clone(), f.sha256.clone())).collect::<Vec<_>>();
    assert_eq!(digests(&ma), digests(&mb));
    for f in &ma.files {
        let bytes = std::fs::read(tmp.path().join("a").join(&f.path)).unwrap();
        assert_eq!(sha256_hex(&bytes), f.sha256);
    }
}

#[test]
fn config_file_and_flags_layer() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("bands.toml");
    std::fs::write(&cfg, "n = 9\nseed = 3\n[potential.distribution]\nkind = \"bernoulli\"\nw = 1.0\n").unwrap();
    let out = tmp.path().join("o");
    let r = hnlab(&["bands", "-c", cfg.to_str().unwrap(), "-o", out.to_str().unwrap(), "--n", "12"]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let m = manifest(&out);
    assert_eq!((m.config.n, m.config.seed), (12, 3));
    let v = std::fs::read_to_string(out.join("potential.csv")).unwrap();
    assert_eq!(v.lines().count(), 13);
    assert!(v.lines().skip(1).all(|l| l == "1e0" || l == "-1e0" || l.parse::<f64>().map_or(false, |x| x.abs() == 1.0)));
}

#[test]
fn bad_config_is_a_usage_error_naming_the_key() {
    for (set, key) in [("frobnicate=1", "frobnicate"), ("thresholds.tau_re=abc", "thresholds.tau_re"), ("n=2", "n")] {
        let r = hnlab(&["flow", "--set", set]);
        assert_eq!(r.status.code(), Some(2), "{set}");
        let err = String::from_utf8_lossy(&r.stderr);
        assert!(err.contains(&format!("`{key}`")), "{set}: {err}");
    }
}

#[test]
fn tiny_reality_tolerance_is_recorded() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("t");
    let r = hnlab(&["spectrum", "-o", out.to_str().unwrap(), "--n", "30", "--g", "0.4", "--set", "thresholds.tau_re=1e-20"]);
    assert!(r.status.success());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(report["tau"].as_f64(), Some(1e-20));
    assert_eq!(manifest(&out).config.thresholds.tau_re, 1e-20);
}

#[test]
fn print_config_round_trips() {
    let r = hnlab(&["figure1", "--print-config", "--seed", "8"]);
    assert!(r.status.success());
    let text = String::from_utf8(r.stdout).unwrap();
    let cfg = hatano_nelson::runner::ExperimentConfig::from_toml_str(&text, None).unwrap();
    assert_eq!(cfg.seed, 8);
    assert_eq!(cfg.command.name(), "figure1");
}

#[test]
fn figure_svg_matches_its_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("f");
    let r = hnlab(&[
        "figure1", "-o", out.to_str().unwrap(), "--n-reps", "2", "--set", "n_steps=2000", "--set", "resolution=[32,16]",
    ]);
    assert!(r.status.success(), "{}", String::from_utf8_lossy(&r.stderr));
    let svg = std::fs::read_to_string(out.join("figure1.svg")).unwrap();
    let csv = std::fs::read_to_string(out.join("figure1_spectrum.csv")).unwrap();
    let real = csv.lines().skip(1).filter(|l| l.ends_with(",true")).count();
    let complex = csv.lines().skip(1).filter(|l| l.ends_with(",false")).count();
    assert_eq!(real + complex, 70);
    assert!(svg.contains(&format!(r#"id="real" data-count="{real}""#)));
    assert!(svg.contains(&format!(r#"id="complex" data-count="{complex}""#)));
    let curve_points = std::fs::read_to_string(out.join("figure1_curve.csv")).unwrap().lines().count() - 1;
    assert!(svg.contains(&format!(r#"id="curve" data-count="{curve_points}""#)));
}

#[test]
fn quick_battery_writes_one_file_per_criterion() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("v");
    let r = hnlab(&["verify-all", "-o", out.to_str().unwrap(), "--set", "scale=\"quick\""]);
    let stdout = String::from_utf8_lossy(&r.stdout);
    assert_eq!(stdout.lines().filter(|l| l.starts_with("criterion ")).count(), 14, "{stdout}");
    for k in 1..=14 {
        assert!(out.join(format!("criterion_{k:02}.json")).exists());
    }
    let m = manifest(&out);
    assert_eq!(r.status.success(), m.passed == Some(true));
    assert!(m.mismatches(&out).is_empty());
}
