//! The acceptance battery at desk scale, one test per criterion. Each test
//! prints a `criterion NN PASS|FAIL` line to the real stdout (not the
//! captured one) and fails when its criterion fails.
//!
//! Criteria 5 to 7 share one Lyapunov profile; the battery is built once.

use std::io::Write;
use std::sync::OnceLock;

use hatano_nelson::runner::acceptance::Battery;
use hatano_nelson::runner::{AcceptanceConfig, Thresholds};

const SEED: u64 = 1;

fn battery() -> &'static Battery {
    static B: OnceLock<Battery> = OnceLock::new();
    B.get_or_init(|| Battery::new(AcceptanceConfig::desk(SEED), Thresholds::default()))
}

fn check(id: usize) {
    let o = battery().run(id);
    let mut out = std::io::stdout();
    let _ = writeln!(out, "{}", o.line());
    let _ = out.flush();
    assert!(o.passed, "{}\n{}", o.line(), serde_json::to_string_pretty(&o.details).unwrap_or_default());
}

#[test]
fn criterion_01_dense_vs_characteristic_function() {
    check(1);
}

#[test]
fn criterion_02_free_circulant() {
    check(2);
}

#[test]
fn criterion_03_free_lyapunov_exponent() {
    check(3);
}

#[test]
fn criterion_04_monte_carlo_vs_thouless() {
    check(4);
}

#[test]
fn criterion_05_reality_below_threshold() {
    check(5);
}

#[test]
fn criterion_06_gap_capture() {
    check(6);
}

#[test]
fn criterion_07_radius_growth_in_gaps() {
    check(7);
}

#[test]
fn criterion_08_band_structure() {
    check(8);
}

#[test]
fn criterion_09_poisson_spacings() {
    check(9);
}

#[test]
fn criterion_10_large_deviations() {
    check(10);
}

#[test]
fn criterion_11_radius_vs_norm() {
    check(11);
}

#[test]
fn criterion_12_right_factor_convergence() {
    check(12);
}

#[test]
fn criterion_13_rank_one_bound() {
    check(13);
}

#[test]
fn criterion_14_determinism() {
    check(14);
}
