//! Reality of eigenvalues below the Lyapunov threshold, and agreement
//! between the dense spectrum and the transfer-matrix characteristic
//! function.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{classify_real_with, full_spectrum, SpectralFlow, TAU_RE};
use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::lyapunov::LyapunovProfile;
use crate::model::{build_matrix, PotentialVector};
use crate::transfer::{band_structure, real_eigenvalues, scaled_char_residual};

/// Summary for one label `j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremCheck {
    /// 1-based label.
    pub label: usize,
    pub lambda0: f64,
    /// `γ̂(λ_j(0))`.
    pub threshold: f64,
    /// Grid values `g ≤ threshold − ε` that were checked.
    pub checked: usize,
    /// Largest checked `g`.
    pub g_reached: f64,
    /// `max |λ_j(g) − λ_j(0)|` over the checked `g`.
    pub max_deviation: f64,
    pub all_real: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub label: usize,
    pub g: f64,
    pub lambda: Complex64,
    pub threshold: f64,
    /// `threshold − g`; small margins deserve a second look.
    pub margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub n: usize,
    pub seed: u64,
    pub stream: u64,
    pub epsilon: f64,
    pub tau: f64,
    /// Largest `g` of the flow.
    pub g_max: f64,
    pub checks: Vec<TheoremCheck>,
    pub violations: Vec<Violation>,
    /// Number of `(j, g)` pairs checked.
    pub n_checks: usize,
    /// Over all checked pairs; zero when nothing was checked.
    pub max_deviation: f64,
}

impl TheoremReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn is_vacuous(&self) -> bool {
        self.n_checks == 0
    }

    pub fn thresholds(&self) -> Vec<f64> {
        self.checks.iter().map(|c| c.threshold).collect()
    }
}

/// For every label and every flow step with `g ≤ γ̂(λ_j(0)) − ε`, checks
/// that `λ_j(g)` is real and records its distance to `λ_j(0)`.
pub fn verify_theorem(flow: &SpectralFlow, profile: &LyapunovProfile, epsilon: f64) -> Result<TheoremReport> {
    if !(epsilon > 0.0) {
        return Err(Error::InvalidArgument(format!("epsilon must be positive, got {epsilon}")));
    }
    if epsilon <= 2.0 * profile.max_stderr() {
        return Err(Error::InvalidArgument(format!(
            "epsilon {epsilon} must exceed twice the profile stderr {}",
            profile.max_stderr()
        )));
    }
    let (lo, hi) = flow.initial.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    if !profile.covers(lo - 0.1, hi + 0.1) {
        return Err(Error::InvalidArgument(format!("profile does not cover [{}, {}]", lo - 0.1, hi + 0.1)));
    }
    let tau = flow.options.tau;
    let mut checks = Vec::with_capacity(flow.n);
    let mut violations = Vec::new();
    for (j, &l0) in flow.initial.iter().enumerate() {
        let threshold = profile.interpolate(l0);
        let mut c = TheoremCheck {
            label: j + 1,
            lambda0: l0,
            threshold,
            checked: 0,
            g_reached: 0.0,
            max_deviation: 0.0,
            all_real: true,
        };
        for st in flow.steps.iter().filter(|s| s.g <= threshold - epsilon) {
            let z = st.eigenvalues[j];
            c.checked += 1;
            c.g_reached = st.g;
            c.max_deviation = c.max_deviation.max((z - l0).norm());
            if !st.real[j] {
                c.all_real = false;
                violations.push(Violation { label: j + 1, g: st.g, lambda: z, threshold, margin: threshold - st.g });
            }
        }
        checks.push(c);
    }
    let n_checks = checks.iter().map(|c| c.checked).sum();
    let max_deviation = checks.iter().fold(0.0f64, |m, c| m.max(c.max_deviation));
    Ok(TheoremReport {
        n: flow.n,
        seed: flow.seed,
        stream: flow.stream,
        epsilon,
        tau,
        g_max: flow.steps.last().map_or(0.0, |s| s.g),
        checks,
        violations,
        n_checks,
        max_deviation,
    })
}

/// Least-squares fit of `−log(max deviation) ≈ c·N + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub c: f64,
    pub intercept: f64,
    /// 95% interval for `c`.
    pub c_interval: (f64, f64),
    pub r2: f64,
    /// `(N, max deviation)` pairs used in the fit.
    pub points: Vec<(usize, f64)>,
    /// Pairs left out because the deviation was zero or not finite.
    pub skipped: usize,
}

/// Fits the decay constant from per-realization `(N, max deviation)`
/// pairs. Needs at least four distinct sizes.
pub fn fit_decay_constant(samples: &[(usize, f64)]) -> Result<DecayFit> {
    let points: Vec<(usize, f64)> = samples.iter().copied().filter(|&(_, d)| d > 0.0 && d.is_finite()).collect();
    let mut sizes: Vec<usize> = points.iter().map(|p| p.0).collect();
    sizes.sort_unstable();
    sizes.dedup();
    if sizes.len() < 4 {
        return Err(Error::SampleTooSmall { got: sizes.len(), need: 4 });
    }
    let x: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
    let y: Vec<f64> = points.iter().map(|p| -p.1.ln()).collect();
    let f = linear_fit(&x, &y).ok_or_else(|| Error::InvalidArgument("decay fit is degenerate".into()))?;
    Ok(DecayFit {
        c: f.slope,
        intercept: f.intercept,
        c_interval: f.slope_interval(),
        r2: f.r2,
        points,
        skipped: samples.len() - x.len(),
    })
}

/// One even interior gap `G_k = [P_{k+1}, P_k]` at a given `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRecord {
    pub gap: usize,
    pub left: f64,
    pub right: f64,
    /// `max(γ̂(P_k), γ̂(P_{k+1}))`.
    pub edge_gamma: f64,
    pub roots: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapCapture {
    pub g: f64,
    pub epsilon: f64,
    /// Gaps whose edge exponent exceeds `g + ε`.
    pub checked: Vec<GapRecord>,
    /// Checked gaps without exactly two roots.
    pub failures: Vec<GapRecord>,
}

/// Every even interior gap whose edge exponent exceeds `g + ε` should
/// hold exactly two real eigenvalues of `H_N(g)`.
pub fn gap_capture(potential: &PotentialVector, g: f64, profile: &LyapunovProfile, epsilon: f64) -> Result<GapCapture> {
    let v = &potential.values;
    let n = v.len();
    let bs = band_structure(v)?;
    let a = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let roots = real_eigenvalues(v, g, (-(3.0 + a), 3.0 + a), 50 * n)?;
    let mut out = GapCapture { g, epsilon, checked: Vec::new(), failures: Vec::new() };
    for k in (2..n).step_by(2) {
        // periodic[k−1] = P_k (right edge), periodic[k] = P_{k+1} (left edge)
        let (right, left) = (bs.periodic[k - 1], bs.periodic[k]);
        let edge_gamma = profile.interpolate(right).max(profile.interpolate(left));
        if edge_gamma < g + epsilon {
            continue;
        }
        let count = roots.roots.iter().filter(|r| r.gap == k).map(|r| if r.double { 2 } else { 1 }).sum();
        let rec = GapRecord { gap: k, left, right, edge_gamma, roots: count };
        if count != 2 {
            out.failures.push(rec.clone());
        }
        out.checked.push(rec);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MismatchKind {
    /// Real dense eigenvalue with no transfer root nearby.
    DenseOnly,
    /// Transfer root with no real dense eigenvalue nearby.
    TransferOnly,
    /// Non-real dense eigenvalue failing the trace condition.
    TraceCondition,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub kind: MismatchKind,
    pub value: Complex64,
    /// Distance to the nearest candidate, or the scaled residual.
    pub detail: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossValidation {
    pub n: usize,
    pub g: f64,
    pub seed: u64,
    pub stream: u64,
    pub tolerance: f64,
    /// Ascending.
    pub dense_real: Vec<f64>,
    /// Ascending.
    pub transfer_real: Vec<f64>,
    pub complex_count: usize,
    /// Largest scaled trace residual at a non-real eigenvalue.
    pub max_complex_residual: f64,
    /// Largest scaled trace residual at a real dense eigenvalue.
    pub max_real_residual: f64,
    pub mismatches: Vec<Mismatch>,
}

impl CrossValidation {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty()
    }
}

/// Tolerance for root positions and scaled trace residuals.
pub const CROSS_TOL: f64 = 1e-6;

/// Compares the dense spectrum of `H_N(g)` with the real roots and the
/// trace condition of the transfer matrix.
pub fn cross_validate(potential: &PotentialVector, g: f64) -> Result<CrossValidation> {
    let n = potential.len();
    if n > 500 {
        return Err(Error::InvalidArgument(format!("cross validation uses a dense solve; N = {n} exceeds 500")));
    }
    let v = &potential.values;
    let spec = full_spectrum(&build_matrix(potential, g)?)?;
    let class = classify_real_with(&spec.eigenvalues, TAU_RE)?;
    let mut dense_real: Vec<f64> = class.real.iter().map(|&i| spec.eigenvalues[i].re).collect();
    dense_real.sort_by(f64::total_cmp);
    let a = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let roots = real_eigenvalues(v, g, (-(3.0 + a), 3.0 + a), 50 * n)?;
    // a double root stands for two eigenvalues
    let mut transfer_real: Vec<f64> = Vec::new();
    for r in &roots.roots {
        transfer_real.push(r.e);
        if r.double {
            transfer_real.push(r.e);
        }
    }
    let mut mismatches = Vec::new();
    let mut used = vec![false; transfer_real.len()];
    for &d in &dense_real {
        let best = (0..transfer_real.len()).filter(|&k| !used[k]).min_by(|&x, &y| {
            (transfer_real[x] - d).abs().total_cmp(&(transfer_real[y] - d).abs())
        });
        match best {
            Some(k) if (transfer_real[k] - d).abs() <= CROSS_TOL => used[k] = true,
            other => mismatches.push(Mismatch {
                kind: MismatchKind::DenseOnly,
                value: Complex64::new(d, 0.0),
                detail: other.map_or(f64::INFINITY, |k| (transfer_real[k] - d).abs()),
            }),
        }
    }
    for (k, &t) in transfer_real.iter().enumerate() {
        if !used[k] {
            let near = dense_real.iter().map(|d| (d - t).abs()).fold(f64::INFINITY, f64::min);
            mismatches.push(Mismatch { kind: MismatchKind::TransferOnly, value: Complex64::new(t, 0.0), detail: near });
        }
    }
    let mut max_complex_residual: f64 = 0.0;
    let mut max_real_residual: f64 = 0.0;
    let mut complex_count = 0;
    for (i, &z) in spec.eigenvalues.iter().enumerate() {
        if class.is_real(i) {
            max_real_residual = max_real_residual.max(scaled_char_residual(v, g, Complex64::new(z.re, 0.0))?);
            continue;
        }
        complex_count += 1;
        let r = scaled_char_residual(v, g, z)?;
        max_complex_residual = max_complex_residual.max(r);
        if !(r <= CROSS_TOL) {
            mismatches.push(Mismatch { kind: MismatchKind::TraceCondition, value: z, detail: r });
        }
    }
    Ok(CrossValidation {
        n,
        g,
        seed: potential.seed,
        stream: potential.stream,
        tolerance: CROSS_TOL,
        dense_real,
        transfer_real,
        complex_count,
        max_complex_residual,
        max_real_residual,
        mismatches,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::{gamma_profile, linspace};
    use crate::model::{sample_potential, sample_realization, PotentialSpec};
    use crate::spectral::track_flow;

    fn flat_profile(value: f64, stderr: f64) -> LyapunovProfile {
        use crate::lyapunov::GammaEstimate;
        let grid = linspace(-10.0, 10.0, 5);
        let estimates = grid.iter().map(|_| GammaEstimate { value, stderr, n_steps: 1000, n_reps: 1 }).collect();
        LyapunovProfile { grid, estimates, seed: 0, common_random_numbers: true }
    }

    #[test]
    fn free_four_site_cross_validation() {
        let v = PotentialVector::from_values(vec![0.0; 4]);
        let cv = cross_validate(&v, 0.1).unwrap();
        assert!(cv.passed(), "{:?}", cv.mismatches);
        assert_eq!(cv.complex_count, 2);
        assert_eq!(cv.dense_real.len(), 2);
        assert!(cv.max_complex_residual < 1e-12);
    }

    #[test]
    fn hermitian_cross_validation() {
        let v = sample_potential(&PotentialSpec::uniform(0.0, 4.0), 60, 5).unwrap();
        let cv = cross_validate(&v, 0.0).unwrap();
        assert!(cv.passed());
        assert_eq!(cv.dense_real.len(), 60);
        assert_eq!(cv.transfer_real.len(), 60);
    }

    #[test]
    fn random_cross_validation() {
        for (k, g) in [0.05, 0.3, 0.8].into_iter().enumerate() {
            let v = sample_realization(&PotentialSpec::bernoulli(1.5), 100, 11, k as u64).unwrap();
            let cv = cross_validate(&v, g).unwrap();
            assert!(cv.passed(), "g={g}: {:?}", cv.mismatches);
        }
    }

    #[test]
    fn vacuous_when_epsilon_is_large() {
        let v = sample_potential(&PotentialSpec::uniform(0.0, 4.0), 12, 1).unwrap();
        let flow = track_flow(&v, 0.2, 0.05).unwrap();
        let r = verify_theorem(&flow, &flat_profile(0.3, 0.0), 1.0).unwrap();
        assert!(r.is_vacuous() && r.passed());
        assert_eq!(r.max_deviation, 0.0);
        // epsilon must dominate the profile noise
        assert!(verify_theorem(&flow, &flat_profile(0.3, 0.1), 0.15).is_err());
    }

    #[test]
    fn strongly_disordered_chain_stays_real() {
        let spec = PotentialSpec::uniform(0.0, 12.0);
        let v = sample_potential(&spec, 40, 2).unwrap();
        let grid = linspace(-3.0, 15.0, 37);
        let profile = gamma_profile(&spec, &grid, 20_000, 8, 3).unwrap();
        let flow = track_flow(&v, 0.4, 0.02).unwrap();
        let r = verify_theorem(&flow, &profile, 0.1).unwrap();
        assert!(r.n_checks > 0);
        assert!(r.passed(), "{:?}", r.violations);
        let gc = gap_capture(&v, 0.2, &profile, 0.1).unwrap();
        assert!(!gc.checked.is_empty());
        assert!(gc.failures.is_empty(), "{:?}", gc.failures);
    }

    #[test]
    fn decay_fit_recovers_slope() {
        let pts: Vec<(usize, f64)> = [40usize, 70, 100, 140].iter().map(|&n| (n, (-0.1 * n as f64 - 1.0).exp())).collect();
        let f = fit_decay_constant(&pts).unwrap();
        assert!((f.c - 0.1).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-10);
        assert!(fit_decay_constant(&pts[..3]).is_err());
    }
}
