//! Suites built directly on transfer-matrix products.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::lyapunov::{estimate_gamma_mc, GammaEstimate, LyapunovProfile};
use crate::model::{PotentialSpec, PotentialVector};
use crate::rng;
use crate::transfer::{band_structure, svd_factors, transfer_product, v_distance, TransferProduct};

fn realization(spec: &PotentialSpec, n: usize, seed: u64, k: usize) -> Vec<f64> {
    spec.sampler(rng::stream(seed, k as u64)).take(n).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdpRow {
    pub n: usize,
    pub exceed: usize,
    pub n_reps: usize,
    pub p_hat: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LdpReport {
    pub e: f64,
    pub epsilon: f64,
    /// Reference `γ̂(E)` from an independent long run.
    pub gamma: GammaEstimate,
    pub rows: Vec<LdpRow>,
    /// Slope of `log p̂_N` against `N` over rows with nonzero counts.
    pub log_slope: Option<f64>,
    /// Every row has zero exceedances.
    pub below_resolution: bool,
    pub passed: bool,
}

/// `p̂_N = P̂{|(1/N) log‖Φ_N(E)‖ − γ̂(E)| ≥ ε}` for each `N`.
///
/// A zero count after a nonzero one counts as a decrease; consecutive zero
/// counts are below resolution and accepted.
pub fn ldp_empirics(spec: &PotentialSpec, e: f64, sizes: &[usize], epsilon: f64, n_reps: usize, seed: u64) -> Result<LdpReport> {
    if n_reps < 1000 {
        return Err(Error::SampleTooSmall { got: n_reps, need: 1000 });
    }
    spec.validate()?;
    let gamma = estimate_gamma_mc(spec, Complex64::new(e, 0.0), 100_000, 32, rng::derive_seed(seed, 1))?;
    let rows: Vec<LdpRow> = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let s = rng::derive_seed(seed, 100 + i as u64);
            let exceed: Vec<bool> = (0..n_reps)
                .into_par_iter()
                .map(|k| {
                    let p = transfer_product(&realization(spec, n, s, k), e)?;
                    Ok((p.log_norm() / n as f64 - gamma.value).abs() >= epsilon)
                })
                .collect::<Result<_>>()?;
            let exceed = exceed.into_iter().filter(|&b| b).count();
            Ok(LdpRow { n, exceed, n_reps, p_hat: exceed as f64 / n_reps as f64 })
        })
        .collect::<Result<_>>()?;
    let decreasing = rows.windows(2).all(|w| w[1].p_hat < w[0].p_hat || (w[0].exceed == 0 && w[1].exceed == 0));
    let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r.exceed > 0).map(|r| (r.n as f64, r.p_hat.ln())).unzip();
    let log_slope = linear_fit(&x, &y).map(|f| f.slope);
    let below_resolution = rows.iter().all(|r| r.exceed == 0);
    // one nonzero row followed by zeros is a decrease with no fittable slope
    let slope_ok = match log_slope {
        Some(s) => s < 0.0,
        None => below_resolution || (x.len() == 1 && rows.last().is_some_and(|r| r.exceed == 0)),
    };
    Ok(LdpReport { e, epsilon, gamma, rows, log_slope, below_resolution, passed: decreasing && slope_ok })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusNormReport {
    pub e: f64,
    pub n: usize,
    pub n_reps: usize,
    /// `(δ, P̂{ρ ≤ δ‖Φ‖})`.
    pub cdf: Vec<(f64, f64)>,
    /// Fit of `P̂ ≈ B·δ^b` over `0 < δ < 1` with `P̂ > 0`.
    pub b: f64,
    pub big_b: f64,
    /// Realizations with `ρ > ‖Φ‖` beyond rounding.
    pub radius_exceeds_norm: usize,
    /// Raw `log ρ − log‖Φ‖` per realization.
    pub log_ratios: Vec<f64>,
    pub passed: bool,
}

pub fn radius_norm_ratio(spec: &PotentialSpec, e: f64, n: usize, n_reps: usize, deltas: &[f64], seed: u64) -> Result<RadiusNormReport> {
    if n_reps < 1000 {
        return Err(Error::SampleTooSmall { got: n_reps, need: 1000 });
    }
    spec.validate()?;
    let log_ratios: Vec<f64> = (0..n_reps)
        .into_par_iter()
        .map(|k| {
            let p = transfer_product(&realization(spec, n, seed, k), e)?;
            Ok(p.spectral_radius_log() - p.log_norm())
        })
        .collect::<Result<_>>()?;
    let radius_exceeds_norm = log_ratios.iter().filter(|&&r| r > 1e-12).count();
    let cdf: Vec<(f64, f64)> = deltas
        .iter()
        .map(|&d| {
            let ld = if d > 0.0 { d.ln() } else { f64::NEG_INFINITY };
            // ρ ≤ ‖Φ‖ up to rounding, so δ = 1 admits the slack too
            let slack = if d >= 1.0 { 1e-12 } else { 0.0 };
            let c = log_ratios.iter().filter(|&&r| r <= ld + slack).count();
            (d, c as f64 / n_reps as f64)
        })
        .collect();
    let (x, y): (Vec<f64>, Vec<f64>) =
        cdf.iter().filter(|&&(d, p)| d > 0.0 && d < 1.0 && p > 0.0).map(|&(d, p)| (d.ln(), p.ln())).unzip();
    let fit = linear_fit(&x, &y);
    let (b, big_b) = fit.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.intercept.exp()));
    let monotone = {
        let mut sorted = cdf.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        sorted.windows(2).all(|w| w[0].1 <= w[1].1)
    };
    let passed = radius_exceeds_norm == 0 && monotone && b > 0.0;
    Ok(RadiusNormReport { e, n, n_reps, cdf, b, big_b, radius_exceeds_norm, log_ratios, passed })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VConvRow {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VConvReport {
    pub e: f64,
    pub n_reps: usize,
    pub rows: Vec<VConvRow>,
    /// `b̂'` from `log mean ≈ −b'·N + a`.
    pub rate: f64,
    pub decreasing: bool,
    pub passed: bool,
}

/// Mean `‖V_N − V_{⌊N/2⌋}‖` over realizations, using nested products of
/// one realization for all `N`.
pub fn v_convergence(spec: &PotentialSpec, e: f64, sizes: &[usize], n_reps: usize, seed: u64) -> Result<VConvReport> {
    if n_reps < 100 {
        return Err(Error::SampleTooSmall { got: n_reps, need: 100 });
    }
    spec.validate()?;
    let mut sizes = sizes.to_vec();
    sizes.sort_unstable();
    let n_max = sizes.last().copied().unwrap_or(0);
    let mut marks: Vec<usize> = sizes.iter().flat_map(|&n| [n / 2, n]).collect();
    marks.sort_unstable();
    marks.dedup();
    let per: Vec<Vec<f64>> = (0..n_reps)
        .into_par_iter()
        .map(|k| {
            let v = realization(spec, n_max, seed, k);
            let mut p = TransferProduct::identity(e);
            let mut at = std::collections::HashMap::new();
            for (i, &x) in v.iter().enumerate() {
                p.push(x)?;
                if marks.binary_search(&(i + 1)).is_ok() {
                    at.insert(i + 1, svd_factors(&p));
                }
            }
            if marks.contains(&0) {
                at.insert(0, svd_factors(&TransferProduct::identity(e)));
            }
            Ok(sizes.iter().map(|&n| v_distance(&at[&n], &at[&(n / 2)])).collect())
        })
        .collect::<Result<_>>()?;
    let m = n_reps as f64;
    let rows: Vec<VConvRow> = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let mean = per.iter().map(|r| r[i]).sum::<f64>() / m;
            let var = per.iter().map(|r| (r[i] - mean).powi(2)).sum::<f64>() / (m - 1.0);
            VConvRow { n, mean, stderr: (var / m).sqrt() }
        })
        .collect();
    let decreasing = rows.windows(2).all(|w| w[1].mean < w[0].mean);
    let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().filter(|r| r.mean > 0.0).map(|r| (r.n as f64, r.mean.ln())).unzip();
    let rate = linear_fit(&x, &y).map_or(f64::NAN, |f| -f.slope);
    Ok(VConvReport { e, n_reps, rows, rate, decreasing, passed: decreasing && rate > 0.0 })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRadiusRow {
    pub gap: usize,
    pub left: f64,
    pub right: f64,
    pub grid_points: usize,
    /// `max (1/N) log ρ(Φ_N(E))` over the gap grid.
    pub max_rate: f64,
    /// Same maximum over `[a_j, a_j + e^{−cN}]` and `[b_j − e^{−cN}, b_j]`.
    pub left_window_rate: f64,
    pub right_window_rate: f64,
    /// `max_{G_j} γ̂ − ε`.
    pub bound: f64,
    pub passed: bool,
    pub edge_passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapRadiusReport {
    pub n: usize,
    pub epsilon: f64,
    pub c_edge: f64,
    pub rows: Vec<GapRadiusRow>,
    /// Interior gaps closed to a point, skipped.
    pub skipped: Vec<usize>,
    pub passed: bool,
    pub edge_passed: bool,
}

/// Points in the edge windows.
const EDGE_POINTS: usize = 5;

fn max_rate(values: &[f64], grid: impl Iterator<Item = f64>) -> Result<f64> {
    let n = values.len() as f64;
    let mut m = f64::NEG_INFINITY;
    for e in grid {
        m = m.max(transfer_product(values, e)?.spectral_radius_log() / n);
    }
    Ok(m)
}

fn spread(lo: f64, hi: f64, k: usize) -> impl Iterator<Item = f64> {
    (0..k).map(move |i| if k == 1 { 0.5 * (lo + hi) } else { lo + (hi - lo) * i as f64 / (k - 1) as f64 })
}

/// Compares the growth of `ρ(Φ_N)` in every interior gap with the largest
/// Lyapunov exponent on that gap.
pub fn gap_radius_check(potential: &PotentialVector, profile: &LyapunovProfile, epsilon: f64, c_edge: f64) -> Result<GapRadiusReport> {
    let v = &potential.values;
    let n = v.len();
    let bs = band_structure(v)?;
    let window = (-c_edge * n as f64).exp();
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    for j in 1..n {
        if bs.closed[j] {
            skipped.push(j);
            continue;
        }
        let gap = bs.gaps[j];
        let (a, b) = (gap.lo, gap.hi);
        let width = b - a;
        let points = ((width / 1e-4).ceil() as usize).clamp(1, 200);
        let grid_rate = if points < 2 { max_rate(v, spread(a, b, 1))? } else { max_rate(v, spread(a, b, points))? };
        let w = window.min(width);
        let left_window_rate = max_rate(v, spread(a, a + w, EDGE_POINTS))?;
        let right_window_rate = max_rate(v, spread(b - w, b, EDGE_POINTS))?;
        let max_rate = grid_rate.max(left_window_rate).max(right_window_rate);
        let bound = profile.max_on(a, b) - epsilon;
        rows.push(GapRadiusRow {
            gap: j,
            left: a,
            right: b,
            grid_points: points,
            max_rate,
            left_window_rate,
            right_window_rate,
            bound,
            passed: max_rate >= bound,
            edge_passed: left_window_rate >= bound && right_window_rate >= bound,
        });
    }
    let passed = rows.iter().all(|r| r.passed);
    let edge_passed = rows.iter().all(|r| r.edge_passed);
    Ok(GapRadiusReport { n, epsilon, c_edge, rows, skipped, passed, edge_passed })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderFit {
    pub c: f64,
    pub alpha: f64,
    /// Pairs compared.
    pub pairs: usize,
    /// Largest `|Δγ̂| − 4·stderr − C|ΔE|^α` (≤ 0 when feasible).
    pub max_excess: f64,
    pub feasible: bool,
}

/// Fits `|γ̂(E) − γ̂(E')| ≤ C|E − E'|^α + 4·stderr`. The exponent comes
/// from the slope of the largest excess difference against the distance on
/// dyadic distance scales; `C` is then the smallest feasible constant.
pub fn holder_check(profile: &LyapunovProfile) -> Result<HolderFit> {
    let m = profile.grid.len();
    if m < 50 {
        return Err(Error::SampleTooSmall { got: m, need: 50 });
    }
    let mut diffs: Vec<(f64, f64)> = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for k in i + 1..m {
            let (a, b) = (&profile.estimates[i], &profile.estimates[k]);
            let excess = (a.value - b.value).abs() - 4.0 * a.stderr.max(b.stderr);
            diffs.push((profile.grid[k] - profile.grid[i], excess));
        }
    }
    let pairs = diffs.len();
    let positive: Vec<(f64, f64)> = diffs.iter().copied().filter(|&(_, x)| x > 0.0).collect();
    if positive.is_empty() {
        return Ok(HolderFit { c: 0.0, alpha: 1.0, pairs, max_excess: 0.0, feasible: true });
    }
    let dmin = diffs.iter().fold(f64::INFINITY, |a, &(d, _)| a.min(d));
    let dmax = diffs.iter().fold(0.0f64, |a, &(d, _)| a.max(d));
    // oscillation on scales h, 2h, 4h, …
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    // small scales only: curvature bends the envelope on large ones
    let mut h = dmin * 1.000_001;
    while h <= dmax / 8.0 {
        let osc = positive.iter().filter(|&&(d, _)| d <= h).fold(0.0f64, |a, &(_, x)| a.max(x));
        if osc > 0.0 {
            xs.push(h.ln());
            ys.push(osc.ln());
        }
        h *= 2.0;
    }
    let alpha = linear_fit(&xs, &ys).map_or(1.0, |f| f.slope).clamp(1e-3, 1.0);
    let c = positive.iter().fold(0.0f64, |a, &(d, x)| a.max(x / d.powf(alpha)));
    let max_excess = diffs.iter().fold(f64::NEG_INFINITY, |a, &(d, x)| a.max(x - c * d.powf(alpha)));
    Ok(HolderFit { c, alpha, pairs, max_excess, feasible: alpha > 0.0 && c.is_finite() && max_excess <= 1e-12 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::{gamma_profile, linspace};
    use crate::model::sample_potential;

    #[test]
    fn free_ldp_is_zero() {
        let r = ldp_empirics(&PotentialSpec::constant(0.0), 3.0, &[100, 1000], 0.01, 1000, 1).unwrap();
        assert!(r.rows.iter().all(|x| x.p_hat == 0.0));
        assert!(r.below_resolution && r.passed);
    }

    #[test]
    fn large_epsilon_never_exceeds() {
        let spec = PotentialSpec::uniform(0.0, 4.0);
        let g = estimate_gamma_mc(&spec, Complex64::new(2.0, 0.0), 100_000, 32, rng::derive_seed(5, 1)).unwrap();
        let r = ldp_empirics(&spec, 2.0, &[30, 100], 2.0 * g.value, 1000, 5).unwrap();
        assert!(r.rows.iter().all(|x| x.p_hat < 0.01), "{:?}", r.rows);
    }

    #[test]
    fn radius_cdf_end_points() {
        let r = radius_norm_ratio(&PotentialSpec::uniform(0.0, 4.0), 2.0, 100, 1000, &[0.0, 0.01, 0.1, 0.5, 1.0], 2).unwrap();
        assert_eq!(r.cdf[0].1, 0.0);
        assert_eq!(r.cdf[4].1, 1.0);
        assert_eq!(r.radius_exceeds_norm, 0);
        assert!(r.b > 0.0 && r.passed, "{r:?}");
    }

    #[test]
    fn free_v_converges() {
        let r = v_convergence(&PotentialSpec::constant(0.0), 3.0, &[20, 40, 80], 100, 0).unwrap();
        assert!(r.rows.iter().all(|x| x.mean < 1e-6 && x.stderr < 1e-20), "{:?}", r.rows);
    }

    #[test]
    fn v_distance_ignores_sign_flip() {
        let p = transfer_product(&[0.3, -1.2, 2.0, 0.7], 0.4f64).unwrap();
        let a = svd_factors(&p);
        let mut b = a;
        b.u_angle += std::f64::consts::PI;
        b.v_angle += std::f64::consts::PI;
        assert!(v_distance(&a, &b) < 1e-12);
    }

    #[test]
    fn holder_examples() {
        use crate::lyapunov::GammaEstimate;
        let grid = linspace(0.0, 1.0, 60);
        let flat = LyapunovProfile {
            estimates: grid.iter().map(|_| GammaEstimate { value: 0.4, stderr: 0.0, n_steps: 1000, n_reps: 1 }).collect(),
            grid: grid.clone(),
            seed: 0,
            common_random_numbers: true,
        };
        let f = holder_check(&flat).unwrap();
        assert_eq!(f.c, 0.0);
        assert!(f.feasible);
        let free = gamma_profile(&PotentialSpec::constant(0.0), &linspace(2.5, 3.5, 50), 10_000, 1, 0).unwrap();
        let h = holder_check(&free).unwrap();
        assert!(h.feasible && h.alpha > 0.9, "{h:?}");
    }

    #[test]
    fn gap_radius_report_shape() {
        let spec = PotentialSpec::uniform(0.0, 12.0);
        let v = sample_potential(&spec, 30, 1).unwrap();
        let profile = gamma_profile(&spec, &linspace(-3.0, 15.0, 37), 20_000, 8, 3).unwrap();
        let r = gap_radius_check(&v, &profile, 0.3, 0.05).unwrap();
        assert_eq!(r.rows.len() + r.skipped.len(), 29);
        assert!(r.rows.iter().all(|x| x.max_rate >= x.left_window_rate.max(x.right_window_rate)));
        let free = gap_radius_check(&PotentialVector::from_values(vec![0.0; 8]), &profile, 0.1, 0.05).unwrap();
        assert_eq!(free.skipped.len(), 7);
        assert!(free.rows.is_empty());
    }
}
