//! Lyapunov exponents, the integrated density of states, the Thouless
//! formula and level curves `{z : γ(z) = g}`.

mod curve;

pub use curve::{extract_curve, gamma_complex_grid, GammaField, Region, SpectralCurve};

use std::fmt::Write as _;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sample_realization, PotentialSpec};
use crate::rng;
use crate::transfer::{hermitian_eigenvalues, TransferProduct};

/// Monte-Carlo estimate of `γ(z)`: mean and standard error of
/// `(1/n) log‖Φ_n(z)‖` over independent realizations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    pub value: f64,
    /// Zero for a single realization or a deterministic potential.
    pub stderr: f64,
    pub n_steps: usize,
    pub n_reps: usize,
}

impl GammaEstimate {
    fn from_samples(samples: &[f64], n_steps: usize) -> Self {
        let m = samples.len() as f64;
        let value = samples.iter().sum::<f64>() / m;
        let stderr = if samples.len() > 1 {
            let var = samples.iter().map(|x| (x - value).powi(2)).sum::<f64>() / (m - 1.0);
            (var / m).sqrt()
        } else {
            0.0
        };
        GammaEstimate { value, stderr, n_steps, n_reps: samples.len() }
    }
}

fn check_mc(n_steps: usize, n_reps: usize) -> Result<()> {
    if n_steps < 1000 || n_reps == 0 {
        return Err(Error::InvalidArgument(format!(
            "Lyapunov estimates need n_steps >= 1000 and n_reps >= 1, got {n_steps} and {n_reps}"
        )));
    }
    Ok(())
}

/// `(1/n)·log‖Φ_n‖` for each spectral parameter on one shared realization.
fn growth_rates(values: &[f64], zs: &[Complex64]) -> Result<Vec<f64>> {
    let n = values.len() as f64;
    zs.iter()
        .map(|&z| {
            let lnorm = if z.im == 0.0 {
                let mut p = TransferProduct::identity(z.re);
                for &v in values {
                    p.push(v)?;
                }
                p.log_norm()
            } else {
                let mut p = TransferProduct::identity(z);
                for &v in values {
                    p.push(v)?;
                }
                p.log_norm()
            };
            Ok(lnorm / n)
        })
        .collect()
}

/// Estimates at several points with common random numbers: realization
/// `r` is stream `r` of `seed` for every point.
pub(crate) fn estimate_many(
    spec: &PotentialSpec,
    zs: &[Complex64],
    n_steps: usize,
    n_reps: usize,
    seed: u64,
) -> Result<Vec<GammaEstimate>> {
    spec.validate()?;
    check_mc(n_steps, n_reps)?;
    let per_rep: Vec<Vec<f64>> = (0..n_reps as u64)
        .into_par_iter()
        .map(|r| {
            let values: Vec<f64> = spec.sampler(rng::stream(seed, r)).take(n_steps).collect();
            growth_rates(&values, zs)
        })
        .collect::<Result<_>>()?;
    Ok((0..zs.len())
        .map(|k| {
            let s: Vec<f64> = per_rep.iter().map(|row| row[k]).collect();
            GammaEstimate::from_samples(&s, n_steps)
        })
        .collect())
}

pub fn estimate_gamma_mc(spec: &PotentialSpec, z: Complex64, n_steps: usize, n_reps: usize, seed: u64) -> Result<GammaEstimate> {
    Ok(estimate_many(spec, &[z], n_steps, n_reps, seed)?[0])
}

/// `γ̂(E)` on a sorted energy grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovProfile {
    pub grid: Vec<f64>,
    pub estimates: Vec<GammaEstimate>,
    pub seed: u64,
    /// All grid points share the same realizations.
    pub common_random_numbers: bool,
}

impl LyapunovProfile {
    pub fn values(&self) -> Vec<f64> {
        self.estimates.iter().map(|e| e.value).collect()
    }

    pub fn max_stderr(&self) -> f64 {
        self.estimates.iter().fold(0.0, |m, e| m.max(e.stderr))
    }

    pub fn max_value(&self) -> f64 {
        self.estimates.iter().fold(f64::NEG_INFINITY, |m, e| m.max(e.value))
    }

    pub fn covers(&self, lo: f64, hi: f64) -> bool {
        matches!((self.grid.first(), self.grid.last()), (Some(&a), Some(&b)) if a <= lo && hi <= b)
    }

    /// Piecewise-linear interpolation; constant beyond the end points.
    pub fn interpolate(&self, e: f64) -> f64 {
        let g = &self.grid;
        let v = |i: usize| self.estimates[i].value;
        if e <= g[0] {
            return v(0);
        }
        if e >= g[g.len() - 1] {
            return v(g.len() - 1);
        }
        let i = g.partition_point(|&x| x <= e) - 1;
        let t = (e - g[i]) / (g[i + 1] - g[i]);
        v(i) + t * (v(i + 1) - v(i))
    }

    /// Maximum of the interpolated profile over `[lo, hi]`.
    pub fn max_on(&self, lo: f64, hi: f64) -> f64 {
        let mut m = self.interpolate(lo).max(self.interpolate(hi));
        for (x, e) in self.grid.iter().zip(&self.estimates) {
            if lo <= *x && *x <= hi {
                m = m.max(e.value);
            }
        }
        m
    }

    /// Columns `E,gamma,stderr`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("E,gamma,stderr\n");
        for (x, e) in self.grid.iter().zip(&self.estimates) {
            let _ = writeln!(s, "{x:e},{:e},{:e}", e.value, e.stderr);
        }
        s
    }
}

pub fn gamma_profile(spec: &PotentialSpec, grid: &[f64], n_steps: usize, n_reps: usize, seed: u64) -> Result<LyapunovProfile> {
    if grid.is_empty() || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::InvalidArgument("energy grid must be nonempty and strictly increasing".into()));
    }
    let zs: Vec<Complex64> = grid.iter().map(|&e| Complex64::new(e, 0.0)).collect();
    let estimates = estimate_many(spec, &zs, n_steps, n_reps, seed)?;
    Ok(LyapunovProfile { grid: grid.to_vec(), estimates, seed, common_random_numbers: true })
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Pooled Hermitian spectra of `n_reps` periodic matrices of size `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityOfStates {
    /// Ascending.
    pub sample: Vec<f64>,
    pub n: usize,
    pub n_reps: usize,
    pub seed: u64,
    /// Gaussian kernel bandwidth for [`DensityOfStates::density`].
    pub bandwidth: f64,
}

impl DensityOfStates {
    pub fn from_sample(mut sample: Vec<f64>, n: usize, n_reps: usize, seed: u64) -> Result<Self> {
        if sample.is_empty() || sample.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("density of states needs a finite nonempty sample".into()));
        }
        sample.sort_by(f64::total_cmp);
        let bandwidth = silverman(&sample);
        Ok(DensityOfStates { sample, n, n_reps, seed, bandwidth })
    }

    /// `𝒩(E)`: fraction of the sample strictly below `E`.
    pub fn ids(&self, e: f64) -> f64 {
        self.sample.partition_point(|&x| x < e) as f64 / self.sample.len() as f64
    }

    /// Kernel estimate of `ρ(E) = 𝒩'(E)`.
    pub fn density(&self, e: f64) -> f64 {
        let h = self.bandwidth;
        let lo = self.sample.partition_point(|&x| x < e - 8.0 * h);
        let hi = self.sample.partition_point(|&x| x <= e + 8.0 * h);
        let s: f64 = self.sample[lo..hi].iter().map(|&x| (-0.5 * ((e - x) / h).powi(2)).exp()).sum();
        s / (self.sample.len() as f64 * h * (2.0 * std::f64::consts::PI).sqrt())
    }

    /// Grid point with the largest kernel density.
    pub fn peak(&self, grid: &[f64]) -> Option<f64> {
        grid.iter().copied().max_by(|a, b| self.density(*a).total_cmp(&self.density(*b)))
    }

    pub fn support(&self) -> (f64, f64) {
        (self.sample[0], self.sample[self.sample.len() - 1])
    }
}

/// `0.9·min(sd, IQR/1.34)·M^{−1/5}`, with a floor for degenerate samples.
fn silverman(sorted: &[f64]) -> f64 {
    let m = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / m;
    let sd = (sorted.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m).sqrt();
    let q = |p: f64| sorted[((p * (m - 1.0)).round() as usize).min(sorted.len() - 1)];
    let iqr = q(0.75) - q(0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    let h = 0.9 * spread * m.powf(-0.2);
    if h > 0.0 {
        h
    } else {
        1e-3
    }
}

pub fn ids_empirical(spec: &PotentialSpec, n: usize, n_reps: usize, seed: u64) -> Result<DensityOfStates> {
    if n < 100 || n_reps == 0 {
        return Err(Error::InvalidArgument(format!("ids needs n >= 100 and n_reps >= 1, got {n} and {n_reps}")));
    }
    let spectra: Vec<Vec<f64>> = (0..n_reps as u64)
        .into_par_iter()
        .map(|r| hermitian_eigenvalues(&sample_realization(spec, n, seed, r)?.values))
        .collect::<Result<_>>()?;
    DensityOfStates::from_sample(spectra.concat(), n, n_reps, seed)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThoulessEstimate {
    pub value: f64,
    /// Sample points within `1e-12` of `E`, left out of the average.
    pub excluded: usize,
}

/// `∫ log|E − E'| d𝒩(E')` over the pooled sample.
pub fn gamma_thouless(dos: &DensityOfStates, e: f64) -> ThoulessEstimate {
    let mut sum = 0.0;
    let mut used = 0usize;
    for &x in &dos.sample {
        let d = (e - x).abs();
        if d < 1e-12 {
            continue;
        }
        sum += d.ln();
        used += 1;
    }
    let excluded = dos.sample.len() - used;
    let value = if used > 0 { sum / used as f64 } else { f64::NAN };
    ThoulessEstimate { value, excluded }
}

/// Lyapunov exponent of the zero potential, `|Re arccosh(z/2)|`.
pub fn free_gamma(z: Complex64) -> f64 {
    let w = z / 2.0;
    let r = (w + (w * w - 1.0).sqrt()).norm();
    r.ln().abs()
}

/// Integrated density of states of the zero potential.
pub fn free_ids(e: f64) -> f64 {
    if e <= -2.0 {
        0.0
    } else if e >= 2.0 {
        1.0
    } else {
        (-e / 2.0).acos() / std::f64::consts::PI
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FREE_3: f64 = 0.962_423_650_119_206_9;

    #[test]
    fn free_closed_forms() {
        assert!((free_gamma(Complex64::new(3.0, 0.0)) - FREE_3).abs() < 1e-12);
        assert_eq!(free_gamma(Complex64::new(1.0, 0.0)), 0.0);
        assert!((free_gamma(Complex64::new(0.0, 2.0 * 0.5f64.sinh())) - 0.5).abs() < 1e-12);
        assert_eq!(free_ids(-3.0), 0.0);
        assert!((free_ids(0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn free_mc_is_deterministic() {
        let spec = PotentialSpec::constant(0.0);
        let e = estimate_gamma_mc(&spec, Complex64::new(3.0, 0.0), 100_000, 3, 1).unwrap();
        assert!((e.value - FREE_3).abs() < 1e-3);
        assert_eq!(e.stderr, 0.0);
        let inside = estimate_gamma_mc(&spec, Complex64::new(1.0, 0.0), 10_000, 1, 1).unwrap();
        assert!(inside.value.abs() < 1e-3);
    }

    #[test]
    fn random_exponent_is_positive() {
        let spec = PotentialSpec::uniform(0.0, 4.0);
        for e in [-1.0, 0.5, 2.0, 3.7, 5.5] {
            let g = estimate_gamma_mc(&spec, Complex64::new(e, 0.0), 20_000, 8, 7).unwrap();
            assert!(g.value - 3.0 * g.stderr > 0.0, "E={e}: {g:?}");
        }
    }

    #[test]
    fn free_profile_matches_arccosh() {
        let p = gamma_profile(&PotentialSpec::constant(0.0), &[2.5, 3.0, 3.5], 10_000, 1, 0).unwrap();
        assert_eq!(p.grid, vec![2.5, 3.0, 3.5]);
        for (x, e) in p.grid.iter().zip(&p.estimates) {
            let exact = (x / 2.0 + (x * x / 4.0 - 1.0).sqrt()).ln();
            assert!((e.value - exact).abs() < 1e-3);
        }
        assert!((p.interpolate(2.75) - 0.5 * (p.estimates[0].value + p.estimates[1].value)).abs() < 1e-15);
        assert!(gamma_profile(&PotentialSpec::constant(0.0), &[3.0, 2.0], 10_000, 1, 0).is_err());
    }

    #[test]
    fn free_ids_and_thouless() {
        let dos = ids_empirical(&PotentialSpec::constant(0.0), 1000, 1, 0).unwrap();
        let sup = linspace(-2.0, 2.0, 401).iter().map(|&e| (dos.ids(e) - free_ids(e)).abs()).fold(0.0, f64::max);
        assert!(sup < 0.01, "{sup}");
        assert!((gamma_thouless(&dos, 3.0).value - FREE_3).abs() < 0.01);
        assert!((gamma_thouless(&dos, 100.0).value - 100f64.ln()).abs() < 0.05);
    }

    #[test]
    fn ids_is_a_distribution_function() {
        let dos = ids_empirical(&PotentialSpec::uniform(0.0, 4.0), 200, 4, 3).unwrap();
        let (lo, hi) = dos.support();
        assert!(lo >= -2.0 && hi <= 6.0);
        assert_eq!(dos.ids(lo - 1.0), 0.0);
        assert_eq!(dos.ids(hi + 1.0), 1.0);
        let grid = linspace(-3.0, 7.0, 200);
        assert!(grid.windows(2).all(|w| dos.ids(w[0]) <= dos.ids(w[1])));
        assert!(dos.density(2.0) > 0.0);
    }

    #[test]
    fn bernoulli_collisions_are_counted() {
        let dos = DensityOfStates::from_sample(vec![0.0, 1.0, 1.0, 2.0], 4, 1, 0).unwrap();
        let t = gamma_thouless(&dos, 1.0);
        assert_eq!(t.excluded, 2);
        assert_eq!(t.value, 0.0);
    }

    #[test]
    fn rejects_short_runs() {
        let spec = PotentialSpec::constant(0.0);
        assert!(estimate_gamma_mc(&spec, Complex64::new(3.0, 0.0), 999, 1, 0).is_err());
        assert!(ids_empirical(&spec, 99, 1, 0).is_err());
    }
}
