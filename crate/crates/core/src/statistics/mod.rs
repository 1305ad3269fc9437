//! Ensemble checks: Poisson spacings, minimal spacing, large deviations,
//! radius/norm ratios, gap bounds, Hölder continuity and convergence of
//! the right singular factor.

mod products;

pub use products::{
    gap_radius_check, holder_check, ldp_empirics, radius_norm_ratio, v_convergence, GapRadiusReport, GapRadiusRow,
    HolderFit, LdpReport, LdpRow, RadiusNormReport, VConvReport, VConvRow,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::linear_fit;
use crate::lyapunov::DensityOfStates;
use crate::model::{sample_realization, PotentialSpec, PotentialVector};
use crate::transfer::{hermitian_eigenvalues, real_eigenvalues_window};

/// Realization `k` of the ensemble is stream `k` of `base_seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub spec: PotentialSpec,
    pub n: usize,
    pub n_seeds: usize,
    pub base_seed: u64,
    pub g: f64,
}

impl EnsembleConfig {
    pub fn realization(&self, k: usize) -> Result<PotentialVector> {
        sample_realization(&self.spec, self.n, self.base_seed, k as u64)
    }

    fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.n_seeds == 0 {
            return Err(Error::InvalidArgument("ensemble needs at least one seed".into()));
        }
        Ok(())
    }
}

/// Nearest-neighbour spacings near `e`, multiplied by `N·ρ̂(E)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapSample {
    pub spacings: Vec<f64>,
    pub e: f64,
    pub window: f64,
    /// `N·ρ̂(E)`.
    pub scale: f64,
    /// Real eigenvalues found in the window, summed over realizations.
    pub eigenvalues: usize,
}

impl GapSample {
    pub fn count(&self) -> usize {
        self.spacings.len()
    }

    pub fn mean(&self) -> f64 {
        self.spacings.iter().sum::<f64>() / self.spacings.len() as f64
    }
}

/// Pools consecutive spacings of the real eigenvalues of `H_N(g)` in
/// `[E − window, E + window]` over the ensemble.
pub fn rescaled_gaps(cfg: &EnsembleConfig, e: f64, dos: &DensityOfStates, window: f64) -> Result<GapSample> {
    cfg.validate()?;
    let rho = dos.density(e);
    if !(rho > 0.0) {
        return Err(Error::InvalidArgument(format!("density estimate at {e} is {rho}")));
    }
    let (lo, hi) = (e - window, e + window);
    let per: Vec<Vec<f64>> = (0..cfg.n_seeds)
        .into_par_iter()
        .map(|k| real_eigenvalues_window(&cfg.realization(k)?.values, cfg.g, lo, hi))
        .collect::<Result<_>>()?;
    let scale = cfg.n as f64 * rho;
    let mut spacings = Vec::new();
    let mut eigenvalues = 0;
    for mut ev in per {
        ev.sort_by(f64::total_cmp);
        eigenvalues += ev.len();
        spacings.extend(ev.windows(2).map(|w| (w[1] - w[0]) * scale));
    }
    if spacings.is_empty() {
        return Err(Error::EmptyWindow { lo, hi });
    }
    Ok(GapSample { spacings, e, window, scale, eigenvalues })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KsResult {
    pub statistic: f64,
    /// `1.63/√n`, the 1% level.
    pub critical: f64,
    pub count: usize,
    pub passed: bool,
}

/// Smallest sample the KS suite accepts.
pub const KS_MIN_COUNT: usize = 200;

/// One-sample Kolmogorov–Smirnov distance to `Exp(1)`.
pub fn ks_statistic(sample: &[f64]) -> f64 {
    let mut x = sample.to_vec();
    x.sort_by(f64::total_cmp);
    let n = x.len() as f64;
    x.iter()
        .enumerate()
        .map(|(i, &v)| {
            let f = 1.0 - (-v.max(0.0)).exp();
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn ks_exponential(sample: &GapSample) -> Result<KsResult> {
    ks_exponential_values(&sample.spacings)
}

pub fn ks_exponential_values(sample: &[f64]) -> Result<KsResult> {
    if sample.len() < KS_MIN_COUNT {
        return Err(Error::SampleTooSmall { got: sample.len(), need: KS_MIN_COUNT });
    }
    let statistic = ks_statistic(sample);
    let critical = 1.63 / (sample.len() as f64).sqrt();
    Ok(KsResult { statistic, critical, count: sample.len(), passed: statistic < critical })
}

/// Smallest spacing between distinct values of a spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinGap {
    pub min_gap: f64,
    /// Pairs closer than `1e-10·(1 + |λ|)`, counted as repeated values.
    pub duplicates: usize,
}

impl MinGap {
    pub fn degenerate(&self) -> bool {
        self.duplicates > 0
    }
}

pub fn min_spacing(eigenvalues: &[f64]) -> MinGap {
    let mut x = eigenvalues.to_vec();
    x.sort_by(f64::total_cmp);
    let mut min_gap = f64::INFINITY;
    let mut duplicates = 0;
    for w in x.windows(2) {
        let d = w[1] - w[0];
        if d <= 1e-10 * (1.0 + w[1].abs()) {
            duplicates += 1;
        } else {
            min_gap = min_gap.min(d);
        }
    }
    MinGap { min_gap, duplicates }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinSpacingRow {
    pub n: usize,
    pub seed: usize,
    pub min_gap: f64,
    pub duplicates: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinSpacingReport {
    pub rows: Vec<MinSpacingRow>,
    /// Negative slope of `log(min gap)` against `log N`.
    pub k_hat: f64,
    pub all_positive: bool,
    pub degenerate: bool,
}

/// Minimal spacing of `H_N(0)` over an `N` sweep, with the fitted exponent.
pub fn min_spacing_exponent(spec: &PotentialSpec, sizes: &[usize], n_seeds: usize, base_seed: u64) -> Result<MinSpacingReport> {
    if sizes.len() < 4 {
        return Err(Error::SampleTooSmall { got: sizes.len(), need: 4 });
    }
    let jobs: Vec<(usize, usize)> = sizes.iter().flat_map(|&n| (0..n_seeds).map(move |k| (n, k))).collect();
    let rows: Vec<MinSpacingRow> = jobs
        .into_par_iter()
        .map(|(n, k)| {
            let v = sample_realization(spec, n, base_seed, k as u64)?;
            let m = min_spacing(&hermitian_eigenvalues(&v.values)?);
            Ok(MinSpacingRow { n, seed: k, min_gap: m.min_gap, duplicates: m.duplicates })
        })
        .collect::<Result<_>>()?;
    let all_positive = rows.iter().all(|r| r.min_gap > 0.0);
    let degenerate = rows.iter().any(|r| r.duplicates > 0);
    let (x, y): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.min_gap.is_finite()).map(|r| ((r.n as f64).ln(), r.min_gap.ln())).unzip();
    let k_hat = linear_fit(&x, &y).map_or(f64::NAN, |f| -f.slope);
    Ok(MinSpacingReport { rows, k_hat, all_positive, degenerate })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::ids_empirical;
    use crate::rng;
    use rand::Rng;

    fn exp_sample(n: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, 0);
        (0..n).map(|_| -(1.0 - r.random::<f64>()).ln()).collect()
    }

    #[test]
    fn ks_calibration() {
        let q: Vec<f64> = (0..1000).map(|i| -(1.0 - (i as f64 + 0.5) / 1000.0).ln()).collect();
        assert!(ks_statistic(&q) < 1e-3 + 1e-12);
        let s = ks_exponential_values(&exp_sample(2000, 1)).unwrap();
        assert!(s.passed, "{s:?}");
        let c = ks_exponential_values(&vec![0.7; 500]).unwrap();
        let x0: f64 = 0.7;
        assert!((c.statistic - (1.0 - (-x0).exp()).max((-x0).exp())).abs() < 1e-12);
        assert!(!c.passed);
        let mut r = rng::stream(2, 0);
        let u: Vec<f64> = (0..10_000).map(|_| r.random::<f64>()).collect();
        let ku = ks_exponential_values(&u).unwrap();
        assert!(!ku.passed);
        // sup |x − (1 − e^{−x})| on [0, 1] is attained at x = 1
        assert!((ku.statistic - (-1f64).exp()).abs() < 0.02, "{ku:?}");
        assert!(matches!(ks_exponential_values(&[1.0; 10]), Err(Error::SampleTooSmall { .. })));
    }

    #[test]
    fn synthetic_poisson_mean_spacing() {
        let s = exp_sample(900, 3);
        let g = GapSample { spacings: s, e: 0.0, window: 1.0, scale: 1.0, eigenvalues: 901 };
        assert!((g.mean() - 1.0).abs() < 3.0 / (g.count() as f64).sqrt());
    }

    #[test]
    fn free_min_spacing() {
        let n = 12;
        let ev = hermitian_eigenvalues(&vec![0.0; n]).unwrap();
        let m = min_spacing(&ev);
        assert!(m.degenerate());
        let mut exact: Vec<f64> = (0..n).map(|k| 2.0 * (2.0 * std::f64::consts::PI * k as f64 / n as f64).cos()).collect();
        exact.sort_by(f64::total_cmp);
        exact.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let want = exact.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        assert!((m.min_gap - want).abs() < 1e-12);
        assert_eq!(min_spacing(&[1.0, 2.0, 2.0]).duplicates, 1);
    }

    #[test]
    fn min_spacing_sweep() {
        let r = min_spacing_exponent(&PotentialSpec::uniform(0.0, 4.0), &[50, 100, 200, 400], 3, 1).unwrap();
        assert!(r.all_positive && !r.degenerate);
        assert!(r.k_hat.is_finite() && r.k_hat > 0.0);
    }

    #[test]
    fn rescaled_gaps_are_roughly_exponential() {
        let spec = PotentialSpec::uniform(0.0, 4.0);
        let dos = ids_empirical(&spec, 400, 10, 5).unwrap();
        let cfg = EnsembleConfig { spec, n: 400, n_seeds: 40, base_seed: 9, g: 0.0 };
        let s = rescaled_gaps(&cfg, 2.0, &dos, 0.1).unwrap();
        assert!(s.count() >= 200);
        assert!((s.mean() - 1.0).abs() < 0.2, "{}", s.mean());
        assert!(s.spacings.iter().all(|&x| x >= 0.0));
        let empty = EnsembleConfig { n_seeds: 1, ..cfg };
        assert!(matches!(rescaled_gaps(&empty, 50.0, &dos, 0.01), Err(_)));
    }
}
