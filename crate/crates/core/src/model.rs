//! Random potentials and the periodic Hatano–Nelson matrix.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Single-site distribution of the i.i.d. part of the potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    /// Uniform on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// `±w` with probability ½ each.
    Bernoulli { w: f64 },
    /// Deterministic value.
    Constant { v: f64 },
}

/// Distribution plus an optional deterministic periodic background `a_j`,
/// added site by site with period `background.len()`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PotentialSpec {
    pub distribution: Distribution,
    #[serde(default)]
    pub background: Vec<f64>,
}

impl PotentialSpec {
    pub fn new(distribution: Distribution) -> Self {
        PotentialSpec { distribution, background: Vec::new() }
    }

    pub fn uniform(lo: f64, hi: f64) -> Self {
        Self::new(Distribution::Uniform { lo, hi })
    }

    pub fn bernoulli(w: f64) -> Self {
        Self::new(Distribution::Bernoulli { w })
    }

    pub fn constant(v: f64) -> Self {
        Self::new(Distribution::Constant { v })
    }

    pub fn with_background(mut self, background: Vec<f64>) -> Self {
        self.background = background;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.distribution {
            Distribution::Uniform { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
                    return Err(Error::InvalidSpec(format!("uniform requires lo < hi, got [{lo}, {hi}]")));
                }
            }
            Distribution::Bernoulli { w } => {
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::InvalidSpec(format!("bernoulli requires w >= 0, got {w}")));
                }
            }
            Distribution::Constant { v } => {
                if !v.is_finite() {
                    return Err(Error::InvalidSpec(format!("constant must be finite, got {v}")));
                }
            }
        }
        if self.background.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidSpec("background values must be finite".into()));
        }
        Ok(())
    }

    /// Extreme values of the single-site distribution (its support hull).
    fn site_extremes(&self) -> (f64, f64) {
        match self.distribution {
            Distribution::Uniform { lo, hi } => (lo, hi),
            Distribution::Bernoulli { w } => (-w, w),
            Distribution::Constant { v } => (v, v),
        }
    }

    /// The bound `A`: supremum of `|v_j + a_j|` over all possible values.
    pub fn bound(&self) -> f64 {
        let (lo, hi) = self.site_extremes();
        let offsets: &[f64] = if self.background.is_empty() { &[0.0] } else { &self.background };
        offsets
            .iter()
            .map(|a| (lo + a).abs().max((hi + a).abs()))
            .fold(0.0, f64::max)
    }

    /// Smallest and largest possible potential values (used for Gershgorin bounds).
    pub fn range(&self) -> (f64, f64) {
        let (lo, hi) = self.site_extremes();
        let offsets: &[f64] = if self.background.is_empty() { &[0.0] } else { &self.background };
        let min = offsets.iter().map(|a| lo + a).fold(f64::INFINITY, f64::min);
        let max = offsets.iter().map(|a| hi + a).fold(f64::NEG_INFINITY, f64::max);
        (min, max)
    }

    /// True when the i.i.d. part is not almost surely constant.
    pub fn is_nondegenerate(&self) -> bool {
        match self.distribution {
            Distribution::Uniform { .. } => true,
            Distribution::Bernoulli { w } => w > 0.0,
            Distribution::Constant { .. } => false,
        }
    }

    /// Infinite stream of potential values drawn from `rng`.
    pub fn sampler(&self, rng: ChaCha8Rng) -> PotentialSampler<'_> {
        PotentialSampler { spec: self, rng, site: 0 }
    }
}

/// Iterator over `v_1 + a_1, v_2 + a_2, …`.
pub struct PotentialSampler<'a> {
    spec: &'a PotentialSpec,
    rng: ChaCha8Rng,
    site: usize,
}

impl Iterator for PotentialSampler<'_> {
    type Item = f64;

    #[inline]
    fn next(&mut self) -> Option<f64> {
        let v = match self.spec.distribution {
            Distribution::Uniform { lo, hi } => lo + (hi - lo) * self.rng.random::<f64>(),
            Distribution::Bernoulli { w } => {
                if self.rng.random_bool(0.5) {
                    w
                } else {
                    -w
                }
            }
            Distribution::Constant { v } => v,
        };
        let bg = &self.spec.background;
        let a = if bg.is_empty() { 0.0 } else { bg[self.site % bg.len()] };
        self.site += 1;
        Some(v + a)
    }
}

/// A realization `v_1..v_N` together with everything needed to regenerate it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialVector {
    pub values: Vec<f64>,
    pub seed: u64,
    /// Realization index; selects the RNG stream.
    pub stream: u64,
    pub spec: PotentialSpec,
}

impl PotentialVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Wraps explicit values (used for deterministic test potentials).
    pub fn from_values(values: Vec<f64>) -> Self {
        let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        let spec = if values.is_empty() || lo == hi {
            PotentialSpec::constant(if values.is_empty() { 0.0 } else { lo })
        } else {
            PotentialSpec::uniform(lo, hi)
        };
        PotentialVector { values, seed: 0, stream: 0, spec }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("v\n");
        for v in &self.values {
            out.push_str(&format!("{v:.17e}\n"));
        }
        out
    }
}

/// Samples `n` potential values on stream 0 of `seed`.
pub fn sample_potential(spec: &PotentialSpec, n: usize, seed: u64) -> Result<PotentialVector> {
    sample_realization(spec, n, seed, 0)
}

/// Samples realization `stream` of an ensemble sharing `seed`.
pub fn sample_realization(spec: &PotentialSpec, n: usize, seed: u64, stream: u64) -> Result<PotentialVector> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::InvalidArgument("potential length must be at least 1".into()));
    }
    let values = spec.sampler(rng::stream(seed, stream)).take(n).collect();
    Ok(PotentialVector { values, seed, stream, spec: spec.clone() })
}

/// Dense `N×N` periodic Hatano–Nelson matrix.
#[derive(Clone, Debug)]
pub struct HatanoNelsonMatrix {
    pub g: f64,
    pub potential: PotentialVector,
    pub entries: DMatrix<f64>,
}

impl HatanoNelsonMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Sum of the diagonal.
    pub fn trace(&self) -> f64 {
        self.potential.values.iter().sum()
    }

    /// Dense matrix–vector product `H x`.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let n = self.n();
        if x.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: x.len() });
        }
        Ok((0..n)
            .map(|i| (0..n).fold(Complex64::new(0.0, 0.0), |acc, j| acc + x[j] * self.entries[(i, j)]))
            .collect())
    }
}

/// Builds `H_N(g)`: diagonal `v_j`, sub-diagonal `e^g`, super-diagonal
/// `e^{-g}`, with corners `(1,N) = e^g` and `(N,1) = e^{-g}`.
pub fn build_matrix(potential: &PotentialVector, g: f64) -> Result<HatanoNelsonMatrix> {
    let n = potential.len();
    if n < 3 {
        return Err(Error::DegenerateSize(n));
    }
    if !g.is_finite() || g < 0.0 {
        return Err(Error::InvalidArgument(format!("g must be finite and non-negative, got {g}")));
    }
    let (up, down) = ((-g).exp(), g.exp());
    let mut m = DMatrix::zeros(n, n);
    for j in 0..n {
        m[(j, j)] = potential.values[j];
        if j + 1 < n {
            m[(j + 1, j)] = down;
            m[(j, j + 1)] = up;
        }
    }
    m[(0, n - 1)] = down;
    m[(n - 1, 0)] = up;
    Ok(HatanoNelsonMatrix { g, potential: potential.clone(), entries: m })
}

/// Free-function form of [`HatanoNelsonMatrix::apply`].
pub fn apply(matrix: &HatanoNelsonMatrix, x: &[Complex64]) -> Result<Vec<Complex64>> {
    matrix.apply(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn constant_and_background() {
        let p = sample_potential(&PotentialSpec::constant(0.0), 5, 99).unwrap();
        assert_eq!(p.values, vec![0.0; 5]);
        let spec = PotentialSpec::constant(0.0).with_background(vec![0.0, 2.0]);
        let p = sample_potential(&spec, 4, 1).unwrap();
        assert_eq!(p.values, vec![0.0, 2.0, 0.0, 2.0]);
    }

    #[test]
    fn uniform_sample_is_in_range_and_reproducible() {
        let spec = PotentialSpec::uniform(0.0, 4.0);
        let a = sample_potential(&spec, 70, 2024).unwrap();
        let b = sample_potential(&spec, 70, 2024).unwrap();
        assert!(a.values.iter().all(|&v| (0.0..=4.0).contains(&v)));
        assert_eq!(
            a.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(matches!(sample_potential(&PotentialSpec::uniform(1.0, 1.0), 3, 0), Err(Error::InvalidSpec(_))));
        assert!(matches!(sample_potential(&PotentialSpec::bernoulli(-0.5), 3, 0), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn bound_is_exact_supremum() {
        assert_eq!(PotentialSpec::uniform(0.0, 4.0).bound(), 4.0);
        assert_eq!(PotentialSpec::uniform(-3.0, 1.0).bound(), 3.0);
        assert_eq!(PotentialSpec::bernoulli(1.5).bound(), 1.5);
        let bg = PotentialSpec::bernoulli(1.0).with_background(vec![0.0, 2.0]);
        // exhaustive: values {-1, 1} + {0, 2}
        let exhaustive = [-1.0f64, 1.0]
            .iter()
            .flat_map(|v| [0.0, 2.0].map(|a| (v + a).abs()))
            .fold(0.0, f64::max);
        assert_eq!(bg.bound(), exhaustive);
        assert_eq!(PotentialSpec::constant(-2.5).with_background(vec![1.0]).bound(), 1.5);
    }

    #[test]
    fn degenerate_sizes_rejected() {
        for n in 1..3 {
            let p = PotentialVector::from_values(vec![0.0; n]);
            assert!(matches!(build_matrix(&p, 0.0), Err(Error::DegenerateSize(_))));
        }
    }

    #[test]
    fn free_circulant_eigenvalues() {
        let p = PotentialVector::from_values(vec![0.0; 3]);
        let h = build_matrix(&p, 0.0).unwrap();
        let eig = nalgebra::SymmetricEigen::new(h.entries.clone());
        let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let expected = [-1.0, -1.0, 2.0];
        for (a, b) in ev.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn corner_entries() {
        let p = PotentialVector::from_values(vec![0.0; 4]);
        let h = build_matrix(&p, 0.1).unwrap();
        assert_eq!(h.entries[(0, 3)], 0.1f64.exp());
        assert_eq!(h.entries[(3, 0)], (-0.1f64).exp());
        assert_eq!(h.entries[(1, 0)], 0.1f64.exp());
        assert_eq!(h.entries[(0, 1)], (-0.1f64).exp());
    }

    #[test]
    fn apply_examples() {
        let h = build_matrix(&PotentialVector::from_values(vec![0.0; 5]), 0.0).unwrap();
        let y = h.apply(&vec![c(1.0, 0.0); 5]).unwrap();
        assert!(y.iter().all(|v| *v == c(2.0, 0.0)));

        let h = build_matrix(&PotentialVector::from_values(vec![1.0, 2.0, 3.0]), 0.0).unwrap();
        let y = h.apply(&[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        assert_eq!(y, vec![c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);

        // x_j = i^{j-1} is a circulant eigenvector. Row j reads
        // e^g x_{j-1} + e^{-g} x_{j+1}, so the eigenvalue is
        // e^g·(-i) + e^{-g}·i = -2i·sinh(g).
        let g = 0.1f64;
        let h = build_matrix(&PotentialVector::from_values(vec![0.0; 4]), g).unwrap();
        let x = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        let y = h.apply(&x).unwrap();
        let lambda = c(0.0, -2.0 * g.sinh());
        for (yi, xi) in y.iter().zip(x) {
            assert!((yi - lambda * xi).norm() < 1e-14);
        }

        assert!(matches!(h.apply(&x[..3]), Err(Error::DimensionMismatch { expected: 4, got: 3 })));
    }

    proptest! {
        #[test]
        fn hermitian_at_zero_and_norm_bound(seed in any::<u64>(), n in 3usize..40, lo in -3.0f64..0.0, w in 0.1f64..4.0) {
            let spec = PotentialSpec::uniform(lo, lo + w);
            let p = sample_potential(&spec, n, seed).unwrap();
            prop_assert!(p.values.iter().all(|v| v.abs() <= spec.bound()));
            let h = build_matrix(&p, 0.0).unwrap();
            prop_assert_eq!(&h.entries, &h.entries.transpose());
            let eig = nalgebra::SymmetricEigen::new(h.entries.clone());
            let norm = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            prop_assert!(norm <= 2.0 + spec.bound() + 1e-12);
        }

        #[test]
        fn regeneration_is_bit_identical(seed in any::<u64>(), stream in 0u64..100) {
            let spec = PotentialSpec::bernoulli(1.0).with_background(vec![0.5, -0.5, 0.0]);
            let a = sample_realization(&spec, 33, seed, stream).unwrap();
            let b = sample_realization(&spec, 33, seed, stream).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
