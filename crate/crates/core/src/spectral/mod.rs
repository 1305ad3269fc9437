//! Complex spectra of `H_N(g)`, reality classification, eigenvalue flows in
//! `g` and the reality check for eigenvalues under the Lyapunov threshold.

mod eigen;
mod flow;
mod residual;
mod theorem;

pub use flow::{track_flow, track_flow_with, CollisionEvent, FlowOptions, FlowStep, SpectralFlow};
pub(crate) use flow::hungarian;
pub use theorem::{
    cross_validate, fit_decay_constant, gap_capture, verify_theorem, CrossValidation, DecayFit, GapCapture, GapRecord,
    Mismatch, MismatchKind, TheoremCheck, TheoremReport, Violation, CROSS_TOL,
};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::HatanoNelsonMatrix;

/// Default reality tolerance: `|Im λ| ≤ τ·(1 + |λ|)`.
pub const TAU_RE: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexSpectrum {
    pub eigenvalues: Vec<Complex64>,
    /// `‖Hx − λx‖/‖x‖` from inverse iteration; empty when not requested.
    pub residuals: Vec<f64>,
    pub n: usize,
    pub g: f64,
    /// Sum of the diagonal, for the trace identity.
    pub trace: f64,
    pub seed: u64,
    pub stream: u64,
}

impl ComplexSpectrum {
    /// `|Σλ − tr H|`.
    pub fn trace_error(&self) -> f64 {
        let s: Complex64 = self.eigenvalues.iter().sum();
        (s - self.trace).norm()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, &r| m.max(r))
    }
}

fn solve(matrix: &HatanoNelsonMatrix) -> Result<Vec<Complex64>> {
    let n = matrix.n();
    if n < 3 {
        return Err(Error::DegenerateSize(n));
    }
    let dense = eigen::Dense::from_fn(n, |i, j| matrix.entries[(i, j)]);
    eigen::eigenvalues(dense).map_err(|index| Error::NoConvergence {
        index,
        seed: matrix.potential.seed,
        stream: matrix.potential.stream,
    })
}

/// All `N` eigenvalues, with residuals from inverse iteration.
pub fn full_spectrum(matrix: &HatanoNelsonMatrix) -> Result<ComplexSpectrum> {
    let mut s = eigenvalues_only(matrix)?;
    s.residuals = s.eigenvalues.iter().map(|&l| residual::residual(matrix, l)).collect::<Result<_>>()?;
    Ok(s)
}

/// All `N` eigenvalues without residuals (used inside flows).
pub fn eigenvalues_only(matrix: &HatanoNelsonMatrix) -> Result<ComplexSpectrum> {
    let eigenvalues = solve(matrix)?;
    Ok(ComplexSpectrum {
        eigenvalues,
        residuals: Vec::new(),
        n: matrix.n(),
        g: matrix.g,
        trace: matrix.trace(),
        seed: matrix.potential.seed,
        stream: matrix.potential.stream,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    /// Indices of real eigenvalues.
    pub real: Vec<usize>,
    /// Index pairs `(upper, lower)` of conjugate partners.
    pub pairs: Vec<(usize, usize)>,
    /// Non-real eigenvalues without a conjugate partner.
    pub unpaired: Vec<usize>,
    pub tau: f64,
}

impl Classification {
    pub fn is_real(&self, index: usize) -> bool {
        self.real.contains(&index)
    }

    pub fn real_mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &i in &self.real {
            m[i] = true;
        }
        m
    }
}

/// Partition with the default tolerance [`TAU_RE`].
pub fn classify_real(spectrum: &ComplexSpectrum) -> Result<Classification> {
    classify_real_with(&spectrum.eigenvalues, TAU_RE)
}

/// Real iff `|Im λ| ≤ τ(1+|λ|)`; the rest is paired greedily with the
/// nearest conjugate. Two admissible partners is an error.
pub fn classify_real_with(eigenvalues: &[Complex64], tau: f64) -> Result<Classification> {
    let tol = |z: Complex64| tau * (1.0 + z.norm());
    let mut out = Classification { tau, ..Default::default() };
    let mut taken = vec![false; eigenvalues.len()];
    for (i, &z) in eigenvalues.iter().enumerate() {
        if z.im.abs() <= tol(z) {
            out.real.push(i);
            taken[i] = true;
        }
    }
    // conjugates from a real Hessenberg QR are exact mirror images; allow
    // for rounding well below any genuine separation
    let pair_tol = |z: Complex64| 1e-9 * (1.0 + z.norm());
    for (i, &z) in eigenvalues.iter().enumerate() {
        if taken[i] || z.im < 0.0 {
            continue;
        }
        let cands: Vec<usize> = (0..eigenvalues.len())
            .filter(|&j| !taken[j] && j != i && eigenvalues[j].im < 0.0 && (eigenvalues[j] - z.conj()).norm() <= pair_tol(z))
            .collect();
        match cands.len() {
            0 => {}
            1 => {
                out.pairs.push((i, cands[0]));
                taken[i] = true;
                taken[cands[0]] = true;
            }
            k => {
                // exact duplicates are genuine multiplicity, not ambiguity
                let first = eigenvalues[cands[0]];
                if cands.iter().all(|&j| eigenvalues[j] == first) {
                    out.pairs.push((i, cands[0]));
                    taken[i] = true;
                    taken[cands[0]] = true;
                } else {
                    return Err(Error::AmbiguousPairing { re: z.re, im: z.im, candidates: k });
                }
            }
        }
    }
    out.unpaired = (0..eigenvalues.len()).filter(|&i| !taken[i]).collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_matrix, sample_potential, PotentialSpec, PotentialVector};
    use std::f64::consts::PI;

    fn circulant(n: usize, g: f64) -> Vec<Complex64> {
        (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                Complex64::new(2.0 * g.cosh() * t.cos(), 2.0 * g.sinh() * t.sin())
            })
            .collect()
    }

    fn matches(found: &[Complex64], expect: &[Complex64], tol: f64) -> bool {
        let mut used = vec![false; expect.len()];
        found.iter().all(|z| {
            let best = (0..expect.len()).filter(|&j| !used[j]).min_by(|&a, &b| (expect[a] - z).norm().total_cmp(&(expect[b] - z).norm()));
            match best {
                Some(j) if (expect[j] - z).norm() < tol => {
                    used[j] = true;
                    true
                }
                _ => false,
            }
        })
    }

    #[test]
    fn four_site_ellipse() {
        let h = build_matrix(&PotentialVector::from_values(vec![0.0; 4]), 0.1).unwrap();
        let s = full_spectrum(&h).unwrap();
        assert!(matches(&s.eigenvalues, &circulant(4, 0.1), 1e-12));
        assert!(s.max_residual() < 1e-12);
        let c = classify_real(&s).unwrap();
        assert_eq!(c.real.len(), 2);
        assert_eq!(c.pairs.len(), 1);
    }

    #[test]
    fn circulants_on_ellipse() {
        for n in [4usize, 10, 71] {
            for g in [0.0, 0.1, 1.0] {
                let h = build_matrix(&PotentialVector::from_values(vec![0.0; n]), g).unwrap();
                let s = eigenvalues_only(&h).unwrap();
                assert!(matches(&s.eigenvalues, &circulant(n, g), 1e-9), "n={n} g={g}");
            }
        }
    }

    #[test]
    fn hermitian_spectra_are_real() {
        let spec = PotentialSpec::uniform(0.0, 4.0);
        for seed in 0..5 {
            let v = sample_potential(&spec, 80, seed).unwrap();
            let s = full_spectrum(&build_matrix(&v, 0.0).unwrap()).unwrap();
            assert!(s.eigenvalues.iter().all(|z| z.im.abs() <= 1e-10 * 6.0));
            assert_eq!(classify_real(&s).unwrap().real.len(), 80);
            assert!(s.trace_error() < 1e-8 * 80.0 * 7.0);
            assert!(s.max_residual() < 1e-10);
        }
    }

    #[test]
    fn noisy_real_spectrum_stays_real() {
        let ev: Vec<Complex64> = (0..20).map(|k| Complex64::new(k as f64 * 0.3 - 3.0, if k % 2 == 0 { 1e-12 } else { -1e-12 })).collect();
        assert_eq!(classify_real_with(&ev, TAU_RE).unwrap().real.len(), 20);
        // an absurdly small tolerance leaves them unclassified
        let c = classify_real_with(&ev, 1e-20).unwrap();
        assert!(c.real.is_empty());
    }

    // Real Schur blocks split into real roots give Im λ = 0 exactly, so the
    // tolerance only matters for pairs born within ~1e-8 of a collision.
    #[test]
    fn solver_real_eigenvalues_have_exact_zero_imaginary_part() {
        let spec = PotentialSpec::uniform(0.0, 4.0);
        let v = sample_potential(&spec, 120, 2).unwrap();
        for g in [0.0, 0.1, 0.3] {
            let s = eigenvalues_only(&build_matrix(&v, g).unwrap()).unwrap();
            let a = classify_real_with(&s.eigenvalues, TAU_RE).unwrap();
            let b = classify_real_with(&s.eigenvalues, 1e-20).unwrap();
            assert_eq!(a.real, b.real, "g={g}");
            assert!(a.real.iter().all(|&i| s.eigenvalues[i].im == 0.0));
        }
    }

    #[test]
    fn ambiguous_partners_are_reported() {
        let ev = vec![Complex64::new(1.0, 0.5), Complex64::new(1.0, -0.5), Complex64::new(1.0 + 1e-10, -0.5)];
        assert!(matches!(classify_real_with(&ev, TAU_RE), Err(Error::AmbiguousPairing { .. })));
    }

    #[test]
    fn non_hermitian_trace_identity() {
        let spec = PotentialSpec::uniform(0.0, 4.0);
        let v = sample_potential(&spec, 100, 3).unwrap();
        for g in [0.05, 0.3, 1.0] {
            let s = full_spectrum(&build_matrix(&v, g).unwrap()).unwrap();
            assert!(s.trace_error() < 1e-8 * 100.0 * (6.0 + g.exp()));
            let c = classify_real(&s).unwrap();
            assert!(c.unpaired.is_empty());
            assert_eq!(c.real.len() + 2 * c.pairs.len(), 100);
        }
    }
}
