//! Bands and gaps of the periodic Hermitian problem.
//!
//! The Dirichlet eigenvalues `μ_1 > … > μ_{N−1}` (zeros of the off-diagonal
//! entry of `Φ_N`, i.e. the spectrum of the chain on sites `2..N`) sit one
//! per closed interior gap. So every interval `(μ_k, μ_{k−1})` contains
//! exactly one band, across which `tr Φ_N` runs monotonically between `−2`
//! and `2`, and each band edge is a single sign change of `tr ∓ 2` inside
//! that interval. Bisection on that sign finds all `2N` edges without a
//! grid, and the band count is `N` by construction.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::transfer_product;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn intersects(&self, lo: f64, hi: f64) -> bool {
        self.lo <= hi && lo <= self.hi
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandStructure {
    pub n: usize,
    /// `I_1..I_N`, right to left.
    pub bands: Vec<Interval>,
    /// `G_0..G_N`; `G_0` and `G_N` are unbounded.
    pub gaps: Vec<Interval>,
    /// Interior gaps that closed to a point (`|tr| = 2` tangency). Entry `j`
    /// refers to `G_j`; the outer gaps are never closed.
    pub closed: Vec<bool>,
    /// Edges with `tr = 2`, descending. These are the eigenvalues of `H_N(0)`.
    pub periodic: Vec<f64>,
    /// Edges with `tr = −2`, descending.
    pub antiperiodic: Vec<f64>,
    pub dirichlet: Vec<f64>,
}

impl BandStructure {
    /// Edges `e_1 ≥ e_2 ≥ … ≥ e_{2N}`.
    pub fn edges(&self) -> Vec<f64> {
        self.bands.iter().flat_map(|b| [b.hi, b.lo]).collect()
    }

    /// Checks `ℝ = G_0 ⊎ I_1 ⊎ G_1 ⊎ … ⊎ I_N ⊎ G_N`.
    pub fn interleaving_holds(&self) -> bool {
        if self.bands.len() != self.n || self.gaps.len() != self.n + 1 {
            return false;
        }
        if self.gaps[0].hi != f64::INFINITY || self.gaps[self.n].lo != f64::NEG_INFINITY {
            return false;
        }
        (0..self.n).all(|k| {
            let b = self.bands[k];
            b.lo <= b.hi && self.gaps[k].lo == b.hi && self.gaps[k + 1].hi == b.lo && self.gaps[k + 1].lo <= self.gaps[k + 1].hi
        })
    }

    /// Bands and gaps as CSV with columns `kind,index,left,right`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("kind,index,left,right\n");
        for (j, gap) in self.gaps.iter().enumerate() {
            let _ = writeln!(s, "gap,{j},{:e},{:e}", gap.lo, gap.hi);
            if j < self.n {
                let b = self.bands[j];
                let _ = writeln!(s, "band,{},{:e},{:e}", j + 1, b.lo, b.hi);
            }
        }
        s
    }
}

/// Sturm sequence on the chain `values` with unit hopping.
struct Chain<'a> {
    values: &'a [f64],
    bound: f64,
}

impl<'a> Chain<'a> {
    fn new(values: &'a [f64]) -> Self {
        let a = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Chain { values, bound: a + 3.0 }
    }

    fn count_below(&self, x: f64) -> usize {
        let pivmin = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = 1.0;
        for (k, &v) in self.values.iter().enumerate() {
            q = if k == 0 { v - x } else { v - x - 1.0 / q };
            if q.abs() < pivmin {
                q = -pivmin;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// All eigenvalues, ascending.
    fn all(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len());
        self.isolate(-self.bound, self.bound, 0, self.values.len(), &mut out);
        out
    }

    fn isolate(&self, lo: f64, hi: f64, c_lo: usize, c_hi: usize, out: &mut Vec<f64>) {
        if c_hi <= c_lo {
            return;
        }
        let mid = 0.5 * (lo + hi);
        if converged(lo, hi) || mid <= lo || mid >= hi {
            out.extend(std::iter::repeat_n(mid, c_hi - c_lo));
            return;
        }
        let c_mid = self.count_below(mid).clamp(c_lo, c_hi);
        self.isolate(lo, mid, c_lo, c_mid, out);
        self.isolate(mid, hi, c_mid, c_hi, out);
    }

    /// The eigenvalue with ascending index `i` (0-based).
    fn nth(&self, i: usize) -> f64 {
        let (mut lo, mut hi) = (-self.bound, self.bound);
        loop {
            let mid = 0.5 * (lo + hi);
            if converged(lo, hi) || mid <= lo || mid >= hi {
                return mid;
            }
            if self.count_below(mid) > i {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
}

fn converged(lo: f64, hi: f64) -> bool {
    hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0)
}

/// Eigenvalues of the chain on sites `2..N` (descending).
pub fn dirichlet_eigenvalues(values: &[f64]) -> Vec<f64> {
    if values.len() < 2 {
        return Vec::new();
    }
    let mut d = Chain::new(&values[1..]).all();
    d.reverse();
    d
}

/// Scaled `tr Φ_N(E) − c`, sign-exact.
fn trace_offset(values: &[f64], e: f64, c: f64) -> Result<f64> {
    let p = transfer_product(values, e)?;
    let (t, sigma) = p.trace_parts();
    Ok(t - c * (-sigma).exp())
}

/// Counts band edges of one kind (`tr = c`, `c = ±2`) above an energy.
///
/// With `D(E)` Dirichlet eigenvalues above `E`, the energy lies in interval
/// `k = D(E) + 1`, whose edge `tr = c` is above `E` iff `s_k·(tr − c) < 0`
/// (`s_k = +1` for odd `k`, where `tr` increases across the band). Localized
/// bands are far thinner than `ε`, so `μ_k` and the band edges next to it may
/// coincide in floating point; deriving `k` and the sign test at the same `E`
/// keeps rounding confined to that neighbourhood.
struct EdgeCounter<'a> {
    values: &'a [f64],
    chain: Option<Chain<'a>>,
    bound: f64,
}

impl<'a> EdgeCounter<'a> {
    fn new(values: &'a [f64]) -> Self {
        let chain = if values.len() >= 2 { Some(Chain::new(&values[1..])) } else { None };
        EdgeCounter { values, chain, bound: outer_bound(values) }
    }

    fn dirichlet_above(&self, e: f64) -> usize {
        self.chain.as_ref().map_or(0, |c| c.values.len() - c.count_below(e))
    }

    /// `μ_k` in descending order (1-based), with `μ_0 = +B`, `μ_N = −B`.
    fn mu(&self, k: usize) -> f64 {
        let n = self.values.len();
        if k == 0 {
            self.bound
        } else if k >= n {
            -self.bound
        } else {
            self.chain.as_ref().map_or(0.0, |c| c.nth(n - 1 - k))
        }
    }

    fn above(&self, e: f64, c: f64) -> Result<usize> {
        let d = self.dirichlet_above(e);
        let s = if (d + 1) % 2 == 1 { 1.0 } else { -1.0 };
        Ok(d + usize::from(s * trace_offset(self.values, e, c)? < 0.0))
    }

    /// The `k`-th edge with `tr = c` (descending, 1-based), searched inside
    /// `[lo, hi]` when that brackets it.
    ///
    /// Strictly inside the Dirichlet interval `(μ_k, μ_{k−1})` the count is
    /// `k − 1` plus the trace sign, so the Sturm count is skipped there and
    /// the bracket shrinks by Illinois steps on the scaled `tr − c`, with a
    /// bisection after three steps that fail to halve it.
    fn edge(&self, k: usize, c: f64, lo: f64, hi: f64) -> Result<(f64, bool)> {
        let (mu_lo, mu_hi) = (lo, hi);
        let margin = 1e-12 * (1.0 + lo.abs().max(hi.abs()));
        let (mut lo, mut hi) = (lo - margin, hi + margin);
        let bracketed = self.above(lo, c)? >= k && self.above(hi, c)? < k;
        if !bracketed {
            lo = -self.bound;
            hi = self.bound;
        }
        let s = if k % 2 == 1 { 1.0 } else { -1.0 };
        // Some(f) with the edge above x iff f < 0, when x is interior
        let probe = |x: f64| -> Result<(bool, Option<f64>)> {
            if bracketed && mu_lo < x && x < mu_hi {
                let f = s * trace_offset(self.values, x, c)?;
                Ok((f < 0.0, Some(f)))
            } else {
                Ok((self.above(x, c)? >= k, None))
            }
        };
        let (mut f_lo, mut f_hi): (Option<f64>, Option<f64>) = (None, None);
        // localized edges sit within rounding of μ_k or μ_{k−1}; probing just
        // inside both ends first confines those to the margin
        if bracketed {
            for x in [mu_lo + margin, mu_hi - margin] {
                if !(lo < x && x < hi) {
                    continue;
                }
                let (up, f) = probe(x)?;
                if up {
                    lo = x;
                    f_lo = f;
                } else {
                    hi = x;
                    f_hi = f;
                }
            }
        }
        // Illinois: halve the stale end's value when the same end is kept twice
        let mut last_up: Option<bool> = None;
        let mut slow = 0;
        loop {
            let mid = 0.5 * (lo + hi);
            if converged(lo, hi) || mid <= lo || mid >= hi {
                return Ok((mid, bracketed));
            }
            let mut x = mid;
            if slow < 3 {
                if let (Some(a), Some(b)) = (f_lo, f_hi) {
                    let t = lo - a * (hi - lo) / (b - a);
                    if t > lo && t < hi {
                        x = t;
                    }
                }
            }
            let width = hi - lo;
            let (up, f) = probe(x)?;
            if f == Some(0.0) {
                return Ok((x, bracketed));
            }
            if up {
                lo = x;
                f_lo = f;
                if last_up == Some(true) {
                    f_hi = f_hi.map(|v| 0.5 * v);
                }
            } else {
                hi = x;
                f_hi = f;
                if last_up == Some(false) {
                    f_lo = f_lo.map(|v| 0.5 * v);
                }
            }
            last_up = Some(up);
            slow = if hi - lo > 0.5 * width { slow + 1 } else { 0 };
            if slow > 3 {
                slow = 0;
            }
        }
    }
}

/// Gaps narrower than this (relative) are treated as tangencies. Rounding
/// in `tr ∓ 2` near a double root is of order `sqrt(ε)`.
const CLOSED_GAP: f64 = 1e-7;

fn outer_bound(values: &[f64]) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 3.0
}

/// All `N` edges with `tr = c`, descending, one per Dirichlet interval.
fn edges_of_kind(counter: &EdgeCounter, dirichlet: &[f64], c: f64) -> Result<Vec<f64>> {
    let n = counter.values.len();
    let mut out = Vec::with_capacity(n);
    let mut resolved = 0;
    for k in 1..=n {
        let hi = if k == 1 { counter.bound } else { dirichlet[k - 2] };
        let lo = if k == n { -counter.bound } else { dirichlet[k - 1] };
        let (e, ok) = counter.edge(k, c, lo, hi)?;
        out.push(e);
        resolved += usize::from(ok);
    }
    if resolved != n {
        return Err(Error::BandCount { found: resolved, expected: n });
    }
    Ok(out)
}

/// Whether the gap between edges `hi` (above) and `lo` is a tangency.
fn is_closed(lo: f64, hi: f64) -> bool {
    lo >= hi - CLOSED_GAP * (1.0 + lo.abs())
}

/// Band structure of the `N`-periodic Jacobi operator with potential `values`.
pub fn band_structure(values: &[f64]) -> Result<BandStructure> {
    let n = values.len();
    if n == 0 {
        return Err(Error::DegenerateSize(0));
    }
    let dirichlet = dirichlet_eigenvalues(values);
    let counter = EdgeCounter::new(values);
    let mut periodic = edges_of_kind(&counter, &dirichlet, 2.0)?;
    let mut antiperiodic = edges_of_kind(&counter, &dirichlet, -2.0)?;

    let mut bands = Vec::with_capacity(n);
    for k in 0..n {
        let (p, a) = (periodic[k], antiperiodic[k]);
        bands.push(Interval::new(p.min(a), p.max(a)));
    }
    // a gap that closed to a tangency can come out inverted by rounding;
    // the Dirichlet eigenvalue μ_j sits exactly at the touching point and
    // is far more accurate than the two bisected edges
    let mut closed = vec![false; n + 1];
    for j in 1..n {
        if is_closed(bands[j].hi, bands[j - 1].lo) {
            let m = dirichlet[j - 1];
            bands[j].hi = m;
            bands[j - 1].lo = m;
            closed[j] = true;
        }
    }
    let mut gaps = Vec::with_capacity(n + 1);
    gaps.push(Interval::new(bands[0].hi, f64::INFINITY));
    for j in 1..n {
        gaps.push(Interval::new(bands[j].hi, bands[j - 1].lo));
    }
    gaps.push(Interval::new(f64::NEG_INFINITY, bands[n - 1].lo));
    // keep the edge lists consistent with the clamped bands
    for k in 0..n {
        let b = bands[k];
        let odd = (k + 1) % 2 == 1;
        periodic[k] = if odd { b.hi } else { b.lo };
        antiperiodic[k] = if odd { b.lo } else { b.hi };
    }
    Ok(BandStructure { n, bands, gaps, closed, periodic, antiperiodic, dirichlet })
}

/// Spectrum of `H_N(0)`, descending. Agrees with
/// [`BandStructure::periodic`] but skips the antiperiodic edges.
pub fn hermitian_eigenvalues(values: &[f64]) -> Result<Vec<f64>> {
    let n = values.len();
    if n == 0 {
        return Err(Error::DegenerateSize(0));
    }
    let dirichlet = dirichlet_eigenvalues(values);
    let mut periodic = edges_of_kind(&EdgeCounter::new(values), &dirichlet, 2.0)?;
    // both edges of a closed even gap G_k sit on μ_k
    for k in (2..n).step_by(2) {
        if is_closed(periodic[k], periodic[k - 1]) {
            periodic[k] = dirichlet[k - 1];
            periodic[k - 1] = dirichlet[k - 1];
        }
    }
    Ok(periodic)
}

/// Periodic edges `P_k` for the Dirichlet intervals `k_first..=k_last`
/// (1-based, descending labels), as `(k, P_k)`.
pub(super) fn periodic_range(values: &[f64], k_first: usize, k_last: usize) -> Result<Vec<(usize, f64)>> {
    let counter = EdgeCounter::new(values);
    let mut out = Vec::new();
    let mut upper = counter.mu(k_first - 1);
    for k in k_first..=k_last {
        let lower = counter.mu(k);
        out.push((k, counter.edge(k, 2.0, lower, upper)?.0));
        upper = lower;
    }
    Ok(out)
}

/// Range of Dirichlet interval labels meeting `[lo, hi]`.
pub(super) fn labels_in(values: &[f64], lo: f64, hi: f64) -> (usize, usize) {
    let n = values.len();
    if n < 2 {
        return (1, 1);
    }
    let chain = Chain::new(&values[1..]);
    let top = n - chain.count_below(hi);
    let bottom = n - chain.count_below(lo);
    (top.max(1), bottom.min(n))
}

/// Eigenvalues of `H_N(0)` inside `[lo, hi]`, with their descending labels.
pub fn periodic_eigenvalues_in(values: &[f64], lo: f64, hi: f64) -> Result<Vec<(usize, f64)>> {
    if values.is_empty() {
        return Err(Error::DegenerateSize(0));
    }
    if !(lo < hi) {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let (top, bottom) = labels_in(values, lo, hi);
    let mut out = periodic_range(values, top, bottom)?;
    out.retain(|&(_, e)| lo <= e && e <= hi);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_matrix, sample_potential, PotentialSpec};
    use nalgebra::SymmetricEigen;
    use std::f64::consts::PI;

    fn dense_hermitian(values: &[f64]) -> Vec<f64> {
        let pv = crate::model::PotentialVector::from_values(values.to_vec());
        let h = build_matrix(&pv, 0.0).unwrap();
        let mut ev: Vec<f64> = SymmetricEigen::new(h.entries.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        ev
    }

    #[test]
    fn free_chain_tangencies() {
        for n in [3usize, 4, 7, 12] {
            let bs = band_structure(&vec![0.0; n]).unwrap();
            assert_eq!(bs.bands.len(), n);
            assert!(bs.interleaving_holds());
            assert!((bs.bands[0].hi - 2.0).abs() < 1e-12);
            for k in 1..n {
                let t = 2.0 * (PI * k as f64 / n as f64).cos();
                assert!((bs.gaps[k].lo - t).abs() < 1e-7, "n={n} k={k}");
                assert!(bs.closed[k]);
            }
        }
    }

    #[test]
    fn three_site_circulant() {
        let ev = hermitian_eigenvalues(&[0.0; 3]).unwrap();
        assert!((ev[0] - 2.0).abs() < 1e-12);
        assert!((ev[1] + 1.0).abs() < 1e-12 && (ev[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn periodic_shortcut_matches_band_structure() {
        let mut exact: Vec<f64> = (0..12).map(|k| 2.0 * (2.0 * PI * k as f64 / 12.0).cos()).collect();
        exact.sort_by(|a, b| b.total_cmp(a));
        let free = hermitian_eigenvalues(&[0.0; 12]).unwrap();
        assert!(free.iter().zip(&exact).all(|(a, b)| (a - b).abs() < 1e-12), "{free:?}");
        for (spec, n) in [(PotentialSpec::uniform(0.0, 4.0), 200), (PotentialSpec::bernoulli(1.0), 60)] {
            let v = sample_potential(&spec, n, 3).unwrap();
            let a = hermitian_eigenvalues(&v.values).unwrap();
            let b = band_structure(&v.values).unwrap().periodic;
            let worst = a.iter().zip(&b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
            assert!(worst < 1e-12, "{worst:e}");
        }
    }

    #[test]
    fn bernoulli_bands_match_dense() {
        let spec = PotentialSpec::bernoulli(1.0);
        let v = sample_potential(&spec, 50, 17).unwrap();
        let bs = band_structure(&v.values).unwrap();
        assert_eq!(bs.bands.len(), 50);
        assert!(bs.interleaving_holds());
        let dense = dense_hermitian(&v.values);
        for (a, b) in bs.periodic.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        // G_0 and G_2 edges are eigenvalues
        for e in [bs.gaps[0].lo, bs.gaps[2].lo, bs.gaps[2].hi] {
            assert!(dense.iter().any(|d| (d - e).abs() < 1e-8));
        }
    }

    #[test]
    fn uniform_bands_match_dense() {
        let spec = PotentialSpec::uniform(0.0, 4.0);
        for seed in 0..5 {
            let v = sample_potential(&spec, 120, seed).unwrap();
            let bs = band_structure(&v.values).unwrap();
            assert!(bs.interleaving_holds());
            let dense = dense_hermitian(&v.values);
            let worst = bs.periodic.iter().zip(&dense).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(worst < 1e-8, "seed {seed}: {worst}");
            // |tr| − 2 changes sign across every edge
            for (e, c) in bs.periodic.iter().map(|&e| (e, 2.0)).chain(bs.antiperiodic.iter().map(|&e| (e, -2.0))) {
                let d = 1e-10;
                let l = trace_offset(&v.values, e - d, c).unwrap();
                let r = trace_offset(&v.values, e + d, c).unwrap();
                assert!(l * r < 0.0, "edge {e}");
            }
        }
    }

    #[test]
    fn windowed_eigenvalues_agree() {
        let spec = PotentialSpec::uniform(0.0, 4.0);
        let v = sample_potential(&spec, 300, 5).unwrap();
        let full = hermitian_eigenvalues(&v.values).unwrap();
        let win = periodic_eigenvalues_in(&v.values, 1.0, 1.6).unwrap();
        let expect: Vec<(usize, f64)> =
            full.iter().enumerate().filter(|(_, &e)| (1.0..=1.6).contains(&e)).map(|(i, &e)| (i + 1, e)).collect();
        assert_eq!(win.len(), expect.len());
        for (a, b) in win.iter().zip(&expect) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).abs() < 1e-12);
        }
    }

    #[test]
    fn csv_layout() {
        let bs = band_structure(&[0.0, 1.0, -1.0, 0.5]).unwrap();
        let csv = bs.to_csv();
        assert!(csv.starts_with("kind,index,left,right\n"));
        assert_eq!(csv.lines().count(), 1 + 4 + 5);
    }
}
