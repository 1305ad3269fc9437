//! Real solutions of `tr Φ_N(E) = 2cosh(Ng)`, i.e. real eigenvalues of `H_N(g)`.
//!
//! For `g > 0` the level `2cosh(Ng) > 2` is only reached inside gaps where
//! `tr ≥ 2`: the outer gap `G_0`, the even interior gaps, and `G_N` when `N`
//! is even. `tr` has exactly one critical point per interior gap, so an
//! even gap holds zero or two roots, one on each side of the maximum.

use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bands::{labels_in, periodic_range};
use super::{band_structure, transfer_product};
use crate::error::{Error, Result};

/// `f̃(E) = tr(scaled) − e^{−σ}·2cosh(Ng)`; same sign as `tr Φ_N(E) − 2cosh(Ng)`.
pub fn char_value(values: &[f64], g: f64, e: f64) -> Result<f64> {
    let p = transfer_product(values, e)?;
    let (t, sigma) = p.trace_parts();
    Ok(t - level(values.len(), g, sigma))
}

/// `2cosh(Ng)·e^{−σ}` without forming `cosh(Ng)`.
fn level(n: usize, g: f64, sigma: f64) -> f64 {
    let ng = n as f64 * g;
    (ng - sigma).exp() + (-ng - sigma).exp()
}

/// Complex variant of [`char_value`].
pub fn char_value_complex(values: &[f64], g: f64, z: Complex64) -> Result<Complex64> {
    let p = transfer_product(values, z)?;
    let (t, sigma) = p.trace_parts();
    Ok(t - level(values.len(), g, sigma))
}

/// `|tr Φ_N(z) − 2cosh(Ng)| / max(‖Φ_N(z)‖, 2cosh(Ng))`.
pub fn scaled_char_residual(values: &[f64], g: f64, z: Complex64) -> Result<f64> {
    let p = transfer_product(values, z)?;
    let (t, sigma) = p.trace_parts();
    let l = level(values.len(), g, sigma);
    Ok((t - l).norm() / p.scaled().operator_norm().max(l))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharPoint {
    pub e: f64,
    pub f_scaled: f64,
    pub sigma: f64,
}

/// `f̃` sampled on `grid`, for debugging root brackets.
pub fn char_trace(values: &[f64], g: f64, grid: &[f64]) -> Result<Vec<CharPoint>> {
    grid.iter()
        .map(|&e| {
            let p = transfer_product(values, e)?;
            let (t, sigma) = p.trace_parts();
            Ok(CharPoint { e, f_scaled: t - level(values.len(), g, sigma), sigma })
        })
        .collect()
}

pub fn char_trace_csv(points: &[CharPoint]) -> String {
    let mut s = String::from("E,f_scaled,sigma\n");
    for p in points {
        let _ = writeln!(s, "{:e},{:e},{:e}", p.e, p.f_scaled, p.sigma);
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealRoot {
    pub e: f64,
    /// Possible double root (closed gap at `g = 0`).
    pub double: bool,
    /// Index `j` of the gap `G_j` holding the root.
    pub gap: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RealRoots {
    /// Ascending.
    pub roots: Vec<RealRoot>,
    /// Gap maxima that touch the level within tolerance without a resolved
    /// sign change.
    pub tangencies: Vec<f64>,
    /// Sign changes of `f̃` seen on the uniform cross-check grid.
    pub grid_sign_changes: usize,
    /// Grid brackets containing no root from the gap search.
    pub grid_unmatched: Vec<(f64, f64)>,
}

impl RealRoots {
    pub fn values(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.e).collect()
    }
}

fn bisect_sign(values: &[f64], g: f64, mut lo: f64, mut hi: f64, rising: bool) -> Result<f64> {
    loop {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(1.0) || mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if (char_value(values, g, mid)? > 0.0) == rising {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

enum GapSearch {
    Two(f64, f64),
    None,
    Tangent(f64),
}

/// Roots of `f̃` in a bounded even gap `[lo, hi]` with a single interior
/// maximum of `tr`.
fn interior_gap_roots(values: &[f64], g: f64, lo: f64, hi: f64) -> Result<GapSearch> {
    let n = values.len();
    let log_level = n as f64 * g + (1.0 + (-2.0 * n as f64 * g).exp()).ln();
    // ln tr, finite inside an even gap where tr ≥ 2
    let eval = |e: f64| -> Result<(f64, bool)> {
        let p = transfer_product(values, e)?;
        let (t, sigma) = p.trace_parts();
        let above = t - level(n, g, sigma) > 0.0;
        Ok((sigma + t.max(f64::MIN_POSITIVE).ln(), above))
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, up1) = eval(x1)?;
    if up1 {
        return split_at(values, g, lo, hi, x1);
    }
    let (mut f2, up2) = eval(x2)?;
    if up2 {
        return split_at(values, g, lo, hi, x2);
    }
    while b - a > 4.0 * f64::EPSILON * a.abs().max(b.abs()).max(1.0) {
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            let (f, up) = eval(x2)?;
            if up {
                return split_at(values, g, lo, hi, x2);
            }
            f2 = f;
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            let (f, up) = eval(x1)?;
            if up {
                return split_at(values, g, lo, hi, x1);
            }
            f1 = f;
        }
    }
    let peak = f1.max(f2);
    if log_level - peak <= 1e-10 {
        return Ok(GapSearch::Tangent(0.5 * (a + b)));
    }
    Ok(GapSearch::None)
}

fn split_at(values: &[f64], g: f64, lo: f64, hi: f64, top: f64) -> Result<GapSearch> {
    let left = bisect_sign(values, g, lo, top, true)?;
    let right = bisect_sign(values, g, top, hi, false)?;
    Ok(GapSearch::Two(left, right))
}

fn norm_bound(values: &[f64], g: f64) -> f64 {
    values.iter().fold(0.0f64, |m, v| m.max(v.abs())) + 2.0 * g.cosh() + 1.0
}

/// Collects roots from the even gaps whose descending edge labels are given
/// by `periodic` (pairs `(k, P_k)`, consecutive labels).
fn roots_from_edges(values: &[f64], g: f64, periodic: &[(usize, f64)], out: &mut RealRoots) -> Result<()> {
    let n = values.len();
    let bound = norm_bound(values, g);
    for (i, &(k, p)) in periodic.iter().enumerate() {
        if k == 1 {
            let e = bisect_sign(values, g, p, bound.max(p + 1.0), true)?;
            out.roots.push(RealRoot { e, double: false, gap: 0 });
        }
        if k == n && n % 2 == 0 {
            let e = bisect_sign(values, g, (-bound).min(p - 1.0), p, false)?;
            out.roots.push(RealRoot { e, double: false, gap: n });
        }
        // G_{2j} = [P_{2j+1}, P_{2j}]
        if k % 2 == 0 && k < n {
            let Some(&(k1, lower)) = periodic.get(i + 1) else { continue };
            debug_assert_eq!(k1, k + 1);
            if lower >= p {
                continue;
            }
            match interior_gap_roots(values, g, lower, p)? {
                GapSearch::Two(l, r) => {
                    out.roots.push(RealRoot { e: l, double: false, gap: k });
                    out.roots.push(RealRoot { e: r, double: false, gap: k });
                }
                GapSearch::Tangent(e) => out.tangencies.push(e),
                GapSearch::None => {}
            }
        }
    }
    out.roots.sort_by(|a, b| a.e.total_cmp(&b.e));
    Ok(())
}

/// All real eigenvalues of `H_N(g)`, cross-checked against sign changes of
/// `f̃` on a uniform grid of `grid_density` points over `search`.
pub fn real_eigenvalues(values: &[f64], g: f64, search: (f64, f64), grid_density: usize) -> Result<RealRoots> {
    let n = values.len();
    if n < 3 {
        return Err(Error::DegenerateSize(n));
    }
    if !(g >= 0.0) {
        return Err(Error::InvalidArgument(format!("g must be non-negative, got {g}")));
    }
    let a = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let need = 2.0 + a + 1.0;
    if search.0 > -need || search.1 < need {
        return Err(Error::InvalidArgument(format!(
            "search interval [{}, {}] must contain [{}, {}]",
            search.0, search.1, -need, need
        )));
    }
    if grid_density < 50 * n {
        return Err(Error::InvalidArgument(format!("grid density {grid_density} below 50·N = {}", 50 * n)));
    }
    let bs = band_structure(values)?;
    let mut out = RealRoots::default();
    if g == 0.0 {
        for (k, &p) in bs.periodic.iter().enumerate() {
            // a closed even gap is a double eigenvalue
            let label = k + 1;
            let gap = if label % 2 == 0 { label } else { label - 1 };
            let double = (gap > 0 && gap < n && bs.closed[gap]) || (label % 2 == 1 && label > 1 && bs.closed[label - 1]);
            out.roots.push(RealRoot { e: p, double, gap });
        }
        out.roots.sort_by(|a, b| a.e.total_cmp(&b.e));
    } else {
        let labelled: Vec<(usize, f64)> = bs.periodic.iter().enumerate().map(|(k, &p)| (k + 1, p)).collect();
        roots_from_edges(values, g, &labelled, &mut out)?;
    }
    grid_cross_check(values, g, search, grid_density, &mut out)?;
    Ok(out)
}

fn grid_cross_check(values: &[f64], g: f64, search: (f64, f64), m: usize, out: &mut RealRoots) -> Result<()> {
    let h = (search.1 - search.0) / (m - 1) as f64;
    let mut prev = (search.0, char_value(values, g, search.0)?);
    for i in 1..m {
        let e = if i == m - 1 { search.1 } else { search.0 + h * i as f64 };
        let f = char_value(values, g, e)?;
        if (f > 0.0) != (prev.1 > 0.0) {
            out.grid_sign_changes += 1;
            let (lo, hi) = (prev.0, e);
            let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
            if !out.roots.iter().any(|r| r.e >= lo - slack && r.e <= hi + slack) {
                out.grid_unmatched.push((lo, hi));
            }
        }
        prev = (e, f);
    }
    Ok(())
}

/// Real eigenvalues of `H_N(g)` inside `[lo, hi]`, touching only the gaps
/// that meet the window.
pub fn real_eigenvalues_window(values: &[f64], g: f64, lo: f64, hi: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 3 {
        return Err(Error::DegenerateSize(n));
    }
    if !(lo < hi) {
        return Err(Error::EmptyWindow { lo, hi });
    }
    let (top, bottom) = labels_in(values, lo, hi);
    // one extra label on each side so every even gap meeting the window is complete
    let first = top.saturating_sub(1).max(1);
    let last = (bottom + 1).min(n);
    let periodic = periodic_range(values, first, last)?;
    let mut out = RealRoots::default();
    if g == 0.0 {
        return Ok(periodic.iter().rev().map(|&(_, e)| e).filter(|e| (lo..=hi).contains(e)).collect());
    }
    // drop a leading odd-labelled edge whose partner lies outside the range
    let start = usize::from(periodic[0].0 % 2 == 1 && periodic[0].0 > 1);
    roots_from_edges(values, g, &periodic[start..], &mut out)?;
    Ok(out.roots.into_iter().map(|r| r.e).filter(|e| (lo..=hi).contains(e)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_potential, PotentialSpec};

    #[test]
    fn three_site_roots() {
        let r = real_eigenvalues(&[0.0; 3], 0.0, (-4.0, 4.0), 150).unwrap();
        let v = r.values();
        assert_eq!(v.len(), 3);
        assert!((v[0] + 1.0).abs() < 1e-7 && (v[1] + 1.0).abs() < 1e-7 && (v[2] - 2.0).abs() < 1e-12);
        assert!(r.roots[0].double && r.roots[1].double);
        for e in [2.0, -1.0] {
            assert!(char_value(&[0.0; 3], 0.0, e).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn rightmost_ellipse_point() {
        let f = char_value(&[0.0; 4], 0.1, 2.0 * 0.1f64.cosh()).unwrap();
        assert!(f.abs() < 1e-10);
    }

    #[test]
    fn free_chain_real_points() {
        let r = real_eigenvalues(&[0.0; 10], 1.0, (-5.0, 5.0), 500).unwrap();
        let v = r.values();
        assert_eq!(v.len(), 2, "{v:?}");
        assert!((v[0] + 2.0 * 1f64.cosh()).abs() < 1e-10);
        assert!((v[1] - 2.0 * 1f64.cosh()).abs() < 1e-10);
    }

    #[test]
    fn window_matches_full_search() {
        let spec = PotentialSpec::uniform(0.0, 4.0);
        let v = sample_potential(&spec, 150, 9).unwrap();
        for g in [0.0, 0.05, 0.3] {
            let full = real_eigenvalues(&v.values, g, (-7.0, 11.0), 50 * 150).unwrap();
            assert!(full.grid_unmatched.is_empty());
            let (lo, hi) = (0.5, 2.5);
            let expect: Vec<f64> = full.values().into_iter().filter(|e| (lo..=hi).contains(e)).collect();
            let win = real_eigenvalues_window(&v.values, g, lo, hi).unwrap();
            assert_eq!(win.len(), expect.len(), "g={g}");
            for (a, b) in win.iter().zip(&expect) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_small_grid_and_search() {
        let v = [0.0; 5];
        assert!(real_eigenvalues(&v, 0.1, (-5.0, 5.0), 100).is_err());
        assert!(real_eigenvalues(&v, 0.1, (-1.0, 5.0), 1000).is_err());
    }
}
