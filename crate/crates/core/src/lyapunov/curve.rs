//! `γ̂(z)` on a rectangle of the complex plane and its level sets.

use std::collections::HashMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{estimate_many, linspace};
use crate::error::{Error, Result};
use crate::model::PotentialSpec;

/// Axis-aligned rectangle `[re_lo, re_hi] × [im_lo, im_hi]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub re_lo: f64,
    pub re_hi: f64,
    pub im_lo: f64,
    pub im_hi: f64,
}

impl Region {
    pub fn new(re: (f64, f64), im: (f64, f64)) -> Self {
        Region { re_lo: re.0, re_hi: re.1, im_lo: im.0, im_hi: im.1 }
    }
}

/// Node values `values[iy][ix]` at `(re[ix], im[iy])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaField {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    pub values: Vec<Vec<f64>>,
    pub stderr: Vec<Vec<f64>>,
    pub n_steps: usize,
    pub n_reps: usize,
    pub seed: u64,
}

impl GammaField {
    pub fn from_fn(region: Region, resolution: (usize, usize), f: impl Fn(Complex64) -> f64) -> Self {
        let re = linspace(region.re_lo, region.re_hi, resolution.0);
        let im = linspace(region.im_lo, region.im_hi, resolution.1);
        let values: Vec<Vec<f64>> = im.iter().map(|&y| re.iter().map(|&x| f(Complex64::new(x, y))).collect()).collect();
        let stderr = vec![vec![0.0; re.len()]; im.len()];
        GammaField { re, im, values, stderr, n_steps: 0, n_reps: 0, seed: 0 }
    }

    pub fn range(&self) -> (f64, f64) {
        self.values.iter().flatten().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)))
    }

    pub fn max_stderr(&self) -> f64 {
        self.stderr.iter().flatten().fold(0.0, |m, &v| m.max(v))
    }

    /// Bilinear interpolation inside the grid (`None` outside).
    pub fn bilinear(&self, z: Complex64) -> Option<f64> {
        let locate = |axis: &[f64], t: f64| -> Option<(usize, f64)> {
            let (a, b) = (axis[0], axis[axis.len() - 1]);
            if !(a <= t && t <= b) {
                return None;
            }
            let i = (axis.partition_point(|&x| x <= t).max(1) - 1).min(axis.len() - 2);
            Some((i, (t - axis[i]) / (axis[i + 1] - axis[i])))
        };
        let (ix, tx) = locate(&self.re, z.re)?;
        let (iy, ty) = locate(&self.im, z.im)?;
        let v = &self.values;
        let lo = v[iy][ix] * (1.0 - tx) + v[iy][ix + 1] * tx;
        let hi = v[iy + 1][ix] * (1.0 - tx) + v[iy + 1][ix + 1] * tx;
        Some(lo * (1.0 - ty) + hi * ty)
    }

    /// Columns `re,im,gamma,stderr`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("re,im,gamma,stderr\n");
        for (iy, y) in self.im.iter().enumerate() {
            for (ix, x) in self.re.iter().enumerate() {
                let _ = writeln!(s, "{x:e},{y:e},{:e},{:e}", self.values[iy][ix], self.stderr[iy][ix]);
            }
        }
        s
    }
}

/// Monte-Carlo `γ̂` at every node, with common random numbers.
pub fn gamma_complex_grid(
    spec: &PotentialSpec,
    region: Region,
    resolution: (usize, usize),
    n_steps: usize,
    n_reps: usize,
    seed: u64,
) -> Result<GammaField> {
    if resolution.0 < 16 || resolution.1 < 16 {
        return Err(Error::InvalidArgument(format!("complex grid needs at least 16x16 nodes, got {resolution:?}")));
    }
    if !(region.re_lo < region.re_hi && region.im_lo < region.im_hi) {
        return Err(Error::InvalidArgument(format!("empty region {region:?}")));
    }
    let re = linspace(region.re_lo, region.re_hi, resolution.0);
    let im = linspace(region.im_lo, region.im_hi, resolution.1);
    let zs: Vec<Complex64> = im.iter().flat_map(|&y| re.iter().map(move |&x| Complex64::new(x, y))).collect();
    let est = estimate_many(spec, &zs, n_steps, n_reps, seed)?;
    let nx = re.len();
    let values = est.chunks(nx).map(|row| row.iter().map(|e| e.value).collect()).collect();
    let stderr = est.chunks(nx).map(|row| row.iter().map(|e| e.stderr).collect()).collect();
    Ok(GammaField { re, im, values, stderr, n_steps, n_reps, seed })
}

/// Polylines approximating `{z : γ̂(z) = level}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralCurve {
    pub level: f64,
    pub polylines: Vec<Vec<Complex64>>,
    /// Grid spacing `(Δre, Δim)` of the source field.
    pub cell: (f64, f64),
    /// Set when the field is flat at the requested level.
    pub degenerate: bool,
}

impl SpectralCurve {
    pub fn is_empty(&self) -> bool {
        self.polylines.is_empty()
    }

    pub fn vertex_count(&self) -> usize {
        self.polylines.iter().map(Vec::len).sum()
    }

    /// Euclidean distance from `z` to the nearest segment.
    pub fn distance(&self, z: Complex64) -> f64 {
        let mut best = f64::INFINITY;
        for line in &self.polylines {
            if line.len() == 1 {
                best = best.min((line[0] - z).norm());
            }
            for w in line.windows(2) {
                let d = w[1] - w[0];
                let t = if d.norm_sqr() > 0.0 { (((z - w[0]) * d.conj()).re / d.norm_sqr()).clamp(0.0, 1.0) } else { 0.0 };
                best = best.min((w[0] + d * t - z).norm());
            }
        }
        best
    }

    /// Columns `curve,re,im`, one row per vertex.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("curve,re,im\n");
        for (k, line) in self.polylines.iter().enumerate() {
            for z in line {
                let _ = writeln!(s, "{k},{:e},{:e}", z.re, z.im);
            }
        }
        s
    }
}

/// Cell edge key: `(ix, iy, vertical)`; a horizontal edge joins
/// `(ix, iy)–(ix+1, iy)`, a vertical one `(ix, iy)–(ix, iy+1)`.
type EdgeKey = (usize, usize, bool);

/// Marching squares with linear interpolation along cell edges. Saddle
/// cells are resolved by the cell-centre average.
pub fn extract_curve(field: &GammaField, level: f64) -> SpectralCurve {
    let (nx, ny) = (field.re.len(), field.im.len());
    let cell = if nx > 1 && ny > 1 { (field.re[1] - field.re[0], field.im[1] - field.im[0]) } else { (0.0, 0.0) };
    let (lo, hi) = field.range();
    let flat = hi - lo <= 1e-12 * (1.0 + hi.abs());
    if flat || nx < 2 || ny < 2 || level < lo || level > hi {
        return SpectralCurve { level, polylines: Vec::new(), cell, degenerate: flat && (level - lo).abs() <= 1e-12 * (1.0 + lo.abs()) };
    }
    let v = &field.values;
    let above = |ix: usize, iy: usize| v[iy][ix] > level;
    let point = |k: EdgeKey| -> Complex64 {
        let (ix, iy, vert) = k;
        let (jx, jy) = if vert { (ix, iy + 1) } else { (ix + 1, iy) };
        let (a, b) = (v[iy][ix], v[jy][jx]);
        let t = if b != a { ((level - a) / (b - a)).clamp(0.0, 1.0) } else { 0.5 };
        let p = Complex64::new(field.re[ix], field.im[iy]);
        let q = Complex64::new(field.re[jx], field.im[jy]);
        p + (q - p) * t
    };
    let mut segments: Vec<(EdgeKey, EdgeKey)> = Vec::new();
    for iy in 0..ny - 1 {
        for ix in 0..nx - 1 {
            // corners counter-clockwise from bottom-left
            let bits = [above(ix, iy), above(ix + 1, iy), above(ix + 1, iy + 1), above(ix, iy + 1)];
            let bottom = (ix, iy, false);
            let right = (ix + 1, iy, true);
            let top = (ix, iy + 1, false);
            let left = (ix, iy, true);
            let crossed: Vec<EdgeKey> = [(0, 1, bottom), (1, 2, right), (2, 3, top), (3, 0, left)]
                .into_iter()
                .filter(|&(a, b, _)| bits[a] != bits[b])
                .map(|(_, _, e)| e)
                .collect();
            match crossed.len() {
                2 => segments.push((crossed[0], crossed[1])),
                4 => {
                    let centre = 0.25 * (v[iy][ix] + v[iy][ix + 1] + v[iy + 1][ix + 1] + v[iy + 1][ix]);
                    // join each edge to the one that keeps the centre's side connected
                    if (centre > level) == bits[0] {
                        segments.push((bottom, right));
                        segments.push((top, left));
                    } else {
                        segments.push((bottom, left));
                        segments.push((right, top));
                    }
                }
                _ => {}
            }
        }
    }
    SpectralCurve { level, polylines: chain(&segments).into_iter().map(|l| l.into_iter().map(point).collect()).collect(), cell, degenerate: false }
}

/// Joins segments sharing an edge key into maximal polylines.
fn chain(segments: &[(EdgeKey, EdgeKey)]) -> Vec<Vec<EdgeKey>> {
    let mut at: HashMap<EdgeKey, Vec<usize>> = HashMap::new();
    for (i, &(a, b)) in segments.iter().enumerate() {
        at.entry(a).or_default().push(i);
        at.entry(b).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let next_from = |k: EdgeKey, used: &[bool]| at[&k].iter().copied().find(|&i| !used[i]);
    // start open chains at endpoints of degree one so they come out whole
    let mut order: Vec<usize> = (0..segments.len()).collect();
    order.sort_by_key(|&i| {
        let (a, b) = segments[i];
        usize::from(at[&a].len() != 1 && at[&b].len() != 1)
    });
    for start in order {
        if used[start] {
            continue;
        }
        used[start] = true;
        let (a, b) = segments[start];
        let (mut head, mut tail) = if at[&b].len() == 1 { (b, a) } else { (a, b) };
        let mut line = vec![head, tail];
        while let Some(i) = next_from(tail, &used) {
            used[i] = true;
            let (p, q) = segments[i];
            tail = if p == tail { q } else { p };
            line.push(tail);
        }
        // extend backwards for chains started mid-way
        while let Some(i) = next_from(head, &used) {
            used[i] = true;
            let (p, q) = segments[i];
            head = if p == head { q } else { p };
            line.insert(0, head);
        }
        lines.push(line);
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::free_gamma;

    #[test]
    fn circle_level_set() {
        let f = GammaField::from_fn(Region::new((-2.0, 2.0), (-2.0, 2.0)), (41, 41), |z| z.norm());
        let c = extract_curve(&f, 1.0);
        assert_eq!(c.polylines.len(), 1);
        let line = &c.polylines[0];
        assert_eq!(line.first(), line.last());
        for z in line {
            assert!((z.norm() - 1.0).abs() < 0.01);
            assert!((f.bilinear(*z).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_and_out_of_range_fields() {
        let f = GammaField::from_fn(Region::new((0.0, 1.0), (0.0, 1.0)), (16, 16), |_| 0.3);
        let c = extract_curve(&f, 0.3);
        assert!(c.is_empty() && c.degenerate);
        let g = GammaField::from_fn(Region::new((0.0, 1.0), (0.0, 1.0)), (16, 16), |z| z.re);
        let c = extract_curve(&g, 2.0);
        assert!(c.is_empty() && !c.degenerate);
    }

    #[test]
    fn free_curve_is_the_ellipse() {
        let region = Region::new((-3.0, 3.0), (-1.0, 1.0));
        let field = gamma_complex_grid(&PotentialSpec::constant(0.0), region, (61, 21), 10_000, 1, 0).unwrap();
        let (dx, dy) = (field.re[1] - field.re[0], field.im[1] - field.im[0]);
        for (iy, y) in field.im.iter().enumerate() {
            for (ix, x) in field.re.iter().enumerate() {
                assert!((field.values[iy][ix] - free_gamma(Complex64::new(*x, *y))).abs() < 1e-2);
            }
        }
        let c = extract_curve(&field, 0.5);
        assert!(!c.is_empty());
        let (a, b) = (2.0 * 0.5f64.cosh(), 2.0 * 0.5f64.sinh());
        for line in &c.polylines {
            for z in line {
                let t = z.im.atan2(z.re * b / a);
                let exact = Complex64::new(a * t.cos(), b * t.sin());
                assert!((z - exact).norm() < dx.hypot(dy), "{z}");
            }
        }
    }

    #[test]
    fn field_is_conjugation_symmetric() {
        let region = Region::new((-1.0, 5.0), (-0.5, 0.5));
        let f = gamma_complex_grid(&PotentialSpec::uniform(0.0, 4.0), region, (16, 17), 2000, 4, 9).unwrap();
        let ny = f.im.len();
        for iy in 0..ny {
            for ix in 0..f.re.len() {
                let (a, b) = (f.values[iy][ix], f.values[ny - 1 - iy][ix]);
                assert!((a - b).abs() <= 2.0 * f.stderr[iy][ix].max(1e-12));
            }
        }
        assert!(gamma_complex_grid(&PotentialSpec::constant(0.0), region, (8, 16), 2000, 1, 0).is_err());
    }
}
