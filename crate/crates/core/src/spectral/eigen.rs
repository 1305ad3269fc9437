//! Dense real non-symmetric eigenvalues: Parlett–Reinsch balancing,
//! Householder reduction to Hessenberg form and the Francis double-shift
//! QR iteration with exceptional shifts.

use num_complex::Complex64;

/// Row-major square matrix used as scratch space by the solver.
#[derive(Clone, Debug)]
pub(crate) struct Dense {
    n: usize,
    a: Vec<f64>,
}

impl Dense {
    pub(crate) fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut a = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                a.push(f(i, j));
            }
        }
        Dense { n, a }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.n + j]
    }

    #[inline]
    fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * self.n + j]
    }
}

/// Diagonal similarity by powers of two equalising row and column norms.
pub(crate) fn balance(m: &mut Dense) {
    const RADIX: f64 = 2.0;
    let n = m.n;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += m.at(j, i).abs();
                    r += m.at(i, j).abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= RADIX * RADIX;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= RADIX * RADIX;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let inv = 1.0 / f;
                for j in 0..n {
                    *m.at_mut(i, j) *= inv;
                    *m.at_mut(j, i) *= f;
                }
            }
        }
    }
}

/// Householder reduction to upper Hessenberg form.
pub(crate) fn hessenberg(m: &mut Dense) {
    let n = m.n;
    if n < 3 {
        return;
    }
    let high = n - 1;
    let mut ort = vec![0.0; n];
    for col in 1..high {
        let scale: f64 = (col..=high).map(|i| m.at(i, col - 1).abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut h = 0.0;
        for i in (col..=high).rev() {
            ort[i] = m.at(i, col - 1) / scale;
            h += ort[i] * ort[i];
        }
        let mut g = h.sqrt();
        if ort[col] > 0.0 {
            g = -g;
        }
        h -= ort[col] * g;
        ort[col] -= g;
        for j in col..n {
            let f: f64 = (col..=high).map(|i| ort[i] * m.at(i, j)).sum::<f64>() / h;
            for i in col..=high {
                *m.at_mut(i, j) -= f * ort[i];
            }
        }
        for i in 0..=high {
            let f: f64 = (col..=high).map(|j| ort[j] * m.at(i, j)).sum::<f64>() / h;
            for j in col..=high {
                *m.at_mut(i, j) -= f * ort[j];
            }
        }
        *m.at_mut(col, col - 1) = scale * g;
        for i in col + 1..n {
            *m.at_mut(i, col - 1) = 0.0;
        }
    }
}

/// Iterations allowed per eigenvalue before giving up.
fn max_iter(n: usize) -> usize {
    30 * n.max(10)
}

/// Eigenvalues of an upper Hessenberg matrix. Fails with the index of the
/// eigenvalue that did not converge.
pub(crate) fn hqr(h: &mut Dense) -> std::result::Result<Vec<Complex64>, usize> {
    let nn = h.n;
    let mut wr = vec![0.0; nn];
    let mut wi = vec![0.0; nn];
    if nn == 0 {
        return Ok(Vec::new());
    }
    let eps = f64::EPSILON;
    let mut norm = 0.0;
    for i in 0..nn {
        for j in i.saturating_sub(1)..nn {
            norm += h.at(i, j).abs();
        }
    }
    let mut exshift = 0.0;
    let mut iter = 0;
    let mut n = nn as isize - 1;
    let (mut p, mut q, mut r, mut s, mut z);
    let (mut w, mut x, mut y);
    while n >= 0 {
        let nu = n as usize;
        // look for a single small subdiagonal element
        let mut l = nu;
        while l > 0 {
            s = h.at(l - 1, l - 1).abs() + h.at(l, l).abs();
            if s == 0.0 {
                s = norm;
            }
            if h.at(l, l - 1).abs() < eps * s {
                break;
            }
            l -= 1;
        }
        if l == nu {
            wr[nu] = h.at(nu, nu) + exshift;
            wi[nu] = 0.0;
            n -= 1;
            iter = 0;
        } else if l + 1 == nu {
            w = h.at(nu, nu - 1) * h.at(nu - 1, nu);
            p = (h.at(nu - 1, nu - 1) - h.at(nu, nu)) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            x = h.at(nu, nu) + exshift;
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                wr[nu - 1] = x + z;
                wr[nu] = if z != 0.0 { x - w / z } else { x + z };
                wi[nu - 1] = 0.0;
                wi[nu] = 0.0;
            } else {
                wr[nu - 1] = x + p;
                wr[nu] = x + p;
                wi[nu - 1] = z;
                wi[nu] = -z;
            }
            n -= 2;
            iter = 0;
        } else {
            if iter >= max_iter(nn) {
                return Err(nu);
            }
            x = h.at(nu, nu);
            y = h.at(nu - 1, nu - 1);
            w = h.at(nu, nu - 1) * h.at(nu - 1, nu);
            if iter % 10 == 0 && iter % 30 != 0 {
                // exceptional shift, taken alternately from the bottom and
                // the top of the active block
                exshift += x;
                for i in 0..=nu {
                    *h.at_mut(i, i) -= x;
                }
                s = if iter % 30 == 10 {
                    h.at(nu, nu - 1).abs() + h.at(nu - 1, nu - 2).abs()
                } else {
                    h.at(l + 1, l).abs() + h.at(l + 2, l + 1).abs()
                };
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter > 0 && iter % 30 == 0 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=nu {
                        *h.at_mut(i, i) -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;
            // look for two consecutive small subdiagonal elements
            let mut m = nu - 2;
            loop {
                z = h.at(m, m);
                r = x - z;
                s = y - z;
                p = (r * s - w) / h.at(m + 1, m) + h.at(m, m + 1);
                q = h.at(m + 1, m + 1) - z - r - s;
                r = h.at(m + 2, m + 1);
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = h.at(m, m - 1).abs() * (q.abs() + r.abs());
                let v = eps * (p.abs() * (h.at(m - 1, m - 1).abs() + z.abs() + h.at(m + 1, m + 1).abs()));
                if u < v {
                    break;
                }
                m -= 1;
            }
            for i in m + 2..=nu {
                *h.at_mut(i, i - 2) = 0.0;
                if i > m + 2 {
                    *h.at_mut(i, i - 3) = 0.0;
                }
            }
            // double QR step on rows l..=n and columns m..=n
            let mut k = m;
            while k < nu {
                let notlast = k + 1 != nu;
                if k != m {
                    p = h.at(k, k - 1);
                    q = h.at(k + 1, k - 1);
                    r = if notlast { h.at(k + 2, k - 1) } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        k += 1;
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                } else {
                    x = 0.0;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s != 0.0 {
                    if k != m {
                        *h.at_mut(k, k - 1) = -s * x;
                    } else if l != m {
                        *h.at_mut(k, k - 1) = -h.at(k, k - 1);
                    }
                    p += s;
                    x = p / s;
                    y = q / s;
                    z = r / s;
                    q /= p;
                    r /= p;
                    for j in k..=nu {
                        let mut t = h.at(k, j) + q * h.at(k + 1, j);
                        if notlast {
                            t += r * h.at(k + 2, j);
                            *h.at_mut(k + 2, j) -= t * z;
                        }
                        *h.at_mut(k, j) -= t * x;
                        *h.at_mut(k + 1, j) -= t * y;
                    }
                    let top = nu.min(k + 3);
                    for i in l..=top {
                        let mut t = x * h.at(i, k) + y * h.at(i, k + 1);
                        if notlast {
                            t += z * h.at(i, k + 2);
                            *h.at_mut(i, k + 2) -= t * r;
                        }
                        *h.at_mut(i, k) -= t;
                        *h.at_mut(i, k + 1) -= t * q;
                    }
                }
                k += 1;
            }
        }
    }
    Ok(wr.into_iter().zip(wi).map(|(re, im)| Complex64::new(re, im)).collect())
}

/// All eigenvalues of a dense real matrix.
pub(crate) fn eigenvalues(mut m: Dense) -> std::result::Result<Vec<Complex64>, usize> {
    balance(&mut m);
    hessenberg(&mut m);
    hqr(&mut m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};

    fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
        v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        v
    }

    #[test]
    fn companion_roots() {
        // x^3 - 6x^2 + 11x - 6 = (x-1)(x-2)(x-3)
        let m = Dense::from_fn(3, |i, j| match (i, j) {
            (0, 0) => 6.0,
            (0, 1) => -11.0,
            (0, 2) => 6.0,
            (1, 0) | (2, 1) => 1.0,
            _ => 0.0,
        });
        let ev = sorted(eigenvalues(m).unwrap());
        for (e, t) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((e - t).norm() < 1e-12);
        }
    }

    #[test]
    fn rotation_block() {
        let m = Dense::from_fn(2, |i, j| [[0.0, -2.0], [2.0, 0.0]][i][j]);
        let ev = sorted(eigenvalues(m).unwrap());
        assert!((ev[0] - Complex64::new(0.0, -2.0)).norm() < 1e-14);
        assert!((ev[1] - Complex64::new(0.0, 2.0)).norm() < 1e-14);
    }

    #[test]
    fn symmetric_matches_oracle() {
        let n = 40;
        let f = |i: usize, j: usize| ((i * 7 + j * 13 + i * j) % 11) as f64 - 5.0 + if i == j { i as f64 } else { 0.0 };
        let sym = |i: usize, j: usize| f(i, j) + f(j, i);
        let ev = sorted(eigenvalues(Dense::from_fn(n, sym)).unwrap());
        let mut oracle: Vec<f64> = SymmetricEigen::new(DMatrix::from_fn(n, n, sym)).eigenvalues.iter().copied().collect();
        oracle.sort_by(f64::total_cmp);
        for (e, o) in ev.iter().zip(&oracle) {
            assert!(e.im.abs() < 1e-10 && (e.re - o).abs() < 1e-10, "{e} vs {o}");
        }
    }

    #[test]
    fn trace_is_preserved() {
        let n = 60;
        let f = |i: usize, j: usize| (((i * 31 + j * 17) % 23) as f64 - 11.0) / 7.0;
        let ev = eigenvalues(Dense::from_fn(n, f)).unwrap();
        let tr: f64 = (0..n).map(|i| f(i, i)).sum();
        let s: Complex64 = ev.iter().sum();
        assert!((s.re - tr).abs() < 1e-9 && s.im.abs() < 1e-9);
    }
}
