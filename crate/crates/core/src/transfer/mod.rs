//! Transfer matrices `T_j(z) = ((z − v_j, −1), (1, 0))` and their products.
//!
//! `‖Φ_N‖ ≈ e^{Nγ}` overflows `f64` long before `N = 10^4`, so products are
//! stored in factored form and exposed as `e^σ · scaled` with `scaled` of
//! unit size.

mod bands;
mod roots;

pub use bands::{
    band_structure, dirichlet_eigenvalues, hermitian_eigenvalues, periodic_eigenvalues_in, BandStructure, Interval,
};
pub use roots::{
    char_trace, char_trace_csv, char_value, char_value_complex, real_eigenvalues, real_eigenvalues_window, scaled_char_residual,
    CharPoint, RealRoot, RealRoots,
};

use std::f64::consts::{LN_2, PI};
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Field of matrix entries: `f64` for real energies, `Complex64` otherwise.
pub trait Scalar:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    const IS_REAL: bool;
    fn from_real(x: f64) -> Self;
    /// Largest absolute value among the real components.
    fn max_component(self) -> f64;
    fn scale(self, s: f64) -> Self;
    fn conj(self) -> Self;
    fn norm_sqr(self) -> f64;
    fn to_complex(self) -> Complex64;
    fn is_finite(self) -> bool;
}

impl Scalar for f64 {
    const IS_REAL: bool = true;

    #[inline]
    fn from_real(x: f64) -> Self {
        x
    }

    #[inline]
    fn max_component(self) -> f64 {
        self.abs()
    }

    #[inline]
    fn scale(self, s: f64) -> Self {
        self * s
    }

    #[inline]
    fn conj(self) -> Self {
        self
    }

    #[inline]
    fn norm_sqr(self) -> f64 {
        self * self
    }

    #[inline]
    fn to_complex(self) -> Complex64 {
        Complex64::new(self, 0.0)
    }

    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

impl Scalar for Complex64 {
    const IS_REAL: bool = false;

    #[inline]
    fn from_real(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }

    #[inline]
    fn max_component(self) -> f64 {
        self.re.abs().max(self.im.abs())
    }

    #[inline]
    fn scale(self, s: f64) -> Self {
        Complex64::new(self.re * s, self.im * s)
    }

    #[inline]
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }

    #[inline]
    fn norm_sqr(self) -> f64 {
        Complex64::norm_sqr(&self)
    }

    #[inline]
    fn to_complex(self) -> Complex64 {
        self
    }

    #[inline]
    fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// A 2×2 matrix `((a, b), (c, d))`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matrix2<T = Complex64> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Scalar> Matrix2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Matrix2 { a, b, c, d }
    }

    pub fn identity() -> Self {
        let (one, zero) = (T::from_real(1.0), T::from_real(0.0));
        Matrix2 { a: one, b: zero, c: zero, d: one }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Matrix2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn det(&self) -> T {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> T {
        self.a + self.d
    }

    pub fn max_component(&self) -> f64 {
        self.a.max_component().max(self.b.max_component()).max(self.c.max_component()).max(self.d.max_component())
    }

    pub fn scale(&self, s: f64) -> Self {
        Matrix2 { a: self.a.scale(s), b: self.b.scale(s), c: self.c.scale(s), d: self.d.scale(s) }
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }

    /// Largest singular value, from the eigenvalues of `M^H M`.
    pub fn operator_norm(&self) -> f64 {
        let p = self.a.norm_sqr() + self.c.norm_sqr();
        let q = self.b.norm_sqr() + self.d.norm_sqr();
        let r = (self.a.conj() * self.b + self.c.conj() * self.d).to_complex().norm();
        ((p + q) / 2.0 + ((p - q) / 2.0).hypot(r)).sqrt()
    }
}

/// The one-step transfer matrix `((z − v, −1), (1, 0))`.
#[inline]
pub fn transfer_step<T: Scalar>(z: T, v: f64) -> Matrix2<T> {
    Matrix2 { a: z - T::from_real(v), b: T::from_real(-1.0), c: T::from_real(1.0), d: T::from_real(0.0) }
}

/// Splits `m > 0` as `m = f·2^e` with `f ∈ [1/2, 1)` and returns `e`.
#[inline]
fn binary_exponent(m: f64) -> i64 {
    let bits = m.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    if biased == 0 {
        // subnormal
        binary_exponent(m * 2f64.powi(64)) - 64
    } else {
        biased - 1022
    }
}

#[inline]
fn pow2(e: i64) -> f64 {
    if (-1022..=1023).contains(&e) {
        f64::from_bits(((e + 1023) as u64) << 52)
    } else {
        2f64.powi(e.clamp(-1100, 1100) as i32)
    }
}

/// `Φ_n(z) = T_n ⋯ T_1` in the form `Φ = (r·k_1 | r·x·k_1 + k_2/r)`, where
/// `k_1 = (c, s)` is a unit vector and `k_2 = (−s̄, c̄)`. The determinant is
/// one by construction, and `r` is kept as `mantissa·2^exponent`, so
/// neither the growing nor the contracting direction is lost.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransferProduct<T: Scalar = Complex64> {
    k1: (T, T),
    x: T,
    r_mant: f64,
    r_exp: i64,
    n: usize,
    z: T,
}

impl<T: Scalar> TransferProduct<T> {
    pub fn identity(z: T) -> Self {
        let (one, zero) = (T::from_real(1.0), T::from_real(0.0));
        TransferProduct { k1: (one, zero), x: zero, r_mant: 1.0, r_exp: 0, n: 0, z }
    }

    /// Wraps a unit-determinant matrix as a zero-length product; used to
    /// exercise the linear-algebra helpers on hand-made inputs.
    pub fn from_matrix(m: Matrix2<T>, z: T) -> Result<Self> {
        let det = m.det().to_complex();
        let scale = m.max_component().max(1.0);
        if !m.is_finite() || (det - 1.0).norm() > 1e-9 * scale * scale {
            return Err(Error::InvalidArgument(format!("matrix determinant {det} is not 1")));
        }
        let r = (m.a.norm_sqr() + m.c.norm_sqr()).sqrt();
        let k1 = (m.a.scale(1.0 / r), m.c.scale(1.0 / r));
        // <k_1, col_2> = r·x
        let x = (k1.0.conj() * m.b + k1.1.conj() * m.d).scale(1.0 / r);
        let e = binary_exponent(r);
        Ok(TransferProduct { k1, x, r_mant: r * pow2(-e), r_exp: e, n: 0, z })
    }

    /// Multiplies by `T(z, v)` on the left.
    #[inline]
    pub fn push(&mut self, v: f64) -> Result<()> {
        let (c, s) = self.k1;
        let e = self.z - T::from_real(v);
        // T·k_1
        let w1 = e * c - s;
        let w2 = c;
        let nw = (w1.norm_sqr() + w2.norm_sqr()).sqrt();
        let inv = 1.0 / nw;
        let k1 = (w1.scale(inv), w2.scale(inv));
        // T·k_2 = α·k_1' + k_2'/|T·k_1|
        let u1 = -(e * s.conj()) - c.conj();
        let u2 = -s.conj();
        let alpha = k1.0.conj() * u1 + k1.1.conj() * u2;

        let (old_m, old_e) = (self.r_mant, self.r_exp);
        let mut m = old_m * nw;
        let mut ex = old_e;
        if !(0.5..2.0).contains(&m) {
            let b = binary_exponent(m);
            m *= pow2(-b);
            ex += b;
        }
        // x' = x + α/(r·r')
        let f = pow2(-(old_e + ex)) / (old_m * m);
        self.x = self.x + alpha.scale(f);
        self.k1 = k1;
        self.r_mant = m;
        self.r_exp = ex;
        self.n += 1;
        if !(nw.is_finite() && self.x.is_finite()) {
            return Err(Error::NonFinite { step: self.n });
        }
        Ok(())
    }

    fn ln_r(&self) -> f64 {
        self.r_mant.ln() + self.r_exp as f64 * LN_2
    }

    /// `σ` with `Φ = e^σ · scaled` and the largest column of `scaled` of unit length.
    pub fn log_scale(&self) -> f64 {
        let ln_r = self.ln_r();
        let top = ln_r + 1f64.hypot(self.x.to_complex().norm()).ln();
        top.max(-ln_r)
    }

    /// `e^{−σ}·Φ`.
    pub fn scaled(&self) -> Matrix2<T> {
        let ln_r = self.ln_r();
        let sigma = self.log_scale();
        let p = (ln_r - sigma).exp();
        let q = (-ln_r - sigma).exp();
        let (c, s) = self.k1;
        let (k2a, k2b) = (-s.conj(), c.conj());
        Matrix2 {
            a: c.scale(p),
            b: (self.x * c).scale(p) + k2a.scale(q),
            c: s.scale(p),
            d: (self.x * s).scale(p) + k2b.scale(q),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn z(&self) -> T {
        self.z
    }

    /// `det(scaled) = e^{−2σ}` (may underflow to zero).
    pub fn scaled_det(&self) -> f64 {
        (-2.0 * self.log_scale()).exp()
    }

    /// `|det Φ − 1|` of the represented product; only the normalisation of
    /// `k_1` can contribute.
    pub fn det_residual(&self) -> f64 {
        (self.k1.0.norm_sqr() + self.k1.1.norm_sqr() - 1.0).abs()
    }

    /// `log ‖Φ‖` (operator 2-norm).
    pub fn log_norm(&self) -> f64 {
        self.log_scale() + self.scaled().operator_norm().ln()
    }

    /// `log ρ(Φ)` from the characteristic polynomial `μ² − tμ + det`.
    pub fn spectral_radius_log(&self) -> f64 {
        let d = self.scaled_det();
        let sigma = self.log_scale();
        let t = self.scaled().trace();
        if T::IS_REAL {
            let t = t.to_complex().re;
            if t * t <= 4.0 * d {
                return 0.0;
            }
            let rho = (t.abs() + (t * t - 4.0 * d).sqrt()) / 2.0;
            return (sigma + rho.ln()).max(0.0);
        }
        let t = t.to_complex();
        let sq = (t * t - 4.0 * d).sqrt();
        let rho = ((t + sq) / 2.0).norm().max(((t - sq) / 2.0).norm());
        (sigma + rho.ln()).max(0.0)
    }

    /// `tr Φ` as the pair `(tr scaled, σ)`.
    pub fn trace_parts(&self) -> (T, f64) {
        (self.scaled().trace(), self.log_scale())
    }
}

/// Product `T_N(z) ⋯ T_1(z)` for the given potential values.
pub fn transfer_product<T: Scalar>(values: &[f64], z: T) -> Result<TransferProduct<T>> {
    let mut p = TransferProduct::identity(z);
    for &v in values {
        p.push(v)?;
    }
    Ok(p)
}

/// Real singular value decomposition `Φ = U · diag(s, 1/s) · V` with
/// `U = R(u_angle)` and `V = R(v_angle)` rotations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvdFactors {
    pub log_s: f64,
    pub u_angle: f64,
    pub v_angle: f64,
    /// `(U, V)` and `(−U, −V)` give the same product; the pair is
    /// normalised to `u_angle < π`, and this flag records that both angles
    /// were shifted by `π` to get there.
    pub flipped: bool,
    log_scale: f64,
}

fn rotation(angle: f64) -> Matrix2<f64> {
    let (s, c) = angle.sin_cos();
    Matrix2::new(c, -s, s, c)
}

fn wrap_angle(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y >= 2.0 * PI {
        0.0
    } else {
        y
    }
}

impl SvdFactors {
    pub fn u(&self) -> Matrix2<f64> {
        rotation(self.u_angle)
    }

    pub fn v(&self) -> Matrix2<f64> {
        rotation(self.v_angle)
    }

    /// `U · diag(s, 1/s) · V` divided by `e^σ`, i.e. comparable with the
    /// product's scaled matrix.
    pub fn scaled_reconstruction(&self) -> Matrix2<f64> {
        let d = Matrix2::new((self.log_s - self.log_scale).exp(), 0.0, 0.0, (-self.log_s - self.log_scale).exp());
        self.u().mul(&d).mul(&self.v())
    }

    /// `(V U e_1, e_1)`.
    pub fn alignment(&self) -> f64 {
        self.v().mul(&self.u()).a
    }
}

/// Closed-form SVD of the (real) product.
pub fn svd_factors(p: &TransferProduct<f64>) -> SvdFactors {
    let m = p.scaled();
    let e = (m.a + m.d) / 2.0;
    let f = (m.a - m.d) / 2.0;
    let g = (m.c + m.b) / 2.0;
    let h = (m.c - m.b) / 2.0;
    // M = R(φ)·diag(q + r, q − r)·R(θ)
    let s_major = e.hypot(h) + f.hypot(g);
    let a1 = g.atan2(f);
    let a2 = h.atan2(e);
    let mut theta = wrap_angle((a2 - a1) / 2.0);
    let mut phi = wrap_angle((a2 + a1) / 2.0);
    let flipped = phi >= PI;
    if flipped {
        phi -= PI;
        theta = wrap_angle(theta + PI);
    }
    SvdFactors { log_s: p.log_scale() + s_major.ln(), u_angle: phi, v_angle: theta, flipped, log_scale: p.log_scale() }
}

/// Distance `‖V − V'‖` between two right factors, minimised over the sign
/// ambiguity `(U, V) → (−U, −V)`.
pub fn v_distance(a: &SvdFactors, b: &SvdFactors) -> f64 {
    let da = a.v();
    let db = b.v();
    let plus = Matrix2::new(da.a - db.a, da.b - db.b, da.c - db.c, da.d - db.d).operator_norm();
    let minus = Matrix2::new(da.a + db.a, da.b + db.b, da.c + db.c, da.d + db.d).operator_norm();
    plus.min(minus)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankOneReport {
    pub applicable: bool,
    pub bound_holds: bool,
    pub log_s: f64,
    pub alignment: f64,
    pub log_rho: f64,
}

/// Checks `ρ(Φ) ≥ (s/2)|(VUe_1, e_1)|` whenever `s ≥ 3` and
/// `|(VUe_1, e_1)| ≥ 3/s`.
pub fn verify_rank_one_bound(p: &TransferProduct<f64>) -> RankOneReport {
    let svd = svd_factors(p);
    let alignment = svd.alignment();
    let log_rho = p.spectral_radius_log();
    let log_align = alignment.abs().ln();
    let applicable = svd.log_s >= 3f64.ln() && log_align >= 3f64.ln() - svd.log_s;
    let rhs = svd.log_s - LN_2 + log_align;
    // slack for rounding in the two independently computed logarithms
    let bound_holds = !applicable || log_rho >= rhs - 1e-12 * (1.0 + rhs.abs());
    RankOneReport { applicable, bound_holds, log_s: svd.log_s, alignment, log_rho }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_potential, PotentialSpec};
    use proptest::prelude::*;

    fn golden_log() -> f64 {
        ((3.0 + 5f64.sqrt()) / 2.0).ln()
    }

    #[test]
    fn step_examples() {
        let t = transfer_step(2.0f64, 0.0);
        assert_eq!(t, Matrix2::new(2.0, -1.0, 1.0, 0.0));
        let t = transfer_step(0.0f64, 1.0);
        assert_eq!(t, Matrix2::new(-1.0, -1.0, 1.0, 0.0));
        let t = transfer_step(Complex64::i(), 0.0);
        assert_eq!(t.a, Complex64::i());
        assert_eq!(t.det(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn rotation_products_have_unit_norm() {
        for n in [0usize, 1, 2, 3, 7, 100] {
            let p = transfer_product(&vec![0.0; n], 0.0f64).unwrap();
            assert!(p.log_norm().abs() < 1e-14, "n={n}: {}", p.log_norm());
            assert_eq!(p.spectral_radius_log(), 0.0);
        }
    }

    #[test]
    fn free_hyperbolic_growth() {
        let p = transfer_product(&vec![0.0; 10_000], 3.0f64).unwrap();
        assert!((p.log_norm() / 1e4 - 0.962424).abs() < 1e-3);
        assert!((p.log_norm() - 9624.2).abs() < 10.0);
        let p = transfer_product(&vec![0.0; 100], 3.0f64).unwrap();
        assert!((p.spectral_radius_log() - 100.0 * golden_log()).abs() < 1e-6);
    }

    #[test]
    fn chebyshev_trace_small() {
        for e in [-1.7, -0.3, 0.0, 0.9, 1.99] {
            let p = transfer_product(&[0.0; 3], e).unwrap();
            let (t, s) = p.trace_parts();
            assert!((t * s.exp() - (e * e * e - 3.0 * e)).abs() < 1e-13);
        }
    }

    #[test]
    fn chebyshev_identity_grid() {
        for n in 1..=50usize {
            for k in 0..100 {
                let theta = PI * (k as f64 + 0.5) / 100.0;
                let p = transfer_product(&vec![0.0; n], 2.0 * theta.cos()).unwrap();
                let (t, s) = p.trace_parts();
                assert!((t * s.exp() - 2.0 * (n as f64 * theta).cos()).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn scaled_entries_stay_in_band() {
        let spec = PotentialSpec::uniform(0.0, 4.0);
        let v = sample_potential(&spec, 5000, 3).unwrap();
        let mut p = TransferProduct::identity(1.3f64);
        for &x in &v.values {
            p.push(x).unwrap();
            let m = p.scaled().max_component();
            assert!((0.5..=2.0).contains(&m));
        }
        // the true norm of an SL(2) product is at least 1
        assert!(p.log_scale() >= -LN_2);
        assert!(p.log_norm() >= -1e-12);
    }

    #[test]
    fn nan_input_is_an_error() {
        assert!(matches!(transfer_product(&[0.0, f64::NAN, 1.0], 0.5f64), Err(Error::NonFinite { .. })));
    }

    #[test]
    fn svd_examples() {
        let id = svd_factors(&TransferProduct::from_matrix(Matrix2::identity(), 0.0).unwrap());
        assert!(id.log_s.abs() < 1e-15 && id.u_angle.abs() < 1e-15 && id.v_angle.abs() < 1e-15);

        let p = TransferProduct::from_matrix(Matrix2::new(5.0, 0.0, 0.0, 0.2), 0.0).unwrap();
        let f = svd_factors(&p);
        assert!((f.log_s - 5f64.ln()).abs() < 1e-14);
        assert!(f.u_angle.abs() < 1e-14 && f.v_angle.abs() < 1e-14);
    }

    #[test]
    fn rank_one_examples() {
        let p = TransferProduct::from_matrix(Matrix2::new(10.0, 0.0, 0.0, 0.1), 0.0).unwrap();
        let r = verify_rank_one_bound(&p);
        assert!(r.applicable && r.bound_holds);
        assert!((r.alignment - 1.0).abs() < 1e-15);

        let p = TransferProduct::from_matrix(Matrix2::new(2.0, 0.0, 0.0, 0.5), 0.0).unwrap();
        assert!(!verify_rank_one_bound(&p).applicable);
    }

    #[test]
    fn complex_conjugation_symmetry() {
        let v = sample_potential(&PotentialSpec::uniform(0.0, 4.0), 300, 11).unwrap();
        let z = Complex64::new(1.3, 0.4);
        let a = transfer_product(&v.values, z).unwrap();
        let b = transfer_product(&v.values, z.conj()).unwrap();
        assert_eq!(a.log_norm(), b.log_norm());
        assert_eq!(a.spectral_radius_log(), b.spectral_radius_log());
    }

    proptest! {
        #[test]
        fn det_preserved(seed in any::<u64>(), n in 1usize..40, e in -7.0f64..7.0, im in -1.0f64..1.0) {
            let v = sample_potential(&PotentialSpec::uniform(0.0, 4.0), n, seed).unwrap();
            let p = transfer_product(&v.values, Complex64::new(e, im)).unwrap();
            prop_assert!(p.det_residual() <= 1e-9 * n as f64);
            let p = transfer_product(&v.values, e).unwrap();
            prop_assert!(p.det_residual() <= 1e-9 * n as f64);
        }

        #[test]
        fn radius_below_norm(seed in any::<u64>(), n in 1usize..2000, e in -7.0f64..7.0) {
            let v = sample_potential(&PotentialSpec::bernoulli(1.0), n, seed).unwrap();
            let p = transfer_product(&v.values, e).unwrap();
            prop_assert!(p.spectral_radius_log() <= p.log_norm() + 1e-12 * (1.0 + p.log_norm()));
        }

        #[test]
        fn svd_reconstructs(seed in any::<u64>(), e in -7.0f64..7.0) {
            let v = sample_potential(&PotentialSpec::uniform(0.0, 4.0), 100, seed).unwrap();
            let p = transfer_product(&v.values, e).unwrap();
            let f = svd_factors(&p);
            prop_assert!((f.log_s - p.log_norm()).abs() <= 1e-12 * (1.0 + f.log_s));
            prop_assert!(f.log_s >= -1e-12);
            let r = f.scaled_reconstruction();
            let m = p.scaled();
            let err = [r.a - m.a, r.b - m.b, r.c - m.c, r.d - m.d].iter().fold(0.0f64, |x, y| x.max(y.abs()));
            prop_assert!(err <= 1e-9 * 100.0 * m.max_component());
        }
    }
}
