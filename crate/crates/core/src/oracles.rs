//! Closed-form references: the two positive-half-line examples, Bessel
//! series for their moments and for the free circle flow, and finite
//! differences.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::lorth::RecurrenceCoeffs;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExampleId {
    /// Weight `x^{-1/2} e^{-δ(x + q/x)}`.
    Example1,
    /// Weight `(x + √q) x^{-3/2} e^{-δ(x + q/x)}`.
    Example2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedFormExample {
    pub id: ExampleId,
    pub delta: f64,
    pub q: f64,
}

impl ClosedFormExample {
    pub fn new(id: ExampleId, delta: f64, q: f64) -> Result<Self> {
        if !(delta > 0.0 && q > 0.0 && delta.is_finite() && q.is_finite()) {
            return Err(Error::InvalidSpec("closed-form examples need δ > 0 and q > 0"));
        }
        Ok(Self { id, delta, q })
    }

    pub fn example1(delta: f64, q: f64) -> Result<Self> {
        Self::new(ExampleId::Example1, delta, q)
    }

    pub fn example2(delta: f64, q: f64) -> Result<Self> {
        Self::new(ExampleId::Example2, delta, q)
    }

    /// Coefficients `β_1..β_N`, `α_2..α_{N+1}` at time `t`.
    pub fn coeffs(&self, t: f64, n: usize) -> RecurrenceCoeffs {
        match self.id {
            ExampleId::Example1 => example1_coeffs(self, t, n),
            ExampleId::Example2 => example2_coeffs(self, t, n),
        }
    }

    /// Analytic `(β̇_1..β̇_N, α̇_2..α̇_{N+1})` at time `t`.
    pub fn derivatives(&self, t: f64, n: usize) -> (Vec<C64>, Vec<C64>) {
        match self.id {
            ExampleId::Example1 => example1_derivatives(self, t, n),
            ExampleId::Example2 => example2_derivatives(self, t, n),
        }
    }
}

fn real(v: impl IntoIterator<Item = f64>) -> Vec<C64> {
    v.into_iter().map(|x| C64::new(x, 0.0)).collect()
}

fn build(ex: &ClosedFormExample, t: f64, beta: Vec<C64>, alpha: Vec<C64>) -> RecurrenceCoeffs {
    RecurrenceCoeffs::new(t, C64::new(1.0, 0.0), C64::new(ex.q, 0.0), beta, alpha)
        .expect("closed-form coefficients are finite")
}

/// `β_n = √q`, `α_{n+1} = n / (2(t + δ))`.
pub fn example1_coeffs(ex: &ClosedFormExample, t: f64, n: usize) -> RecurrenceCoeffs {
    let s = t + ex.delta;
    let beta = real((1..=n).map(|_| ex.q.sqrt()));
    let alpha = real((1..=n).map(|k| k as f64 / (2.0 * s)));
    build(ex, t, beta, alpha)
}

/// `β̇_n = 0`, `α̇_{n+1} = -n / (2(t + δ)²)`.
pub fn example1_derivatives(ex: &ClosedFormExample, t: f64, n: usize) -> (Vec<C64>, Vec<C64>) {
    let s = t + ex.delta;
    (real((1..=n).map(|_| 0.0)), real((1..=n).map(|k| -(k as f64) / (2.0 * s * s))))
}

/// `l_0..l_n` and their time derivatives.
fn l_sequence(ex: &ClosedFormExample, t: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let s = 1.0 / (2.0 * ex.q.sqrt() * (t + ex.delta));
    let ds = -s / (t + ex.delta);
    let mut l = Vec::with_capacity(n + 1);
    let mut dl = Vec::with_capacity(n + 1);
    l.push(1.0);
    dl.push(0.0);
    for k in 1..=n {
        let kf = k as f64;
        let den = l[k - 1] + 1.0;
        l.push(1.0 + kf * s / den);
        dl.push(kf * ds / den - kf * s * dl[k - 1] / (den * den));
    }
    (l, dl)
}

/// `β̃_n = √q l_{n-1}/l_n`, `α̃_{n+1} = β̃_n (l_n² - 1)`.
pub fn example2_coeffs(ex: &ClosedFormExample, t: f64, n: usize) -> RecurrenceCoeffs {
    let (l, _) = l_sequence(ex, t, n);
    let r = ex.q.sqrt();
    let beta: Vec<f64> = (1..=n).map(|k| r * l[k - 1] / l[k]).collect();
    let alpha = real((1..=n).map(|k| beta[k - 1] * (l[k] * l[k] - 1.0)));
    build(ex, t, real(beta), alpha)
}

/// Derivatives of [`example2_coeffs`] through the analytic `l̇_n`.
pub fn example2_derivatives(ex: &ClosedFormExample, t: f64, n: usize) -> (Vec<C64>, Vec<C64>) {
    let (l, dl) = l_sequence(ex, t, n);
    let r = ex.q.sqrt();
    let mut dbeta = Vec::with_capacity(n);
    let mut dalpha = Vec::with_capacity(n);
    for k in 1..=n {
        let b = r * l[k - 1] / l[k];
        let db = r * (dl[k - 1] * l[k] - l[k - 1] * dl[k]) / (l[k] * l[k]);
        dbeta.push(db);
        dalpha.push(db * (l[k] * l[k] - 1.0) + b * 2.0 * l[k] * dl[k]);
    }
    (real(dbeta), real(dalpha))
}

/// `K_{m+1/2}(z)` for `m ≥ 0` and `z > 0` by its terminating series.
pub fn bessel_k_half_integer(m: usize, z: f64) -> f64 {
    // Σ_k (m+k)! / (k! (m-k)! (2z)^k), term ratio (m+k+1)(m-k) / ((k+1) 2z)
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..m {
        let kf = k as f64;
        let mf = m as f64;
        term *= (mf + kf + 1.0) * (mf - kf) / ((kf + 1.0) * 2.0 * z);
        sum += term;
    }
    (core::f64::consts::PI / (2.0 * z)).sqrt() * (-z).exp() * sum
}

/// `ν_k` of the first example at time `t`:
/// `2 q^{(2k+1)/4} K_{k+1/2}(2(t + δ)√q)`.
pub fn example1_moment(delta: f64, q: f64, t: f64, k: i32) -> f64 {
    // K_{-ν} = K_ν
    let m = if k >= 0 { k as usize } else { (-k - 1) as usize };
    let z = 2.0 * (t + delta) * q.sqrt();
    2.0 * q.powf((2 * k + 1) as f64 / 4.0) * bessel_k_half_integer(m, z)
}

/// `I_k(x)` for `k ≥ 0` by its power series.
pub fn bessel_i(k: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = (1..=k).fold(1.0, |acc, j| acc * half / j as f64);
    let mut sum = term;
    let h2 = half * half;
    for j in 1..400 {
        term *= h2 / (j as f64 * (j as f64 + k as f64));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

/// `∫ z^k e^{-t(conj(q) z + q/z)} dθ/2π = e^{ikφ} (-1)^k I_{|k|}(2t|q|)`, `q = |q| e^{iφ}`.
pub fn lebesgue_toeplitz_moment(q: C64, t: f64, k: i32) -> C64 {
    let phase = C64::from_polar(1.0, k as f64 * q.arg());
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    phase * (sign * bessel_i(k.unsigned_abs(), 2.0 * t * q.norm()))
}

/// Central difference `(f(t+h) - f(t-h)) / 2h`.
pub fn fd_derivative(f: impl Fn(f64) -> Vec<C64>, t: f64, h: f64) -> Vec<C64> {
    assert!(h > 0.0);
    let hi = f(t + h);
    let lo = f(t - h);
    assert_eq!(hi.len(), lo.len(), "f must return vectors of a fixed length");
    hi.iter().zip(&lo).map(|(a, b)| (a - b) / (2.0 * h)).collect()
}

/// Richardson-extrapolated central difference with a smoothness diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct RichardsonEstimate {
    /// `(4 D(h/2) - D(h)) / 3`.
    pub value: Vec<C64>,
    pub coarse: Vec<C64>,
    pub fine: Vec<C64>,
    /// `false` when the successive differences do not shrink like `h²`
    /// (ratio outside `[2, 8]` around the expected 4).
    pub smooth: bool,
}

pub fn richardson_derivative(f: impl Fn(f64) -> Vec<C64>, t: f64, h: f64) -> RichardsonEstimate {
    let coarse = fd_derivative(&f, t, h);
    let fine = fd_derivative(&f, t, h / 2.0);
    let finest = fd_derivative(&f, t, h / 4.0);
    let value = coarse.iter().zip(&fine).map(|(c, f)| (f * 4.0 - c) / 3.0).collect();
    let smooth = coarse.iter().zip(&fine).zip(&finest).all(|((c, f), ff)| {
        let d1 = (c - f).norm();
        let d2 = (f - ff).norm();
        let floor = 1e-9 * (1.0 + f.norm());
        if d1 <= floor && d2 <= floor {
            return true;
        }
        let ratio = d1 / d2.max(f64::MIN_POSITIVE);
        (2.0..=8.0).contains(&ratio)
    });
    RichardsonEstimate { value, coarse, fine, smooth }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_values() {
        let ex = ClosedFormExample::example1(1.0, 2.0).unwrap();
        let rc = ex.coeffs(0.0, 4);
        for n in 1..=4 {
            assert_eq!(rc.beta(n).re, 2f64.sqrt());
        }
        assert_eq!(rc.alphas()[..3].iter().map(|z| z.re).collect::<Vec<_>>(), [0.5, 1.0, 1.5]);
        let rc = ex.coeffs(1.0, 4);
        for n in 1..=4 {
            assert_eq!(rc.alpha(n + 1).re, n as f64 / 4.0);
        }
    }

    #[test]
    fn example2_hand_values() {
        let ex = ClosedFormExample::example2(1.0, 1.0).unwrap();
        let rc = ex.coeffs(0.0, 1);
        assert!((rc.beta(1).re - 0.8).abs() < 1e-15);
        assert!((rc.alpha(2).re - 9.0 / 20.0).abs() < 1e-15);
    }

    #[test]
    fn example2_is_positive() {
        let ex = ClosedFormExample::example2(0.7, 3.0).unwrap();
        let (l, _) = l_sequence(&ex, 0.4, 20);
        assert!(l[1..].iter().all(|&x| x > 1.0));
        let rc = ex.coeffs(0.4, 20);
        let r = 3f64.sqrt();
        assert!(rc.betas().iter().all(|b| b.re > 0.0 && b.re < r));
        assert!(rc.alphas().iter().all(|a| a.re > 0.0));
    }

    #[test]
    fn example2_derivatives_match_differences() {
        let ex = ClosedFormExample::example2(1.0, 2.0).unwrap();
        let (db, da) = ex.derivatives(0.3, 6);
        let fd = richardson_derivative(
            |t| {
                let rc = ex.coeffs(t, 6);
                rc.betas().iter().chain(rc.alphas()).copied().collect()
            },
            0.3,
            1e-3,
        );
        for (a, b) in db.iter().chain(&da).zip(&fd.value) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn central_difference_examples() {
        let d = fd_derivative(|t| alloc::vec![C64::new(t * t, 0.0)], 1.0, 1e-4);
        assert!((d[0].re - 2.0).abs() < 1e-8);
        let ex = ClosedFormExample::example1(1.0, 2.0).unwrap();
        let d = fd_derivative(|t| ex.coeffs(t, 4).alphas().to_vec(), 0.0, 1e-4);
        for (k, z) in d.iter().enumerate() {
            let n = (k + 1) as f64;
            assert!((z.re + n / 2.0).abs() < 1e-6);
        }
    }

    #[test]
    fn non_smooth_functions_are_flagged() {
        let r = richardson_derivative(|t| alloc::vec![C64::new(t.abs(), 0.0)], 1e-5, 1e-4);
        assert!(!r.smooth);
        let r = richardson_derivative(|t| alloc::vec![C64::new(t.sin(), 0.0)], 0.3, 1e-2);
        assert!(r.smooth);
    }

    #[test]
    fn bessel_values() {
        // K_{1/2}(1) = √(π/2) e^{-1}
        let k = bessel_k_half_integer(0, 1.0);
        assert!((k - (core::f64::consts::FRAC_PI_2).sqrt() * (-1.0f64).exp()).abs() < 1e-16);
        // K_{3/2}(z) = K_{1/2}(z)(1 + 1/z)
        assert!((bessel_k_half_integer(1, 2.0) - bessel_k_half_integer(0, 2.0) * 1.5).abs() < 1e-16);
        assert!((bessel_i(0, 1.0) - 1.266_065_877_752_008).abs() < 1e-15);
        assert!((bessel_i(1, 1.0) - 0.565_159_103_992_485).abs() < 1e-15);
        assert_eq!(lebesgue_toeplitz_moment(C64::new(0.5, 0.0), 0.0, 0), C64::new(1.0, 0.0));
    }
}
