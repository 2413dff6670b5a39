//! Exact rational reference for discrete measures.
//!
//! Each `Q_n` is obtained by solving its orthogonality conditions
//! `ℒ[x^{-n+s} Q_n] = 0`, `0 ≤ s < n`, over the rationals; the recurrence
//! coefficients are then read off the coefficients of `Q_n`:
//! `β_{n+1} = -Q_{n+1}(0)/Q_n(0)` and `α_{n+1} = a_{n,n-1} - β_{n+1} - a_{n+1,n}`.

use ertl_core::measures::MomentSpec;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{LabError, Result};

/// Exact `β_1..β_N` and `α_2..α_{N+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactCoeffs {
    pub beta: Vec<BigRational>,
    pub alpha: Vec<BigRational>,
}

impl ExactCoeffs {
    pub fn beta_f64(&self) -> Vec<f64> {
        self.beta.iter().map(to_f64).collect()
    }

    pub fn alpha_f64(&self) -> Vec<f64> {
        self.alpha.iter().map(to_f64).collect()
    }
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

fn rational(x: f64) -> Result<BigRational> {
    BigRational::from_float(x).ok_or_else(|| LabError::usage("non-finite value"))
}

fn power(x: &BigRational, k: i32) -> BigRational {
    let base = if k < 0 { x.recip() } else { x.clone() };
    num_traits::pow(base, k.unsigned_abs() as usize)
}

/// `ν_k = Σ w_i x_i^k` for `lo ≤ k ≤ hi`, from the exact binary values of the inputs.
pub fn exact_moments(nodes: &[f64], weights: &[f64], lo: i32, hi: i32) -> Result<Vec<BigRational>> {
    let xs = nodes.iter().map(|x| rational(*x)).collect::<Result<Vec<_>>>()?;
    let ws = weights.iter().map(|w| rational(*w)).collect::<Result<Vec<_>>>()?;
    Ok((lo..=hi).map(|k| xs.iter().zip(&ws).fold(BigRational::zero(), |acc, (x, w)| acc + w * power(x, k))).collect())
}

/// Solves `A c = b` by Gaussian elimination with nonzero pivoting.
fn solve(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let f = &a[r][col] / &a[col][col];
            let (upper, lower) = a.split_at_mut(r);
            for (x, y) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                *x -= &f * y;
            }
            let delta = &f * &b[col];
            b[r] -= delta;
        }
    }
    let mut x = vec![BigRational::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..n {
            acc -= &a[r][c] * &x[c];
        }
        x[r] = acc / &a[r][r];
    }
    Some(x)
}

/// Coefficients `a_{n,0..n}` of the monic `Q_n`; `moment(k)` returns `ν_k`.
fn l_polynomial(n: usize, moment: &impl Fn(i32) -> BigRational) -> Option<Vec<BigRational>> {
    if n == 0 {
        return Some(vec![BigRational::one()]);
    }
    let ni = n as i32;
    // row s: Σ_{j<n} a_j ν_{j-n+s} = -ν_{s}
    let a = (0..ni).map(|s| (0..ni).map(|j| moment(j - ni + s)).collect()).collect();
    let b = (0..ni).map(|s| -moment(s)).collect();
    let mut coeffs = solve(a, b)?;
    coeffs.push(BigRational::one());
    Some(coeffs)
}

/// Exact recurrence coefficients of an unmodified discrete measure.
pub fn exact_recurrence(nodes: &[f64], weights: &[f64], depth: usize) -> Result<ExactCoeffs> {
    if depth == 0 {
        return Err(LabError::usage("depth must be at least 1"));
    }
    let lo = -(depth as i32) - 1;
    let table = exact_moments(nodes, weights, lo, depth as i32)?;
    let moment = |k: i32| table[(k - lo) as usize].clone();
    let breakdown = |level: usize| {
        LabError::Core(ertl_core::Error::RegularityBreakdown { level, condition: ertl_core::error::Condition::A })
    };
    let polys =
        (0..=depth + 1).map(|n| l_polynomial(n, &moment).ok_or_else(|| breakdown(n))).collect::<Result<Vec<_>>>()?;
    let mut beta = Vec::with_capacity(depth);
    let mut alpha = Vec::with_capacity(depth);
    for n in 0..=depth {
        if polys[n][0].is_zero() {
            return Err(LabError::Core(ertl_core::Error::RegularityBreakdown {
                level: n,
                condition: ertl_core::error::Condition::B,
            }));
        }
        let b = -&polys[n + 1][0] / &polys[n][0];
        if n >= 1 {
            alpha.push(&polys[n][n - 1] - &b - &polys[n + 1][n]);
        }
        if n < depth {
            beta.push(b);
        }
    }
    Ok(ExactCoeffs { beta, alpha })
}

/// Exact coefficients for a discrete spec that is unmodified at time `t`.
pub fn exact_for_spec(spec: &MomentSpec, t: f64, depth: usize) -> Result<ExactCoeffs> {
    match spec {
        MomentSpec::Discrete { nodes, weights, p, q } => {
            if t != 0.0 && !(p.norm() == 0.0 && q.norm() == 0.0) {
                return Err(LabError::usage("exact arithmetic needs t = 0 or p = q = 0"));
            }
            exact_recurrence(nodes, weights, depth)
        }
        _ => Err(LabError::usage("exact arithmetic is only available for discrete specs")),
    }
}

pub fn integer(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frac(a: i64, b: i64) -> BigRational {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }

    #[test]
    fn two_point_measure_by_hand() {
        // ν_0 = 2, ν_{-1} = 3/2 so β_1 = 4/3
        let m = exact_moments(&[1.0, 2.0], &[1.0, 1.0], -1, 0).unwrap();
        assert_eq!(m, vec![frac(3, 2), integer(2)]);
        // Q_2 = (x - 1)(x - 2) = (x - 3/2)(x - 4/3) - (1/6) x
        let c = exact_recurrence(&[1.0, 2.0], &[1.0, 1.0], 1).unwrap();
        assert_eq!(c.beta, vec![frac(4, 3)]);
        assert_eq!(c.alpha, vec![frac(1, 6)]);
    }

    #[test]
    fn two_points_support_no_third_polynomial() {
        assert!(matches!(
            exact_recurrence(&[1.0, 2.0], &[1.0, 1.0], 2),
            Err(LabError::Core(ertl_core::Error::RegularityBreakdown { level: 3, .. }))
        ));
    }

    #[test]
    fn modified_specs_are_refused() {
        let (one, zero) = (ertl_core::C64::new(1.0, 0.0), ertl_core::C64::new(0.0, 0.0));
        let spec = MomentSpec::discrete(vec![1.0], vec![1.0], one, zero).unwrap();
        assert!(exact_for_spec(&spec, 0.5, 1).is_err());
        // a single mass has no Q_2
        assert!(matches!(
            exact_for_spec(&spec, 0.0, 1),
            Err(LabError::Core(ertl_core::Error::RegularityBreakdown { level: 2, .. }))
        ));
    }
}
