//! Trapezoid rules with refinement by doubling.
//!
//! Both rules integrate a whole family of integrands at once (one per moment
//! index), sharing the node evaluations. On the line the integrands are
//! expected to decay doubly exponentially, on the circle to be smooth and
//! periodic; in both cases the trapezoid rule converges spectrally.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::linalg::CompensatedSum;
use crate::C64;

#[derive(Debug, Clone, Copy)]
pub struct QuadratureOptions {
    /// Stop refining when every component changes by less than this
    /// (relative to its value, with an absolute floor tied to `∫|f|`).
    pub rel_tol: f64,
    /// Truncate the line where the envelope drops below this fraction of its peak.
    pub peak_ratio: f64,
    pub max_refinements: usize,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        Self { rel_tol: 1e-13, peak_ratio: 1e-18, max_refinements: 14 }
    }
}

/// Failure of a quadrature family; carries the offending component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureFailure {
    pub component: usize,
}

const SCAN_STEP: f64 = 0.25;
const SCAN_LIMIT: f64 = 80.0;

fn envelope(values: &[C64]) -> f64 {
    values.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Finds `[lo, hi]` outside of which the envelope of `f` is negligible.
fn truncation_window(
    f: &impl Fn(f64, &mut [C64]),
    dim: usize,
    peak_ratio: f64,
) -> Result<(f64, f64), QuadratureFailure> {
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    f(0.0, &mut buf);
    let mut peak = envelope(&buf);
    let mut bounds = [0.0; 2];
    for (side, dir) in [-1.0, 1.0].into_iter().enumerate() {
        let mut prev = peak;
        let mut u = 0.0;
        loop {
            u += dir * SCAN_STEP;
            if u.abs() > SCAN_LIMIT {
                // find the worst component at the cut for the report
                let component =
                    buf.iter().enumerate().max_by(|a, b| a.1.norm().total_cmp(&b.1.norm())).map_or(0, |(i, _)| i);
                return Err(QuadratureFailure { component });
            }
            f(u, &mut buf);
            let env = envelope(&buf);
            if !env.is_finite() {
                return Err(QuadratureFailure { component: 0 });
            }
            peak = peak.max(env);
            if env <= peak_ratio * peak && env <= prev {
                break;
            }
            prev = env;
        }
        bounds[side] = u;
    }
    Ok((bounds[0], bounds[1]))
}

/// Integrates `u ↦ f(u)` over the real line for every component of `f`.
pub fn integrate_line(
    f: impl Fn(f64, &mut [C64]),
    dim: usize,
    opts: &QuadratureOptions,
) -> Result<Vec<C64>, QuadratureFailure> {
    let (lo, hi) = truncation_window(&f, dim, opts.peak_ratio)?;
    let mut h = SCAN_STEP;
    let mut count = ((hi - lo) / h).round() as usize;
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    let mut sums = vec![CompensatedSum::new(); dim];
    let mut l1 = vec![0.0; dim];
    for i in 0..=count {
        f(lo + i as f64 * h, &mut buf);
        for ((s, a), z) in sums.iter_mut().zip(l1.iter_mut()).zip(&buf) {
            s.add(*z);
            *a += z.norm();
        }
    }
    let mut prev: Vec<C64> = sums.iter().map(|s| s.value() * h).collect();
    for refinement in 0..opts.max_refinements {
        // add the midpoints of the current grid
        for i in 0..count {
            f(lo + (i as f64 + 0.5) * h, &mut buf);
            for ((s, a), z) in sums.iter_mut().zip(l1.iter_mut()).zip(&buf) {
                s.add(*z);
                *a += z.norm();
            }
        }
        h *= 0.5;
        count *= 2;
        let next: Vec<C64> = sums.iter().map(|s| s.value() * h).collect();
        let worst = converged_worst(&prev, &next, &l1, h, opts.rel_tol);
        if refinement >= 1 && worst.is_none() {
            return Ok(next);
        }
        prev = next;
    }
    let component = converged_worst(&prev, &prev, &l1, h, opts.rel_tol).unwrap_or(0);
    Err(QuadratureFailure { component })
}

/// Returns the first non-converged component, if any.
fn converged_worst(prev: &[C64], next: &[C64], l1: &[f64], h: f64, rel_tol: f64) -> Option<usize> {
    prev.iter().zip(next).zip(l1).position(|((a, b), l)| {
        let diff = (a - b).norm();
        !(diff <= rel_tol * b.norm() + 1e-15 * l * h) || !b.re.is_finite() || !b.im.is_finite()
    })
}

/// Integrates `θ ↦ f(θ) dθ/2π` over `[0, 2π)` for every component of `f`
/// with an `M`-point trapezoid rule, `M` doubling from 256.
pub fn integrate_circle(
    f: impl Fn(f64, &mut [C64]),
    dim: usize,
    opts: &QuadratureOptions,
) -> Result<Vec<C64>, QuadratureFailure> {
    use core::f64::consts::TAU;
    let mut m = 256usize;
    let mut buf = vec![C64::new(0.0, 0.0); dim];
    let mut sums = vec![CompensatedSum::new(); dim];
    let mut l1 = vec![0.0; dim];
    for i in 0..m {
        f(TAU * i as f64 / m as f64, &mut buf);
        for ((s, a), z) in sums.iter_mut().zip(l1.iter_mut()).zip(&buf) {
            s.add(*z);
            *a += z.norm();
        }
    }
    let mut prev: Vec<C64> = sums.iter().map(|s| s.value() / m as f64).collect();
    for refinement in 0..opts.max_refinements {
        for i in 0..m {
            f(TAU * (i as f64 + 0.5) / m as f64, &mut buf);
            for ((s, a), z) in sums.iter_mut().zip(l1.iter_mut()).zip(&buf) {
                s.add(*z);
                *a += z.norm();
            }
        }
        m *= 2;
        let w = 1.0 / m as f64;
        let next: Vec<C64> = sums.iter().map(|s| s.value() * w).collect();
        if refinement >= 1 && converged_worst(&prev, &next, &l1, w, opts.rel_tol).is_none() {
            return Ok(next);
        }
        prev = next;
    }
    let component = converged_worst(&prev, &prev, &l1, 1.0 / m as f64, opts.rel_tol).unwrap_or(0);
    Err(QuadratureFailure { component })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_on_the_line() {
        let opts = QuadratureOptions::default();
        let r = integrate_line(
            |u, out| {
                out[0] = C64::new((-u * u).exp(), 0.0);
                out[1] = C64::new(u * u * (-u * u).exp(), 0.0);
            },
            2,
            &opts,
        )
        .unwrap();
        let sqrt_pi = core::f64::consts::PI.sqrt();
        assert!((r[0].re - sqrt_pi).abs() < 1e-13);
        assert!((r[1].re - sqrt_pi / 2.0).abs() < 1e-13);
    }

    #[test]
    fn fourier_coefficients_on_the_circle() {
        let opts = QuadratureOptions::default();
        // ∫ e^{x cos θ} dθ/2π = I_0(x); ∫ cos θ e^{x cos θ} = I_1(x)
        let r = integrate_circle(
            |th, out| {
                let e = th.cos().exp();
                out[0] = C64::new(e, 0.0);
                out[1] = C64::new(th.cos() * e, 0.0);
            },
            2,
            &opts,
        )
        .unwrap();
        assert!((r[0].re - 1.266_065_877_752_008).abs() < 1e-14);
        assert!((r[1].re - 0.565_159_103_992_485).abs() < 1e-14);
    }

    #[test]
    fn slowly_decaying_integrand_is_rejected() {
        let opts = QuadratureOptions::default();
        let r = integrate_line(|_, out| out[0] = C64::new(1.0, 0.0), 1, &opts);
        assert!(r.is_err());
    }
}
