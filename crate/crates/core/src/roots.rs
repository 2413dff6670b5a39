//! Simultaneous polynomial root finding (Aberth–Ehrlich) with Newton polish.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::C64;

#[derive(Debug, Clone, Copy)]
pub struct AberthOptions {
    pub max_iterations: usize,
    /// Stop when every correction is below `tol · max(1, |z|)`.
    pub tol: f64,
    pub polish_steps: usize,
}

impl Default for AberthOptions {
    fn default() -> Self {
        Self { max_iterations: 500, tol: 1e-15, polish_steps: 3 }
    }
}

/// All `degree` roots of a monic polynomial given by its evaluator
/// `z ↦ (P(z), P'(z))`, starting from a circle of `radius` around `center`.
pub fn aberth(
    degree: usize,
    eval: impl Fn(C64) -> (C64, C64),
    center: C64,
    radius: f64,
    opts: &AberthOptions,
) -> Result<Vec<C64>> {
    if degree == 0 {
        return Ok(Vec::new());
    }
    let radius = if radius > 0.0 && radius.is_finite() { radius } else { 1.0 };
    let mut z: Vec<C64> = (0..degree)
        .map(|k| {
            let angle = core::f64::consts::TAU * k as f64 / degree as f64 + 0.4;
            center + C64::from_polar(radius, angle)
        })
        .collect();
    let mut converged = false;
    for _ in 0..opts.max_iterations {
        let mut worst = 0.0f64;
        for k in 0..degree {
            let (p, dp) = eval(z[k]);
            if p == C64::new(0.0, 0.0) {
                continue;
            }
            let ratio = p / dp;
            let repulsion: C64 = (0..degree).filter(|&j| j != k).map(|j| (z[k] - z[j]).inv()).sum();
            let step = ratio / (C64::new(1.0, 0.0) - ratio * repulsion);
            if !(step.re.is_finite() && step.im.is_finite()) {
                continue;
            }
            z[k] -= step;
            worst = worst.max(step.norm() / z[k].norm().max(1.0));
        }
        if worst <= opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        // a last sweep may still certify convergence at a looser level
        let ok = z.iter().all(|&x| {
            let (p, dp) = eval(x);
            p == C64::new(0.0, 0.0) || (p / dp).norm() <= 1e-10 * x.norm().max(1.0)
        });
        if !ok {
            return Err(Error::NonConvergence { iterations: opts.max_iterations });
        }
    }
    for x in z.iter_mut() {
        for _ in 0..opts.polish_steps {
            let (p, dp) = eval(*x);
            if p == C64::new(0.0, 0.0) || dp == C64::new(0.0, 0.0) {
                break;
            }
            let step = p / dp;
            if !(step.re.is_finite() && step.im.is_finite()) {
                break;
            }
            *x -= step;
        }
    }
    Ok(z)
}

/// Sorts lexicographically by real part, then imaginary part.
pub fn sort_lexicographic(z: &mut [C64]) {
    z.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}
