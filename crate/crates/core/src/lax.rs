//! The Hessenberg/tridiagonal Lax pair of the finite lattice.
//!
//! `H_N` has `γ_j` in every entry `(i, j ≥ i)` and `α_i` on the subdiagonal;
//! `F_N = p X_N + q Y_N` is tridiagonal. Along the finite flow
//! `Ḣ_N = [H_N, F_N]`, so the spectrum of `H_N` (the zeros of `Q_N`) is conserved.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lattice::{self, Closure, LatticeState, Trajectory};
use crate::linalg::Matrix;
use crate::lorth::eval_q_with_derivative;
use crate::roots::{aberth, sort_lexicographic, AberthOptions};
use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct LaxPair {
    pub h: Matrix,
    pub f: Matrix,
}

impl LaxPair {
    pub fn order(&self) -> usize {
        self.h.rows()
    }
}

fn require_finite(state: &LatticeState) -> Result<()> {
    if state.closure != Closure::Finite {
        return Err(Error::InvalidSpec("the Lax pair needs a finite-closure state"));
    }
    if let Some(k) = state.betas().iter().position(|b| b.norm() < crate::EPS_SING) {
        return Err(Error::SingularDenominator { site: k + 1 });
    }
    Ok(())
}

pub fn hessenberg(state: &LatticeState) -> Matrix {
    let n = state.sites();
    Matrix::from_fn(n, n, |i, j| {
        let (i, j) = (i + 1, j + 1);
        if j >= i {
            state.gamma(j)
        } else if j + 1 == i {
            state.alpha(i)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `X_N`: `α_k` on the diagonal, `-α_k` at `(k, k-1)`.
pub fn x_matrix(state: &LatticeState) -> Matrix {
    let n = state.sites();
    Matrix::from_fn(n, n, |i, j| {
        let k = i + 1;
        if i == j {
            state.alpha(k)
        } else if j + 1 == i {
            -state.alpha(k)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `Y_N`: `1/β_k` on the diagonal, `-1/β_k` at `(k, k+1)`.
pub fn y_matrix(state: &LatticeState) -> Matrix {
    let n = state.sites();
    let y: Vec<C64> = state.betas().iter().map(|b| b.inv()).collect();
    Matrix::from_fn(n, n, |i, j| {
        if i == j {
            y[i]
        } else if j == i + 1 {
            -y[i]
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// `F_N` from `𝔢_k = -p α_k`, `𝔣_k = p α_k + q/β_k`, `𝔥_k = -q/β_k`.
fn tridiagonal_f(state: &LatticeState) -> Matrix {
    let n = state.sites();
    let (p, q) = (state.p, state.q);
    let y: Vec<C64> = state.betas().iter().map(|b| b.inv()).collect();
    let mut f = Matrix::zeros(n, n);
    for i in 0..n {
        let k = i + 1;
        f[(i, i)] = p * state.alpha(k) + q * y[i];
        if i > 0 {
            f[(i, i - 1)] = -(p * state.alpha(k));
        }
        if i + 1 < n {
            f[(i, i + 1)] = -(q * y[i]);
        }
    }
    f
}

/// Assembles `(H_N, F_N)`, building `F_N` entrywise and as `p X_N + q Y_N`
/// and insisting that the two agree exactly.
pub fn build_pair(state: &LatticeState) -> Result<LaxPair> {
    require_finite(state)?;
    let f = tridiagonal_f(state);
    let f_alt = x_matrix(state).scale(state.p).add(&y_matrix(state).scale(state.q));
    if f != f_alt {
        let diff = f.sub(&f_alt).max_abs();
        return Err(Error::MismatchBeyondTolerance { what: "F = pX + qY", diff });
    }
    Ok(LaxPair { h: hessenberg(state), f })
}

/// `[H, F] = HF - FH`.
pub fn commutator(pair: &LaxPair) -> Matrix {
    pair.h.matmul(&pair.f).sub(&pair.f.matmul(&pair.h))
}

/// `Ḣ_N` from the lattice right-hand sides: `α̇_i` below the diagonal and
/// `γ̇_j` in the upper part.
pub fn hessenberg_derivative(state: &LatticeState) -> Result<Matrix> {
    let (_, dalpha) = lattice::rhs_ertl(state)?;
    let dgamma = lattice::rhs_gamma(state)?;
    let n = state.sites();
    Ok(Matrix::from_fn(n, n, |i, j| {
        if j >= i {
            dgamma[j]
        } else if j + 1 == i {
            dalpha[i]
        } else {
            C64::new(0.0, 0.0)
        }
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaxResidual {
    /// `‖Ḣ - [H, F]‖_max / max(1, ‖H‖_max ‖F‖_max)`.
    pub residual: f64,
    pub h_norm: f64,
    pub f_norm: f64,
    pub dh_norm: f64,
}

pub fn lax_residual_report(state: &LatticeState) -> Result<LaxResidual> {
    let pair = build_pair(state)?;
    let dh = hessenberg_derivative(state)?;
    let h_norm = pair.h.max_abs();
    let f_norm = pair.f.max_abs();
    let raw = dh.sub(&commutator(&pair)).max_abs();
    Ok(LaxResidual { residual: raw / (h_norm * f_norm).max(1.0), h_norm, f_norm, dh_norm: dh.max_abs() })
}

pub fn lax_residual(state: &LatticeState) -> Result<f64> {
    lax_residual_report(state).map(|r| r.residual)
}

/// Zeros of `Q_N`, i.e. the eigenvalues of `H_N`, sorted lexicographically.
pub fn spectrum(state: &LatticeState) -> Result<Vec<C64>> {
    require_finite(state)?;
    let n = state.sites();
    let rc = state.to_coeffs();
    let center: C64 = (1..=n).map(|k| state.gamma(k)).sum::<C64>() / n as f64;
    // ∞-norm of H_N bounds every eigenvalue
    let radius = (1..=n)
        .map(|i| {
            let sub = if i > 1 { state.alpha(i).norm() } else { 0.0 };
            sub + (i..=n).map(|j| state.gamma(j).norm()).sum::<f64>()
        })
        .fold(0.0, f64::max);
    let mut roots =
        aberth(n, |x| eval_q_with_derivative(&rc, n, x), center, radius.max(center.norm()), &AberthOptions::default())?;
    sort_lexicographic(&mut roots);
    Ok(roots)
}

/// `max(sup_a inf_b |a - b|, sup_b inf_a |a - b|)`.
pub fn hausdorff(a: &[C64], b: &[C64]) -> f64 {
    let one_sided = |x: &[C64], y: &[C64]| {
        x.iter().map(|u| y.iter().map(|v| (u - v).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    if a.is_empty() && b.is_empty() {
        return 0.0;
    }
    one_sided(a, b).max(one_sided(b, a))
}

/// Minimal-cost perfect matching of `a` onto `b` under `|a_i - b_j|`
/// (Hungarian algorithm). `result[i]` is the partner of `a[i]`.
pub fn match_spectra(a: &[C64], b: &[C64]) -> Vec<usize> {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    let cost = |i: usize, j: usize| (a[i - 1] - b[j - 1]).norm();
    // potentials and matching over 1-based rows/columns, column 0 is a sentinel
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0, j) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0usize; n];
    for j in 1..=n {
        out[row_of[j] - 1] = j - 1;
    }
    out
}

/// Largest eigenvalue displacement under the optimal matching.
pub fn matched_distance(a: &[C64], b: &[C64]) -> f64 {
    match_spectra(a, b).iter().enumerate().map(|(i, &j)| (a[i] - b[j]).norm()).fold(0.0, f64::max)
}

/// Largest Hausdorff distance between the spectrum at each time and at the start.
pub fn isospectral_drift(traj: &Trajectory) -> Result<f64> {
    let Some(first) = traj.states.first() else { return Ok(0.0) };
    let start = spectrum(first)?;
    let mut worst = 0.0f64;
    for state in &traj.states[1..] {
        worst = worst.max(hausdorff(&start, &spectrum(state)?));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{integrate, IntegrateOptions, System};
    use crate::oracles::ClosedFormExample;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn sample_state() -> LatticeState {
        LatticeState::finite(
            C64::new(0.7, 0.3),
            C64::new(1.2, -0.5),
            0.0,
            vec![C64::new(1.1, 0.2), C64::new(0.8, -0.1), C64::new(1.5, 0.4), C64::new(0.9, 0.0), c(1.3), c(0.7)],
            vec![C64::new(0.3, 0.1), C64::new(0.6, -0.2), C64::new(0.4, 0.3), c(0.2), c(0.5)],
        )
        .unwrap()
    }

    #[test]
    fn scalar_pair() {
        let s = LatticeState::finite(c(1.5), c(2.0), 0.0, vec![c(4.0)], vec![]).unwrap();
        let pair = build_pair(&s).unwrap();
        assert_eq!(pair.h.as_slice(), &[c(4.0)]);
        assert_eq!(pair.f.as_slice(), &[c(0.5)]);
        assert_eq!(commutator(&pair).as_slice(), &[c(0.0)]);
        assert_eq!(lax_residual(&s).unwrap(), 0.0);
        assert_eq!(spectrum(&s).unwrap(), vec![c(4.0)]);
    }

    #[test]
    fn example1_layout() {
        let ex = ClosedFormExample::example1(1.0, 2.0).unwrap();
        let s = LatticeState::from_coeffs(&ex.coeffs(0.0, 3), Closure::Finite).unwrap();
        let pair = build_pair(&s).unwrap();
        assert_eq!(pair.h[(1, 0)], c(0.5));
        assert_eq!(pair.h[(2, 1)], c(1.0));
        let r = 2f64.sqrt();
        assert_eq!(pair.h[(0, 0)], c(0.5 + r));
        assert_eq!(pair.h[(1, 1)], c(1.0 + r));
        // finite closure: γ_3 = α_4 + β_3 = β_3
        assert_eq!(pair.h[(2, 2)], c(r));
        assert_eq!(pair.h[(2, 0)], c(0.0));
    }

    #[test]
    fn filled_upper_row() {
        let s = sample_state();
        let pair = build_pair(&s).unwrap();
        assert_eq!(pair.h[(0, 4)], s.alpha(6) + s.beta(5));
    }

    #[test]
    fn identity_matrices_commute() {
        let pair = LaxPair { h: Matrix::identity(4), f: Matrix::identity(4) };
        assert_eq!(commutator(&pair).max_abs(), 0.0);
    }

    #[test]
    fn residual_vanishes_on_a_generic_state() {
        assert!(lax_residual(&sample_state()).unwrap() < 1e-13);
        let ex = ClosedFormExample::example1(1.0, 2.0).unwrap();
        let s = LatticeState::from_coeffs(&ex.coeffs(0.0, 5), Closure::Finite).unwrap();
        assert!(lax_residual(&s).unwrap() < 1e-12);
    }

    #[test]
    fn quadratic_spectrum() {
        let s = LatticeState::finite(c(1.0), c(1.0), 0.0, vec![c(1.0), c(2.0)], vec![c(1.0)]).unwrap();
        let spec = spectrum(&s).unwrap();
        let r = 2f64.sqrt();
        assert!((spec[0] - c(2.0 - r)).norm() < 1e-14);
        assert!((spec[1] - c(2.0 + r)).norm() < 1e-14);
    }

    #[test]
    fn buffered_states_are_refused() {
        let ex = ClosedFormExample::example1(1.0, 2.0).unwrap();
        let s = LatticeState::from_coeffs(&ex.coeffs(0.0, 5), Closure::Buffered { reported: 3 }).unwrap();
        assert!(matches!(build_pair(&s), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn matching_handles_crossings() {
        let a = [c(0.0), c(1.0), c(2.0)];
        let b = [c(2.1), c(-0.1), c(1.05)];
        assert_eq!(match_spectra(&a, &b), vec![1, 2, 0]);
        assert!((matched_distance(&a, &b) - 0.1).abs() < 1e-15);
        assert!((hausdorff(&a, &b) - 0.1).abs() < 1e-15);
    }

    #[test]
    fn fixed_point_has_no_drift() {
        let s = LatticeState::finite(c(1.0), c(2.0), 0.0, vec![c(1.0), c(3.0), c(2.0)], vec![c(0.0), c(0.0)]).unwrap();
        let traj = integrate(&s, &[0.5, 1.0], System::Ertl, &IntegrateOptions::default()).unwrap();
        assert!(isospectral_drift(&traj).unwrap() < 1e-13);
    }
}
