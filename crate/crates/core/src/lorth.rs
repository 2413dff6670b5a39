//! L-orthogonal polynomials `Q_n(x; t)` and their recurrence coefficients.
//!
//! `Q_{n+1}(x) = (x - β_{n+1}) Q_n(x) - α_{n+1} x Q_{n-1}(x)` with `Q_0 = 1`,
//! `Q_1 = x - β_1`. Coefficients are obtained from a moment table by the
//! σ-bootstrap: each level only needs dot products of the coefficient row
//! of `Q_n` against the moments.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt::Write as _;

use crate::error::{Condition, Error, Result};
use crate::linalg::{dot_with_scale, CompensatedSum};
use crate::measures::MomentTable;
use crate::C64;

/// Recurrence coefficients `β_1..β_N` and `α_2..α_{N+1}` at one time.
///
/// The conventions `β_0 = 1`, `α_0 = -1`, `α_1 = 0` are served by the accessors.
#[derive(Debug, Clone, PartialEq)]
pub struct RecurrenceCoeffs {
    pub t: f64,
    pub p: C64,
    pub q: C64,
    beta: Vec<C64>,
    alpha: Vec<C64>,
}

impl RecurrenceCoeffs {
    /// `beta[k] = β_{k+1}`, `alpha[k] = α_{k+2}`; both of length `N`.
    pub fn new(t: f64, p: C64, q: C64, beta: Vec<C64>, alpha: Vec<C64>) -> Result<Self> {
        if beta.len() != alpha.len() || beta.is_empty() {
            return Err(Error::InvalidSpec("need N ≥ 1 values of β_1..β_N and α_2..α_{N+1}"));
        }
        if beta.iter().chain(&alpha).any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidSpec("recurrence coefficients must be finite"));
        }
        Ok(Self { t, p, q, beta, alpha })
    }

    pub fn depth(&self) -> usize {
        self.beta.len()
    }

    /// `β_n` for `0 ≤ n ≤ N`.
    pub fn beta(&self, n: usize) -> C64 {
        if n == 0 {
            C64::new(1.0, 0.0)
        } else {
            self.beta[n - 1]
        }
    }

    /// `α_n` for `0 ≤ n ≤ N + 1`.
    pub fn alpha(&self, n: usize) -> C64 {
        match n {
            0 => C64::new(-1.0, 0.0),
            1 => C64::new(0.0, 0.0),
            _ => self.alpha[n - 2],
        }
    }

    /// `γ_n = α_{n+1} + β_n` for `1 ≤ n ≤ N`.
    pub fn gamma(&self, n: usize) -> C64 {
        self.alpha(n + 1) + self.beta(n)
    }

    pub fn betas(&self) -> &[C64] {
        &self.beta
    }

    /// `α_2..α_{N+1}`.
    pub fn alphas(&self) -> &[C64] {
        &self.alpha
    }

    /// Largest `|Im|` relative to `|Re|` over all coefficients.
    pub fn max_imag(&self) -> f64 {
        self.beta.iter().chain(&self.alpha).map(|z| z.im.abs() / (z.re.abs() + 1e-300)).fold(0.0, f64::max)
    }

    /// Real projection, refused when some `|Im| ≥ 1e-10 |Re| + 1e-300`.
    pub fn to_real(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        for z in self.beta.iter().chain(&self.alpha) {
            if !(z.im.abs() < 1e-10 * z.re.abs() + 1e-300) {
                return Err(Error::NotReal { imag: z.im });
            }
        }
        Ok((self.beta.iter().map(|z| z.re).collect(), self.alpha.iter().map(|z| z.re).collect()))
    }

    /// Coefficients truncated to depth `n ≤ N`.
    pub fn truncated(&self, n: usize) -> Self {
        let n = n.clamp(1, self.depth());
        Self { beta: self.beta[..n].to_vec(), alpha: self.alpha[..n].to_vec(), ..self.clone() }
    }
}

/// Coefficient rows of `Q_0..Q_N` with the σ quantities of each level.
#[derive(Debug, Clone, PartialEq)]
pub struct LPolySequence {
    pub t: f64,
    /// `coeffs[n][j] = a_{n,j}`, `a_{n,n} = 1`.
    coeffs: Vec<Vec<C64>>,
    /// `σ_{n,n} = ℒ[Q_n]`, `0 ≤ n ≤ N`.
    pub sigma_diag: Vec<C64>,
    /// `σ_{n,-1} = ℒ[x^{-n-1} Q_n]`, `0 ≤ n ≤ N`.
    pub sigma_minus: Vec<C64>,
    /// `τ_n = ℒ[x Q_n]` for the levels the table covers.
    pub tau: Vec<C64>,
    pub warnings: Vec<String>,
}

impl LPolySequence {
    pub fn depth(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `a_{n,0..=n}`.
    pub fn row(&self, n: usize) -> &[C64] {
        &self.coeffs[n]
    }

    /// `Q_n(x)` by Horner's rule on the stored row.
    pub fn eval(&self, n: usize, x: C64) -> C64 {
        self.coeffs[n].iter().rev().fold(C64::new(0.0, 0.0), |acc, a| acc * x + a)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct BootstrapOptions {
    /// A divisor `σ` counts as zero when `|σ| ≤ regularity_tol · Σ_j |a_{n,j}| |ν_j|`.
    pub regularity_tol: f64,
    pub depth_cap: usize,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        Self { regularity_tol: crate::EPS_SING, depth_cap: 24 }
    }
}

/// `Σ_j a_j ν_{j+shift}` together with the cancellation scale.
fn moment_dot(table: &MomentTable, row: &[C64], shift: i32) -> Result<(C64, f64)> {
    let terms = row
        .iter()
        .enumerate()
        .map(|(j, a)| table.get(j as i32 + shift).map(|nu| (*a, nu)))
        .collect::<Result<Vec<_>>>()?;
    Ok(dot_with_scale(terms))
}

fn next_row(q_n: &[C64], q_prev: &[C64], beta: C64, alpha: C64) -> Vec<C64> {
    // (x - β) Q_n - α x Q_{n-1}
    let mut out = vec![C64::new(0.0, 0.0); q_n.len() + 1];
    for (j, a) in q_n.iter().enumerate() {
        out[j + 1] += a;
        out[j] -= beta * a;
    }
    for (j, a) in q_prev.iter().enumerate() {
        out[j + 1] -= alpha * a;
    }
    out
}

/// Builds `Q_0..Q_N` and `β_1..β_N`, `α_2..α_{N+1}` from a table covering `[-N-1, N]`.
pub fn bootstrap_recurrence(table: &MomentTable, depth: usize) -> Result<(LPolySequence, RecurrenceCoeffs)> {
    bootstrap_recurrence_with(table, depth, &BootstrapOptions::default())
}

pub fn bootstrap_recurrence_with(
    table: &MomentTable,
    depth: usize,
    opts: &BootstrapOptions,
) -> Result<(LPolySequence, RecurrenceCoeffs)> {
    if depth == 0 {
        return Err(Error::InvalidSpec("depth N must be at least 1"));
    }
    if depth > opts.depth_cap {
        return Err(Error::DepthExceeded { depth, cap: opts.depth_cap });
    }
    let n_max = depth as i32;
    if !table.covers(-n_max - 1, n_max) {
        let index = if table.k_min() > -n_max - 1 { -n_max - 1 } else { n_max };
        return Err(Error::IndexOutOfTable { index });
    }
    let tol = opts.regularity_tol;
    let vanishes = |(s, scale): (C64, f64)| s.norm() <= tol * scale;

    let mut coeffs: Vec<Vec<C64>> = vec![vec![C64::new(1.0, 0.0)]];
    let mut sigma_diag = Vec::with_capacity(depth + 1);
    let mut sigma_minus = Vec::with_capacity(depth + 1);
    let mut beta = Vec::with_capacity(depth);
    let mut alpha = Vec::with_capacity(depth);
    let mut warnings = Vec::new();

    for n in 0..=depth {
        let row = &coeffs[n];
        let diag = moment_dot(table, row, 0)?;
        let minus = moment_dot(table, row, -(n as i32) - 1)?;
        // σ_{n,n} divides α_{n+2}; σ_{n,-1} divides β_{n+1} and β_{n+2}
        if n < depth {
            if vanishes(diag) {
                return Err(Error::RegularityBreakdown { level: n, condition: Condition::B });
            }
            if vanishes(minus) {
                return Err(Error::RegularityBreakdown { level: n + 1, condition: Condition::A });
            }
        }
        sigma_diag.push(diag.0);
        sigma_minus.push(minus.0);
        if n > 0 {
            let ratio = (diag.0 / sigma_diag[0]).norm();
            if !(1e-120..=1e120).contains(&ratio) {
                let mut msg = String::new();
                let _ = write!(msg, "|σ_{{{n},{n}}}/σ_{{0,0}}| = {ratio:e} outside [1e-120, 1e120]");
                warnings.push(msg);
            }
            alpha.push(diag.0 / sigma_diag[n - 1]);
        }
        if n == depth {
            break;
        }
        let b = if n == 0 { diag.0 / minus.0 } else { -alpha[n - 1] * sigma_minus[n - 1] / minus.0 };
        beta.push(b);
        let next =
            if n == 0 { vec![-b, C64::new(1.0, 0.0)] } else { next_row(&coeffs[n], &coeffs[n - 1], b, alpha[n - 1]) };
        coeffs.push(next);
    }

    let tau = coeffs
        .iter()
        .take_while(|row| table.covers(0, row.len() as i32))
        .map(|row| moment_dot(table, row, 1).map(|d| d.0))
        .collect::<Result<Vec<_>>>()?;
    let (p, q) = table.modification();
    let rc = RecurrenceCoeffs::new(table.t(), p, q, beta, alpha)?;
    let lp = LPolySequence { t: table.t(), coeffs, sigma_diag, sigma_minus, tau, warnings };
    Ok((lp, rc))
}

/// `Q_n(x)` by the forward recurrence, `n ≤ N`.
pub fn eval_q(rc: &RecurrenceCoeffs, n: usize, x: C64) -> C64 {
    eval_q_with_derivative(rc, n, x).0
}

/// `(Q_n(x), Q_n'(x))` by the forward recurrence and its derivative.
pub fn eval_q_with_derivative(rc: &RecurrenceCoeffs, n: usize, x: C64) -> (C64, C64) {
    assert!(n <= rc.depth(), "degree {n} beyond depth {}", rc.depth());
    let one = C64::new(1.0, 0.0);
    let zero = C64::new(0.0, 0.0);
    if n == 0 {
        return (one, zero);
    }
    let (mut prev, mut dprev) = (one, zero);
    let (mut cur, mut dcur) = (x - rc.beta(1), one);
    for k in 1..n {
        let b = rc.beta(k + 1);
        let a = rc.alpha(k + 1);
        let next = (x - b) * cur - a * x * prev;
        let dnext = cur + (x - b) * dcur - a * (prev + x * dprev);
        (prev, dprev, cur, dcur) = (cur, dcur, next, dnext);
    }
    (cur, dcur)
}

/// Monomial coefficients of `Q_n` obtained by expanding the recurrence.
pub fn expand_q(rc: &RecurrenceCoeffs, n: usize) -> Vec<C64> {
    let mut prev = vec![C64::new(1.0, 0.0)];
    if n == 0 {
        return prev;
    }
    let mut cur = vec![-rc.beta(1), C64::new(1.0, 0.0)];
    for k in 1..n {
        let next = next_row(&cur, &prev, rc.beta(k + 1), rc.alpha(k + 1));
        prev = core::mem::replace(&mut cur, next);
    }
    cur
}

/// `Q_n(0) = (-1)^n β_n ⋯ β_1`.
pub fn q_at_zero(rc: &RecurrenceCoeffs, n: usize) -> C64 {
    let prod: C64 = (1..=n).map(|k| rc.beta(k)).product();
    if n.is_multiple_of(2) {
        prod
    } else {
        -prod
    }
}

/// Both evaluations of `τ_n = ℒ[x Q_n]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauPair {
    pub direct: C64,
    /// `σ_{n,n} Σ_{k=1}^{n+1} γ_k`.
    pub closed_form: C64,
}

/// Relative tolerance for [`tau`].
pub const TAU_TOL: f64 = 1e-9;

pub fn tau(table: &MomentTable, rc: &RecurrenceCoeffs, lp: &LPolySequence, n: usize) -> Result<TauPair> {
    if n + 1 > rc.depth() {
        return Err(Error::DepthExceeded { depth: n + 1, cap: rc.depth() });
    }
    let (direct, scale) = moment_dot(table, lp.row(n), 1)?;
    let mut gamma_sum = CompensatedSum::new();
    gamma_sum.extend((1..=n + 1).map(|k| rc.gamma(k)));
    let closed_form = lp.sigma_diag[n] * gamma_sum.value();
    let diff = (direct - closed_form).norm();
    if diff > TAU_TOL * scale.max(closed_form.norm()) {
        return Err(Error::MismatchBeyondTolerance { what: "τ_n", diff });
    }
    Ok(TauPair { direct, closed_form })
}

/// `max_{0≤s<n} |ℒ[x^{-n+s} Q_n]|` relative to `Σ_j |a_{n,j}| |ν_{j-n+s}|`.
pub fn orthogonality_residual(table: &MomentTable, lp: &LPolySequence, n: usize) -> Result<f64> {
    if n == 0 || n > lp.depth() {
        return Err(Error::InvalidSpec("orthogonality residual needs 1 ≤ n ≤ N"));
    }
    let mut worst = 0.0f64;
    for s in 0..n {
        let (value, scale) = moment_dot(table, lp.row(n), s as i32 - n as i32)?;
        worst = worst.max(value.norm() / scale.max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

/// Relative residuals of the product identities linking `a_{n,j}`, `σ` and the coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IdentityResiduals {
    /// `a_{n,0} = (-1)^n β_n ⋯ β_1`.
    pub an0: f64,
    /// `α_{n+1} + β_{n+1} = a_{n,n-1} - a_{n+1,n}`.
    pub abzeros: f64,
    /// `σ_{n,n} = α_{n+1} ⋯ α_2 σ_{0,0}`.
    pub sigxi: f64,
    /// `σ_{n,-1} = σ_{n,n} / (β_{n+1} a_{n,0})`.
    pub sigman: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.an0.max(self.abzeros).max(self.sigxi).max(self.sigman)
    }
}

fn rel(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(f64::MIN_POSITIVE)
}

pub fn identity_residuals(lp: &LPolySequence, rc: &RecurrenceCoeffs) -> IdentityResiduals {
    let depth = rc.depth().min(lp.depth());
    let mut out = IdentityResiduals::default();
    for n in 1..=depth {
        out.an0 = out.an0.max(rel(lp.row(n)[0], q_at_zero(rc, n)));
        let alpha_prod: C64 = (2..=n + 1).map(|k| rc.alpha(k)).product();
        out.sigxi = out.sigxi.max(rel(lp.sigma_diag[n], alpha_prod * lp.sigma_diag[0]));
    }
    for n in 1..depth {
        let (a, b) = (rc.alpha(n + 1), rc.beta(n + 1));
        let (u, v) = (lp.row(n)[n - 1], lp.row(n + 1)[n]);
        // both sides can cancel to near zero, so scale by the terms
        let scale = (a.norm() + b.norm()).max(u.norm() + v.norm()).max(f64::MIN_POSITIVE);
        out.abzeros = out.abzeros.max(((a + b) - (u - v)).norm() / scale);
    }
    for n in 0..depth {
        let rhs = lp.sigma_diag[n] / (rc.beta(n + 1) * lp.row(n)[0]);
        out.sigman = out.sigman.max(rel(lp.sigma_minus[n], rhs));
    }
    out
}

/// Both sides of `Σ_{k=1}^n β̇_k/β_k = -p α_{n+1} + q α_{n+1}/(β_{n+1} β_n)`
/// given `dbeta[k-1] = β̇_k`; needs `n < N`.
pub fn beta_sum_identity(rc: &RecurrenceCoeffs, dbeta: &[C64], n: usize) -> (C64, C64) {
    assert!(n >= 1 && n < rc.depth() && n <= dbeta.len());
    let mut lhs = CompensatedSum::new();
    lhs.extend((1..=n).map(|k| dbeta[k - 1] / rc.beta(k)));
    let a = rc.alpha(n + 1);
    let rhs = -rc.p * a + rc.q * a / (rc.beta(n + 1) * rc.beta(n));
    (lhs.value(), rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{compute_moments, MomentSpec};
    use crate::oracles::{self, ClosedFormExample};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn two_point() -> MomentTable {
        let spec = MomentSpec::discrete(vec![1.0, 2.0], vec![1.0, 1.0], c(0.0), c(0.0)).unwrap();
        compute_moments(&spec, 0.0, 3).unwrap()
    }

    fn example1_table(t: f64, k: usize) -> MomentTable {
        compute_moments(&MomentSpec::example1(1.0, 2.0).unwrap(), t, k).unwrap()
    }

    #[test]
    fn two_point_measure_first_coefficient() {
        let (_, rc) = bootstrap_recurrence(&two_point(), 2).unwrap();
        assert!((rc.beta(1) - c(4.0 / 3.0)).norm() < 1e-15);
        // a two-point measure supports exactly two L-orthogonal levels
        assert!(rc.alpha(3).norm() < 1e-13);
    }

    #[test]
    fn example1_bootstrap_matches_closed_form() {
        let (lp, rc) = bootstrap_recurrence(&example1_table(0.0, 9), 8).unwrap();
        for n in 1..=8 {
            assert!((rc.beta(n) - c(2f64.sqrt())).norm() < 1e-8, "β_{n}");
        }
        for n in 1..=7 {
            assert!((rc.alpha(n + 1) - c(n as f64 / 2.0)).norm() < 1e-8, "α_{}", n + 1);
        }
        assert!(rc.max_imag() < 1e-12);
        assert!(lp.warnings.is_empty());
        assert!(identity_residuals(&lp, &rc).max() < 1e-9);
    }

    #[test]
    fn example2_bootstrap_matches_l_recursion() {
        let spec = MomentSpec::example2(1.0, 2.0).unwrap();
        let table = compute_moments(&spec, 0.5, 7).unwrap();
        let (_, rc) = bootstrap_recurrence(&table, 6).unwrap();
        let oracle = oracles::example2_coeffs(&ClosedFormExample::example2(1.0, 2.0).unwrap(), 0.5, 6);
        for n in 1..=6 {
            assert!((rc.beta(n) - oracle.beta(n)).norm() < 1e-7, "β_{n}");
            assert!((rc.alpha(n + 1) - oracle.alpha(n + 1)).norm() < 1e-7, "α_{}", n + 1);
        }
    }

    #[test]
    fn eval_q_conventions() {
        let (lp, rc) = bootstrap_recurrence(&example1_table(0.0, 4), 3).unwrap();
        let x = C64::new(0.3, -0.7);
        assert_eq!(eval_q(&rc, 0, x), c(1.0));
        assert_eq!(eval_q(&rc, 1, rc.beta(1)), c(0.0));
        let one = c(1.0);
        assert!((eval_q(&rc, 3, one) - lp.eval(3, one)).norm() < 1e-12 * lp.eval(3, one).norm());
    }

    #[test]
    fn q_at_zero_matches_evaluation() {
        let (_, rc) = bootstrap_recurrence(&example1_table(0.3, 5), 4).unwrap();
        assert_eq!(q_at_zero(&rc, 1), -rc.beta(1));
        assert!((q_at_zero(&rc, 4) - c(4.0)).norm() < 1e-9);
        for n in 1..=4 {
            assert!((q_at_zero(&rc, n) - eval_q(&rc, n, c(0.0))).norm() < 1e-12);
        }
    }

    #[test]
    fn expansion_reproduces_bootstrap_rows() {
        let (lp, rc) = bootstrap_recurrence(&example1_table(0.0, 7), 6).unwrap();
        for n in 0..=6 {
            let expanded = expand_q(&rc, n);
            for (a, b) in expanded.iter().zip(lp.row(n)) {
                assert!(rel(*a, *b) < 1e-11);
            }
        }
    }

    #[test]
    fn tau_routes_agree() {
        let table = example1_table(0.0, 5);
        let (lp, rc) = bootstrap_recurrence(&table, 4).unwrap();
        let t0 = tau(&table, &rc, &lp, 0).unwrap();
        assert!((t0.direct - table.get(1).unwrap()).norm() < 1e-15 * t0.direct.norm());
        let t3 = tau(&table, &rc, &lp, 3).unwrap();
        assert!(rel(t3.direct, t3.closed_form) < 1e-9);
        assert!(tau(&table, &rc, &lp, 4).is_err());
    }

    #[test]
    fn orthogonality_is_enforced() {
        let table = example1_table(0.0, 7);
        let (lp, _) = bootstrap_recurrence(&table, 6).unwrap();
        assert!(orthogonality_residual(&table, &lp, 1).unwrap() < 1e-12);
        assert!(orthogonality_residual(&table, &lp, 6).unwrap() < 1e-9);
    }

    #[test]
    fn unit_mass_breaks_down() {
        // H_2^{(-1)} = 0 is hit before H_2^{(-2)} = 0
        let spec = MomentSpec::discrete(vec![1.0], vec![1.0], c(0.0), c(0.0)).unwrap();
        let table = compute_moments(&spec, 0.0, 3).unwrap();
        assert_eq!(
            bootstrap_recurrence(&table, 2),
            Err(Error::RegularityBreakdown { level: 1, condition: Condition::B })
        );
    }

    #[test]
    fn depth_cap_and_table_range() {
        let table = example1_table(0.0, 3);
        assert!(matches!(bootstrap_recurrence(&table, 3), Err(Error::IndexOutOfTable { .. })));
        let opts = BootstrapOptions { depth_cap: 2, ..Default::default() };
        assert_eq!(bootstrap_recurrence_with(&table, 3, &opts), Err(Error::DepthExceeded { depth: 3, cap: 2 }));
    }
}
