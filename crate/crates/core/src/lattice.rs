//! The extended relativistic Toda lattice and its reductions.
//!
//! ```text
//! β̇_n = p β_n (α_n - α_{n+1}) + q β_n (α_{n+1}/(β_{n+1} β_n) - α_n/(β_n β_{n-1}))
//! α̇_n = p α_n (α_{n-1} + β_{n-1} - α_{n+1} - β_n) + q α_n (1/β_{n-1} - 1/β_n)
//! ```
//!
//! with `β_0 = 1`, `α_0 = -1`, `α_1 = 0`. A state with `M` sites carries
//! `β_1..β_M` and `α_1..α_{M+1}`; the truncation `α_{M+1} = 0` closes it.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::lorth::RecurrenceCoeffs;
use crate::ode::{self, OdeSystem, StepControl, StepStats};
use crate::{C64, EPS_SING};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    /// `α_{M+1} ≡ 0`; every site is meaningful.
    Finite,
    /// Extra sites absorb the truncation error; only the first `reported`
    /// sites are meant to be read.
    Buffered { reported: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeState {
    pub p: C64,
    pub q: C64,
    pub t: f64,
    beta: Vec<C64>,
    /// `alpha[k] = α_{k+1}`, length `M + 1`.
    alpha: Vec<C64>,
    pub closure: Closure,
}

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

impl LatticeState {
    /// Finite state from `β_1..β_M` and `α_2..α_M`.
    pub fn finite(p: C64, q: C64, t: f64, beta: Vec<C64>, alpha_from_2: Vec<C64>) -> Result<Self> {
        Self::with_closure(p, q, t, beta, alpha_from_2, Closure::Finite)
    }

    pub fn with_closure(
        p: C64,
        q: C64,
        t: f64,
        beta: Vec<C64>,
        alpha_from_2: Vec<C64>,
        closure: Closure,
    ) -> Result<Self> {
        let m = beta.len();
        if m == 0 || alpha_from_2.len() + 1 != m {
            return Err(Error::InvalidSpec("a lattice of M sites needs β_1..β_M and α_2..α_M"));
        }
        if let Closure::Buffered { reported } = closure {
            if reported == 0 || reported >= m {
                return Err(Error::InvalidSpec("buffered closure must report 1 ≤ N < M sites"));
            }
        }
        let finite = |z: &C64| z.re.is_finite() && z.im.is_finite();
        if !(beta.iter().all(finite) && alpha_from_2.iter().all(finite)) || ![p, q].iter().all(finite) || !t.is_finite()
        {
            return Err(Error::InvalidSpec("lattice data must be finite"));
        }
        let mut alpha = Vec::with_capacity(m + 1);
        alpha.push(zero());
        alpha.extend(alpha_from_2);
        alpha.push(zero());
        let state = Self { p, q, t, beta, alpha, closure };
        state.check_denominators()?;
        Ok(state)
    }

    /// State on `rc.depth()` sites; the coefficient `α_{N+1}` of `rc` is
    /// dropped by the closure.
    pub fn from_coeffs(rc: &RecurrenceCoeffs, closure: Closure) -> Result<Self> {
        let m = rc.depth();
        let alpha = rc.alphas()[..m - 1].to_vec();
        Self::with_closure(rc.p, rc.q, rc.t, rc.betas().to_vec(), alpha, closure)
    }

    /// Number of integrated sites `M`.
    pub fn sites(&self) -> usize {
        self.beta.len()
    }

    /// Number of sites meant to be read.
    pub fn reported(&self) -> usize {
        match self.closure {
            Closure::Finite => self.sites(),
            Closure::Buffered { reported } => reported,
        }
    }

    /// `β_n`, `0 ≤ n ≤ M`.
    pub fn beta(&self, n: usize) -> C64 {
        if n == 0 {
            C64::new(1.0, 0.0)
        } else {
            self.beta[n - 1]
        }
    }

    /// `α_n`, `0 ≤ n ≤ M + 1`.
    pub fn alpha(&self, n: usize) -> C64 {
        if n == 0 {
            C64::new(-1.0, 0.0)
        } else {
            self.alpha[n - 1]
        }
    }

    /// `γ_n = α_{n+1} + β_n`, `1 ≤ n ≤ M`.
    pub fn gamma(&self, n: usize) -> C64 {
        self.alpha(n + 1) + self.beta(n)
    }

    pub fn betas(&self) -> &[C64] {
        &self.beta
    }

    /// `α_1..α_{M+1}`.
    pub fn alphas(&self) -> &[C64] {
        &self.alpha
    }

    /// Reported coefficients `β_1..β_N`, `α_2..α_{N+1}`.
    pub fn to_coeffs(&self) -> RecurrenceCoeffs {
        let n = self.reported();
        RecurrenceCoeffs::new(self.t, self.p, self.q, self.beta[..n].to_vec(), self.alpha[1..=n].to_vec())
            .expect("lattice states are finite")
    }

    /// Same data with other modification parameters.
    pub fn with_parameters(&self, p: C64, q: C64) -> Self {
        Self { p, q, ..self.clone() }
    }

    /// Finite-closure truncation to the reported sites.
    pub fn truncate_finite(&self) -> Self {
        let n = self.reported();
        let mut alpha = self.alpha[..=n].to_vec();
        alpha[n] = zero();
        Self { beta: self.beta[..n].to_vec(), alpha, closure: Closure::Finite, ..self.clone() }
    }

    fn check_denominators(&self) -> Result<()> {
        match self.beta.iter().position(|b| b.norm() < EPS_SING) {
            Some(k) => Err(Error::SingularDenominator { site: k + 1 }),
            None => Ok(()),
        }
    }

    fn pack(&self) -> Vec<C64> {
        let m = self.sites();
        let mut y = self.beta.clone();
        y.extend_from_slice(&self.alpha[1..m]);
        y
    }

    fn unpack(&self, t: f64, y: &[C64]) -> Self {
        let m = self.sites();
        let mut alpha = Vec::with_capacity(m + 1);
        alpha.push(zero());
        alpha.extend_from_slice(&y[m..]);
        alpha.push(zero());
        Self { t, beta: y[..m].to_vec(), alpha, ..self.clone() }
    }
}

/// `(β̇_1..β̇_M, α̇_1..α̇_{M+1})`, with `α̇_1 = α̇_{M+1} = 0`.
pub type LatticeRhs = (Vec<C64>, Vec<C64>);

fn check_beta(beta: &[C64]) -> Result<()> {
    match beta.iter().position(|b| b.norm() < EPS_SING) {
        Some(k) => Err(Error::SingularDenominator { site: k + 1 }),
        None => Ok(()),
    }
}

/// Shared kernel of every lattice right-hand side. `beta` holds `β_1..β_M`,
/// `alpha` holds `α_1..α_{M+1}`.
fn ertl_kernel(p: C64, q: C64, beta: &[C64], alpha: &[C64], dbeta: &mut [C64], dalpha: &mut [C64]) {
    let m = beta.len();
    let b = |n: usize| if n == 0 { C64::new(1.0, 0.0) } else { beta[n - 1] };
    let a = |n: usize| if n == 0 { C64::new(-1.0, 0.0) } else { alpha[n - 1] };
    for n in 1..=m {
        // α_{M+1} = 0 removes the coupling to the absent β_{M+1}
        let up = if n == m { zero() } else { a(n + 1) / (b(n + 1) * b(n)) };
        let down = a(n) / (b(n) * b(n - 1));
        dbeta[n - 1] = p * b(n) * (a(n) - a(n + 1)) + q * b(n) * (up - down);
    }
    dalpha[0] = zero();
    for n in 2..=m {
        dalpha[n - 1] = p * a(n) * (a(n - 1) + b(n - 1) - a(n + 1) - b(n)) + q * a(n) * (b(n - 1).inv() - b(n).inv());
    }
    dalpha[m] = zero();
}

fn kernel_with(p: C64, q: C64, state: &LatticeState) -> Result<LatticeRhs> {
    check_beta(&state.beta)?;
    let m = state.sites();
    let mut dbeta = vec![zero(); m];
    let mut dalpha = vec![zero(); m + 1];
    ertl_kernel(p, q, &state.beta, &state.alpha, &mut dbeta, &mut dalpha);
    Ok((dbeta, dalpha))
}

pub fn rhs_ertl(state: &LatticeState) -> Result<LatticeRhs> {
    kernel_with(state.p, state.q, state)
}

/// `p = 0`, `q = 1`; the parameters stored in `state` are ignored.
pub fn rhs_rtl1(state: &LatticeState) -> Result<LatticeRhs> {
    kernel_with(zero(), C64::new(1.0, 0.0), state)
}

/// `p = 1`, `q = 0`; the parameters stored in `state` are ignored.
pub fn rhs_rtl2(state: &LatticeState) -> Result<LatticeRhs> {
    kernel_with(C64::new(1.0, 0.0), zero(), state)
}

/// `γ̇_n = p(α_n γ_n - α_{n+1} γ_{n+1}) + q(α_{n+1}/β_n - α_n/β_{n-1})`, `1 ≤ n ≤ M`.
pub fn rhs_gamma(state: &LatticeState) -> Result<Vec<C64>> {
    check_beta(&state.beta)?;
    let (p, q) = (state.p, state.q);
    let m = state.sites();
    Ok((1..=m)
        .map(|n| {
            let next = if n == m { zero() } else { state.alpha(n + 1) * state.gamma(n + 1) };
            p * (state.alpha(n) * state.gamma(n) - next)
                + q * (state.alpha(n + 1) / state.beta(n) - state.alpha(n) / state.beta(n - 1))
        })
        .collect())
}

/// Tolerance on `max |β_n - √q|` for the symmetric reduction.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// `α̇_n = α_n(α_{n-1} - α_{n+1})` on a state with `β_n ≡ √q` (and `p = 1`).
///
/// Also confirms that the full lattice leaves `β` frozen on such a state.
pub fn rhs_langmuir(state: &LatticeState) -> Result<Vec<C64>> {
    let root = state.q.sqrt();
    let deviation = state.beta.iter().map(|b| (b - root).norm()).fold(0.0, f64::max);
    if deviation > SYMMETRY_TOL {
        return Err(Error::NotSymmetricState { deviation });
    }
    let (dbeta, _) = kernel_with(C64::new(1.0, 0.0), state.q, state)?;
    let drift = dbeta.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = state.alpha.iter().map(|z| z.norm()).fold(1.0, f64::max) * root.norm().max(1.0);
    if drift > 1e-12 * scale + deviation * scale * 4.0 {
        return Err(Error::MismatchBeyondTolerance { what: "β̇ on a symmetric state", diff: drift });
    }
    let m = state.sites();
    let mut out = vec![zero(); m + 1];
    for n in 2..=m {
        out[n - 1] = state.alpha(n) * (state.alpha(n - 1) - state.alpha(n + 1));
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum System {
    Ertl,
    Rtl1,
    Rtl2,
    /// Only `α` moves; `β` stays at its initial value.
    Langmuir,
}

impl System {
    pub fn rhs(&self, state: &LatticeState) -> Result<LatticeRhs> {
        match self {
            System::Ertl => rhs_ertl(state),
            System::Rtl1 => rhs_rtl1(state),
            System::Rtl2 => rhs_rtl2(state),
            System::Langmuir => {
                let dalpha = rhs_langmuir(state)?;
                Ok((vec![zero(); state.sites()], dalpha))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntegrateOptions {
    pub ctrl: StepControl,
    /// Abort when a real-positive start loses `β_n > 0` or `α_{n+1} > 0`.
    pub check_positivity: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// Start time followed by the output times.
    pub times: Vec<f64>,
    pub states: Vec<LatticeState>,
    pub stats: StepStats,
}

impl Trajectory {
    pub fn last(&self) -> &LatticeState {
        self.states.last().expect("trajectories hold the initial state")
    }
}

struct LatticeOde<'a> {
    template: &'a LatticeState,
    system: System,
    check_positivity: bool,
}

impl OdeSystem for LatticeOde<'_> {
    fn dim(&self) -> usize {
        2 * self.template.sites() - 1
    }

    fn rhs(&self, t: f64, y: &[C64], dy: &mut [C64]) -> Result<()> {
        let m = self.template.sites();
        check_beta(&y[..m])?;
        let state = self.template.unpack(t, y);
        let (dbeta, dalpha) = match self.system {
            System::Langmuir => (vec![zero(); m], rhs_langmuir(&state)?),
            other => other.rhs(&state)?,
        };
        dy[..m].copy_from_slice(&dbeta);
        dy[m..].copy_from_slice(&dalpha[1..m]);
        Ok(())
    }

    fn admissible(&self, t: f64, y: &[C64]) -> Result<()> {
        let m = self.template.sites();
        check_beta(&y[..m])?;
        if self.check_positivity {
            let bad = |z: &C64| !(z.re > 0.0) || z.im.abs() > 1e-10 * z.re;
            if let Some(k) = y[..m].iter().position(bad) {
                return Err(Error::PositivityLost { site: k + 1, t });
            }
            if let Some(k) = y[m..].iter().position(bad) {
                return Err(Error::PositivityLost { site: k + 2, t });
            }
        }
        Ok(())
    }
}

/// Integrates `state` to each of `outputs` (strictly increasing, after `state.t`).
pub fn integrate(state: &LatticeState, outputs: &[f64], system: System, opts: &IntegrateOptions) -> Result<Trajectory> {
    let ode = LatticeOde { template: state, system, check_positivity: opts.check_positivity };
    let (ys, stats) = ode::integrate(&ode, state.t, &state.pack(), outputs, &opts.ctrl)?;
    let mut times = Vec::with_capacity(outputs.len() + 1);
    let mut states = Vec::with_capacity(outputs.len() + 1);
    times.push(state.t);
    states.push(state.clone());
    for (t, y) in outputs.iter().zip(ys) {
        times.push(*t);
        states.push(state.unpack(*t, &y));
    }
    Ok(Trajectory { times, states, stats })
}

/// Largest buffer tried by [`integrate_buffered`].
pub const MAX_BUFFER: usize = 1024;

/// Agreement required between two successive buffers.
pub const BUFFER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BufferReport {
    pub sites: usize,
    /// Largest change of a reported coefficient against the previous buffer.
    pub change: f64,
}

fn reported_values(state: &LatticeState, n: usize) -> impl Iterator<Item = C64> + '_ {
    state.beta[..n].iter().chain(&state.alpha[1..=n]).copied()
}

/// Integrates a semi-infinite lattice through finite truncations.
///
/// `source(M)` must return the initial state on `M` sites. Starting from
/// `M = N + max(10, ⌈10 t_end⌉)` the buffer is doubled until the reported
/// coefficients (`β_1..β_N`, `α_2..α_{N+1}`) move by less than [`BUFFER_TOL`].
pub fn integrate_buffered(
    source: impl Fn(usize) -> Result<LatticeState>,
    reported: usize,
    outputs: &[f64],
    system: System,
    opts: &IntegrateOptions,
) -> Result<(Trajectory, BufferReport)> {
    if reported == 0 {
        return Err(Error::InvalidSpec("buffered integration must report at least one site"));
    }
    let span = outputs.last().copied().unwrap_or(0.0) - source(reported + 1)?.t;
    let mut sites = reported + 10usize.max((10.0 * span.abs()).ceil() as usize);
    let run = |sites: usize| -> Result<Trajectory> {
        let mut start = source(sites)?;
        if start.sites() != sites {
            return Err(Error::InvalidSpec("source returned the wrong number of sites"));
        }
        start.closure = Closure::Buffered { reported };
        integrate(&start, outputs, system, opts)
    };
    let mut prev = run(sites)?;
    let mut change = f64::INFINITY;
    while sites * 2 <= MAX_BUFFER {
        sites *= 2;
        let next = run(sites)?;
        change = prev
            .states
            .iter()
            .zip(&next.states)
            .flat_map(|(a, b)| {
                reported_values(a, reported)
                    .zip(reported_values(b, reported))
                    .map(|(x, y)| (x - y).norm() / x.norm().max(1.0))
            })
            .fold(0.0, f64::max);
        prev = next;
        if change < BUFFER_TOL {
            return Ok((prev, BufferReport { sites, change }));
        }
    }
    Err(Error::BufferNotConverged { change, sites })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::ClosedFormExample;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn example1_state(t: f64, m: usize, closure: Closure) -> LatticeState {
        let rc = ClosedFormExample::example1(1.0, 2.0).unwrap().coeffs(t, m);
        LatticeState::from_coeffs(&rc, closure).unwrap()
    }

    fn sample_state() -> LatticeState {
        LatticeState::finite(
            C64::new(0.7, 0.3),
            C64::new(1.2, -0.5),
            0.0,
            vec![C64::new(1.1, 0.2), C64::new(0.8, -0.1), C64::new(1.5, 0.4), C64::new(0.9, 0.0)],
            vec![C64::new(0.3, 0.1), C64::new(0.6, -0.2), C64::new(0.4, 0.3)],
        )
        .unwrap()
    }

    #[test]
    fn single_site_is_stationary() {
        let s = LatticeState::finite(c(1.0), c(2.0), 0.0, vec![C64::new(0.4, 0.9)], vec![]).unwrap();
        let (db, da) = rhs_ertl(&s).unwrap();
        assert_eq!(db, vec![c(0.0)]);
        assert!(da.iter().all(|z| *z == c(0.0)));
        assert_eq!(rhs_gamma(&s).unwrap(), vec![c(0.0)]);
        assert_eq!(rhs_rtl1(&s).unwrap().0, vec![c(0.0)]);
        assert_eq!(rhs_rtl2(&s).unwrap().0, vec![c(0.0)]);
    }

    #[test]
    fn example1_rhs_matches_closed_form_derivatives() {
        let s = example1_state(0.0, 12, Closure::Buffered { reported: 6 });
        let (db, da) = rhs_ertl(&s).unwrap();
        for n in 1..=6 {
            assert!(db[n - 1].norm() < 1e-14, "β̇_{n}");
        }
        for n in 2..=7 {
            let exact = -((n - 1) as f64) / 2.0;
            assert!((da[n - 1] - c(exact)).norm() < 1e-14, "α̇_{n}");
        }
        let dg = rhs_gamma(&s).unwrap();
        for n in 1..=6 {
            assert!((dg[n - 1] - c(-(n as f64) / 2.0)).norm() < 1e-14);
        }
        let lang = rhs_langmuir(&s).unwrap();
        for n in 2..=7 {
            assert!((lang[n - 1] - da[n - 1]).norm() < 1e-14);
        }
    }

    #[test]
    fn gamma_equation_is_the_sum_of_the_others() {
        let s = sample_state();
        let (db, da) = rhs_ertl(&s).unwrap();
        let dg = rhs_gamma(&s).unwrap();
        for n in 1..=s.sites() {
            assert!((dg[n - 1] - (da[n] + db[n - 1])).norm() < 1e-13);
        }
    }

    #[test]
    fn specializations_share_the_kernel() {
        let s = sample_state();
        assert_eq!(rhs_ertl(&s.with_parameters(c(0.0), c(1.0))), rhs_rtl1(&s));
        assert_eq!(rhs_ertl(&s.with_parameters(c(1.0), c(0.0))), rhs_rtl2(&s));
    }

    #[test]
    fn langmuir_single_excitation() {
        let a = 0.7;
        let s = LatticeState::finite(c(1.0), c(4.0), 0.0, vec![c(2.0); 4], vec![c(a), c(0.0), c(0.0)]).unwrap();
        let d = rhs_langmuir(&s).unwrap();
        assert_eq!(d[1], c(0.0));
        assert_eq!(d[2], c(0.0));
        let s = LatticeState::finite(c(1.0), c(4.0), 0.0, vec![c(2.0); 4], vec![c(0.5), c(a), c(0.2)]).unwrap();
        let d = rhs_langmuir(&s).unwrap();
        assert!((d[2] - c(a * (0.5 - 0.2))).norm() < 1e-15);
        assert!(matches!(rhs_langmuir(&sample_state()), Err(Error::NotSymmetricState { .. })));
    }

    #[test]
    fn singular_denominators_are_reported() {
        let r = LatticeState::finite(c(1.0), c(1.0), 0.0, vec![c(1.0), c(0.0)], vec![c(1.0)]);
        assert_eq!(r, Err(Error::SingularDenominator { site: 2 }));
    }

    #[test]
    fn single_site_integration_is_trivial() {
        let s = LatticeState::finite(c(1.0), c(2.0), 0.0, vec![c(1.0)], vec![]).unwrap();
        let traj = integrate(&s, &[1.0], System::Ertl, &IntegrateOptions::default()).unwrap();
        assert!((traj.last().beta(1) - c(1.0)).norm() < 1e-14);
    }

    #[test]
    fn example1_buffered_integration() {
        let ex = ClosedFormExample::example1(1.0, 2.0).unwrap();
        let source = |m: usize| LatticeState::from_coeffs(&ex.coeffs(0.0, m), Closure::Finite);
        let (traj, report) =
            integrate_buffered(source, 6, &[0.5, 1.0], System::Ertl, &IntegrateOptions::default()).unwrap();
        assert!(report.change < BUFFER_TOL);
        let end = traj.last().to_coeffs();
        for n in 1..=6 {
            assert!((end.beta(n) - c(2f64.sqrt())).norm() < 1e-7);
            assert!((end.alpha(n + 1) - c(n as f64 / 4.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn positivity_guard_fires() {
        // β_2 < 0 from the start
        let s = LatticeState::finite(c(1.0), c(0.0), 0.0, vec![c(1.0), c(-1.0)], vec![c(0.5)]).unwrap();
        let opts = IntegrateOptions { check_positivity: true, ..Default::default() };
        assert!(matches!(integrate(&s, &[0.1], System::Ertl, &opts), Err(Error::PositivityLost { .. })));
    }
}
