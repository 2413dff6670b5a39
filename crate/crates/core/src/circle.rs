//! Unit-circle reductions.
//!
//! For a positive measure `μ` on the circle and `p = conj(q)`, the modified
//! measures `dμ^{(t)} = e^{-t(conj(q) z + q/z)} dμ` stay positive. Their
//! Verblunsky coefficients `𝔞_n(t)` follow the Schur flow, the kernel
//! polynomials at `w = 1` give the real `c_n`/`d_n` lattice, and the
//! monic orthogonal polynomials themselves are L-orthogonal for `ν_k = m_{k+1}`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::lorth::RecurrenceCoeffs;
use crate::measures::{opuc_conjugation_defect, MomentTable};
use crate::ode::{self, OdeSystem, StepControl, StepStats};
use crate::C64;

/// `𝔞_0..𝔞_{L-1}` of `μ^{(t)}` together with `ξ_0 = ∫ dμ^{(t)}`.
#[derive(Debug, Clone, PartialEq)]
pub struct VerblunskySeq {
    pub t: f64,
    pub q: C64,
    pub xi0: f64,
    a: Vec<C64>,
}

impl VerblunskySeq {
    pub fn new(t: f64, q: C64, xi0: f64, a: Vec<C64>) -> Result<Self> {
        if a.is_empty() {
            return Err(Error::InvalidSpec("need at least one Verblunsky coefficient"));
        }
        if !(xi0 > 0.0) {
            return Err(Error::InvalidSpec("total mass must be positive"));
        }
        if let Some((index, z)) = a.iter().enumerate().find(|(_, z)| !(z.norm() < 1.0)) {
            return Err(Error::VerblunskyOutOfDisk { index, modulus: z.norm() });
        }
        Ok(Self { t, q, xi0, a })
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn coefficients(&self) -> &[C64] {
        &self.a
    }

    /// `Φ_n(0) = -conj(𝔞_{n-1})`.
    pub fn phi_at_zero(&self, n: usize) -> C64 {
        if n == 0 {
            C64::new(1.0, 0.0)
        } else {
            -self.a[n - 1].conj()
        }
    }
}

/// Verblunsky coefficients from the table of the functional `ν_k = m_{k+1}`
/// (so `m_j = ν_{j-1}`), by the Levinson recursion on the Toeplitz moments.
pub fn verblunsky_from_moments(table: &MomentTable, depth: usize) -> Result<VerblunskySeq> {
    if depth == 0 {
        return Err(Error::InvalidSpec("depth must be at least 1"));
    }
    let defect = opuc_conjugation_defect(table);
    if defect > 1e-10 {
        return Err(Error::NotToeplitz { defect });
    }
    let m = |j: usize| table.get(j as i32 - 1);
    let m0 = m(0)?;
    if !(m0.re > 0.0) {
        return Err(Error::NotPositiveDefinite { level: 0 });
    }
    let (_, q) = table.modification();
    // coefficients of the monic Φ_n, lowest degree first
    let mut phi = vec![C64::new(1.0, 0.0)];
    let mut norm = m0.re;
    let mut a = Vec::with_capacity(depth);
    for n in 0..depth {
        let mut acc = crate::linalg::CompensatedSum::new();
        for (i, c) in phi.iter().enumerate() {
            acc.add(c * m(i + 1)?);
        }
        let a_conj = acc.value() / norm;
        let an = a_conj.conj();
        let modulus = an.norm();
        if !(modulus < 1.0) {
            return Err(Error::NotPositiveDefinite { level: n });
        }
        a.push(an);
        // Φ_{n+1} = z Φ_n - conj(𝔞_n) Φ*_n with Φ*_n(z) = z^n conj(Φ_n(1/conj z))
        let len = phi.len();
        let mut next = vec![C64::new(0.0, 0.0); len + 1];
        for (i, c) in phi.iter().enumerate() {
            next[i + 1] += c;
            next[len - 1 - i] -= a_conj * c.conj();
        }
        phi = next;
        norm *= 1.0 - modulus * modulus;
    }
    VerblunskySeq::new(table.t(), q, m0.re, a)
}

/// Recurrence coefficients of the functional `ν_k = m_{k+1}`, whose
/// L-orthogonal polynomials are the monic `Φ_n`; depth `L - 1`.
///
/// `β_1 = conj(𝔞_0)`, `β_{n+1} = -conj(𝔞_n)/conj(𝔞_{n-1})`,
/// `α_{n+1} = conj(𝔞_n)/conj(𝔞_{n-1}) (1 - |𝔞_{n-1}|²)`.
pub fn opuc_recurrence_coeffs(v: &VerblunskySeq) -> Result<RecurrenceCoeffs> {
    let a = v.coefficients();
    if a.len() < 2 {
        return Err(Error::InvalidSpec("need 𝔞_0..𝔞_N with N ≥ 1"));
    }
    if let Some(index) = a.iter().position(|z| *z == C64::new(0.0, 0.0)) {
        return Err(Error::ZeroVerblunsky { index });
    }
    let depth = a.len() - 1;
    let mut beta = Vec::with_capacity(depth);
    let mut alpha = Vec::with_capacity(depth);
    beta.push(a[0].conj());
    for n in 1..=depth {
        let ratio = a[n].conj() / a[n - 1].conj();
        if n < depth {
            beta.push(-ratio);
        }
        alpha.push(ratio * (1.0 - a[n - 1].norm_sqr()));
    }
    RecurrenceCoeffs::new(v.t, v.q.conj(), v.q, beta, alpha)
}

/// Kernel-polynomial recurrence coefficients at `w` and the ratios `ρ_n`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelCoeffs {
    pub w: C64,
    /// `ρ_0..ρ_L`, renormalized to modulus one.
    pub rho: Vec<C64>,
    /// Unnormalized `Φ_n(w)/Φ*_n(w)` from the coupled Szegő recursion.
    pub rho_raw: Vec<C64>,
    /// `β_1..β_{L-1}`, `α_2..α_L`.
    pub coeffs: RecurrenceCoeffs,
}

/// `ρ_0..ρ_L` by `Φ_{n+1}(w) = w Φ_n(w) - conj(𝔞_n) Φ*_n(w)`,
/// `Φ*_{n+1}(w) = Φ*_n(w) - 𝔞_n w Φ_n(w)`.
fn szego_ratios(a: &[C64], w: C64) -> Result<(Vec<C64>, Vec<C64>)> {
    let mut rho = Vec::with_capacity(a.len() + 1);
    let mut raw = Vec::with_capacity(a.len() + 1);
    rho.push(C64::new(1.0, 0.0));
    raw.push(C64::new(1.0, 0.0));
    let (mut phi, mut star) = (C64::new(1.0, 0.0), C64::new(1.0, 0.0));
    for (n, an) in a.iter().enumerate() {
        (phi, star) = (w * phi - an.conj() * star, star - an * w * phi);
        // rescale so neither value under- or overflows
        let s = phi.norm().max(star.norm());
        if s > 0.0 {
            phi /= s;
            star /= s;
        }
        if star.norm() < 1e-14 {
            return Err(Error::ReciprocalZero { index: n + 1 });
        }
        raw.push(phi / star);
        // the same ratio propagated directly, then pinned to |ρ| = 1
        let prev = rho[n];
        let den = C64::new(1.0, 0.0) - an * w * prev;
        if den.norm() < 1e-14 {
            return Err(Error::ReciprocalZero { index: n + 1 });
        }
        let next: C64 = (w * prev - an.conj()) / den;
        rho.push(next / next.norm());
    }
    Ok((rho, raw))
}

/// `β_n = -ρ_n/ρ_{n-1}`, `α_{n+1} = (1 + ρ_n 𝔞_{n-1})(1 - conj(w ρ_n 𝔞_n)) w`.
pub fn kernel_coeffs(v: &VerblunskySeq, w: C64) -> Result<KernelCoeffs> {
    if (w.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidSpec("kernel point must lie on the unit circle"));
    }
    let a = v.coefficients();
    if a.len() < 2 {
        return Err(Error::InvalidSpec("need 𝔞_0..𝔞_N with N ≥ 1"));
    }
    let (rho, rho_raw) = szego_ratios(a, w)?;
    let depth = a.len() - 1;
    let beta = (1..=depth).map(|n| -rho[n] / rho[n - 1]).collect();
    let alpha = (1..=depth)
        .map(|n| {
            let one = C64::new(1.0, 0.0);
            (one + rho[n] * a[n - 1]) * (one - (w * rho[n] * a[n]).conj()) * w
        })
        .collect();
    let coeffs = RecurrenceCoeffs::new(v.t, v.q.conj(), v.q, beta, alpha)?;
    Ok(KernelCoeffs { w, rho, rho_raw, coeffs })
}

/// Kernel data at `w = 1`: the real lattice variables and their chain sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleState {
    pub t: f64,
    pub w: C64,
    /// `ρ_0..ρ_L`.
    pub rho: Vec<C64>,
    /// `g_1..g_L`, each in `(0, 1)`.
    pub g: Vec<f64>,
    /// `c_1..c_L`; `c_0 = 1` by convention.
    pub c: Vec<f64>,
    /// `d_1..d_L` with `d_1 = 0`.
    pub d: Vec<f64>,
    pub xi0: f64,
}

impl CircleState {
    /// `ξ_n = ξ_0 ∏_{j≤n} (1 - g_j)`.
    pub fn xi(&self, n: usize) -> f64 {
        self.g[..n].iter().fold(self.xi0, |acc, g| acc * (1.0 - g))
    }
}

pub fn cd_from_verblunsky(v: &VerblunskySeq) -> Result<CircleState> {
    let a = v.coefficients();
    let (rho, _) = szego_ratios(a, C64::new(1.0, 0.0))?;
    let l = a.len();
    let mut g = Vec::with_capacity(l);
    let mut c = Vec::with_capacity(l);
    for n in 1..=l {
        let u = rho[n - 1] * a[n - 1];
        let den = 1.0 - u.re;
        if den.abs() < 1e-14 {
            return Err(Error::DegenerateKernel { index: n });
        }
        g.push(0.5 * (C64::new(1.0, 0.0) - u).norm_sqr() / den);
        c.push(u.im / (u.re - 1.0));
    }
    let mut d = vec![0.0; l];
    for n in 1..l {
        d[n] = (1.0 - g[n - 1]) * g[n];
    }
    Ok(CircleState { t: v.t, w: C64::new(1.0, 0.0), rho, g, c, d, xi0: v.xi0 })
}

/// `β_n = -(1 - i c_n)/(1 + i c_n)`, `α_n = 4 d_n / ((1 + i c_n)(1 + i c_{n-1}))`
/// for `c_1..c_N`, `d_1..d_N`; returns `β_1..β_N` and `α_1..α_N`.
pub fn map_beta_alpha_cd(c: &[f64], d: &[f64]) -> (Vec<C64>, Vec<C64>) {
    assert_eq!(c.len(), d.len());
    let i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    let c_at = |n: usize| if n == 0 { 1.0 } else { c[n - 1] };
    let beta = (1..=c.len()).map(|n| -(one - i * c_at(n)) / (one + i * c_at(n))).collect();
    let alpha = (1..=c.len()).map(|n| d[n - 1] * 4.0 / ((one + i * c_at(n)) * (one + i * c_at(n - 1)))).collect();
    (beta, alpha)
}

/// Inverse of [`map_beta_alpha_cd`]: `c_n = -i(1 + β_n)/(1 - β_n)`,
/// `d_n = α_n (1 + i c_n)(1 + i c_{n-1}) / 4`, real parts kept.
pub fn map_cd_from_beta_alpha(beta: &[C64], alpha: &[C64]) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(beta.len(), alpha.len());
    let i = C64::new(0.0, 1.0);
    let one = C64::new(1.0, 0.0);
    let c: Vec<f64> = beta.iter().map(|b| (-i * (one + b) / (one - b)).re).collect();
    let c_at = |n: usize| if n == 0 { 1.0 } else { c[n - 1] };
    let d = (1..=beta.len()).map(|n| (alpha[n - 1] * (one + i * c_at(n)) * (one + i * c_at(n - 1)) / 4.0).re).collect();
    (c, d)
}

/// Right-hand side of the real `c`/`d` lattice with `c_0 = 1`, `d_1 = 0`
/// and the truncation `d_{N+1} = 0`. Returns `(ċ_1..ċ_N, ḋ_1..ḋ_N)`.
pub fn rhs_cd(c: &[f64], d: &[f64], q: C64) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(c.len(), d.len());
    let n_max = c.len();
    let (re, im) = (4.0 * q.re, 4.0 * q.im);
    // c_0 = 1; beyond N the value of c is irrelevant since d_{N+1} = 0
    let cc = |n: usize| {
        if n == 0 {
            1.0
        } else if n <= n_max {
            c[n - 1]
        } else {
            0.0
        }
    };
    let dd = |n: usize| if n == 0 || n > n_max { 0.0 } else { d[n - 1] };
    let sq = |x: f64| 1.0 + x * x;
    let dc = (1..=n_max)
        .map(|n| {
            let (cn, cl, cu) = (cc(n), cc(n - 1), cc(n + 1));
            let (dn, du) = (dd(n), dd(n + 1));
            // n = 1 reduces to the general form because d_1 = 0
            re * (dn * (cn + cl) / sq(cl) - du * (cn + cu) / sq(cu))
                + im * (dn * (1.0 - cn * cl) / sq(cl) - du * (1.0 - cn * cu) / sq(cu))
        })
        .collect();
    let dd_out = (1..=n_max)
        .map(|n| {
            if n == 1 {
                return 0.0;
            }
            let (cn, cl, cll, cu) = (cc(n), cc(n - 1), cc(n - 2), cc(n + 1));
            let (dn, dl, du) = (dd(n), dd(n - 1), dd(n + 1));
            let mixed = dn * (1.0 - dn) / (sq(cn) * sq(cl));
            re * (dn * dl / sq(cll) - dn * du / sq(cu) + mixed * (cl * cl - cn * cn))
                - im * (dn * dl * cll / sq(cll) - dn * du * cu / sq(cu) + mixed * (cn - cl) * (1.0 - cn * cl))
        })
        .collect();
    (dc, dd_out)
}

/// Forward solve `g_{n+1} = d_{n+1}/(1 - g_n)` from `g_1`.
pub fn chain_parameters(g1: f64, d: &[f64]) -> Vec<f64> {
    let mut g = Vec::with_capacity(d.len());
    g.push(g1);
    for n in 1..d.len() {
        let prev = g[n - 1];
        g.push(d[n] / (1.0 - prev));
    }
    g
}

/// `𝔞̇_n = (1 - |𝔞_n|²)(conj(q) 𝔞_{n-1} - q 𝔞_{n+1})` for `0 ≤ n ≤ L-2`,
/// with `𝔞_{-1} = -1`; the last coefficient only enters as input.
pub fn rhs_schur(v: &VerblunskySeq, q: C64) -> Vec<C64> {
    let a = v.coefficients();
    (0..a.len().saturating_sub(1)).map(|n| schur_term(a, n, q, a[n + 1])).collect()
}

fn schur_term(a: &[C64], n: usize, q: C64, above: C64) -> C64 {
    let below = if n == 0 { C64::new(-1.0, 0.0) } else { a[n - 1] };
    (q.conj() * below - q * above) * (1.0 - a[n].norm_sqr())
}

/// Truncated Schur flow on `𝔞_0..𝔞_{L-1}` with `𝔞_L ≡ 0`.
struct SchurOde {
    q: C64,
    n: usize,
}

impl OdeSystem for SchurOde {
    fn dim(&self) -> usize {
        self.n
    }

    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) -> Result<()> {
        let l = y.len();
        for n in 0..l {
            let above = if n + 1 < l { y[n + 1] } else { C64::new(0.0, 0.0) };
            dy[n] = schur_term(y, n, self.q, above);
        }
        Ok(())
    }

    fn admissible(&self, _t: f64, y: &[C64]) -> Result<()> {
        match y.iter().enumerate().find(|(_, z)| !(z.norm() < 1.0)) {
            Some((index, z)) => Err(Error::VerblunskyOutOfDisk { index, modulus: z.norm() }),
            None => Ok(()),
        }
    }
}

/// Integrates the truncated Schur flow, checking `|𝔞_n| < 1` after every step.
/// `xi0` is not evolved and keeps its initial value.
pub fn integrate_schur(
    v: &VerblunskySeq,
    outputs: &[f64],
    ctrl: &StepControl,
) -> Result<(Vec<VerblunskySeq>, StepStats)> {
    let ode = SchurOde { q: v.q, n: v.len() };
    let (ys, stats) = ode::integrate(&ode, v.t, v.coefficients(), outputs, ctrl)?;
    let seqs =
        outputs.iter().zip(ys).map(|(t, a)| VerblunskySeq::new(*t, v.q, v.xi0, a)).collect::<Result<Vec<_>>>()?;
    Ok((seqs, stats))
}

struct CdOde {
    q: C64,
    n: usize,
}

impl OdeSystem for CdOde {
    fn dim(&self) -> usize {
        2 * self.n
    }

    fn rhs(&self, _t: f64, y: &[C64], dy: &mut [C64]) -> Result<()> {
        let c: Vec<f64> = y[..self.n].iter().map(|z| z.re).collect();
        let d: Vec<f64> = y[self.n..].iter().map(|z| z.re).collect();
        let (dc, dd) = rhs_cd(&c, &d, self.q);
        for (slot, v) in dy.iter_mut().zip(dc.into_iter().chain(dd)) {
            *slot = C64::new(v, 0.0);
        }
        Ok(())
    }
}

/// `(c, d)` at one output time.
pub type CdState = (Vec<f64>, Vec<f64>);

/// Integrates the `c`/`d` lattice truncated by `d_{N+1} = 0`.
pub fn integrate_cd(
    c: &[f64],
    d: &[f64],
    q: C64,
    t0: f64,
    outputs: &[f64],
    ctrl: &StepControl,
) -> Result<(Vec<CdState>, StepStats)> {
    assert_eq!(c.len(), d.len());
    let n = c.len();
    let y0: Vec<C64> = c.iter().chain(d).map(|x| C64::new(*x, 0.0)).collect();
    let (ys, stats) = ode::integrate(&CdOde { q, n }, t0, &y0, outputs, ctrl)?;
    let out = ys
        .into_iter()
        .map(|y| {
            let c = y[..n].iter().map(|z| z.re).collect();
            let d = y[n..].iter().map(|z| z.re).collect();
            (c, d)
        })
        .collect();
    Ok((out, stats))
}
