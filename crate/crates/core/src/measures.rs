//! Moment functionals `ℒ`, their exponential time modifications and the
//! resulting moment tables `ν_k(t) = ℒ[e^{-t(px + q/x)} x^k]`.

use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods when std is linked
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{CompensatedSum, Matrix};
use crate::quadrature::{integrate_circle, integrate_line, QuadratureOptions};
use crate::C64;

/// Named weights on `[0, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RealWeight {
    /// `x^{-1/2} e^{-δ(x + q/x)} dx`.
    Example1 { delta: f64, q: f64 },
    /// `(x + √q) x^{-3/2} e^{-δ(x + q/x)} dx`.
    Example2 { delta: f64, q: f64 },
}

impl RealWeight {
    fn params(&self) -> (f64, f64) {
        match *self {
            RealWeight::Example1 { delta, q } | RealWeight::Example2 { delta, q } => (delta, q),
        }
    }

    /// Natural scale `√q`: the weight is symmetric about it in `log x`.
    pub fn scale(&self) -> f64 {
        self.params().1.sqrt()
    }

    fn log_density(&self, x: f64) -> f64 {
        let (delta, q) = self.params();
        let tail = -delta * (x + q / x);
        match self {
            RealWeight::Example1 { .. } => -0.5 * x.ln() + tail,
            RealWeight::Example2 { .. } => (x + q.sqrt()).ln() - 1.5 * x.ln() + tail,
        }
    }
}

/// Support of a real-line weight, `0 ≤ lo < hi ≤ ∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support {
    pub lo: f64,
    pub hi: f64,
}

impl Support {
    pub const HALF_LINE: Support = Support { lo: 0.0, hi: f64::INFINITY };
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CircleBase {
    /// Normalized arc length `dθ/2π`.
    Lebesgue,
    /// `(1 - mass) dθ/2π + mass δ_{e^{i angle}}`.
    LebesgueWithMass { mass: f64, angle: f64 },
}

/// Which functional is built from the circle measure `μ^{(t)}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CircleFunctional {
    /// `ℒ[f] = ∫ f(z) z dμ^{(t)}`: the L-orthogonal polynomials are the monic OPUC.
    Opuc,
    /// `ℒ[f] = ∫ f(z) (z - w) dμ^{(t)}` with `|w| = 1`: monic kernel polynomials.
    Kernel { w: C64 },
}

/// Declarative description of a moment functional and its modification.
#[derive(Debug, Clone, PartialEq)]
pub enum MomentSpec {
    RealLine {
        weight: RealWeight,
        support: Support,
        p: C64,
        q: C64,
    },
    /// Circle kinds always use `p = conj(q)`.
    Circle {
        base: CircleBase,
        functional: CircleFunctional,
        q: C64,
    },
    Discrete {
        nodes: Vec<f64>,
        weights: Vec<f64>,
        p: C64,
        q: C64,
    },
    /// A fixed table of moments `ν_{k_min}, ν_{k_min+1}, …`; not modified in time.
    Explicit {
        k_min: i32,
        values: Vec<C64>,
    },
}

impl MomentSpec {
    pub fn real_line(weight: RealWeight, support: Support, p: C64, q: C64) -> Result<Self> {
        let spec = MomentSpec::RealLine { weight, support, p, q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn example1(delta: f64, q: f64) -> Result<Self> {
        Self::real_line(RealWeight::Example1 { delta, q }, Support::HALF_LINE, C64::new(1.0, 0.0), C64::new(q, 0.0))
    }

    pub fn example2(delta: f64, q: f64) -> Result<Self> {
        Self::real_line(RealWeight::Example2 { delta, q }, Support::HALF_LINE, C64::new(1.0, 0.0), C64::new(q, 0.0))
    }

    /// Circle functional; `p` must equal `conj(q)`.
    pub fn circle(base: CircleBase, functional: CircleFunctional, p: C64, q: C64) -> Result<Self> {
        if (p - q.conj()).norm() > 1e-14 * (1.0 + q.norm()) {
            return Err(Error::InvalidSpec("unit-circle functionals need p = conj(q)"));
        }
        let spec = MomentSpec::Circle { base, functional, q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn discrete(nodes: Vec<f64>, weights: Vec<f64>, p: C64, q: C64) -> Result<Self> {
        let spec = MomentSpec::Discrete { nodes, weights, p, q };
        spec.validate()?;
        Ok(spec)
    }

    pub fn explicit(k_min: i32, values: Vec<C64>) -> Result<Self> {
        let spec = MomentSpec::Explicit { k_min, values };
        spec.validate()?;
        Ok(spec)
    }

    /// Modification parameters `(p, q)`.
    pub fn modification(&self) -> (C64, C64) {
        let zero = C64::new(0.0, 0.0);
        match self {
            MomentSpec::RealLine { p, q, .. } | MomentSpec::Discrete { p, q, .. } => (*p, *q),
            MomentSpec::Circle { q, .. } => (q.conj(), *q),
            MomentSpec::Explicit { .. } => (zero, zero),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MomentSpec::RealLine { weight, support, p, q } => {
                let (delta, wq) = weight.params();
                if !(delta > 0.0 && wq > 0.0) || !delta.is_finite() || !wq.is_finite() {
                    return Err(Error::InvalidSpec("weight needs δ > 0 and q > 0"));
                }
                if *support != Support::HALF_LINE {
                    return Err(Error::InvalidSupport);
                }
                if !(p.re > 0.0 && q.re > 0.0) {
                    return Err(Error::InvalidSpec("unbounded support needs Re(p) > 0 and Re(q) > 0"));
                }
                Ok(())
            }
            MomentSpec::Circle { base, functional, q } => {
                if !(q.re.is_finite() && q.im.is_finite()) {
                    return Err(Error::InvalidSpec("q must be finite"));
                }
                if let CircleBase::LebesgueWithMass { mass, angle } = base {
                    if !(*mass >= 0.0 && *mass < 1.0) || !angle.is_finite() {
                        return Err(Error::InvalidSpec("point mass must lie in [0, 1)"));
                    }
                }
                if let CircleFunctional::Kernel { w } = functional {
                    if (w.norm() - 1.0).abs() > 1e-12 {
                        return Err(Error::InvalidSpec("kernel point w must have |w| = 1"));
                    }
                }
                Ok(())
            }
            MomentSpec::Discrete { nodes, weights, .. } => {
                if nodes.is_empty() || nodes.len() != weights.len() {
                    return Err(Error::InvalidSpec("nodes and weights must be non-empty and aligned"));
                }
                if nodes.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                    return Err(Error::InvalidSpec("discrete nodes must be strictly positive"));
                }
                if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
                    return Err(Error::InvalidSpec("discrete weights must be strictly positive"));
                }
                let mut sorted = nodes.clone();
                sorted.sort_by(f64::total_cmp);
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::InvalidSpec("discrete nodes must be distinct"));
                }
                Ok(())
            }
            MomentSpec::Explicit { values, .. } => {
                if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
                    return Err(Error::InvalidSpec("explicit moments must be finite"));
                }
                Ok(())
            }
        }
    }
}

/// How the entries of a [`MomentTable`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Quadrature,
    ClosedForm,
    ExactRational,
    Series,
    FiniteSum,
    Explicit,
}

/// Immutable snapshot of `ν_k(t)` for `k_min ≤ k ≤ k_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    t: f64,
    p: C64,
    q: C64,
    k_min: i32,
    values: Vec<C64>,
    provenance: Provenance,
}

impl MomentTable {
    pub fn new(t: f64, (p, q): (C64, C64), k_min: i32, values: Vec<C64>, provenance: Provenance) -> Result<Self> {
        if values.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidSpec("moment table entries must be finite"));
        }
        Ok(Self { t, p, q, k_min, values, provenance })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn modification(&self) -> (C64, C64) {
        (self.p, self.q)
    }

    pub fn k_min(&self) -> i32 {
        self.k_min
    }

    pub fn k_max(&self) -> i32 {
        self.k_min + self.values.len() as i32 - 1
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn covers(&self, lo: i32, hi: i32) -> bool {
        lo >= self.k_min && hi <= self.k_max()
    }

    pub fn get(&self, k: i32) -> Result<C64> {
        if k < self.k_min || k > self.k_max() {
            return Err(Error::IndexOutOfTable { index: k });
        }
        Ok(self.values[(k - self.k_min) as usize])
    }

    /// `(k, ν_k)` pairs in increasing `k`.
    pub fn iter(&self) -> impl Iterator<Item = (i32, C64)> + '_ {
        self.values.iter().enumerate().map(move |(i, z)| (self.k_min + i as i32, *z))
    }
}

/// Computes `ν_k(t)` for `|k| ≤ k_max`.
pub fn compute_moments(spec: &MomentSpec, t: f64, k_max: usize) -> Result<MomentTable> {
    compute_moments_with(spec, t, k_max, &QuadratureOptions::default())
}

pub fn compute_moments_with(spec: &MomentSpec, t: f64, k_max: usize, opts: &QuadratureOptions) -> Result<MomentTable> {
    spec.validate()?;
    if k_max < 1 {
        return Err(Error::InvalidSpec("moment order K must be at least 1"));
    }
    if !t.is_finite() {
        return Err(Error::InvalidSpec("time must be finite"));
    }
    let k = k_max as i32;
    let modification = spec.modification();
    match spec {
        MomentSpec::RealLine { weight, p, q, .. } => {
            if t < 0.0 {
                return Err(Error::InvalidSpec("real-line functionals need t ≥ 0"));
            }
            let values = real_line_moments(weight, *p, *q, t, -k, k, opts)?;
            MomentTable::new(t, modification, -k, values, Provenance::Quadrature)
        }
        MomentSpec::Circle { base, functional, q } => {
            let m = toeplitz_moments_with(*base, *q, t, -k, k + 1, opts)?;
            let at = |j: i32| m[(j + k) as usize];
            let values = (-k..=k)
                .map(|j| match functional {
                    CircleFunctional::Opuc => at(j + 1),
                    CircleFunctional::Kernel { w } => at(j + 1) - w * at(j),
                })
                .collect();
            MomentTable::new(t, modification, -k, values, Provenance::Quadrature)
        }
        MomentSpec::Discrete { nodes, weights, p, q } => {
            let values = (-k..=k)
                .map(|j| {
                    let mut acc = CompensatedSum::new();
                    for (&x, &w) in nodes.iter().zip(weights) {
                        let damp = (-(p * x + q / x) * t).exp();
                        acc.add(damp * (w * x.powi(j)));
                    }
                    acc.value()
                })
                .collect();
            MomentTable::new(t, modification, -k, values, Provenance::FiniteSum)
        }
        MomentSpec::Explicit { k_min, values } => {
            let k_hi = *k_min + values.len() as i32 - 1;
            if *k_min > -k {
                return Err(Error::IndexOutOfTable { index: -k });
            }
            if k_hi < k {
                return Err(Error::IndexOutOfTable { index: k });
            }
            let lo = (-k - k_min) as usize;
            let slice = values[lo..lo + 2 * k_max + 1].to_vec();
            MomentTable::new(t, modification, -k, slice, Provenance::Explicit)
        }
    }
}

/// `ν_k` for `lo ≤ k ≤ hi` of a named weight by the substitution `x = √q e^u`.
fn real_line_moments(
    weight: &RealWeight,
    p: C64,
    q: C64,
    t: f64,
    lo: i32,
    hi: i32,
    opts: &QuadratureOptions,
) -> Result<Vec<C64>> {
    let s = weight.scale();
    let dim = (hi - lo + 1) as usize;
    let integrand = |u: f64, out: &mut [C64]| {
        let x = s * u.exp();
        let ln_x = x.ln();
        let modification = (p * x + q / x) * t;
        // dx = x du
        let log_base = weight.log_density(x) + ln_x - modification.re;
        let phase = C64::from_polar(1.0, -modification.im);
        for (i, slot) in out.iter_mut().enumerate() {
            let k = (lo + i as i32) as f64;
            *slot = phase * (log_base + k * ln_x).exp();
        }
    };
    integrate_line(integrand, dim, opts).map_err(|f| Error::NonConvergentIntegral { k: lo + f.component as i32 })
}

/// Trigonometric moments `m_j = ∫ z^j dμ^{(t)}(z)`, `lo ≤ j ≤ hi`, of the
/// modified circle measure `dμ^{(t)} = e^{-t(conj(q) z + q/z)} dμ`.
pub fn toeplitz_moments(base: CircleBase, q: C64, t: f64, lo: i32, hi: i32) -> Result<Vec<C64>> {
    toeplitz_moments_with(base, q, t, lo, hi, &QuadratureOptions::default())
}

fn toeplitz_moments_with(
    base: CircleBase,
    q: C64,
    t: f64,
    lo: i32,
    hi: i32,
    opts: &QuadratureOptions,
) -> Result<Vec<C64>> {
    let dim = (hi - lo + 1) as usize;
    let damp = |z: C64| (-(q.conj() * z + q / z) * t).exp().re;
    let integrand = |theta: f64, out: &mut [C64]| {
        let z = C64::from_polar(1.0, theta);
        let w = damp(z);
        let mut zk = z.powi(lo);
        for slot in out.iter_mut() {
            *slot = zk * w;
            zk *= z;
        }
    };
    let mut m = integrate_circle(integrand, dim, opts)
        .map_err(|f| Error::NonConvergentIntegral { k: lo + f.component as i32 })?;
    if let CircleBase::LebesgueWithMass { mass, angle } = base {
        let z = C64::from_polar(1.0, angle);
        let w = damp(z);
        let mut zk = z.powi(lo);
        for slot in m.iter_mut() {
            *slot = *slot * (1.0 - mass) + zk * (mass * w);
            zk *= z;
        }
    }
    Ok(m)
}

/// `H_n^{(m)} = det[ν_{m+i+j}]_{i,j<n}`, with `H_0^{(m)} = 1`.
pub fn hankel_determinant(table: &MomentTable, m: i32, n: usize) -> Result<C64> {
    Ok(hankel_matrix(table, m, n)?.determinant())
}

fn hankel_matrix(table: &MomentTable, m: i32, n: usize) -> Result<Matrix> {
    if n == 0 {
        return Ok(Matrix::zeros(0, 0));
    }
    let hi = m + 2 * n as i32 - 2;
    if !table.covers(m, hi) {
        let index = if m < table.k_min() { m } else { hi };
        return Err(Error::IndexOutOfTable { index });
    }
    let mut out = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = table.get(m + (i + j) as i32)?;
        }
    }
    Ok(out)
}

/// Relative pivot below which a Hankel determinant counts as zero.
pub const HANKEL_PIVOT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionStatus {
    pub value: C64,
    /// `|H| / ∏ ‖row‖₂`, in `[0, 1]` by Hadamard's inequality.
    pub hadamard_ratio: f64,
    /// Smallest LU pivot relative to its row's ∞-norm.
    pub min_pivot: f64,
    pub nonzero: bool,
    /// Real and strictly positive (within round-off on the imaginary part).
    pub positive: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelStatus {
    pub n: usize,
    /// `H_n^{(-n)}`.
    pub a: ConditionStatus,
    /// `H_{n+1}^{(-n)}`.
    pub b: ConditionStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub levels: Vec<LevelStatus>,
}

impl RegularityReport {
    pub fn all_nonzero(&self) -> bool {
        self.levels.iter().all(|l| l.a.nonzero && l.b.nonzero)
    }

    pub fn all_positive(&self) -> bool {
        self.levels.iter().all(|l| l.a.positive && l.b.positive)
    }

    /// First `(n, condition)` that fails, scanning (a) before (b) at each level.
    pub fn first_failure(&self) -> Option<(usize, crate::error::Condition)> {
        use crate::error::Condition;
        self.levels.iter().find_map(|l| {
            if !l.a.nonzero {
                Some((l.n, Condition::A))
            } else if !l.b.nonzero {
                Some((l.n, Condition::B))
            } else {
                None
            }
        })
    }

    pub fn condition_b_holds(&self) -> bool {
        self.levels.iter().all(|l| l.b.nonzero)
    }
}

fn condition_status(mat: &Matrix) -> ConditionStatus {
    let (value, min_pivot) = mat.pivoted_determinant();
    let row_product: f64 =
        (0..mat.rows()).map(|i| mat.row(i).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).product();
    let hadamard_ratio = if row_product > 0.0 { value.norm() / row_product } else { 0.0 };
    let nonzero = min_pivot > HANKEL_PIVOT_TOL && value != C64::new(0.0, 0.0);
    let positive = nonzero && value.re > 0.0 && value.im.abs() <= 1e-10 * value.re;
    ConditionStatus { value, hadamard_ratio, min_pivot, nonzero, positive }
}

/// Checks `H_n^{(-n)} ≠ 0` and `H_{n+1}^{(-n)} ≠ 0` for `1 ≤ n ≤ depth`.
pub fn check_regularity(table: &MomentTable, depth: usize) -> Result<RegularityReport> {
    let mut levels = Vec::with_capacity(depth);
    for n in 1..=depth {
        let m = -(n as i32);
        let a = condition_status(&hankel_matrix(table, m, n)?);
        let b = condition_status(&hankel_matrix(table, m, n + 1)?);
        levels.push(LevelStatus { n, a, b });
    }
    Ok(RegularityReport { levels })
}

/// Difference `max_k |ν_{-k} - conj(ν_{k-2})|` relative to `max |ν|`, the
/// conjugation symmetry of the OPUC functional for a real base measure.
pub fn opuc_conjugation_defect(table: &MomentTable) -> f64 {
    let scale = table.iter().map(|(_, z)| z.norm()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
    let mut defect = 0.0f64;
    for (k, nu) in table.iter() {
        if k <= 0 {
            if let Ok(mirror) = table.get(-k - 2) {
                defect = defect.max((nu - mirror.conj()).norm());
            }
        }
    }
    defect / scale
}
