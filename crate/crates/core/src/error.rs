use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

/// Which of the two Hankel-type regularity conditions failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Condition {
    /// `H_n^{(-n)} ≠ 0`: `Q_n` exists (`σ_{n-1,-1} ≠ 0`).
    A,
    /// `H_{n+1}^{(-n)} ≠ 0`: `σ_{n,n} ≠ 0`, equivalently `Q_{n+1}(0) ≠ 0`.
    B,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid specification: {0}")]
    InvalidSpec(&'static str),
    #[error("weight is not defined on the requested support")]
    InvalidSupport,
    #[error("quadrature for moment {k} did not converge")]
    NonConvergentIntegral { k: i32 },
    #[error("moment index {index} is not covered by the table")]
    IndexOutOfTable { index: i32 },
    #[error("regularity breakdown at level {level} (condition {condition:?})")]
    RegularityBreakdown { level: usize, condition: Condition },
    #[error("depth {depth} exceeds the cap {cap}")]
    DepthExceeded { depth: usize, cap: usize },
    #[error("{what}: independent routes disagree by {diff:e}")]
    MismatchBeyondTolerance { what: &'static str, diff: f64 },
    #[error("coefficients are not real (imaginary part {imag:e})")]
    NotReal { imag: f64 },
    #[error("singular denominator: |β_{site}| below threshold")]
    SingularDenominator { site: usize },
    #[error("lattice blow-up at site {site} between t={t_lo} and t={t_hi}")]
    BlowUp { site: usize, t_lo: f64, t_hi: f64 },
    #[error("step size underflow at t={t}")]
    StepUnderflow { t: f64 },
    #[error("step budget exhausted at t={t}")]
    StepBudget { t: f64 },
    #[error("positivity lost at site {site}, t={t}")]
    PositivityLost { site: usize, t: f64 },
    #[error("buffer did not converge (last change {change:e} with {sites} sites)")]
    BufferNotConverged { change: f64, sites: usize },
    #[error("state is not symmetric: max |β_n - √q| = {deviation:e}")]
    NotSymmetricState { deviation: f64 },
    #[error("moments are not positive definite at level {level}")]
    NotPositiveDefinite { level: usize },
    #[error("moment table is not Toeplitz consistent (defect {defect:e})")]
    NotToeplitz { defect: f64 },
    #[error("Verblunsky coefficient {index} vanishes")]
    ZeroVerblunsky { index: usize },
    #[error("Verblunsky coefficient {index} has modulus {modulus} >= 1")]
    VerblunskyOutOfDisk { index: usize, modulus: f64 },
    #[error("reciprocal polynomial vanishes at degree {index}")]
    ReciprocalZero { index: usize },
    #[error("degenerate kernel at level {index}")]
    DegenerateKernel { index: usize },
    #[error("root finder did not converge in {iterations} iterations")]
    NonConvergence { iterations: usize },
}
