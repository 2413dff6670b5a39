//! Numerical laboratory for the extended relativistic Toda lattice (ERTL).
//!
//! The crate evolves the recurrence coefficients `β_n(t)`, `α_n(t)` of
//! L-orthogonal polynomials in two independent ways and lets the two be
//! compared:
//!
//! * [`measures`] builds time-modified moment tables
//!   `ν_k(t) = ℒ[e^{-t(px + q/x)} x^k]` and [`lorth`] turns them into
//!   recurrence coefficients with a σ-bootstrap;
//! * [`lattice`] integrates the lattice equations directly in time.
//!
//! [`lax`] assembles the Hessenberg/tridiagonal Lax pair and checks
//! `Ḣ = [H, F]` and isospectrality, [`circle`] covers the unit-circle
//! reductions (kernel polynomials, the real `c_n`/`d_n` lattice and the Schur
//! flow), and [`oracles`] carries the closed-form references.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
// negated comparisons are used so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod circle;
pub mod error;
pub mod lattice;
pub mod lax;
pub mod linalg;
pub mod lorth;
pub mod measures;
pub mod ode;
pub mod oracles;
pub mod quadrature;
pub mod roots;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Moduli of `β_n` below this are treated as a blow-up of the lattice equations.
pub const EPS_SING: f64 = 1e-12;
