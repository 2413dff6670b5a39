//! Command-line laboratory for the extended relativistic Toda lattice.

// negated comparisons are used so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod error;
pub mod exact;
pub mod formats;
pub mod random;
