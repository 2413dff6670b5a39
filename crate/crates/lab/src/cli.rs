//! Command-line arguments. Every argument struct serializes to the
//! canonical form hashed into the output metadata.

use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ertl_core::C64;
use serde::{Serialize, Serializer};

use crate::formats::parse_complex;

/// A complex number given as `re,im`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cx(pub C64);

impl FromStr for Cx {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_complex(s).map(Cx)
    }
}

impl Serialize for Cx {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.0.re, self.0.im].serialize(s)
    }
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "ertl", version, about = "Extended relativistic Toda lattice laboratory")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Moment table `k,re_nu,im_nu` of a specification at time t.
    Moments(MomentsArgs),
    /// Recurrence coefficients from moments.
    FromMeasure(FromMeasureArgs),
    /// Integrates a lattice and writes its trajectory.
    Simulate(SimulateArgs),
    /// Checks the Lax equation on given or random states.
    VerifyLax(VerifyLaxArgs),
    /// Eigenvalues of the Hessenberg matrix along a trajectory.
    Spectrum(SpectrumArgs),
    /// Unit-circle reductions.
    #[command(subcommand)]
    Circle(CircleCommand),
    /// Closed-form coefficients of the two half-line examples.
    #[command(subcommand)]
    Oracle(OracleCommand),
}

#[derive(Debug, Args, Serialize)]
pub struct MomentsArgs {
    /// Specification as inline JSON or a path.
    #[arg(long)]
    pub spec: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t: f64,
    /// Largest order K; the table covers -K..=K.
    #[arg(long = "K", default_value_t = 8)]
    pub k_max: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct FromMeasureArgs {
    #[arg(long)]
    pub spec: String,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long = "N")]
    pub depth: usize,
    /// Use exact rational arithmetic (discrete specs at t = 0 or p = q = 0).
    #[arg(long)]
    pub exact: bool,
    /// Also write the L-orthogonal polynomials as JSON to this path.
    #[arg(long)]
    #[serde(skip)]
    pub dump_poly: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemArg {
    Ertl,
    Rtl1,
    Rtl2,
    Langmuir,
    Cd,
    Schur,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub system: SystemArg,
    /// Number of reported sites; defaults to the length of the initial data.
    #[arg(long = "N")]
    pub sites: Option<usize>,
    #[arg(long, default_value = "1,0", allow_hyphen_values = true)]
    pub p: Cx,
    #[arg(long, default_value = "1,0", allow_hyphen_values = true)]
    pub q: Cx,
    #[arg(long)]
    pub t_end: f64,
    /// Number of equally spaced output times after the start.
    #[arg(long, default_value_t = 10)]
    pub samples: usize,
    /// Initial data as inline JSON or a path.
    #[arg(long, conflicts_with = "measure")]
    pub init: Option<String>,
    /// Specification whose coefficients at t = 0 start the run.
    #[arg(long)]
    pub measure: Option<String>,
    /// Integrate extra sites and report the first N (closed-form examples only).
    #[arg(long)]
    pub buffered: bool,
    #[arg(long, default_value_t = 1e-10)]
    pub rel_tol: f64,
    #[arg(long, default_value_t = 1e-12)]
    pub abs_tol: f64,
    /// Abort if a real positive state loses positivity.
    #[arg(long)]
    pub check_positivity: bool,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyLaxArgs {
    #[arg(long = "N", default_value_t = 6)]
    pub sites: usize,
    #[arg(long, default_value = "1,0", allow_hyphen_values = true)]
    pub p: Cx,
    #[arg(long, default_value = "1,0", allow_hyphen_values = true)]
    pub q: Cx,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of random states; the sweep runs on up to ERTL_THREADS threads.
    #[arg(long, default_value_t = 1)]
    pub cases: usize,
    /// Check this state instead of random ones.
    #[arg(long)]
    pub init: Option<String>,
    /// Evolve under the lattice to this time before checking.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SpectrumArgs {
    /// Trajectory CSV written by `simulate`.
    #[arg(long)]
    pub traj: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CircleArgs {
    /// Circle specification as inline JSON or a path.
    #[arg(long)]
    pub measure: String,
    /// Overrides the modification parameter of the specification.
    #[arg(long, allow_hyphen_values = true)]
    pub q: Option<Cx>,
    #[arg(long = "N")]
    pub depth: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t: f64,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum CircleCommand {
    /// `n,re_a,im_a` for the Verblunsky coefficients 𝔞_0..𝔞_{N-1}.
    Verblunsky(CircleArgs),
    /// Kernel-polynomial recurrence coefficients at w.
    Kernel {
        #[command(flatten)]
        common: CircleArgs,
        #[arg(long, default_value = "1,0", allow_hyphen_values = true)]
        w: Cx,
    },
    /// `n,c,d` of the real lattice at w = 1.
    Cd(CircleArgs),
    /// Finite differences of 𝔞_n against the Schur flow.
    SchurCheck {
        #[command(flatten)]
        common: CircleArgs,
        #[arg(long, default_value_t = 1e-4)]
        h: f64,
        #[arg(long, default_value_t = 1e-5)]
        tol: f64,
    },
}

#[derive(Debug, Args, Serialize)]
pub struct OracleArgs {
    #[arg(long)]
    pub delta: f64,
    #[arg(long)]
    pub q: f64,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    #[arg(long = "N")]
    pub depth: usize,
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum OracleCommand {
    Example1(OracleArgs),
    Example2(OracleArgs),
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn negative_complex_arguments_parse() {
        let cli = Cli::try_parse_from(["ertl", "verify-lax", "--N", "3", "--p", "-1,0.5", "--seed", "7"]).unwrap();
        let Command::VerifyLax(args) = cli.command else { panic!() };
        assert_eq!(args.p, Cx(C64::new(-1.0, 0.5)));
        assert_eq!(args.sites, 3);
    }
}
