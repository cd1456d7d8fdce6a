//! Command-line front end for spahm.
//!
//! `simulate` writes a synthetic instance, `fuse` matches local atom sets
//! into global atoms, `sweep` runs the simulated comparison grid and
//! `evaluate` scores a fusion result against ground truth.

use std::fmt;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spahm_core::fusion::{CostPath, HyperUpdate, NewAtomPenalty};
use spahm_core::simbench::{SimSpec, SweepVar};

pub mod evaluate;
pub mod fuse;
pub mod schema;
pub mod simulate;
pub mod sweep;

/// Exit status for a run that finished.
pub const EXIT_OK: u8 = 0;
/// Exit status when a certified run saw the objective decrease.
pub const EXIT_INVARIANT: u8 = 1;
/// Exit status for unreadable or invalid input.
pub const EXIT_INPUT: u8 = 2;

/// Invalid or unreadable user input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InputError(pub String);

impl InputError {
    pub fn new(msg: impl Into<String>) -> Self {
        Self(msg.into())
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

/// Exit status for an error returned by a command.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<InputError>() {
            return EXIT_INPUT;
        }
        if let Some(e) = cause.downcast_ref::<spahm_core::Error>() {
            return match e {
                spahm_core::Error::Monotonicity { .. } | spahm_core::Error::State(_) => EXIT_INVARIANT,
                spahm_core::Error::Io(_) => EXIT_INVARIANT,
                _ => EXIT_INPUT,
            };
        }
    }
    EXIT_INVARIANT
}

#[derive(Debug, Parser)]
#[command(name = "spahm", version, about = "Fuse independently trained models by matching their parameter sets")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic instance: local atoms, raw data and ground truth.
    Simulate(simulate::SimulateArgs),
    /// Fuse the local atom sets of a parameters file into global atoms.
    Fuse(fuse::FuseArgs),
    /// Run the simulated comparison over a grid of noise levels or group counts.
    Sweep(sweep::SweepArgs),
    /// Score a fusion result against ground truth.
    Evaluate(evaluate::EvaluateArgs),
}

pub fn run(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Simulate(a) => simulate::run(&a),
        Command::Fuse(a) => fuse::run(&a),
        Command::Sweep(a) => sweep::run(&a),
        Command::Evaluate(a) => evaluate::run(&a),
    }
}

/// Generator settings shared by `simulate` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct SpecArgs {
    /// Number of global atoms.
    #[arg(long, default_value_t = 50)]
    pub l_true: usize,
    /// Atom dimension.
    #[arg(long, default_value_t = 50)]
    pub dim: usize,
    /// Number of groups (local models).
    #[arg(long, default_value_t = 20)]
    pub groups: usize,
    /// Base-measure mean, applied to every coordinate.
    #[arg(long, default_value_t = 10.0)]
    pub mu0: f64,
    /// Base-measure variance of the global atoms.
    #[arg(long, default_value_t = 100.0)]
    pub sigma0_sq: f64,
    /// Variance of a local atom around its global atom.
    #[arg(long, default_value_t = 1.0)]
    pub sigma_sq: f64,
    /// Probability that a group holds a given global atom.
    #[arg(long, default_value_t = 0.5)]
    pub subset_prob: f64,
    /// Raw points drawn around each local atom (0 skips raw data).
    #[arg(long, default_value_t = 100)]
    pub points_per_atom: usize,
}

impl SpecArgs {
    pub fn to_spec(&self, seed: u64) -> SimSpec {
        SimSpec {
            l_true: self.l_true,
            dim: self.dim,
            groups: self.groups,
            mu0: self.mu0,
            sigma0_sq: self.sigma0_sq,
            sigma_sq: self.sigma_sq,
            subset_prob: self.subset_prob,
            points_per_atom: self.points_per_atom,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CostPathArg {
    General,
    Gaussian,
    Eq13Literal,
}

impl From<CostPathArg> for CostPath {
    fn from(a: CostPathArg) -> Self {
        match a {
            CostPathArg::General => CostPath::General,
            CostPathArg::Gaussian => CostPath::Gaussian,
            CostPathArg::Eq13Literal => CostPath::Eq13Literal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PenaltyArg {
    Flat,
    Rank,
}

impl From<PenaltyArg> for NewAtomPenalty {
    fn from(a: PenaltyArg) -> Self {
        match a {
            PenaltyArg::Flat => NewAtomPenalty::Flat,
            PenaltyArg::Rank => NewAtomPenalty::Rank,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum HyperUpdateArg {
    ClosedForm,
    Refined,
}

impl From<HyperUpdateArg> for HyperUpdate {
    fn from(a: HyperUpdateArg) -> Self {
        match a {
            HyperUpdateArg::ClosedForm => HyperUpdate::ClosedForm,
            HyperUpdateArg::Refined => HyperUpdate::Refined,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepVarArg {
    Sigma,
    #[value(name = "J", alias = "j")]
    J,
}

impl From<SweepVarArg> for SweepVar {
    fn from(a: SweepVarArg) -> Self {
        match a {
            SweepVarArg::Sigma => SweepVar::Sigma,
            SweepVarArg::J => SweepVar::J,
        }
    }
}

/// Optional output file; `None` or `-` means standard output.
pub fn write_output(path: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    use anyhow::Context;
    match path {
        Some(p) if p.as_os_str() != "-" => {
            std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))
        }
        _ => {
            use std::io::Write;
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn errors_map_to_exit_codes() {
        let input: anyhow::Error = InputError::new("bad").into();
        assert_eq!(exit_code(&input), EXIT_INPUT);
        let mono: anyhow::Error = spahm_core::Error::Monotonicity {
            step: 3,
            before: 1.0,
            after: 0.0,
        }
        .into();
        assert_eq!(exit_code(&mono.context("fusing")), EXIT_INVARIANT);
        let cfg: anyhow::Error = spahm_core::Error::Config("tol".into()).into();
        assert_eq!(exit_code(&cfg), EXIT_INPUT);
    }
}
