//! Model fusion by MAP inference in a beta-Bernoulli process meta-model.
//!
//! Local models trained independently each expose a permutation-invariant
//! set of parameter vectors ("atoms"). [`fusion::fuse`] matches these sets
//! against a growing collection of global atoms, learning how many global
//! atoms there are, which local atoms share one, and the Gaussian
//! hyperparameters of the base measure.
//!
//! - [`lsap`]: exact rectangular linear sum assignment.
//! - [`base_measure`]: conjugate exponential-family interface and the
//!   isotropic Gaussian instance.
//! - [`fusion`]: cost construction, coordinate ascent and hyperparameters.
//! - [`simbench`]: synthetic instances, k-means baselines, metrics, sweeps.

pub mod base_measure;
pub mod error;
pub mod fusion;
pub mod lsap;
pub mod simbench;

pub use base_measure::{ConjugateFamily, GaussianFamily, NaturalParams, SufficientStat};
pub use error::{Error, Result};
pub use fusion::{
    fuse, CostPath, FusionConfig, FusionResult, FusionTrace, GaussianHyper, GlobalState, LocalGroup,
    NewAtomPenalty,
};
pub use lsap::{solve_min, AssignmentVector, CostMatrix};
