use std::collections::BTreeSet;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use serde::{Deserialize, Serialize};
use spahm_core::simbench::{co_cluster_fraction, hausdorff, rel_error, rel_error_vec};

use crate::schema::{read_json, to_json, GlobalResultFile, TruthFile};
use crate::{write_output, InputError, EXIT_OK};

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    /// Output of `fuse`.
    #[arg(long)]
    pub result: PathBuf,
    /// Ground truth written by `simulate`.
    #[arg(long)]
    pub truth: PathBuf,
    /// Report file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Scores of one result against the truth. Relative errors are absent when
/// the true value is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    /// Hausdorff distance between estimated and true global atoms.
    pub hausdorff: f64,
    pub l_est: usize,
    pub l_true: usize,
    /// True global atoms held by at least one group.
    pub l_used: usize,
    pub mu0_relerr: Option<f64>,
    pub sigma0sq_relerr: Option<f64>,
    pub sigmasq_relerr: Option<f64>,
    /// Fraction of cross-group local atom pairs whose matched/unmatched
    /// status agrees with the truth; absent without true assignments.
    pub co_cluster_fraction: Option<f64>,
}

pub fn evaluate(result: &GlobalResultFile, truth: &TruthFile) -> Result<EvaluationReport> {
    result.validate()?;
    truth.validate()?;
    let d = truth.global_atoms[0].len();
    if result.global_atoms[0].len() != d {
        return Err(InputError::new(format!(
            "result atoms have dimension {}, truth has {d}",
            result.global_atoms[0].len()
        ))
        .into());
    }
    let h = &result.hyperparameters;
    let t = &truth.hyperparameters;
    if h.mu0.len() != t.mu0.len() {
        return Err(InputError::new("result and truth disagree on the dimension of mu0").into());
    }
    let co_cluster = if truth.assignments.is_empty() {
        None
    } else {
        let shape_ok = truth.assignments.len() == result.assignments.len()
            && truth.assignments.iter().zip(&result.assignments).all(|(a, b)| a.len() == b.len());
        if !shape_ok {
            return Err(InputError::new("result assignments do not have the shape of the true assignments").into());
        }
        Some(co_cluster_fraction(&truth.assignments, &result.assignments)?)
    };
    let used: BTreeSet<usize> = truth.assignments.iter().flatten().copied().collect();
    Ok(EvaluationReport {
        hausdorff: hausdorff(&result.global_atoms, &truth.global_atoms)?,
        l_est: result.global_atoms.len(),
        l_true: truth.global_atoms.len(),
        l_used: used.len(),
        mu0_relerr: rel_error_vec(&h.mu0, &t.mu0).ok(),
        sigma0sq_relerr: rel_error(h.sigma0_sq, t.sigma0_sq).ok(),
        sigmasq_relerr: rel_error(h.sigma_sq, t.sigma_sq).ok(),
        co_cluster_fraction: co_cluster,
    })
}

pub fn run(args: &EvaluateArgs) -> Result<u8> {
    let result: GlobalResultFile = read_json(&args.result)?;
    let truth: TruthFile = read_json(&args.truth)?;
    let report = evaluate(&result, &truth)?;
    write_output(args.out.as_ref(), &to_json(&report)?)?;
    Ok(EXIT_OK)
}
