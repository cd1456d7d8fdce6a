//! Fusion of permutation-invariant local parameter sets into one global set.
//!
//! Each local group is matched against the current global atoms by solving
//! a linear sum assignment problem whose cost combines the Indian buffet
//! process predictive (share an existing atom vs. open a new one) with the
//! conjugate marginal likelihood of the base measure. Matching steps
//! alternate with hyperparameter re-estimation; every step is checked to
//! not decrease the marginal posterior of the assignments.

mod algorithm;
mod cost;
mod hyper;
mod objective;
mod state;

use serde::{Deserialize, Serialize};

use crate::base_measure::{GaussianFamily, NaturalParams};
use crate::error::{Error, Result};

pub use algorithm::{fuse, global_atoms, match_group, MONOTONE_RTOL, FusionConfig, FusionResult, FusionTrace, StepKind, TraceEntry};
pub use cost::{build_cost, build_cost_eq13, build_cost_gaussian, build_cost_general, CostPath};
pub use hyper::{
    estimate_hypers, initial_hypers, marginal_log_likelihood, refine_hypers, HyperEstimate,
    HyperUpdate, LearnMask,
};
pub use objective::{eval_objective, eval_objective_general, log_prior};
pub use state::{AtomRef, GlobalState};

/// One local model's parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalGroup {
    pub id: usize,
    pub atoms: Vec<Vec<f64>>,
}

impl LocalGroup {
    pub fn new(id: usize, atoms: Vec<Vec<f64>>) -> Result<Self> {
        let d = atoms.first().map(Vec::len).ok_or(Error::Empty("local group"))?;
        if d == 0 {
            return Err(Error::Empty("atom dimension"));
        }
        for a in &atoms {
            if a.len() != d {
                return Err(Error::Dimension {
                    expected: d,
                    got: a.len(),
                });
            }
            if a.iter().any(|x| !x.is_finite()) {
                return Err(Error::Domain(format!("group {id} has a non-finite atom")));
            }
        }
        Ok(Self { id, atoms })
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }
}

/// Common dimension of a non-empty collection of groups.
pub fn common_dim(groups: &[LocalGroup]) -> Result<usize> {
    let d = groups.first().ok_or(Error::Empty("group list"))?.dim();
    for g in groups {
        if g.dim() != d {
            return Err(Error::Dimension {
                expected: d,
                got: g.dim(),
            });
        }
    }
    Ok(d)
}

/// Gaussian base-measure hyperparameters plus the beta process parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianHyper {
    pub mu0: Vec<f64>,
    pub sigma0_sq: f64,
    pub sigma_sq: f64,
    pub alpha: f64,
    pub gamma0: f64,
}

impl GaussianHyper {
    pub fn new(mu0: Vec<f64>, sigma0_sq: f64, sigma_sq: f64, alpha: f64, gamma0: f64) -> Result<Self> {
        let h = Self {
            mu0,
            sigma0_sq,
            sigma_sq,
            alpha,
            gamma0,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::Domain(format!("{name} must be positive and finite, got {x}")))
            }
        };
        positive("sigma0_sq", self.sigma0_sq)?;
        positive("sigma_sq", self.sigma_sq)?;
        positive("alpha", self.alpha)?;
        positive("gamma0", self.gamma0)?;
        if self.mu0.is_empty() || self.mu0.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("mu0 must be a non-empty finite vector".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.mu0.len()
    }

    pub fn family(&self) -> Result<GaussianFamily> {
        GaussianFamily::new(self.sigma_sq, self.dim())
    }

    pub fn prior(&self) -> Result<NaturalParams> {
        self.family()?.prior_natural(&self.mu0, self.sigma0_sq)
    }

    pub fn ibp(&self, penalty: NewAtomPenalty) -> IbpPrior {
        IbpPrior {
            alpha: self.alpha,
            gamma0: self.gamma0,
            penalty,
        }
    }
}

/// How the predictive prior charges a group for opening several new atoms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NewAtomPenalty {
    /// The r-th new atom of a group pays an extra `log r`. The resulting
    /// per-group objectives do not share a common potential when groups
    /// differ in size, so coordinate ascent can cycle.
    Rank,
    /// Every new atom pays the same `log(αγ0 / (α + J − 1))`; this is the
    /// exchangeable beta-Bernoulli marginal of the assignments.
    #[default]
    Flat,
}

/// Beta-Bernoulli process prior parameters used in costs and objectives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IbpPrior {
    pub alpha: f64,
    pub gamma0: f64,
    pub penalty: NewAtomPenalty,
}

impl IbpPrior {
    /// `log(m / (D − m))`: preference for joining an atom already held by
    /// `m` of the other groups, with `D = α + J − 1`.
    pub(crate) fn existing_term(&self, m: usize, groups: usize) -> Result<f64> {
        let denom = self.alpha + groups as f64 - 1.0;
        let rest = denom - m as f64;
        if m == 0 || rest <= 0.0 {
            return Err(Error::Domain(format!(
                "existing-atom prior undefined for m={m}, alpha+J-1={denom}"
            )));
        }
        Ok((m as f64).ln() - rest.ln())
    }

    /// Prior term for the `rank`-th (1-based) new atom of a group.
    pub(crate) fn new_term(&self, rank: usize, groups: usize) -> f64 {
        let denom = self.alpha + groups as f64 - 1.0;
        let base = (self.alpha * self.gamma0).ln() - denom.ln();
        match self.penalty {
            NewAtomPenalty::Rank => base - (rank as f64).ln(),
            NewAtomPenalty::Flat => base,
        }
    }
}
