//! Conjugate exponential-family base measures.
//!
//! A global atom θ has prior density `H(τ, n0) · exp(τᵀθ − n0·A(θ))` and a
//! local atom v observed from it has density `h(v) · exp(θᵀT(v) − A(θ))`.
//! Fusion only ever needs `T`, `log h`, `log H` and the posterior mode, so
//! that is all [`ConjugateFamily`] exposes; `A` is never evaluated.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Natural parameters `(τ, n0)` of the conjugate prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaturalParams {
    pub tau: Vec<f64>,
    pub n0: f64,
}

impl NaturalParams {
    pub fn new(tau: Vec<f64>, n0: f64) -> Result<Self> {
        if !(n0 > 0.0 && n0.is_finite()) {
            return Err(Error::Domain(format!("pseudo-count n0 must be positive, got {n0}")));
        }
        if tau.iter().any(|t| !t.is_finite()) {
            return Err(Error::Domain("tau must be finite".into()));
        }
        Ok(Self { tau, n0 })
    }

    pub fn dim(&self) -> usize {
        self.tau.len()
    }

    /// Add one sufficient statistic in place: `(τ + t, n0 + 1)`.
    pub fn absorb(&mut self, stat: &SufficientStat) -> Result<()> {
        if stat.t.len() != self.tau.len() {
            return Err(Error::Dimension {
                expected: self.tau.len(),
                got: stat.t.len(),
            });
        }
        for (a, b) in self.tau.iter_mut().zip(&stat.t) {
            *a += b;
        }
        self.n0 += 1.0;
        Ok(())
    }
}

/// `T(v)` and `log h(v)` for a single observed local atom.
#[derive(Debug, Clone, PartialEq)]
pub struct SufficientStat {
    pub t: Vec<f64>,
    pub log_h: f64,
}

pub trait ConjugateFamily {
    fn dim(&self) -> usize;

    fn suff_stat(&self, v: &[f64]) -> Result<SufficientStat>;

    /// `log H(τ, n0)`, the log of the prior normalizing constant.
    fn log_normalizer(&self, np: &NaturalParams) -> Result<f64>;

    /// Mode of the prior/posterior with natural parameters `np`.
    fn posterior_mode(&self, np: &NaturalParams) -> Vec<f64>;
}

/// Conjugate update `(τ + Σ t, n0 + |stats|)`.
pub fn posterior_nat(np: &NaturalParams, stats: &[SufficientStat]) -> Result<NaturalParams> {
    let mut post = np.clone();
    for s in stats {
        post.absorb(s)?;
    }
    Ok(post)
}

/// Posterior-mode estimate of a global atom from the local atoms assigned to it.
pub fn theta_map<F: ConjugateFamily>(
    family: &F,
    np: &NaturalParams,
    assigned: &[SufficientStat],
) -> Result<Vec<f64>> {
    Ok(family.posterior_mode(&posterior_nat(np, assigned)?))
}

/// Isotropic Gaussian local-atom density `N(v | θ, σ² I)` in `dim` dimensions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFamily {
    sigma2: f64,
    dim: usize,
}

impl GaussianFamily {
    pub fn new(sigma2: f64, dim: usize) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Domain(format!("sigma^2 must be positive, got {sigma2}")));
        }
        if dim == 0 {
            return Err(Error::Empty("dimension"));
        }
        Ok(Self { sigma2, dim })
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Natural parameters of the `N(μ0, σ0² I)` prior: `τ = μ0/σ0²`, `n0 = σ²/σ0²`.
    pub fn prior_natural(&self, mu0: &[f64], sigma0_sq: f64) -> Result<NaturalParams> {
        self.check_dim(mu0.len())?;
        if !(sigma0_sq > 0.0) {
            return Err(Error::Domain(format!("sigma0^2 must be positive, got {sigma0_sq}")));
        }
        NaturalParams::new(
            mu0.iter().map(|m| m / sigma0_sq).collect(),
            self.sigma2 / sigma0_sq,
        )
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got,
            });
        }
        Ok(())
    }
}

impl ConjugateFamily for GaussianFamily {
    fn dim(&self) -> usize {
        self.dim
    }

    fn suff_stat(&self, v: &[f64]) -> Result<SufficientStat> {
        self.check_dim(v.len())?;
        let norm_const = -0.5 * (2.0 * PI * self.sigma2).ln();
        let mut log_h = 0.0;
        let t = v
            .iter()
            .map(|&x| {
                log_h += -x * x / (2.0 * self.sigma2) + norm_const;
                x / self.sigma2
            })
            .collect();
        Ok(SufficientStat { t, log_h })
    }

    fn log_normalizer(&self, np: &NaturalParams) -> Result<f64> {
        self.check_dim(np.dim())?;
        if !(np.n0 > 0.0) {
            return Err(Error::Domain(format!("n0 must be positive, got {}", np.n0)));
        }
        let sq: f64 = np.tau.iter().map(|t| t * t).sum();
        let per_dim = 0.5 * (np.n0.ln() - self.sigma2.ln() - (2.0 * PI).ln());
        Ok(-sq * self.sigma2 / (2.0 * np.n0) + self.dim as f64 * per_dim)
    }

    fn posterior_mode(&self, np: &NaturalParams) -> Vec<f64> {
        np.tau.iter().map(|t| t * self.sigma2 / np.n0).collect()
    }
}
