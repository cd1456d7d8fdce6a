//! Synthetic fusion benchmarks.
//!
//! [`generate`] draws global atoms from the Gaussian base measure, gives each
//! group a Bernoulli subset of them with Gaussian perturbation, and samples
//! raw points around every local atom. The k-means baselines, metrics and
//! parameter sweeps built on top reproduce the simulated experiment.

mod kmeans;
mod metrics;
mod sweep;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{GaussianHyper, LocalGroup};

pub use kmeans::{baseline_match_kmeans, baseline_pooled, kmeans, kmeans_best_of, KMeansFit, MAX_LLOYD_ITERS};
pub use metrics::{co_cluster_fraction, hausdorff, rel_error, rel_error_vec};
pub use sweep::{
    run_cell, run_sweep, summarize, write_csv, write_summary_csv, Method, SummaryRow, SweepConfig, SweepRow,
    SweepVar,
};

/// Generator settings. `mu0` is applied to every coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub l_true: usize,
    pub dim: usize,
    pub groups: usize,
    pub mu0: f64,
    pub sigma0_sq: f64,
    /// Local perturbation variance; zero gives exact copies of the global atoms.
    pub sigma_sq: f64,
    pub subset_prob: f64,
    /// Raw points per local atom; zero skips raw data entirely.
    pub points_per_atom: usize,
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        Self {
            l_true: 50,
            dim: 50,
            groups: 20,
            mu0: 10.0,
            sigma0_sq: 100.0,
            sigma_sq: 1.0,
            subset_prob: 0.5,
            points_per_atom: 100,
            seed: 0,
        }
    }
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        if self.l_true == 0 || self.dim == 0 || self.groups == 0 {
            return Err(Error::Config("l_true, dim and groups must be at least 1".into()));
        }
        if !(self.subset_prob > 0.0 && self.subset_prob <= 1.0) {
            return Err(Error::Config(format!("subset_prob must lie in (0, 1], got {}", self.subset_prob)));
        }
        if !(self.sigma0_sq > 0.0 && self.sigma0_sq.is_finite()) {
            return Err(Error::Config(format!("sigma0_sq must be positive, got {}", self.sigma0_sq)));
        }
        if !(self.sigma_sq >= 0.0 && self.sigma_sq.is_finite()) {
            return Err(Error::Config(format!("sigma_sq must be non-negative, got {}", self.sigma_sq)));
        }
        if !self.mu0.is_finite() {
            return Err(Error::Config("mu0 must be finite".into()));
        }
        Ok(())
    }

    pub fn mu0_vec(&self) -> Vec<f64> {
        vec![self.mu0; self.dim]
    }

    /// The generating hyperparameters, usable as a fusion prior when
    /// `sigma_sq` is positive.
    pub fn hyper(&self, alpha: f64, gamma0: f64) -> Result<GaussianHyper> {
        GaussianHyper::new(self.mu0_vec(), self.sigma0_sq, self.sigma_sq, alpha, gamma0)
    }
}

/// One simulated group: its local atoms, their true global indices and
/// raw points with mixture labels (indices into `atoms`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimGroup {
    pub atoms: Vec<Vec<f64>>,
    pub true_index: Vec<usize>,
    pub points: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimInstance {
    pub spec: SimSpec,
    pub true_global: Vec<Vec<f64>>,
    pub groups: Vec<SimGroup>,
}

impl SimInstance {
    /// The true local atoms as fusion input.
    pub fn local_groups(&self) -> Result<Vec<LocalGroup>> {
        self.groups
            .iter()
            .enumerate()
            .map(|(j, g)| LocalGroup::new(j, g.atoms.clone()))
            .collect()
    }

    pub fn true_assignments(&self) -> Vec<Vec<usize>> {
        self.groups.iter().map(|g| g.true_index.clone()).collect()
    }

    /// Global atoms held by at least one group.
    pub fn used_global(&self) -> Vec<usize> {
        let mut used: Vec<usize> = self.groups.iter().flat_map(|g| g.true_index.iter().copied()).collect();
        used.sort_unstable();
        used.dedup();
        used
    }

    pub fn total_points(&self) -> usize {
        self.groups.iter().map(|g| g.points.len()).sum()
    }
}

fn gaussian_vec<R: Rng>(rng: &mut R, mean: &[f64], sd: f64) -> Vec<f64> {
    mean.iter()
        .map(|&m| {
            let z: f64 = rng.sample(StandardNormal);
            m + sd * z
        })
        .collect()
}

/// Draw an instance. Groups whose Bernoulli subset comes out empty are
/// redrawn; local atom order within a group is shuffled.
pub fn generate(spec: &SimSpec) -> Result<SimInstance> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mu0 = spec.mu0_vec();
    let sd0 = spec.sigma0_sq.sqrt();
    let sd = spec.sigma_sq.sqrt();
    let true_global: Vec<Vec<f64>> = (0..spec.l_true).map(|_| gaussian_vec(&mut rng, &mu0, sd0)).collect();

    let mut groups = Vec::with_capacity(spec.groups);
    for _ in 0..spec.groups {
        let mut subset: Vec<usize> = Vec::new();
        while subset.is_empty() {
            subset = (0..spec.l_true).filter(|_| rng.random::<f64>() < spec.subset_prob).collect();
        }
        subset.shuffle(&mut rng);
        let atoms: Vec<Vec<f64>> = subset.iter().map(|&i| gaussian_vec(&mut rng, &true_global[i], sd)).collect();
        let n = spec.points_per_atom * atoms.len();
        let mut points = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let l = rng.random_range(0..atoms.len());
            points.push(gaussian_vec(&mut rng, &atoms[l], 1.0));
            labels.push(l);
        }
        groups.push(SimGroup {
            atoms,
            true_index: subset,
            points,
            labels,
        });
    }
    Ok(SimInstance {
        spec: spec.clone(),
        true_global,
        groups,
    })
}
