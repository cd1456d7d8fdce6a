//! Gaussian hyperparameter estimation with the assignments held fixed.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{common_dim, GaussianHyper, GlobalState, LocalGroup};

/// Lower clamp for σ0² relative to σ².
const SIGMA0_FLOOR_RATIO: f64 = 1e-6;

/// How the hyperparameter step of the coordinate ascent is carried out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HyperUpdate {
    /// Closed-form moment estimates only. These assume σ0² + σ²/m ≈ σ0²
    /// and can lower the objective slightly.
    ClosedForm,
    /// Closed-form estimates, then exact coordinate ascent of the marginal
    /// likelihood; never lowers the objective.
    #[default]
    Refined,
}

/// Which Gaussian hyperparameters are learned; the rest stay fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LearnMask {
    pub mu0: bool,
    pub sigma0_sq: bool,
    pub sigma_sq: bool,
}

impl LearnMask {
    pub const ALL: Self = Self {
        mu0: true,
        sigma0_sq: true,
        sigma_sq: true,
    };
    pub const NONE: Self = Self {
        mu0: false,
        sigma0_sq: false,
        sigma_sq: false,
    };

    pub fn any(&self) -> bool {
        self.mu0 || self.sigma0_sq || self.sigma_sq
    }

    /// Take the learned components from `learned`, the rest from `fixed`.
    pub fn merge(&self, fixed: &GaussianHyper, learned: &GaussianHyper) -> GaussianHyper {
        GaussianHyper {
            mu0: if self.mu0 { learned.mu0.clone() } else { fixed.mu0.clone() },
            sigma0_sq: if self.sigma0_sq { learned.sigma0_sq } else { fixed.sigma0_sq },
            sigma_sq: if self.sigma_sq { learned.sigma_sq } else { fixed.sigma_sq },
            alpha: fixed.alpha,
            gamma0: fixed.gamma0,
        }
    }
}

impl Default for LearnMask {
    fn default() -> Self {
        Self::ALL
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HyperEstimate {
    pub hyper: GaussianHyper,
    /// Every atom is a singleton, so σ² kept its previous value.
    pub sigma_sq_fallback: bool,
    /// The moment estimate of σ0² fell below the floor and was clamped.
    pub sigma0_sq_clamped: bool,
}

/// Per-atom counts, means and within-atom scatter of the local atoms.
pub(super) struct Summary {
    dim: usize,
    counts: Vec<f64>,
    means: Vec<Vec<f64>>,
    /// Per atom and dimension, `Σ (v − mean)²` over the atom's members.
    within: Vec<Vec<f64>>,
    n: usize,
}

impl Summary {
    pub(super) fn new(state: &GlobalState, groups: &[LocalGroup]) -> Result<Self> {
        if !state.all_assigned() {
            return Err(Error::State("objective needs every group assigned".into()));
        }
        let dim = common_dim(groups)?;
        let k = state.num_atoms();
        let mut means = vec![vec![0.0; dim]; k];
        let mut within = vec![vec![0.0; dim]; k];
        let mut counts = Vec::with_capacity(k);
        let mut n = 0;
        for i in 0..k {
            let members = state.members(i);
            let m = members.len() as f64;
            for &(g, l) in members {
                for (a, x) in means[i].iter_mut().zip(&groups[g].atoms[l]) {
                    *a += x;
                }
            }
            for a in means[i].iter_mut() {
                *a /= m;
            }
            for &(g, l) in members {
                for ((w, x), c) in within[i].iter_mut().zip(&groups[g].atoms[l]).zip(&means[i]) {
                    *w += (x - c) * (x - c);
                }
            }
            counts.push(m);
            n += members.len();
        }
        Ok(Self {
            dim,
            counts,
            means,
            within,
            n,
        })
    }

    fn num_atoms(&self) -> usize {
        self.counts.len()
    }

    /// Variance of all local atoms around their grand mean, averaged over dims.
    fn spread(&self) -> f64 {
        let n = self.n as f64;
        let mut total = 0.0;
        for k in 0..self.dim {
            let grand = self.counts.iter().zip(&self.means).map(|(m, row)| m * row[k]).sum::<f64>() / n;
            for ((m, row), w) in self.counts.iter().zip(&self.means).zip(&self.within) {
                total += w[k] + m * (row[k] - grand) * (row[k] - grand);
            }
        }
        total / (n * self.dim as f64)
    }

    /// Exact log marginal likelihood of the local atoms given the grouping.
    ///
    /// Per atom with `m` members, mean `x̄` and scatter `W` this is
    /// `−(m d/2) log(2πσ²) − (d/2) log(1 + mσ0²/σ²) − W/(2σ²) − m‖x̄ − μ0‖²/(2(σ² + mσ0²))`,
    /// the same value as the log-normalizer differences but free of their
    /// cancellation when the variances are small.
    pub(super) fn log_marginal(&self, mu0: &[f64], sigma0_sq: f64, sigma_sq: f64) -> f64 {
        let d = self.dim as f64;
        let log_2pi_s = (2.0 * PI * sigma_sq).ln();
        let mut total = 0.0;
        for ((m, mean), w) in self.counts.iter().zip(&self.means).zip(&self.within) {
            let scatter: f64 = w.iter().sum();
            let dev: f64 = mean.iter().zip(mu0).map(|(x, u)| (x - u) * (x - u)).sum();
            total += -0.5 * m * d * log_2pi_s - 0.5 * d * (m * sigma0_sq / sigma_sq).ln_1p()
                - scatter / (2.0 * sigma_sq)
                - m * dev / (2.0 * (sigma_sq + m * sigma0_sq));
        }
        total
    }
}

/// Closed-form moment estimates of (μ0, σ0², σ²) from fixed assignments.
///
/// Per-dimension estimates are averaged across dimensions for the isotropic
/// variances. α and γ0 are carried over from `state.hyper`.
pub fn estimate_hypers(state: &GlobalState, groups: &[LocalGroup]) -> Result<HyperEstimate> {
    let s = Summary::new(state, groups)?;
    let prev = &state.hyper;
    let k = s.num_atoms();
    let big_l = k as f64;
    let n = s.n as f64;
    let d = s.dim as f64;

    let means = &s.means;
    let mu0: Vec<f64> = (0..s.dim)
        .map(|kk| means.iter().map(|row| row[kk]).sum::<f64>() / big_l)
        .collect();

    let (sigma_sq, sigma_sq_fallback) = if s.n > k {
        let within: f64 = s.within.iter().flatten().sum();
        let est = within / (d * (n - big_l));
        if est > 0.0 && est.is_finite() {
            (est, false)
        } else {
            (prev.sigma_sq, true)
        }
    } else {
        (prev.sigma_sq, true)
    };
    if sigma_sq_fallback {
        log::warn!("sigma^2 not estimable from the current assignments; keeping {}", prev.sigma_sq);
    }

    let between: f64 = means
        .iter()
        .map(|row| row.iter().zip(&mu0).map(|(x, m)| (x - m) * (x - m)).sum::<f64>())
        .sum::<f64>()
        / (big_l * d);
    let noise: f64 = s.counts.iter().map(|m| sigma_sq / m).sum::<f64>() / big_l;
    let raw = between - noise;
    let floor = SIGMA0_FLOOR_RATIO * sigma_sq;
    let sigma0_sq_clamped = !(raw >= floor);
    let sigma0_sq = if sigma0_sq_clamped { floor } else { raw };

    Ok(HyperEstimate {
        hyper: GaussianHyper {
            mu0,
            sigma0_sq,
            sigma_sq,
            alpha: prev.alpha,
            gamma0: prev.gamma0,
        },
        sigma_sq_fallback,
        sigma0_sq_clamped,
    })
}

/// Data part of the objective (everything except `log P(B)`) at `hyper`.
pub fn marginal_log_likelihood(state: &GlobalState, groups: &[LocalGroup], hyper: &GaussianHyper) -> Result<f64> {
    let s = Summary::new(state, groups)?;
    Ok(s.log_marginal(&hyper.mu0, hyper.sigma0_sq, hyper.sigma_sq))
}

/// Maximize a unimodal-ish function on `[lo, hi]` by golden-section search.
/// Returns the best point seen, including `x0`.
fn golden_max(f: impl Fn(f64) -> f64, lo: f64, hi: f64, x0: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut best = (x0, f(x0));
    let (mut a, mut b) = (lo, hi);
    let mut c = b - inv_phi * (b - a);
    let mut e = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fe = f(e);
    for _ in 0..90 {
        if fc > best.1 {
            best = (c, fc);
        }
        if fe > best.1 {
            best = (e, fe);
        }
        if fc >= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + inv_phi * (b - a);
            fe = f(e);
        }
        if (b - a).abs() < 1e-13 {
            break;
        }
    }
    best
}

/// Coordinate ascent on the exact marginal likelihood starting at `start`.
///
/// μ0 has a closed-form conditional optimum (precision-weighted mean of the
/// atom means); the two variances are searched in log space. A move is kept
/// only if it does not lower the objective.
pub fn refine_hypers(
    state: &GlobalState,
    groups: &[LocalGroup],
    start: &GaussianHyper,
    mask: LearnMask,
) -> Result<GaussianHyper> {
    let s = Summary::new(state, groups)?;
    let mut cur = start.clone();
    if !mask.any() {
        return Ok(cur);
    }
    let scale = s.spread().max(1e-12);
    let (log_lo, log_hi) = ((1e-10 * scale).ln(), (1e6 * scale).ln());
    let mut f_cur = s.log_marginal(&cur.mu0, cur.sigma0_sq, cur.sigma_sq);

    for _ in 0..100 {
        let f_round = f_cur;

        if mask.mu0 {
            let mut num = vec![0.0; s.dim];
            let mut den = 0.0;
            for (m, mean) in s.counts.iter().zip(&s.means) {
                let w = m / (cur.sigma0_sq * m + cur.sigma_sq);
                den += w;
                for (a, x) in num.iter_mut().zip(mean) {
                    *a += w * x;
                }
            }
            let cand: Vec<f64> = num.iter().map(|x| x / den).collect();
            let f_new = s.log_marginal(&cand, cur.sigma0_sq, cur.sigma_sq);
            if f_new >= f_cur {
                cur.mu0 = cand;
                f_cur = f_new;
            }
        }

        if mask.sigma_sq {
            let x0 = cur.sigma_sq.ln();
            let lo = log_lo.max(x0 - 8.0);
            let hi = log_hi.min(x0 + 8.0).max(lo);
            let (x, fx) = golden_max(|x| s.log_marginal(&cur.mu0, cur.sigma0_sq, x.exp()), lo, hi, x0);
            if fx >= f_cur && (cur.sigma0_sq >= SIGMA0_FLOOR_RATIO * x.exp()) {
                cur.sigma_sq = x.exp();
                f_cur = fx;
            }
        }

        if mask.sigma0_sq {
            let x0 = cur.sigma0_sq.ln();
            let floor = (SIGMA0_FLOOR_RATIO * cur.sigma_sq).ln();
            let lo = floor.max(x0 - 8.0);
            let hi = log_hi.min(x0 + 8.0).max(lo);
            let (x, fx) = golden_max(|x| s.log_marginal(&cur.mu0, x.exp(), cur.sigma_sq), lo, hi, x0);
            if fx >= f_cur {
                cur.sigma0_sq = x.exp();
                f_cur = fx;
            }
        }

        if f_cur - f_round <= 1e-13 * (1.0 + f_cur.abs()) {
            break;
        }
    }
    Ok(cur)
}

/// Data-driven starting point: μ0 is the mean of all local atoms, σ0² their
/// variance averaged over dimensions, σ² a tenth of that.
pub fn initial_hypers(groups: &[LocalGroup], alpha: f64, gamma0: f64) -> Result<GaussianHyper> {
    let d = common_dim(groups)?;
    let atoms: Vec<&Vec<f64>> = groups.iter().flat_map(|g| &g.atoms).collect();
    let n = atoms.len() as f64;
    let mu0: Vec<f64> = (0..d).map(|k| atoms.iter().map(|a| a[k]).sum::<f64>() / n).collect();
    let var = atoms
        .iter()
        .map(|a| a.iter().zip(&mu0).map(|(x, m)| (x - m) * (x - m)).sum::<f64>())
        .sum::<f64>()
        / (n * d as f64);
    let sigma0_sq = if var > 0.0 { var } else { 1.0 };
    GaussianHyper::new(mu0, sigma0_sq, 0.1 * sigma0_sq, alpha, gamma0)
}
