//! Log marginal posterior of the assignments, with atoms integrated out.

use crate::base_measure::{ConjugateFamily, NaturalParams};
use crate::error::{Error, Result};

use super::hyper::marginal_log_likelihood;
use super::{GlobalState, IbpPrior, LocalGroup, NewAtomPenalty};

/// `log P(B)` by the sequential predictive over groups in index order.
///
/// Group `j` (0-based) sees `D = α + j`; for every atom held by `c` earlier
/// groups it pays `log(c/D)` if it joins and `log((D−c)/D)` otherwise, and
/// its `k` new atoms pay `log(αγ0/D)` each, less `log k!` under the rank
/// penalty. The constant `exp(−γ0 α / D)` factors are omitted.
pub fn log_prior(state: &GlobalState, ibp: &IbpPrior) -> Result<f64> {
    if !state.all_assigned() {
        return Err(Error::State("objective needs every group assigned".into()));
    }
    let k = state.num_atoms();
    let mut count = vec![0usize; k];
    let mut introduced = vec![false; k];
    let mut total = 0.0;
    let mut held = vec![false; k];
    for j in 0..state.num_groups() {
        let denom = ibp.alpha + j as f64;
        let map = state.assignment(j).expect("checked above");
        held.fill(false);
        for &i in map {
            held[i] = true;
        }
        for i in 0..k {
            if introduced[i] {
                let c = count[i] as f64;
                total += if held[i] {
                    (c / denom).ln()
                } else {
                    ((denom - c) / denom).ln()
                };
            }
        }
        let mut fresh = 0usize;
        for &i in map {
            if !introduced[i] {
                fresh += 1;
                total += ibp.new_term(1, j + 1);
                if ibp.penalty == NewAtomPenalty::Rank {
                    total -= (fresh as f64).ln();
                }
            }
        }
        for &i in map {
            introduced[i] = true;
            count[i] += 1;
        }
    }
    Ok(total)
}

/// Full objective for an arbitrary conjugate family:
/// `log P(B) + Σ_i [log H(τ, n0) − log H(τ + Σ_{Z_i} T, n0 + |Z_i|)] + Σ log h`.
pub fn eval_objective_general<F: ConjugateFamily>(
    state: &GlobalState,
    groups: &[LocalGroup],
    family: &F,
    prior: &NaturalParams,
    ibp: &IbpPrior,
) -> Result<f64> {
    let mut total = log_prior(state, ibp)?;
    let base = family.log_normalizer(prior)?;
    for i in 0..state.num_atoms() {
        let mut np = prior.clone();
        for &(g, l) in state.members(i) {
            let s = family.suff_stat(&groups[g].atoms[l])?;
            total += s.log_h;
            np.absorb(&s)?;
        }
        total += base - family.log_normalizer(&np)?;
    }
    Ok(total)
}

/// Objective under the Gaussian base measure stored in `state.hyper`.
///
/// Same value as [`eval_objective_general`] with the Gaussian family, with
/// the data term written through atom means and scatter so that it stays
/// accurate for very small variances.
pub fn eval_objective(state: &GlobalState, groups: &[LocalGroup], penalty: NewAtomPenalty) -> Result<f64> {
    let prior = log_prior(state, &state.hyper.ibp(penalty))?;
    Ok(prior + marginal_log_likelihood(state, groups, &state.hyper)?)
}
