//! Assignment costs for matching one group against the current global atoms.
//!
//! The matrix has `K + L_j` rows (K existing atoms, then one new slot per
//! local atom) and `L_j` columns. Entry `(i, l)` is the *negated* gain in the
//! log posterior from placing local atom `l` in row `i`, so minimizing the
//! assignment cost maximizes the group's conditional objective.

use serde::{Deserialize, Serialize};

use crate::base_measure::{ConjugateFamily, NaturalParams, SufficientStat};
use crate::error::{Error, Result};
use crate::lsap::CostMatrix;

use super::{GlobalState, IbpPrior, LocalGroup};

/// Which cost construction to use in the matching step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostPath {
    /// Generic exponential-family route through `log H` and the conjugate update.
    General,
    /// Closed-form isotropic Gaussian entries.
    #[default]
    Gaussian,
    /// Closed-form Gaussian entries with every term doubled; same argmin
    /// as [`CostPath::Gaussian`].
    Eq13Literal,
}

pub fn build_cost(
    path: CostPath,
    state: &GlobalState,
    groups: &[LocalGroup],
    j0: usize,
    ibp: &IbpPrior,
) -> Result<CostMatrix> {
    match path {
        CostPath::General => {
            let family = state.hyper.family()?;
            let prior = state.hyper.prior()?;
            build_cost_general(state, groups, j0, &family, &prior, ibp)
        }
        CostPath::Gaussian => build_cost_gaussian(state, groups, j0, ibp),
        CostPath::Eq13Literal => build_cost_eq13(state, groups, j0, ibp),
    }
}

/// Matrix handed to the solver. The Gaussian paths leave out the part of
/// each entry that is constant down a column; that part grows like
/// `‖v‖²/σ²` and would otherwise swamp the row differences when σ² is small.
/// The optimal assignment is unchanged.
pub(super) fn solver_cost(
    path: CostPath,
    state: &GlobalState,
    groups: &[LocalGroup],
    j0: usize,
    ibp: &IbpPrior,
) -> Result<CostMatrix> {
    match path {
        CostPath::General => build_cost(path, state, groups, j0, ibp),
        CostPath::Gaussian => gaussian_matrix(state, groups, j0, ibp, 1.0, false),
        CostPath::Eq13Literal => gaussian_matrix(state, groups, j0, ibp, 2.0, false),
    }
}

fn check_lifted(state: &GlobalState, j0: usize) -> Result<usize> {
    if state.is_assigned(j0) {
        return Err(Error::State(format!("group {j0} must be lifted before matching")));
    }
    // J counts the group being matched.
    Ok(state.assigned_groups() + 1)
}

/// Prior part of every row, shared by all cost paths.
fn prior_rows(state: &GlobalState, lj: usize, j_active: usize, ibp: &IbpPrior) -> Result<Vec<f64>> {
    let mut rows = Vec::with_capacity(state.num_atoms() + lj);
    for i in 0..state.num_atoms() {
        rows.push(ibp.existing_term(state.count(i), j_active)?);
    }
    rows.extend((1..=lj).map(|r| ibp.new_term(r, j_active)));
    Ok(rows)
}

pub fn build_cost_general<F: ConjugateFamily>(
    state: &GlobalState,
    groups: &[LocalGroup],
    j0: usize,
    family: &F,
    prior: &NaturalParams,
    ibp: &IbpPrior,
) -> Result<CostMatrix> {
    let j_active = check_lifted(state, j0)?;
    let group = &groups[j0];
    let lj = group.len();
    let k = state.num_atoms();
    let prior_terms = prior_rows(state, lj, j_active, ibp)?;

    let incoming: Vec<SufficientStat> = group
        .atoms
        .iter()
        .map(|v| family.suff_stat(v))
        .collect::<Result<_>>()?;

    let mut data = vec![0.0; (k + lj) * lj];
    let mut fill_row = |row: usize, base: &NaturalParams| -> Result<()> {
        let base_log_h = family.log_normalizer(base)?;
        for (l, s) in incoming.iter().enumerate() {
            let mut post = base.clone();
            post.absorb(s)?;
            let gain = prior_terms[row] + base_log_h - family.log_normalizer(&post)?;
            data[row * lj + l] = -gain;
        }
        Ok(())
    };

    for i in 0..k {
        let mut np = prior.clone();
        for &(g, l) in state.members(i) {
            np.absorb(&family.suff_stat(&groups[g].atoms[l])?)?;
        }
        fill_row(i, &np)?;
    }
    for r in 0..lj {
        fill_row(k + r, prior)?;
    }
    CostMatrix::new(k + lj, lj, data)
}

/// Per-atom sums of the raw local atoms.
fn atom_sums(state: &GlobalState, groups: &[LocalGroup], d: usize) -> Vec<Vec<f64>> {
    (0..state.num_atoms())
        .map(|i| {
            let mut s = vec![0.0; d];
            for &(g, l) in state.members(i) {
                for (a, v) in s.iter_mut().zip(&groups[g].atoms[l]) {
                    *a += v;
                }
            }
            s
        })
        .collect()
}

/// Closed-form Gaussian data term shared by the fast paths.
///
/// The gain `log H(a, n) − log H(a + v/σ², n + 1)`, with `n = m + σ²/σ0²`
/// and `a` the posterior natural parameter of the `m` current members, is
/// evaluated as `½d log(n/(n+1)) + ‖v‖²/(2σ²) − n‖v − p‖²/(2σ²(n+1))`
/// where `p` is the posterior mean. The middle term depends only on the
/// column and is returned separately by [`GaussianTerms::column_term`].
struct GaussianTerms {
    sigma_sq: f64,
    n0: f64,
    mu0: Vec<f64>,
    dim: f64,
}

impl GaussianTerms {
    /// Gain without the per-column term.
    fn centred_gain(&self, sum: Option<&[f64]>, m: usize, v: &[f64]) -> f64 {
        let n = m as f64 + self.n0;
        let mut dev = 0.0;
        for (k, (&u, &x)) in self.mu0.iter().zip(v).enumerate() {
            let p = (u * self.n0 + sum.map_or(0.0, |s| s[k])) / n;
            dev += (x - p) * (x - p);
        }
        0.5 * self.dim * (n / (n + 1.0)).ln() - n * dev / (2.0 * self.sigma_sq * (n + 1.0))
    }

    fn column_term(&self, v: &[f64]) -> f64 {
        v.iter().map(|x| x * x).sum::<f64>() / (2.0 * self.sigma_sq)
    }
}

fn gaussian_matrix(
    state: &GlobalState,
    groups: &[LocalGroup],
    j0: usize,
    ibp: &IbpPrior,
    scale: f64,
    with_column_term: bool,
) -> Result<CostMatrix> {
    let j_active = check_lifted(state, j0)?;
    let h = &state.hyper;
    let group = &groups[j0];
    let d = h.dim();
    if group.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: group.dim(),
        });
    }
    let lj = group.len();
    let k = state.num_atoms();
    let prior_terms = prior_rows(state, lj, j_active, ibp)?;
    let terms = GaussianTerms {
        sigma_sq: h.sigma_sq,
        n0: h.sigma_sq / h.sigma0_sq,
        mu0: h.mu0.clone(),
        dim: d as f64,
    };
    let sums = atom_sums(state, groups, d);
    let columns: Vec<f64> = group
        .atoms
        .iter()
        .map(|v| if with_column_term { terms.column_term(v) } else { 0.0 })
        .collect();

    let mut data = Vec::with_capacity((k + lj) * lj);
    for i in 0..k + lj {
        let (sum, m) = if i < k {
            (Some(sums[i].as_slice()), state.count(i))
        } else {
            (None, 0)
        };
        for (v, col) in group.atoms.iter().zip(&columns) {
            let gain = scale * (prior_terms[i] + terms.centred_gain(sum, m, v) + col);
            data.push(-gain);
        }
    }
    CostMatrix::new(k + lj, lj, data)
}

pub fn build_cost_gaussian(
    state: &GlobalState,
    groups: &[LocalGroup],
    j0: usize,
    ibp: &IbpPrior,
) -> Result<CostMatrix> {
    gaussian_matrix(state, groups, j0, ibp, 1.0, true)
}

/// Gaussian closed form with every term twice the log-posterior gain;
/// kept for comparison runs.
pub fn build_cost_eq13(
    state: &GlobalState,
    groups: &[LocalGroup],
    j0: usize,
    ibp: &IbpPrior,
) -> Result<CostMatrix> {
    gaussian_matrix(state, groups, j0, ibp, 2.0, true)
}

#[cfg(test)]
mod tests {
    use super::super::{GaussianHyper, NewAtomPenalty};
    use super::*;

    fn hyper(mu0: f64, s0: f64, s: f64) -> GaussianHyper {
        GaussianHyper::new(vec![mu0], s0, s, 1.0, 1.0).unwrap()
    }

    #[test]
    fn hand_evaluated_gaussian_entry() {
        // existing atom {v=1} from group 0, incoming v=1 in group 1, J=2
        let groups = vec![
            LocalGroup::new(0, vec![vec![1.0]]).unwrap(),
            LocalGroup::new(1, vec![vec![1.0]]).unwrap(),
        ];
        let state = GlobalState::from_assignments(&groups, &[vec![0], vec![0]], hyper(0.0, 1.0, 1.0)).unwrap();
        let mut state = state;
        state.lift_group(1);
        let ibp = state.hyper.ibp(NewAtomPenalty::Rank);
        let c = build_cost_gaussian(&state, &groups, 1, &ibp).unwrap();
        assert_eq!((c.rows(), c.cols()), (2, 1));
        // prior log(1/(1+2-1-1)) = 0; data ½log(2/3) + ½(2²/3 − 1²/2)
        let expected = -(0.5 * (2.0f64 / 3.0).ln() + 5.0 / 12.0);
        assert!((c.get(0, 0) - expected).abs() < 1e-15, "{}", c.get(0, 0));
        let literal = build_cost_eq13(&state, &groups, 1, &ibp).unwrap();
        assert!((literal.get(0, 0) - 2.0 * expected).abs() < 1e-15);
    }

    #[test]
    fn first_group_gets_only_new_slots() {
        let groups = vec![LocalGroup::new(0, vec![vec![0.0], vec![3.0], vec![-2.0]]).unwrap()];
        let state = GlobalState::empty(&groups, hyper(0.0, 2.0, 0.5));
        let ibp = state.hyper.ibp(NewAtomPenalty::Rank);
        let c = build_cost_gaussian(&state, &groups, 0, &ibp).unwrap();
        assert_eq!((c.rows(), c.cols()), (3, 3));
        // rank penalty: slot r costs log r more than slot 1
        for r in 0..3 {
            for l in 0..3 {
                let diff = c.get(r, l) - c.get(0, l);
                assert!((diff - ((r + 1) as f64).ln()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rejects_assigned_group() {
        let groups = vec![LocalGroup::new(0, vec![vec![0.0]]).unwrap()];
        let state = GlobalState::from_assignments(&groups, &[vec![0]], hyper(0.0, 1.0, 1.0)).unwrap();
        let ibp = state.hyper.ibp(NewAtomPenalty::Rank);
        assert!(matches!(build_cost_gaussian(&state, &groups, 0, &ibp), Err(Error::State(_))));
    }
}
