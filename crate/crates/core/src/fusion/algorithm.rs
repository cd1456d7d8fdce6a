use rand::{Rng, SeedableRng};
use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::base_measure::ConjugateFamily;
use crate::error::{Error, Result};
use crate::lsap::solve_min;

use super::cost::solver_cost;

use super::{
    common_dim, estimate_hypers, eval_objective, refine_hypers, CostPath, GaussianHyper,
    GlobalState, HyperUpdate, LearnMask, LocalGroup, NewAtomPenalty,
};

/// Relative slack allowed when checking that a step did not lower the objective.
pub const MONOTONE_RTOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    /// Matching steps per outer iteration; `None` means one per group.
    pub inner_iters: Option<usize>,
    pub max_outer: usize,
    /// Convergence threshold on the objective change over an outer iteration.
    pub tol: f64,
    pub seed: u64,
    pub learn: LearnMask,
    pub cost_path: CostPath,
    pub penalty: NewAtomPenalty,
    pub hyper_update: HyperUpdate,
    /// Fail with [`Error::Monotonicity`] as soon as a step lowers the objective.
    pub certify: bool,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            inner_iters: None,
            max_outer: 100,
            tol: 1e-6,
            seed: 0,
            learn: LearnMask::ALL,
            cost_path: CostPath::Gaussian,
            penalty: NewAtomPenalty::Flat,
            hyper_update: HyperUpdate::Refined,
            certify: false,
        }
    }
}

impl FusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.inner_iters == Some(0) {
            return Err(Error::Config("inner iterations must be at least 1".into()));
        }
        if self.max_outer == 0 {
            return Err(Error::Config("max_outer must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Config(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepKind {
    /// Objective after the initial sequential pass over all groups.
    Init,
    Match,
    Hyper,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step: usize,
    pub kind: StepKind,
    pub group: Option<usize>,
    pub objective: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FusionTrace {
    pub entries: Vec<TraceEntry>,
}

impl FusionTrace {
    fn push(&mut self, kind: StepKind, group: Option<usize>, objective: f64) {
        let step = self.entries.len();
        self.entries.push(TraceEntry {
            step,
            kind,
            group,
            objective,
        });
    }

    /// First step whose objective fell below its predecessor by more than
    /// `rtol · (1 + |previous|)`.
    pub fn first_decrease(&self, rtol: f64) -> Option<&TraceEntry> {
        self.entries.windows(2).find_map(|w| {
            let (a, b) = (w[0].objective, w[1].objective);
            (b < a - rtol * (1.0 + a.abs())).then_some(&w[1])
        })
    }

    pub fn is_monotone(&self, rtol: f64) -> bool {
        self.first_decrease(rtol).is_none()
    }

    pub fn last_objective(&self) -> Option<f64> {
        self.entries.last().map(|e| e.objective)
    }
}

#[derive(Debug, Clone)]
pub struct FusionResult {
    pub state: GlobalState,
    /// Posterior-mode estimate of every global atom.
    pub global_atoms: Vec<Vec<f64>>,
    pub trace: FusionTrace,
    pub converged: bool,
    pub outer_iterations: usize,
    pub warnings: Vec<String>,
}

/// Re-match group `j0` against everything else.
///
/// Lifts the group's current assignment, prunes atoms it leaves empty,
/// solves the assignment problem and writes the result back, opening new
/// global atoms for the selected new slots.
pub fn match_group(
    state: &mut GlobalState,
    groups: &[LocalGroup],
    j0: usize,
    path: CostPath,
    penalty: NewAtomPenalty,
) -> Result<()> {
    state.lift_group(j0);
    let ibp = state.hyper.ibp(penalty);
    let cost = solver_cost(path, state, groups, j0, &ibp)?;
    let (assignment, _) = solve_min(&cost)?;
    state.place_group(j0, &assignment.col_to_row)?;
    debug_assert!(state.validate().is_ok());
    Ok(())
}

/// Posterior-mode global atoms for the current state.
pub fn global_atoms(state: &GlobalState, groups: &[LocalGroup]) -> Result<Vec<Vec<f64>>> {
    let family = state.hyper.family()?;
    let prior = state.hyper.prior()?;
    (0..state.num_atoms())
        .map(|i| {
            let mut np = prior.clone();
            for &(g, l) in state.members(i) {
                np.absorb(&family.suff_stat(&groups[g].atoms[l])?)?;
            }
            Ok(family.posterior_mode(&np))
        })
        .collect()
}

struct Runner<'a> {
    groups: &'a [LocalGroup],
    config: &'a FusionConfig,
    trace: FusionTrace,
    warnings: Vec<String>,
}

impl Runner<'_> {
    fn record(&mut self, kind: StepKind, group: Option<usize>, objective: f64) -> Result<()> {
        if let Some(prev) = self.trace.last_objective() {
            if objective < prev - MONOTONE_RTOL * (1.0 + prev.abs()) {
                let step = self.trace.entries.len();
                if self.config.certify {
                    return Err(Error::Monotonicity {
                        step,
                        before: prev,
                        after: objective,
                    });
                }
                let msg = format!("objective decreased at step {step} ({kind:?}): {prev} -> {objective}");
                log::warn!("{msg}");
                self.warnings.push(msg);
            }
        }
        self.trace.push(kind, group, objective);
        Ok(())
    }

    fn objective(&self, state: &GlobalState) -> Result<f64> {
        eval_objective(state, self.groups, self.config.penalty)
    }

    fn hyper_step(&mut self, state: &mut GlobalState) -> Result<()> {
        let learn = self.config.learn;
        let est = estimate_hypers(state, self.groups)?;
        if est.sigma_sq_fallback && learn.sigma_sq {
            self.warnings.push("sigma^2 not estimable (all atoms singletons); kept previous value".into());
        }
        let closed = learn.merge(&state.hyper, &est.hyper);
        match self.config.hyper_update {
            HyperUpdate::ClosedForm => state.hyper = closed,
            HyperUpdate::Refined => {
                let before = self.objective(state)?;
                let current = state.hyper.clone();
                state.hyper = closed;
                let start = if self.objective(state)? >= before {
                    state.hyper.clone()
                } else {
                    current
                };
                state.hyper = refine_hypers(state, self.groups, &start, learn)?;
            }
        }
        state.hyper.validate()
    }
}

/// Coordinate ascent over per-group assignments and hyperparameters.
///
/// Groups are first placed one by one in a seeded random order, each seeing
/// only the groups placed before it. Each outer iteration then re-matches
/// `inner_iters` uniformly drawn groups and, if any hyperparameter is
/// learned, re-estimates them. The run stops once an outer iteration changes
/// the objective by less than `tol` and every group has been re-matched
/// since the last change, or after `max_outer` outer iterations.
pub fn fuse(groups: &[LocalGroup], config: &FusionConfig, init_hyper: &GaussianHyper) -> Result<FusionResult> {
    config.validate()?;
    init_hyper.validate()?;
    let d = common_dim(groups)?;
    if init_hyper.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: init_hyper.dim(),
        });
    }
    let j_total = groups.len();
    let inner = config.inner_iters.unwrap_or(j_total);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut state = GlobalState::empty(groups, init_hyper.clone());
    let mut run = Runner {
        groups,
        config,
        trace: FusionTrace::default(),
        warnings: Vec::new(),
    };

    let mut order: Vec<usize> = (0..j_total).collect();
    order.shuffle(&mut rng);
    for &j in &order {
        match_group(&mut state, groups, j, config.cost_path, config.penalty)?;
    }
    let mut objective = run.objective(&state)?;
    run.record(StepKind::Init, None, objective)?;

    let mut settled = vec![false; j_total];
    let mut converged = false;
    let mut outer = 0;
    while outer < config.max_outer {
        outer += 1;
        let start = objective;
        for _ in 0..inner {
            let j = rng.random_range(0..j_total);
            match_group(&mut state, groups, j, config.cost_path, config.penalty)?;
            let next = run.objective(&state)?;
            if (next - objective).abs() >= config.tol {
                settled.fill(false);
            }
            settled[j] = true;
            objective = next;
            run.record(StepKind::Match, Some(j), objective)?;
        }
        if config.learn.any() {
            run.hyper_step(&mut state)?;
            let next = run.objective(&state)?;
            if (next - objective).abs() >= config.tol {
                settled.fill(false);
            }
            objective = next;
            run.record(StepKind::Hyper, None, objective)?;
        }
        if (objective - start).abs() < config.tol && settled.iter().all(|&s| s) {
            converged = true;
            break;
        }
    }
    if !converged {
        let msg = format!("did not converge within {} outer iterations", config.max_outer);
        log::warn!("{msg}");
        run.warnings.push(msg);
    }

    state.validate()?;
    let global_atoms = global_atoms(&state, groups)?;
    Ok(FusionResult {
        state,
        global_atoms,
        trace: run.trace,
        converged,
        outer_iterations: outer,
        warnings: run.warnings,
    })
}
