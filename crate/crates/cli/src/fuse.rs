use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use spahm_core::fusion::{fuse, initial_hypers, FusionConfig, GaussianHyper, LearnMask};

use crate::schema::{read_json, to_json, GlobalResultFile, Hyperparameters, LocalParamsFile, RunConfig, SCHEMA_VERSION};
use crate::{write_output, CostPathArg, HyperUpdateArg, InputError, PenaltyArg, EXIT_OK};

#[derive(Debug, Clone, Args)]
pub struct FuseArgs {
    /// Local parameters file.
    pub input: PathBuf,
    /// Beta process concentration.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Beta process mass.
    #[arg(long, default_value_t = 1.0)]
    pub gamma0: f64,
    /// Fix the local noise variance instead of learning it.
    #[arg(long)]
    pub sigma_sq: Option<f64>,
    /// Fix the global atom variance instead of learning it.
    #[arg(long)]
    pub sigma0_sq: Option<f64>,
    /// Fix the base-measure mean: one value for every coordinate, or a
    /// comma-separated vector.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub mu0: Option<Vec<f64>>,
    /// Keep every hyperparameter at its initial value.
    #[arg(long)]
    pub no_learn_hypers: bool,
    /// Random seed for the group order.
    #[arg(long, env = "SPAHM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Stop once an outer iteration changes the objective by less than this.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Maximum number of outer iterations.
    #[arg(long, default_value_t = 100)]
    pub max_outer: usize,
    /// Matching steps per outer iteration (default: number of groups).
    #[arg(long)]
    pub inner: Option<usize>,
    #[arg(long, value_enum, default_value_t = CostPathArg::Gaussian)]
    pub cost_path: CostPathArg,
    /// Prior term for opening new global atoms.
    #[arg(long, value_enum, default_value_t = PenaltyArg::Flat)]
    pub new_atom_penalty: PenaltyArg,
    #[arg(long, value_enum, default_value_t = HyperUpdateArg::Refined)]
    pub hyper_update: HyperUpdateArg,
    /// Abort with exit status 1 if any step lowers the objective.
    #[arg(long)]
    pub certify: bool,
    /// Output file (default: standard output).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn positive(name: &str, v: f64) -> Result<f64, InputError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(InputError::new(format!("--{name} must be positive and finite, got {v}")))
    }
}

/// Starting hyperparameters with the user's overrides applied, and the
/// mask of those still to be learned.
fn starting_point(args: &FuseArgs, file: &LocalParamsFile, init: GaussianHyper) -> Result<(GaussianHyper, LearnMask)> {
    let mut h = init;
    let learn = !args.no_learn_hypers;
    let mut mask = LearnMask {
        mu0: learn,
        sigma0_sq: learn,
        sigma_sq: learn,
    };
    if let Some(v) = args.sigma_sq {
        h.sigma_sq = positive("sigma-sq", v)?;
        mask.sigma_sq = false;
    }
    if let Some(v) = args.sigma0_sq {
        h.sigma0_sq = positive("sigma0-sq", v)?;
        mask.sigma0_sq = false;
    }
    if let Some(m) = &args.mu0 {
        let d = file.dim();
        h.mu0 = match m.len() {
            1 => vec![m[0]; d],
            n if n == d => m.clone(),
            n => return Err(InputError::new(format!("--mu0 has {n} values, atoms have dimension {d}")).into()),
        };
        if h.mu0.iter().any(|x| !x.is_finite()) {
            return Err(InputError::new("--mu0 must be finite").into());
        }
        mask.mu0 = false;
    }
    Ok((h, mask))
}

pub fn run(args: &FuseArgs) -> Result<u8> {
    let file: LocalParamsFile = read_json(&args.input)?;
    file.validate()?;
    let groups = file.local_groups()?;
    positive("alpha", args.alpha)?;
    positive("gamma0", args.gamma0)?;
    let (init, learn) = starting_point(args, &file, initial_hypers(&groups, args.alpha, args.gamma0)?)?;
    let config = FusionConfig {
        inner_iters: args.inner,
        max_outer: args.max_outer,
        tol: args.tol,
        seed: args.seed,
        learn,
        cost_path: args.cost_path.into(),
        penalty: args.new_atom_penalty.into(),
        hyper_update: args.hyper_update.into(),
        certify: args.certify,
    };
    config.validate().map_err(|e| InputError::new(e.to_string()))?;

    let res = fuse(&groups, &config, &init)?;
    for w in &res.warnings {
        eprintln!("warning: {w}");
    }
    let out = GlobalResultFile {
        schema_version: SCHEMA_VERSION,
        global_atoms: res.global_atoms,
        assignments: res.state.labels(),
        group_ids: file.groups.iter().map(|g| g.id.clone()).collect(),
        hyperparameters: Hyperparameters::from(&res.state.hyper),
        trace: res.trace.entries,
        config: RunConfig {
            fusion: config,
            alpha: args.alpha,
            gamma0: args.gamma0,
            mu0: args.mu0.clone(),
            sigma0_sq: args.sigma0_sq,
            sigma_sq: args.sigma_sq,
            initial_hyperparameters: Hyperparameters::from(&init),
        },
        seed: args.seed,
        converged: res.converged,
        outer_iterations: res.outer_iterations,
        warnings: res.warnings,
    };
    write_output(args.out.as_ref(), &to_json(&out)?)?;
    Ok(EXIT_OK)
}
