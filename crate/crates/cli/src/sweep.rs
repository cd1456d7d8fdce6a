use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use spahm_core::fusion::FusionConfig;
use spahm_core::simbench::{run_sweep, summarize, write_csv, write_summary_csv, SweepConfig, SweepVar};

use crate::{InputError, SpecArgs, SweepVarArg, EXIT_OK};

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Variable to sweep: the ratio σ/σ0 or the number of groups.
    #[arg(long, value_enum, default_value_t = SweepVarArg::Sigma)]
    pub var: SweepVarArg,
    /// Comma-separated grid (default: 0.05,0.1,0.2,0.3,0.5,0.8 for sigma;
    /// 5,10,20,40 for J).
    #[arg(long, value_delimiter = ',')]
    pub values: Option<Vec<f64>>,
    /// Repetitions per grid value.
    #[arg(long, default_value_t = 10)]
    pub reps: usize,
    /// Master seed; every cell derives its own stream from it.
    #[arg(long, env = "SPAHM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// k-means++ restarts for every k-means fit.
    #[arg(long, default_value_t = 3)]
    pub n_init: usize,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma0: f64,
    /// Outer-iteration cap for each fusion run.
    #[arg(long, default_value_t = 100)]
    pub max_outer: usize,
    /// Record wall-clock times (the CSV is then no longer reproducible).
    #[arg(long)]
    pub timing: bool,
    /// Per-cell CSV output.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-method means and standard errors (default: <out>.summary.csv).
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

fn summary_path(out: &Path) -> PathBuf {
    out.with_extension("summary.csv")
}

pub fn run(args: &SweepArgs) -> Result<u8> {
    let var: SweepVar = args.var.into();
    let cfg = SweepConfig {
        base: args.spec.to_spec(0),
        var,
        values: args.values.clone().unwrap_or_else(|| var.default_values()),
        repetitions: args.reps,
        seed: args.seed,
        n_init: args.n_init,
        fusion: FusionConfig {
            max_outer: args.max_outer,
            ..FusionConfig::default()
        },
        alpha: args.alpha,
        gamma0: args.gamma0,
    };
    if args.n_init == 0 {
        return Err(InputError::new("--n-init must be at least 1").into());
    }
    cfg.base.validate().map_err(|e| InputError::new(e.to_string()))?;
    for &v in &cfg.values {
        var.apply(&cfg.base, v)
            .and_then(|s| s.validate())
            .map_err(|e| InputError::new(e.to_string()))?;
    }
    if cfg.values.is_empty() || cfg.repetitions == 0 {
        return Err(InputError::new("a sweep needs at least one value and one repetition").into());
    }

    let rows = run_sweep(&cfg)?;
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_csv(&rows, BufWriter::new(file), args.timing)?;

    let summary = summarize(&rows);
    let path = args.summary.clone().unwrap_or_else(|| summary_path(&args.out));
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_summary_csv(&summary, BufWriter::new(file))?;
    for s in &summary {
        log::info!(
            "{}={} {}: hausdorff {:.4} ± {:.4}, L {:.1}",
            var.name(),
            s.value,
            s.method.name(),
            s.hausdorff_mean,
            s.hausdorff_se,
            s.l_est_mean
        );
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_sits_next_to_the_csv() {
        assert_eq!(summary_path(Path::new("out/run.csv")), PathBuf::from("out/run.summary.csv"));
        assert_eq!(summary_path(Path::new("run")), PathBuf::from("run.summary.csv"));
    }
}
