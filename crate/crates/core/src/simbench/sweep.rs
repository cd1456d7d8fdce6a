use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fusion::{fuse, initial_hypers, FusionConfig, GaussianHyper, LocalGroup};

use super::{
    baseline_match_kmeans, baseline_pooled, generate, hausdorff, kmeans_best_of, rel_error, rel_error_vec, SimSpec,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepVar {
    /// Values are ratios σ/σ0.
    Sigma,
    /// Values are group counts.
    J,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::Sigma => "sigma",
            SweepVar::J => "J",
        }
    }

    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepVar::Sigma => vec![0.05, 0.1, 0.2, 0.3, 0.5, 0.8],
            SweepVar::J => vec![5.0, 10.0, 20.0, 40.0],
        }
    }

    /// `base` with this variable set to `value`.
    pub fn apply(self, base: &SimSpec, value: f64) -> Result<SimSpec> {
        let mut spec = base.clone();
        match self {
            SweepVar::Sigma => {
                if !(value >= 0.0 && value.is_finite()) {
                    return Err(Error::Config(format!("sigma ratio must be non-negative, got {value}")));
                }
                spec.sigma_sq = (value * value) * base.sigma0_sq;
            }
            SweepVar::J => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Config(format!("J must be a positive integer, got {value}")));
                }
                spec.groups = value as usize;
            }
        }
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Fusion of the local k-means centroids.
    Spahm,
    /// Fusion of the true local atoms.
    SpahmOracle,
    KmeansMatching,
    KmeansPooled,
}

impl Method {
    pub const ALL: [Method; 4] = [
        Method::Spahm,
        Method::SpahmOracle,
        Method::KmeansMatching,
        Method::KmeansPooled,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Spahm => "spahm",
            Method::SpahmOracle => "spahm_oracle",
            Method::KmeansMatching => "kmeans_matching",
            Method::KmeansPooled => "kmeans_pooled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub base: SimSpec,
    pub var: SweepVar,
    pub values: Vec<f64>,
    pub repetitions: usize,
    pub seed: u64,
    /// k-means++ restarts for every k-means fit.
    pub n_init: usize,
    pub fusion: FusionConfig,
    pub alpha: f64,
    pub gamma0: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            base: SimSpec::default(),
            var: SweepVar::Sigma,
            values: SweepVar::Sigma.default_values(),
            repetitions: 10,
            seed: 0,
            n_init: 3,
            fusion: FusionConfig::default(),
            alpha: 1.0,
            gamma0: 1.0,
        }
    }
}

/// One method's result in one sweep cell. Hyperparameter errors are only
/// reported for the fusion methods and only when the truth is non-zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_var: SweepVar,
    pub value: f64,
    pub repetition: usize,
    pub method: Method,
    pub hausdorff: f64,
    pub l_est: usize,
    pub mu0_relerr: Option<f64>,
    pub sigma0sq_relerr: Option<f64>,
    pub sigmasq_relerr: Option<f64>,
    pub wall_ms: f64,
}

struct CellSeeds {
    sim: u64,
    local: u64,
    matching: u64,
    pooled: u64,
    fusion: u64,
}

fn cell_seeds(seed: u64, cell: usize) -> CellSeeds {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(cell as u64);
    CellSeeds {
        sim: rng.random(),
        local: rng.random(),
        matching: rng.random(),
        pooled: rng.random(),
        fusion: rng.random(),
    }
}

fn hyper_errors(est: &GaussianHyper, spec: &SimSpec) -> [Option<f64>; 3] {
    [
        rel_error_vec(&est.mu0, &spec.mu0_vec()).ok(),
        rel_error(est.sigma0_sq, spec.sigma0_sq).ok(),
        rel_error(est.sigma_sq, spec.sigma_sq).ok(),
    ]
}

/// Run every method on one generated instance.
pub fn run_cell(cfg: &SweepConfig, value: f64, repetition: usize, cell: usize) -> Result<Vec<SweepRow>> {
    let seeds = cell_seeds(cfg.seed, cell);
    let spec = SimSpec {
        seed: seeds.sim,
        ..cfg.var.apply(&cfg.base, value)?
    };
    if spec.points_per_atom == 0 {
        return Err(Error::Config("sweeps need raw data (points_per_atom >= 1)".into()));
    }
    let inst = generate(&spec)?;
    let k = spec.l_true;
    let mut rows = Vec::with_capacity(Method::ALL.len());
    let mut push = |method, est: &[Vec<f64>], errs: [Option<f64>; 3], start: Instant| -> Result<()> {
        rows.push(SweepRow {
            sweep_var: cfg.var,
            value,
            repetition,
            method,
            hausdorff: hausdorff(est, &inst.true_global)?,
            l_est: est.len(),
            mu0_relerr: errs[0],
            sigma0sq_relerr: errs[1],
            sigmasq_relerr: errs[2],
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        Ok(())
    };

    let start = Instant::now();
    let mut local_seeds = ChaCha8Rng::seed_from_u64(seeds.local);
    let mut local_fits = Vec::with_capacity(inst.groups.len());
    for g in &inst.groups {
        let fit = kmeans_best_of(&g.points, g.atoms.len(), local_seeds.random(), cfg.n_init)?;
        local_fits.push(fit.centroids);
    }
    let local_ms = start.elapsed();

    let fusion = FusionConfig {
        seed: seeds.fusion,
        ..cfg.fusion.clone()
    };
    let run_fusion = |groups: Vec<LocalGroup>| -> Result<(Vec<Vec<f64>>, GaussianHyper)> {
        let init = initial_hypers(&groups, cfg.alpha, cfg.gamma0)?;
        let res = fuse(&groups, &fusion, &init)?;
        Ok((res.global_atoms, res.state.hyper))
    };

    let start = Instant::now() - local_ms;
    let groups = local_fits
        .iter()
        .enumerate()
        .map(|(j, c)| LocalGroup::new(j, c.clone()))
        .collect::<Result<Vec<_>>>()?;
    let (est, h) = run_fusion(groups)?;
    push(Method::Spahm, &est, hyper_errors(&h, &spec), start)?;

    let start = Instant::now();
    let (est, h) = run_fusion(inst.local_groups()?)?;
    push(Method::SpahmOracle, &est, hyper_errors(&h, &spec), start)?;

    let start = Instant::now() - local_ms;
    let n_local: usize = local_fits.iter().map(Vec::len).sum();
    let est = baseline_match_kmeans(&local_fits, k.min(n_local), seeds.matching, cfg.n_init)?;
    push(Method::KmeansMatching, &est, [None; 3], start)?;

    let start = Instant::now();
    let est = baseline_pooled(&inst, k.min(inst.total_points()), seeds.pooled, cfg.n_init)?;
    push(Method::KmeansPooled, &est, [None; 3], start)?;

    Ok(rows)
}

/// Every (value, repetition) cell, in parallel; rows come back in
/// value-major, repetition, method order regardless of scheduling.
pub fn run_sweep(cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    if cfg.values.is_empty() || cfg.repetitions == 0 {
        return Err(Error::Config("a sweep needs at least one value and one repetition".into()));
    }
    let cells: Vec<(usize, f64, usize)> = cfg
        .values
        .iter()
        .enumerate()
        .flat_map(|(vi, &v)| (0..cfg.repetitions).map(move |r| (vi * cfg.repetitions + r, v, r)))
        .collect();
    let per_cell: Vec<Vec<SweepRow>> = cells
        .par_iter()
        .map(|&(cell, value, rep)| {
            log::info!("sweep cell {cell}: {} = {value}, repetition {rep}", cfg.var.name());
            run_cell(cfg, value, rep, cell)
        })
        .collect::<Result<_>>()?;
    Ok(per_cell.into_iter().flatten().collect())
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

/// Write rows as CSV. Wall times are left blank unless `timing` is set, so
/// that repeated runs produce identical bytes.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W, timing: bool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "sweep_var",
        "value",
        "repetition",
        "method",
        "hausdorff",
        "L_est",
        "mu0_relerr",
        "sigma0sq_relerr",
        "sigmasq_relerr",
        "wall_ms",
    ])?;
    for r in rows {
        w.write_record([
            r.sweep_var.name().to_string(),
            r.value.to_string(),
            r.repetition.to_string(),
            r.method.name().to_string(),
            r.hausdorff.to_string(),
            r.l_est.to_string(),
            opt(r.mu0_relerr),
            opt(r.sigma0sq_relerr),
            opt(r.sigmasq_relerr),
            if timing { format!("{:.3}", r.wall_ms) } else { String::new() },
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Per (value, method) means and standard errors over repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub sweep_var: SweepVar,
    pub value: f64,
    pub method: Method,
    pub n: usize,
    pub hausdorff_mean: f64,
    pub hausdorff_se: f64,
    pub l_est_mean: f64,
    pub l_est_se: f64,
}

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn summarize(rows: &[SweepRow]) -> Vec<SummaryRow> {
    let mut keys: Vec<(SweepVar, f64, Method)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|&(v, x, m)| v == r.sweep_var && x == r.value && m == r.method) {
            keys.push((r.sweep_var, r.value, r.method));
        }
    }
    keys.into_iter()
        .map(|(var, value, method)| {
            let sel: Vec<&SweepRow> = rows
                .iter()
                .filter(|r| r.sweep_var == var && r.value == value && r.method == method)
                .collect();
            let h: Vec<f64> = sel.iter().map(|r| r.hausdorff).collect();
            let l: Vec<f64> = sel.iter().map(|r| r.l_est as f64).collect();
            let (hausdorff_mean, hausdorff_se) = mean_se(&h);
            let (l_est_mean, l_est_se) = mean_se(&l);
            SummaryRow {
                sweep_var: var,
                value,
                method,
                n: sel.len(),
                hausdorff_mean,
                hausdorff_se,
                l_est_mean,
                l_est_se,
            }
        })
        .collect()
}

pub fn write_summary_csv<W: Write>(summary: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "sweep_var",
        "value",
        "method",
        "n",
        "hausdorff_mean",
        "hausdorff_se",
        "L_est_mean",
        "L_est_se",
    ])?;
    for s in summary {
        w.write_record([
            s.sweep_var.name().to_string(),
            s.value.to_string(),
            s.method.name().to_string(),
            s.n.to_string(),
            s.hausdorff_mean.to_string(),
            s.hausdorff_se.to_string(),
            s.l_est_mean.to_string(),
            s.l_est_se.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> SweepConfig {
        SweepConfig {
            base: SimSpec {
                l_true: 5,
                dim: 3,
                groups: 3,
                points_per_atom: 20,
                ..SimSpec::default()
            },
            values: vec![0.05, 0.2],
            repetitions: 3,
            seed: 4,
            n_init: 2,
            ..SweepConfig::default()
        }
    }

    #[test]
    fn row_count_is_reps_times_values_times_methods() {
        let cfg = tiny();
        let rows = run_sweep(&cfg).unwrap();
        assert_eq!(rows.len(), 3 * 2 * 4);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.method, Method::ALL[i % 4]);
            assert_eq!(r.repetition, (i / 4) % 3);
        }
        let summary = summarize(&rows);
        assert_eq!(summary.len(), 2 * 4);
        assert!(summary.iter().all(|s| s.n == 3));
    }

    #[test]
    fn csv_is_reproducible() {
        let cfg = tiny();
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv(&run_sweep(&cfg).unwrap(), &mut a, false).unwrap();
        write_csv(&run_sweep(&cfg).unwrap(), &mut b, false).unwrap();
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("sweep_var,value,repetition,method,hausdorff,L_est,"));
        assert_eq!(text.lines().count(), 1 + 24);
    }

    #[test]
    fn sweep_var_application() {
        let base = SimSpec::default();
        let s = SweepVar::Sigma.apply(&base, 0.3).unwrap();
        assert!((s.sigma_sq - 9.0).abs() < 1e-12);
        assert_eq!(SweepVar::J.apply(&base, 7.0).unwrap().groups, 7);
        assert!(SweepVar::J.apply(&base, 2.5).is_err());
    }

    #[test]
    fn noiseless_oracle_recovers_truth_up_to_shrinkage() {
        // With σ tiny the oracle input holds exact copies of each global; the
        // posterior mode of an atom seen m times shrinks toward μ0 by
        // σ²/(σ² + m σ0²), so the error is at most that times ‖θ − μ0‖.
        let cfg = SweepConfig {
            values: vec![1e-4],
            repetitions: 1,
            ..tiny()
        };
        let cfg = SweepConfig {
            base: SimSpec {
                subset_prob: 1.0,
                ..cfg.base.clone()
            },
            ..cfg
        };
        let rows = run_sweep(&cfg).unwrap();
        let oracle = rows.iter().find(|r| r.method == Method::SpahmOracle).unwrap();
        assert_eq!(oracle.l_est, 5);
        assert!(oracle.hausdorff < 1e-2, "{}", oracle.hausdorff);
        for r in &rows {
            assert!(r.hausdorff < 1.5, "{:?}", r);
        }
    }
}
