use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use spahm_core::simbench::generate;

use crate::schema::{write_json, LocalParamsFile, RawDataFile, TruthFile};
use crate::{InputError, SpecArgs, EXIT_OK};

pub const LOCAL_FILE: &str = "local.json";
pub const RAW_FILE: &str = "raw.json";
pub const TRUTH_FILE: &str = "truth.json";

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub spec: SpecArgs,
    /// Random seed.
    #[arg(long, env = "SPAHM_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Directory receiving local.json, raw.json and truth.json.
    #[arg(long)]
    pub out_dir: PathBuf,
}

pub fn run(args: &SimulateArgs) -> Result<u8> {
    let spec = args.spec.to_spec(args.seed);
    spec.validate().map_err(|e| InputError::new(e.to_string()))?;
    let inst = generate(&spec)?;
    fs::create_dir_all(&args.out_dir).with_context(|| format!("creating {}", args.out_dir.display()))?;
    write_json(&args.out_dir.join(LOCAL_FILE), &LocalParamsFile::from_instance(&inst))?;
    write_json(&args.out_dir.join(RAW_FILE), &RawDataFile::from_instance(&inst))?;
    write_json(&args.out_dir.join(TRUTH_FILE), &TruthFile::from_instance(&inst))?;
    log::info!(
        "wrote {} groups holding {} local atoms to {}",
        inst.groups.len(),
        inst.groups.iter().map(|g| g.atoms.len()).sum::<usize>(),
        args.out_dir.display()
    );
    Ok(EXIT_OK)
}
