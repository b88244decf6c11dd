//! Command line front end: `spde-blowup <command> --config <path> [--seed N] [--out DIR]`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 precondition failure, 1 for I/O errors.

mod commands;
mod config;
mod manifest;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};

pub use commands::{run_command, Artifacts, Command, RunContext, EM_TOLERANCE, LOWER_BOUND_FACTOR};
pub use config::{
    BlowupConfig, CSource, CertificateChoice, CertificateConfig, Cond3Choice, DomainConfig, Format,
    GSpec, HeatKernelConfig, InitialConfig, Lambda1Source, ModelConfig, OutputConfig, RunConfig,
    SimConfig, SimulateConfig, MAX_CELLS,
};
pub use manifest::{sha256_hex, OutputFile, RunManifest};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "SPDE_BLOWUP_OUT";
const FALLBACK_OUT: &str = "spde-blowup-out";

#[derive(Debug, Parser)]
#[command(name = "spde-blowup", version, about = "Blowup probabilities and global-existence certificates")]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,
}

#[derive(Debug, Subcommand)]
enum CliCommand {
    /// Principal eigenpair and Richardson-extrapolated eigenvalues.
    Eigen(RunArgs),
    /// Blowup-probability sweep, or the zero-noise dichotomy.
    Blowup(RunArgs),
    /// Field trajectories with consistency checks.
    Simulate(RunArgs),
    /// Global-existence certificates.
    Certify(RunArgs),
    /// Heat-kernel ratio against its two-sided bound.
    HeatKernel(RunArgs),
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `sim.seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; overrides the config and the environment.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Output directory: `--out`, then `outputs.directory`, then `$SPDE_BLOWUP_OUT`.
pub fn resolve_out_dir(args: &RunArgs, cfg: &RunConfig) -> PathBuf {
    args.out
        .clone()
        .or_else(|| cfg.outputs.directory.clone())
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT))
}

pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    RunConfig::from_json(&text)
}

/// Runs one command and writes its files plus a manifest. Nothing is written
/// unless the whole computation succeeds.
pub fn execute(cmd: Command, args: &RunArgs) -> Result<(PathBuf, RunManifest)> {
    let started = manifest::unix_now();
    let mut config = load_config(&args.config)?;
    if let Some(seed) = args.seed {
        config.sim.seed = seed;
    }
    let out_dir = resolve_out_dir(args, &config);
    let base = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let ctx = RunContext { config, base };
    let artifacts = run_command(cmd, &ctx)?;

    fs::create_dir_all(&out_dir)?;
    let mut outputs = Vec::new();
    for (name, bytes) in &artifacts.files {
        fs::write(out_dir.join(name), bytes)?;
        outputs.push(OutputFile { name: name.clone(), sha256: sha256_hex(bytes), bytes: bytes.len() });
    }
    let canonical = serde_json::to_vec(&ctx.config)?;
    let manifest = RunManifest {
        command: cmd.name().to_string(),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: sha256_hex(&canonical),
        seed: ctx.config.sim.seed,
        started_unix: started,
        finished_unix: manifest::unix_now(),
        config: ctx.config,
        outputs,
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest)?;
    bytes.push(b'\n');
    fs::write(out_dir.join(RunManifest::file_name(cmd.name())), bytes)?;
    Ok((out_dir, manifest))
}

/// Parses arguments, runs, reports errors on stderr and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (cmd, args) = match cli.command {
        CliCommand::Eigen(a) => (Command::Eigen, a),
        CliCommand::Blowup(a) => (Command::Blowup, a),
        CliCommand::Simulate(a) => (Command::Simulate, a),
        CliCommand::Certify(a) => (Command::Certify, a),
        CliCommand::HeatKernel(a) => (Command::HeatKernel, a),
    };
    match execute(cmd, &args) {
        Ok((dir, m)) => {
            println!("{}: wrote {} file(s) to {}", m.command, m.outputs.len() + 1, dir.display());
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
