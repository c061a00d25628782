use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qchaos_cli::{CliError, LoadedConfig, RunOptions, EXIT_CONFIG, EXIT_OK};

/// Reproducible quantum-ergodicity experiments on cat maps and Laplacians.
#[derive(Debug, Parser)]
#[command(name = "qchaos", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact Egorov identity for translations (and an optional observable).
    Egorov(RunArgs),
    /// Trace, adjoint, Hilbert-Schmidt and product laws of the quantization.
    Trace(RunArgs),
    /// Integrated quantum-ergodicity statistic for a cat map.
    QeCatmap(RunArgs),
    /// Integrated quantum-ergodicity statistic over a Laplace window.
    QeLaplace(RunArgs),
    /// Eigenvalue counts against the Weyl law.
    WeylCount(RunArgs),
    /// Radial mass of disk eigenfunctions inside a smaller disk.
    DiskMass(RunArgs),
    /// Step-by-step check of the variance bound chain.
    ProofChain(RunArgs),
    /// Husimi densities of selected eigenvectors.
    HusimiExport(RunArgs),
    /// Exploratory scan for eigenvectors concentrated on periodic orbits.
    ScarScan(RunArgs),
    /// Check a config without running it.
    Validate {
        /// Config to check (positional or `--config`).
        #[arg(value_name = "CONFIG", required_unless_present = "config")]
        path: Option<PathBuf>,
        #[arg(long, short, conflicts_with = "path")]
        config: Option<PathBuf>,
    },
}

#[derive(Debug, clap::Args)]
struct RunArgs {
    /// Experiment config (JSON).
    #[arg(long, short)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Spectral cache directory; overrides the config and QCHAOS_CACHE.
    #[arg(long)]
    cache: Option<PathBuf>,
    /// Seed for the rotation inside degenerate eigenspaces.
    #[arg(long)]
    seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, args) = match cli.command {
        Command::Validate { path, config } => {
            let path = path.or(config).expect("clap enforces one of the two");
            return ExitCode::from(validate(&path));
        }
        Command::Egorov(a) => ("egorov", a),
        Command::Trace(a) => ("trace", a),
        Command::QeCatmap(a) => ("qe-catmap", a),
        Command::QeLaplace(a) => ("qe-laplace", a),
        Command::WeylCount(a) => ("weyl-count", a),
        Command::DiskMass(a) => ("disk-mass", a),
        Command::ProofChain(a) => ("proof-chain", a),
        Command::HusimiExport(a) => ("husimi-export", a),
        Command::ScarScan(a) => ("scar-scan", a),
    };
    match run(name, args) {
        Ok(out) => {
            println!("wrote {}", out.display());
            ExitCode::from(EXIT_OK)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(name: &str, args: RunArgs) -> Result<PathBuf, CliError> {
    let cfg = LoadedConfig::from_file(&args.config)?;
    if cfg.experiment.kind() != name {
        return Err(CliError::Semantic(vec![format!(
            "config describes a `{}` experiment, not `{name}`",
            cfg.experiment.kind()
        )]));
    }
    let opts = RunOptions::resolve(&cfg, args.out, args.cache, args.seed);
    qchaos_cli::run(&cfg, &opts)?;
    Ok(opts.out)
}

fn validate(path: &std::path::Path) -> u8 {
    let cfg = match LoadedConfig::from_file(path) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return e.validate_exit_code();
        }
    };
    let diagnostics = cfg.diagnostics();
    if diagnostics.is_empty() {
        println!("ok: {} config is valid", cfg.experiment.kind());
        EXIT_OK
    } else {
        for d in &diagnostics {
            eprintln!("error: {d}");
        }
        EXIT_CONFIG
    }
}
