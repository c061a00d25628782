//! Batch runner for the `qchaos-core` experiments: JSON configs, a spectral
//! cache, and deterministic CSV/JSON outputs with a checksum manifest.

pub mod cache;
pub mod config;
mod experiments;
pub mod manifest;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use cache::{CacheOutcome, SpectralCache};
pub use config::{ExperimentConfig, LoadedConfig};
pub use experiments::run;
pub use manifest::RunManifest;

/// Environment variable naming the default cache root.
pub const CACHE_ENV: &str = "QCHAOS_CACHE";

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;
/// `validate` only: the file is not a well-formed config at all.
pub const EXIT_PARSE: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("invalid config:\n  {}", .0.join("\n  "))]
    Semantic(Vec<String>),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O error on {}: {source}", .path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }

    pub fn numerical(e: impl std::fmt::Display) -> Self {
        CliError::Numerical(e.to_string())
    }

    /// Exit status for experiment runs: 2 for any config error, 3 for a
    /// numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) | CliError::Semantic(_) => EXIT_CONFIG,
            CliError::Numerical(_) => EXIT_NUMERICAL,
            CliError::Io { .. } => EXIT_IO,
        }
    }

    /// Exit status for `validate`, which separates parse from semantic errors.
    pub fn validate_exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => EXIT_PARSE,
            other => other.exit_code(),
        }
    }
}

/// Where a run writes and caches.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub out: PathBuf,
    pub cache: PathBuf,
    /// Seeds the Haar rotation inside degenerate eigenspaces; `None` keeps
    /// the canonical basis.
    pub seed: Option<u64>,
}

impl RunOptions {
    /// Precedence: explicit flags, then the config file (paths relative to
    /// it), then `QCHAOS_CACHE`, then `<out>/cache`. Output defaults to
    /// `qchaos-out/<experiment>`.
    pub fn resolve(cfg: &LoadedConfig, out: Option<PathBuf>, cache: Option<PathBuf>, seed: Option<u64>) -> Self {
        let out = out
            .or_else(|| cfg.common.out.as_ref().map(|p| cfg.base_dir.join(p)))
            .unwrap_or_else(|| PathBuf::from("qchaos-out").join(cfg.experiment.kind()));
        let cache = cache
            .or_else(|| cfg.common.cache.as_ref().map(|p| cfg.base_dir.join(p)))
            .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
            .unwrap_or_else(|| out.join("cache"));
        Self { out, cache, seed: seed.or(cfg.common.seed) }
    }
}
