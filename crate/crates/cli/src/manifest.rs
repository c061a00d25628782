use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Record of one run. Everything except `timings` is deterministic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub config_hash: String,
    pub version: String,
    /// File name to SHA-256 of its contents.
    pub artifacts: BTreeMap<String, String>,
    /// Stage name to wall-clock seconds.
    pub timings: BTreeMap<String, f64>,
    /// Cache events, e.g. `N=101: hit`.
    pub cache: Vec<String>,
    pub seed: Option<u64>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes artifacts into the output directory and builds the manifest.
pub struct Recorder {
    out: PathBuf,
    manifest: RunManifest,
    started: Instant,
}

impl Recorder {
    pub fn new(out: &Path, experiment: &str, canonical_config: &str, seed: Option<u64>) -> Result<Self, CliError> {
        std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        Ok(Self {
            out: out.to_path_buf(),
            manifest: RunManifest {
                experiment: experiment.into(),
                config_hash: sha256_hex(canonical_config.as_bytes()),
                version: env!("CARGO_PKG_VERSION").into(),
                artifacts: BTreeMap::new(),
                timings: BTreeMap::new(),
                cache: Vec::new(),
                seed,
            },
            started: Instant::now(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &[u8]) -> Result<(), CliError> {
        let path = self.out.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e))?;
        self.manifest.artifacts.insert(name.into(), sha256_hex(contents));
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &serde_json::Value) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("JSON value serializes");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    /// Runs `f`, recording its duration under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce(&mut Self) -> Result<T, CliError>) -> Result<T, CliError> {
        let t0 = Instant::now();
        let r = f(self);
        self.manifest.timings.insert(stage.into(), t0.elapsed().as_secs_f64());
        r
    }

    pub fn note_cache(&mut self, event: String) {
        self.manifest.cache.push(event);
    }

    pub fn finish(mut self) -> Result<RunManifest, CliError> {
        self.manifest.timings.insert("total".into(), self.started.elapsed().as_secs_f64());
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes") + "\n";
        let path = self.out.join(MANIFEST_FILE);
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(self.manifest)
    }
}
