//! On-disk cache of cat-map eigendecompositions.
//!
//! One file per `(map, N, orientation, version)`: a JSON header line
//! `{N, map, orientation, version, checksum}` followed by raw little-endian
//! `f64` data — the `N` eigenphases, then the eigenvectors column by column
//! with interleaved real and imaginary parts. `checksum` is the SHA-256 of the
//! binary payload. Eigenvector phases are canonicalized before storage, so
//! the bytes are stable across runs.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use faer::Mat;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use qchaos_core::quantum::{propagator, spectrum, CatSystem, Orientation, QuantumError, SpectralDecomposition};
use qchaos_core::torus::CatMap;

/// Bumped whenever the payload layout or the canonicalization changes.
pub const CACHE_VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "/2");

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("corrupt cache entry {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("cache I/O on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Header {
    #[serde(rename = "N")]
    n: usize,
    map: CatMap,
    orientation: Orientation,
    version: String,
    checksum: String,
}

/// How a lookup was satisfied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CacheOutcome {
    Hit,
    Miss,
    /// The stored entry failed verification and was recomputed.
    Rebuilt(String),
}

#[derive(Debug, Clone)]
pub struct SpectralCache {
    root: PathBuf,
}

impl SpectralCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, map: CatMap, n: usize, orientation: Orientation) -> PathBuf {
        let [a, b, c, d] = map.entries();
        self.root.join(format!("spectrum_{a}_{b}_{c}_{d}_N{n}_{}.bin", orientation.as_str()))
    }

    /// `Ok(None)` when absent; `Err(Corrupt)` when present but unusable.
    pub fn load(&self, map: CatMap, n: usize, orientation: Orientation) -> Result<Option<SpectralDecomposition>, CacheError> {
        let path = self.path(map, n, orientation);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(source) => return Err(CacheError::Io { path, source }),
        };
        let corrupt = |reason: String| CacheError::Corrupt { path: path.clone(), reason };
        let split = bytes.iter().position(|&b| b == b'\n').ok_or_else(|| corrupt("missing header line".into()))?;
        let header: Header = serde_json::from_slice(&bytes[..split]).map_err(|e| corrupt(format!("header: {e}")))?;
        let payload = &bytes[split + 1..];
        let expected = Header { n, map, orientation, version: CACHE_VERSION.into(), checksum: header.checksum.clone() };
        if header != expected {
            return Err(corrupt(format!("header {header:?} does not match the requested entry")));
        }
        let digest = hex::encode(Sha256::digest(payload));
        if digest != header.checksum {
            return Err(corrupt(format!("checksum mismatch: stored {}, computed {digest}", header.checksum)));
        }
        if payload.len() != 8 * (n + 2 * n * n) {
            return Err(corrupt(format!("payload has {} bytes, expected {}", payload.len(), 8 * (n + 2 * n * n))));
        }
        let mut words = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")));
        let phases: Vec<f64> = words.by_ref().take(n).collect();
        let mut vectors = Mat::<C64>::zeros(n, n);
        for j in 0..n {
            for i in 0..n {
                let re = words.next().expect("length checked");
                let im = words.next().expect("length checked");
                vectors[(i, j)] = C64::new(re, im);
            }
        }
        SpectralDecomposition::from_parts(phases, vectors).map(Some).map_err(|e| corrupt(e.to_string()))
    }

    /// Writes atomically through a temporary file in the same directory.
    pub fn store(&self, map: CatMap, orientation: Orientation, spec: &SpectralDecomposition) -> Result<PathBuf, CacheError> {
        let n = spec.len();
        let path = self.path(map, n, orientation);
        let io = |source| CacheError::Io { path: path.clone(), source };
        fs::create_dir_all(&self.root).map_err(io)?;
        let mut payload = Vec::with_capacity(8 * (n + 2 * n * n));
        for &p in spec.phases() {
            payload.extend_from_slice(&p.to_le_bytes());
        }
        let v = spec.vectors();
        for j in 0..n {
            for i in 0..n {
                payload.extend_from_slice(&v[(i, j)].re.to_le_bytes());
                payload.extend_from_slice(&v[(i, j)].im.to_le_bytes());
            }
        }
        let header = Header { n, map, orientation, version: CACHE_VERSION.into(), checksum: hex::encode(Sha256::digest(&payload)) };
        let tmp = path.with_extension(format!("tmp{}", std::process::id()));
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(serde_json::to_string(&header).expect("header serializes").as_bytes()).map_err(io)?;
        f.write_all(b"\n").map_err(io)?;
        f.write_all(&payload).map_err(io)?;
        f.sync_all().map_err(io)?;
        fs::rename(&tmp, &path).map_err(io)?;
        Ok(path)
    }

    /// Builds the propagator, calibrates it and returns its eigenbasis,
    /// reading the cache when possible. A corrupt entry is reported in the
    /// outcome and overwritten with a fresh computation.
    pub fn system(&self, map: CatMap, n: usize) -> Result<(CatSystem, CacheOutcome), QuantumOrCache> {
        let u = propagator(n, map)?;
        let orientation = if n >= 8 { u.calibrate()? } else { Orientation::Forward };
        let outcome = match self.load(map, n, orientation) {
            Ok(Some(spec)) => return Ok((CatSystem { propagator: u, orientation, spectrum: spec }, CacheOutcome::Hit)),
            Ok(None) => CacheOutcome::Miss,
            Err(CacheError::Corrupt { reason, .. }) => CacheOutcome::Rebuilt(reason),
            Err(e) => return Err(e.into()),
        };
        let spec = spectrum(&u)?;
        self.store(map, orientation, &spec)?;
        Ok((CatSystem { propagator: u, orientation, spectrum: spec }, outcome))
    }
}

#[derive(Debug, Error)]
pub enum QuantumOrCache {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Cache(#[from] CacheError),
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SpectralCache::new(dir.path());
        let (fresh, outcome) = cache.system(CatMap::ARNOLD, 37).unwrap();
        assert_eq!(outcome, CacheOutcome::Miss);
        let (cached, outcome) = cache.system(CatMap::ARNOLD, 37).unwrap();
        assert_eq!(outcome, CacheOutcome::Hit);
        assert_eq!(fresh.spectrum.phases(), cached.spectrum.phases());
        assert_eq!(fresh.spectrum.vectors(), cached.spectrum.vectors());
    }

    #[test]
    fn corruption_is_detected_and_rebuilt() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SpectralCache::new(dir.path());
        let (fresh, _) = cache.system(CatMap::ARNOLD, 16).unwrap();
        let path = cache.path(CatMap::ARNOLD, 16, fresh.orientation);
        let mut bytes = fs::read(&path).unwrap();
        let last = bytes.len() - 3;
        bytes[last] ^= 0x40;
        fs::write(&path, &bytes).unwrap();
        assert!(matches!(cache.load(CatMap::ARNOLD, 16, fresh.orientation), Err(CacheError::Corrupt { .. })));
        let (rebuilt, outcome) = cache.system(CatMap::ARNOLD, 16).unwrap();
        assert!(matches!(outcome, CacheOutcome::Rebuilt(ref r) if r.contains("checksum")));
        assert_eq!(rebuilt.spectrum.vectors(), fresh.spectrum.vectors());
        assert_eq!(cache.system(CatMap::ARNOLD, 16).unwrap().1, CacheOutcome::Hit);
    }

    #[test]
    fn header_mismatch_and_garbage() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SpectralCache::new(dir.path());
        let path = cache.path(CatMap::ARNOLD, 12, Orientation::Forward);
        fs::write(&path, b"not a header").unwrap();
        assert!(matches!(cache.load(CatMap::ARNOLD, 12, Orientation::Forward), Err(CacheError::Corrupt { .. })));
        // an entry for N = 10 stored under the N = 12 name
        let (sys, _) = cache.system(CatMap::ARNOLD, 10).unwrap();
        fs::copy(cache.path(CatMap::ARNOLD, 10, sys.orientation), &path).unwrap();
        let err = cache.load(CatMap::ARNOLD, 12, Orientation::Forward).unwrap_err();
        assert!(err.to_string().contains("does not match"));
    }
}
