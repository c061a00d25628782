//! Experiment configuration files.
//!
//! A config is one JSON object whose `experiment` key selects the schema.
//! Every schema rejects unknown keys; those failures (and JSON syntax errors)
//! are *parse* errors. Missing or out-of-range values are *semantic* errors,
//! reported as a list of diagnostics by [`LoadedConfig::diagnostics`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use qchaos_core::laplace::{Domain, LaplaceObservable};
use qchaos_core::torus::{CatMap, TorusObservable};

use crate::CliError;

/// Keys shared by every experiment, stripped before schema dispatch.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CommonOptions {
    pub out: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    Egorov(EgorovConfig),
    Trace(TraceConfig),
    QeCatmap(QeCatmapConfig),
    QeLaplace(QeLaplaceConfig),
    WeylCount(WeylCountConfig),
    DiskMass(DiskMassConfig),
    ProofChain(ProofChainConfig),
    HusimiExport(HusimiConfig),
    ScarScan(ScarScanConfig),
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::Egorov(_) => "egorov",
            ExperimentConfig::Trace(_) => "trace",
            ExperimentConfig::QeCatmap(_) => "qe-catmap",
            ExperimentConfig::QeLaplace(_) => "qe-laplace",
            ExperimentConfig::WeylCount(_) => "weyl-count",
            ExperimentConfig::DiskMass(_) => "disk-mass",
            ExperimentConfig::ProofChain(_) => "proof-chain",
            ExperimentConfig::HusimiExport(_) => "husimi-export",
            ExperimentConfig::ScarScan(_) => "scar-scan",
        }
    }
}

/// Exact Egorov check for translations `|v|_inf <= max_mode`, `1 <= t <= steps`,
/// and optionally for a given observable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgorovConfig {
    pub map: Option<[i64; 4]>,
    pub sizes: Option<Vec<usize>>,
    pub max_mode: Option<i64>,
    pub steps: Option<u32>,
    pub observable: Option<Value>,
}

/// Quantization identities: trace formula, adjoint law, Hilbert-Schmidt norm
/// and, with `product_with`, the product law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceConfig {
    pub sizes: Option<Vec<usize>>,
    pub observable: Option<Value>,
    pub product_with: Option<Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QeCatmapConfig {
    pub map: Option<[i64; 4]>,
    pub sizes: Option<Vec<usize>>,
    pub observable: Option<Value>,
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QeLaplaceConfig {
    pub domain: Option<Value>,
    pub radii: Option<Vec<f64>>,
    pub observable: Option<Value>,
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeylCountConfig {
    pub domain: Option<Value>,
    pub radii: Option<Vec<f64>>,
    #[serde(default)]
    pub export_eigenvalues: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiskMassConfig {
    /// `(m, k)` pairs.
    pub modes: Option<Vec<(i64, u32)>>,
    pub r0: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProofChainConfig {
    pub map: Option<[i64; 4]>,
    pub sizes: Option<Vec<usize>>,
    pub observable: Option<Value>,
    pub steps: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HusimiConfig {
    pub map: Option<[i64; 4]>,
    pub sizes: Option<Vec<usize>>,
    pub grid: Option<usize>,
    pub states: Option<Vec<usize>>,
}

/// Flags eigenstates whose Husimi density at periodic points exceeds
/// `factor` times the uniform value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScarScanConfig {
    pub map: Option<[i64; 4]>,
    pub sizes: Option<Vec<usize>>,
    pub periods: Option<Vec<u32>>,
    pub factor: Option<f64>,
}

pub const DEFAULT_MAX_MODE: i64 = 3;
pub const DEFAULT_STEPS: u32 = 3;
pub const DEFAULT_GRID: usize = 32;
pub const DEFAULT_SCAR_FACTOR: f64 = 3.0;

/// A parsed config plus the directory relative paths are resolved against.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub experiment: ExperimentConfig,
    pub common: CommonOptions,
    pub base_dir: PathBuf,
    /// Canonical JSON of the parsed config, hashed into the manifest.
    pub canonical: String,
}

impl LoadedConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_str(&text, &base)
    }

    pub fn from_str(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let value: Value = serde_json::from_str(text).map_err(|e| CliError::Parse(format!("invalid JSON: {e}")))?;
        let Value::Object(mut obj) = value else {
            return Err(CliError::Parse("config must be a JSON object".into()));
        };
        let path_field = |obj: &mut serde_json::Map<String, Value>, key: &str| -> Result<Option<PathBuf>, CliError> {
            match obj.remove(key) {
                None | Some(Value::Null) => Ok(None),
                Some(Value::String(s)) => Ok(Some(PathBuf::from(s))),
                Some(other) => Err(CliError::Parse(format!("`{key}` must be a string, got {other}"))),
            }
        };
        let out = path_field(&mut obj, "out")?;
        let cache = path_field(&mut obj, "cache")?;
        let seed = match obj.remove("seed") {
            None | Some(Value::Null) => None,
            Some(v) => Some(v.as_u64().ok_or_else(|| CliError::Parse(format!("`seed` must be a nonnegative integer, got {v}")))?),
        };
        let experiment: ExperimentConfig =
            serde_json::from_value(Value::Object(obj)).map_err(|e| CliError::Parse(format!("schema: {e}")))?;
        let common = CommonOptions { out, cache, seed };
        let canonical = serde_json::to_string(&serde_json::json!({ "experiment": &experiment, "common": &common }))
            .expect("config serializes");
        Ok(Self { experiment, common, base_dir: base_dir.to_path_buf(), canonical })
    }

    /// Semantic diagnostics; empty when the config can run.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut d = Diagnostics::default();
        let base = self.base_dir.as_path();
        match &self.experiment {
            ExperimentConfig::Egorov(c) => {
                d.take(cat_map(c.map));
                let sizes = d.take(sizes("sizes", &c.sizes));
                if c.max_mode.is_some_and(|m| m < 0) {
                    d.push("max_mode must be nonnegative");
                }
                if c.steps == Some(0) {
                    d.push("steps must be positive");
                }
                if c.observable.is_some() {
                    if let (Some(a), Some(s)) = (d.take(torus_observable(&c.observable, base)), sizes) {
                        d.take(alias_free(&a, &s));
                    }
                }
            }
            ExperimentConfig::Trace(c) => {
                let sizes = d.take(sizes("sizes", &c.sizes));
                let a = d.take(torus_observable(&c.observable, base));
                if let (Some(a), Some(s)) = (&a, &sizes) {
                    d.take(alias_free(a, s));
                }
                if c.product_with.is_some() {
                    if let (Some(b), Some(a), Some(s)) = (d.take(torus_observable(&c.product_with, base)), &a, &sizes) {
                        d.take(alias_free(&a.product(&b), s).map_err(|e| format!("product: {e}")));
                    }
                }
            }
            ExperimentConfig::QeCatmap(c) => {
                d.take(cat_map(c.map));
                let sizes = d.take(sizes("sizes", &c.sizes));
                if let (Some(a), Some(s)) = (d.take(torus_observable(&c.observable, base)), sizes) {
                    d.take(alias_free(&a, &s));
                }
                d.take(eps(c.eps));
            }
            ExperimentConfig::QeLaplace(c) => {
                let dom = d.take(domain(&c.domain));
                d.take(radii(&c.radii, 10.0));
                if let (Some(dom), Some(obs)) = (dom, d.take(laplace_observable(&c.observable, base))) {
                    d.take(obs.check_domain(&dom).map_err(|e| e.to_string()));
                }
                d.take(eps(c.eps));
            }
            ExperimentConfig::WeylCount(c) => {
                d.take(domain(&c.domain));
                d.take(radii(&c.radii, 10.0));
            }
            ExperimentConfig::DiskMass(c) => {
                d.take(disk_modes(&c.modes));
                d.take(fractions(&c.r0));
            }
            ExperimentConfig::ProofChain(c) => {
                d.take(cat_map(c.map));
                d.take(sizes("sizes", &c.sizes));
                if let Some(a) = d.take(torus_observable(&c.observable, base)) {
                    if a.mean().norm() > 1e-12 {
                        d.push(format!("proof-chain observable must have mean zero, got {}", a.mean()));
                    }
                }
                d.take(steps(&c.steps));
            }
            ExperimentConfig::HusimiExport(c) => {
                d.take(cat_map(c.map));
                let sizes = d.take(sizes("sizes", &c.sizes));
                if c.grid.is_some_and(|g| g < 8) {
                    d.push("grid must be at least 8");
                }
                if let (Some(states), Some(sizes)) = (&c.states, sizes) {
                    if let Some(&bad) = states.iter().find(|&&j| sizes.iter().any(|&n| j >= n)) {
                        d.push(format!("state index {bad} exceeds the smallest size"));
                    }
                }
            }
            ExperimentConfig::ScarScan(c) => {
                d.take(cat_map(c.map));
                d.take(sizes("sizes", &c.sizes));
                d.take(steps(&c.periods).map_err(|e| e.replace("steps", "periods")));
                if c.factor.is_some_and(|f| !(f > 1.0)) {
                    d.push("factor must exceed 1");
                }
            }
        }
        d.0
    }

    /// Fails with [`CliError::Semantic`] unless [`diagnostics`](Self::diagnostics) is empty.
    pub fn validate(&self) -> Result<(), CliError> {
        let d = self.diagnostics();
        if d.is_empty() {
            Ok(())
        } else {
            Err(CliError::Semantic(d))
        }
    }
}

#[derive(Default)]
struct Diagnostics(Vec<String>);

impl Diagnostics {
    fn push(&mut self, msg: impl Into<String>) {
        self.0.push(msg.into());
    }

    fn take<T>(&mut self, r: Result<T, String>) -> Option<T> {
        r.map_err(|e| self.0.push(e)).ok()
    }
}

/// The cat map, defaulting to `[[2, 1], [3, 2]]`; must be quantizable.
pub fn cat_map(entries: Option<[i64; 4]>) -> Result<CatMap, String> {
    let Some([a, b, c, d]) = entries else {
        return Ok(CatMap::ARNOLD);
    };
    let m = CatMap::new(a, b, c, d).map_err(|e| format!("map: {e}"))?;
    if !m.is_quantizable() {
        return Err(format!("map {m} is not quantizable: the propagator needs b = 1 with a and d even"));
    }
    Ok(m)
}

pub fn sizes(key: &str, sizes: &Option<Vec<usize>>) -> Result<Vec<usize>, String> {
    let s = sizes.as_ref().ok_or_else(|| format!("missing `{key}` (list of dimensions N)"))?;
    if s.is_empty() {
        return Err(format!("`{key}` is empty"));
    }
    if s.contains(&0) {
        return Err(format!("`{key}` must be positive"));
    }
    if s.windows(2).any(|w| w[0] >= w[1]) {
        return Err(format!("`{key}` must be strictly increasing"));
    }
    Ok(s.clone())
}

pub fn radii(radii: &Option<Vec<f64>>, min: f64) -> Result<Vec<f64>, String> {
    let r = radii.as_ref().ok_or("missing `radii` (list of frequency cutoffs R)")?;
    if r.is_empty() || r.iter().any(|&x| !(x >= min && x.is_finite())) {
        return Err(format!("`radii` must be a nonempty list of finite values >= {min}"));
    }
    if r.windows(2).any(|w| w[0] >= w[1]) {
        return Err("`radii` must be strictly increasing".into());
    }
    Ok(r.clone())
}

pub fn eps(eps: Option<f64>) -> Result<f64, String> {
    let e = eps.unwrap_or(qchaos_core::stats::DEFAULT_EPS);
    if e > 0.0 {
        Ok(e)
    } else {
        Err(format!("eps must be positive, got {e}"))
    }
}

pub fn steps(steps: &Option<Vec<u32>>) -> Result<Vec<u32>, String> {
    let s = steps.as_ref().ok_or("missing `steps`")?;
    if s.is_empty() || s.contains(&0) {
        return Err("`steps` must be a nonempty list of positive integers".into());
    }
    Ok(s.clone())
}

fn fractions(r0: &Option<Vec<f64>>) -> Result<Vec<f64>, String> {
    let r = r0.as_ref().ok_or("missing `r0` (radius fractions)")?;
    if r.is_empty() || r.iter().any(|&x| !(x > 0.0 && x < 1.0)) {
        return Err("`r0` values must lie in (0, 1)".into());
    }
    Ok(r.clone())
}

fn disk_modes(modes: &Option<Vec<(i64, u32)>>) -> Result<Vec<(i64, u32)>, String> {
    let m = modes.as_ref().ok_or("missing `modes` (list of [m, k])")?;
    if m.is_empty() || m.iter().any(|&(_, k)| k == 0) {
        return Err("`modes` must be nonempty with radial index k >= 1".into());
    }
    Ok(m.clone())
}

pub fn domain(v: &Option<Value>) -> Result<Domain, String> {
    let v = v.as_ref().ok_or("missing `domain`")?;
    let d: Domain = serde_json::from_value(v.clone()).map_err(|e| format!("domain: {e}"))?;
    d.validate().map_err(|e| e.to_string())?;
    Ok(d)
}

/// Inline JSON, or a string naming a file relative to the config.
fn observable_value(v: &Option<Value>, base: &Path) -> Result<Value, String> {
    match v {
        None => Err("missing `observable`".into()),
        Some(Value::String(p)) => {
            let path = base.join(p);
            let text = std::fs::read_to_string(&path).map_err(|e| format!("observable file {}: {e}", path.display()))?;
            serde_json::from_str(&text).map_err(|e| format!("observable file {}: {e}", path.display()))
        }
        Some(v) => Ok(v.clone()),
    }
}

pub fn torus_observable(v: &Option<Value>, base: &Path) -> Result<TorusObservable, String> {
    TorusObservable::from_json_value(&observable_value(v, base)?).map_err(|e| format!("observable: {e}"))
}

pub fn laplace_observable(v: &Option<Value>, base: &Path) -> Result<LaplaceObservable, String> {
    serde_json::from_value(observable_value(v, base)?).map_err(|e| format!("observable: {e}"))
}

fn alias_free(a: &TorusObservable, sizes: &[usize]) -> Result<(), String> {
    let k = a.band_limit();
    match sizes.iter().find(|&&n| 2 * k as i128 >= n as i128) {
        Some(n) => Err(format!("observable band limit {k} aliases at N = {n} (need 2K < N)")),
        None => Ok(()),
    }
}
