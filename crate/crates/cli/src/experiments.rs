use std::fmt::Write as _;

use num_complex::Complex64 as C64;
use serde_json::json;

use qchaos_core::laplace::{disk_mass_in_radius, enumerate_eigenvalues, weyl_count_compare, Domain};
use qchaos_core::quantum::{
    coherent_state, egorov_defect, husimi, max_abs_diff, product_defect, propagator, quantize, translation_egorov_scan,
    CatSystem, Orientation,
};
use qchaos_core::stats::{catmap_report, density_one_extract, integrated_qe_laplace, loglog_slope, proof_chain_with, DecaySeries};
use qchaos_core::torus::{CatMap, TorusObservable};

use crate::cache::{CacheOutcome, SpectralCache};
use crate::config::{self, ExperimentConfig, LoadedConfig};
use crate::manifest::{Recorder, RunManifest};
use crate::{CliError, RunOptions};

/// Runs a validated config and writes its artifacts plus `manifest.json`.
///
/// Outputs are written before a numerical failure is reported, so partial
/// results stay inspectable.
pub fn run(cfg: &LoadedConfig, opts: &RunOptions) -> Result<RunManifest, CliError> {
    cfg.validate()?;
    let mut rec = Recorder::new(&opts.out, cfg.experiment.kind(), &cfg.canonical, opts.seed)?;
    let cache = SpectralCache::new(&opts.cache);
    let base = cfg.base_dir.as_path();
    let semantic = |e: String| CliError::Semantic(vec![e]);
    let verdict = match &cfg.experiment {
        ExperimentConfig::Egorov(c) => {
            let map = config::cat_map(c.map).map_err(semantic)?;
            let sizes = config::sizes("sizes", &c.sizes).map_err(semantic)?;
            let obs = match c.observable {
                Some(_) => Some(config::torus_observable(&c.observable, base).map_err(semantic)?),
                None => None,
            };
            let max_mode = c.max_mode.unwrap_or(config::DEFAULT_MAX_MODE);
            let steps = c.steps.unwrap_or(config::DEFAULT_STEPS);
            rec.timed("egorov", |rec| egorov(rec, map, &sizes, max_mode, steps, obs.as_ref()))?
        }
        ExperimentConfig::Trace(c) => {
            let sizes = config::sizes("sizes", &c.sizes).map_err(semantic)?;
            let a = config::torus_observable(&c.observable, base).map_err(semantic)?;
            let b = match c.product_with {
                Some(_) => Some(config::torus_observable(&c.product_with, base).map_err(semantic)?),
                None => None,
            };
            rec.timed("trace", |rec| trace(rec, &sizes, &a, b.as_ref()))?
        }
        ExperimentConfig::QeCatmap(c) => {
            let map = config::cat_map(c.map).map_err(semantic)?;
            let sizes = config::sizes("sizes", &c.sizes).map_err(semantic)?;
            let a = config::torus_observable(&c.observable, base).map_err(semantic)?;
            let eps = config::eps(c.eps).map_err(semantic)?;
            qe_catmap(&mut rec, &cache, opts.seed, map, &sizes, &a, eps)?
        }
        ExperimentConfig::QeLaplace(c) => {
            let d = config::domain(&c.domain).map_err(semantic)?;
            let radii = config::radii(&c.radii, 10.0).map_err(semantic)?;
            let a = config::laplace_observable(&c.observable, base).map_err(semantic)?;
            let eps = config::eps(c.eps).map_err(semantic)?;
            rec.timed("qe-laplace", |rec| qe_laplace(rec, &d, &radii, &a, eps))?
        }
        ExperimentConfig::WeylCount(c) => {
            let d = config::domain(&c.domain).map_err(semantic)?;
            let radii = config::radii(&c.radii, 10.0).map_err(semantic)?;
            rec.timed("weyl-count", |rec| weyl(rec, &d, &radii, c.export_eigenvalues))?
        }
        ExperimentConfig::DiskMass(c) => {
            let modes = c.modes.clone().unwrap_or_default();
            let r0 = c.r0.clone().unwrap_or_default();
            rec.timed("disk-mass", |rec| disk_mass(rec, &modes, &r0))?
        }
        ExperimentConfig::ProofChain(c) => {
            let map = config::cat_map(c.map).map_err(semantic)?;
            let sizes = config::sizes("sizes", &c.sizes).map_err(semantic)?;
            let a = config::torus_observable(&c.observable, base).map_err(semantic)?;
            let steps = config::steps(&c.steps).map_err(semantic)?;
            proof_chain(&mut rec, &cache, opts.seed, map, &sizes, &a, &steps)?
        }
        ExperimentConfig::HusimiExport(c) => {
            let map = config::cat_map(c.map).map_err(semantic)?;
            let sizes = config::sizes("sizes", &c.sizes).map_err(semantic)?;
            let grid = c.grid.unwrap_or(config::DEFAULT_GRID);
            let states = c.states.clone().unwrap_or_else(|| vec![0]);
            husimi_export(&mut rec, &cache, opts.seed, map, &sizes, grid, &states)?
        }
        ExperimentConfig::ScarScan(c) => {
            let map = config::cat_map(c.map).map_err(semantic)?;
            let sizes = config::sizes("sizes", &c.sizes).map_err(semantic)?;
            let periods = c.periods.clone().unwrap_or_else(|| vec![1]);
            let factor = c.factor.unwrap_or(config::DEFAULT_SCAR_FACTOR);
            scar_scan(&mut rec, &cache, opts.seed, map, &sizes, &periods, factor)?
        }
    };
    let manifest = rec.finish()?;
    match verdict {
        Ok(()) => Ok(manifest),
        Err(msg) => Err(CliError::Numerical(msg)),
    }
}

/// `Ok(Err(msg))`: outputs written, but a checked identity failed.
type Verdict = Result<(), String>;

fn system(rec: &mut Recorder, cache: &SpectralCache, seed: Option<u64>, map: CatMap, n: usize) -> Result<CatSystem, CliError> {
    let (mut sys, outcome) = rec.timed(&format!("spectrum N={n}"), |_| cache.system(map, n).map_err(CliError::numerical))?;
    let event = match outcome {
        CacheOutcome::Hit => "hit".to_string(),
        CacheOutcome::Miss => "miss".to_string(),
        CacheOutcome::Rebuilt(reason) => {
            eprintln!("warning: rebuilt spectral cache entry for N = {n}: {reason}");
            format!("rebuilt ({reason})")
        }
    };
    rec.note_cache(format!("N={n}: {event}"));
    if let Some(seed) = seed {
        sys.spectrum.rotate_clusters(seed);
    }
    Ok(sys)
}

/// Threshold for the exact Egorov identity.
const EGOROV_TOL: f64 = 1e-9;
const UNITARITY_TOL: f64 = 1e-10;

fn egorov(rec: &mut Recorder, map: CatMap, sizes: &[usize], max_mode: i64, steps: u32, obs: Option<&TorusObservable>) -> Result<Verdict, CliError> {
    let mut csv = String::from("N,orientation,t,v_m,v_n,w_m,w_n,defect\n");
    let mut obs_csv = String::from("N,t,defect\n");
    let mut summary = Vec::new();
    let mut failures = Vec::new();
    for &n in sizes {
        let u = propagator(n, map).map_err(CliError::numerical)?;
        let o = if n >= 8 { u.calibrate().map_err(CliError::numerical)? } else { Orientation::Forward };
        let unitarity = u.unitarity_defect();
        let scan = translation_egorov_scan(&u, o, max_mode, steps).map_err(CliError::numerical)?;
        let mut worst: f64 = 0.0;
        for s in &scan {
            worst = worst.max(s.defect);
            writeln!(csv, "{n},{},{},{},{},{},{},{:e}", o.as_str(), s.t, s.v.m, s.v.n, s.image.m, s.image.n, s.defect).unwrap();
        }
        let mut obs_worst: Option<f64> = None;
        if let Some(a) = obs {
            for t in 1..=steps {
                let d = egorov_defect(&u, o, a, t).map_err(CliError::numerical)?;
                obs_worst = Some(obs_worst.unwrap_or(0.0).max(d));
                writeln!(obs_csv, "{n},{t},{d:e}").unwrap();
            }
        }
        if unitarity >= UNITARITY_TOL || worst >= EGOROV_TOL || obs_worst.is_some_and(|d| d >= EGOROV_TOL) {
            failures.push(format!("N = {n}: unitarity {unitarity:e}, translation defect {worst:e}, observable {obs_worst:?}"));
        }
        summary.push(json!({"N": n, "orientation": o, "unitarity_defect": unitarity, "max_translation_defect": worst, "max_observable_defect": obs_worst}));
    }
    rec.write("egorov.csv", csv.as_bytes())?;
    if obs.is_some() {
        rec.write("egorov_observable.csv", obs_csv.as_bytes())?;
    }
    rec.write_json("egorov_summary.json", &json!({"tolerance": EGOROV_TOL, "sizes": summary}))?;
    Ok(if failures.is_empty() { Ok(()) } else { Err(failures.join("; ")) })
}

const IDENTITY_TOL: f64 = 1e-10;

fn trace(rec: &mut Recorder, sizes: &[usize], a: &TorusObservable, b: Option<&TorusObservable>) -> Result<Verdict, CliError> {
    let mut csv = String::from("N,trace_defect,adjoint_defect,hs_norm_sq,l2_norm_sq,hs_defect");
    if b.is_some() {
        csv.push_str(",product_defect");
    }
    csv.push('\n');
    let mut failures = Vec::new();
    let mut products = Vec::new();
    for &n in sizes {
        let op = quantize(n, a).map_err(CliError::numerical)?;
        let trace_defect = (op.trace() - a.mean() * n as f64).norm();
        let conj = quantize(n, &a.conj()).map_err(CliError::numerical)?;
        let adjoint_defect = max_abs_diff(conj.matrix(), op.matrix().adjoint().to_owned().as_ref());
        let hs = op.normalized_hs_norm_sq();
        let hs_defect = (hs - a.l2_norm_sq()).abs();
        write!(csv, "{n},{trace_defect:e},{adjoint_defect:e},{hs},{},{hs_defect:e}", a.l2_norm_sq()).unwrap();
        if let Some(b) = b {
            let p = product_defect(n, a, b).map_err(CliError::numerical)?;
            products.push(p);
            write!(csv, ",{p:e}").unwrap();
        }
        csv.push('\n');
        if trace_defect >= IDENTITY_TOL * n as f64 || adjoint_defect >= IDENTITY_TOL || hs_defect >= IDENTITY_TOL {
            failures.push(format!("N = {n}: trace {trace_defect:e}, adjoint {adjoint_defect:e}, HS {hs_defect:e}"));
        }
    }
    rec.write("trace.csv", csv.as_bytes())?;
    let slope = if products.len() >= 2 && products.iter().all(|&p| p > 0.0) {
        let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
        Some(loglog_slope(&xs, &products).map_err(CliError::numerical)?)
    } else {
        None
    };
    rec.write_json("trace_summary.json", &json!({"tolerance": IDENTITY_TOL, "product_slope": slope}))?;
    Ok(if failures.is_empty() { Ok(()) } else { Err(failures.join("; ")) })
}

fn qe_catmap(
    rec: &mut Recorder,
    cache: &SpectralCache,
    seed: Option<u64>,
    map: CatMap,
    sizes: &[usize],
    a: &TorusObservable,
    eps: f64,
) -> Result<Verdict, CliError> {
    let mut reports = Vec::new();
    let mut summary = Vec::new();
    for &n in sizes {
        let sys = system(rec, cache, seed, map, n)?;
        let report = rec.timed(&format!("matrix elements N={n}"), |_| catmap_report(&sys, a).map_err(CliError::numerical))?;
        rec.write_json(&format!("qe_N{n}.json"), &report.to_json(eps))?;
        let kept = density_one_extract(&report, eps).map_err(CliError::numerical)?.len();
        summary.push(json!({
            "N": n,
            "S": report.s(),
            "exceptional_fraction": report.exceptional_fraction(eps),
            "chebyshev_bound": report.chebyshev_bound(eps),
            "density_one_size": kept,
        }));
        reports.push(report);
    }
    let series = DecaySeries::from_reports(&reports, eps).map_err(CliError::numerical)?;
    rec.write("decay.csv", series.to_csv().as_bytes())?;
    rec.write_json("qe_summary.json", &json!({"eps": eps, "map": map, "sizes": summary}))?;
    Ok(Ok(()))
}

fn qe_laplace(rec: &mut Recorder, d: &Domain, radii: &[f64], a: &qchaos_core::laplace::LaplaceObservable, eps: f64) -> Result<Verdict, CliError> {
    let mut reports = Vec::new();
    let mut summary = Vec::new();
    for &r in radii {
        let report = integrated_qe_laplace(d, a, r).map_err(CliError::numerical)?;
        rec.write_json(&format!("qe_R{r}.json"), &report.to_json(eps))?;
        summary.push(json!({
            "R": r,
            "window_size": report.len(),
            "S": report.s(),
            "exceptional_fraction": report.exceptional_fraction(eps),
            "chebyshev_bound": report.chebyshev_bound(eps),
        }));
        reports.push(report);
    }
    let series = DecaySeries::from_reports(&reports, eps).map_err(CliError::numerical)?;
    rec.write("decay.csv", series.to_csv().as_bytes())?;
    rec.write_json("qe_summary.json", &json!({"eps": eps, "domain": d, "radii": summary}))?;
    Ok(Ok(()))
}

fn weyl(rec: &mut Recorder, d: &Domain, radii: &[f64], export: bool) -> Result<Verdict, CliError> {
    let mut csv = String::from("R,count,leading,two_term,rel_error\n");
    for &r in radii {
        let w = weyl_count_compare(d, r).map_err(CliError::numerical)?;
        writeln!(csv, "{r},{},{},{},{}", w.count, w.leading, w.two_term, w.relative_error()).unwrap();
    }
    rec.write("weyl.csv", csv.as_bytes())?;
    if export {
        let top = *radii.last().expect("radii validated nonempty");
        let data = enumerate_eigenvalues(d, top).map_err(CliError::numerical)?;
        rec.write("eigenvalues.csv", data.to_csv().as_bytes())?;
    }
    Ok(Ok(()))
}

fn disk_mass(rec: &mut Recorder, modes: &[(i64, u32)], r0: &[f64]) -> Result<Verdict, CliError> {
    let mut csv = String::from("m,k,r0,mass,lebesgue\n");
    for &(m, k) in modes {
        for &r in r0 {
            let mass = disk_mass_in_radius(m, k, r).map_err(CliError::numerical)?;
            writeln!(csv, "{m},{k},{r},{mass:e},{}", r * r).unwrap();
        }
    }
    rec.write("disk_mass.csv", csv.as_bytes())?;
    Ok(Ok(()))
}

fn proof_chain(
    rec: &mut Recorder,
    cache: &SpectralCache,
    seed: Option<u64>,
    map: CatMap,
    sizes: &[usize],
    a: &TorusObservable,
    steps: &[u32],
) -> Result<Verdict, CliError> {
    let mut csv = String::from("N,T,step_i_defect,S_a,S_avg,step_ii_defect,hs_bound,von_neumann_bound,pass_i,pass_ii,pass_iii,pass_iv\n");
    let mut failures = Vec::new();
    for &n in sizes {
        let sys = system(rec, cache, seed, map, n)?;
        for &t in steps {
            let c = proof_chain_with(&sys, a, t).map_err(CliError::numerical)?;
            let [p1, p2, p3, p4] = c.passes;
            writeln!(
                csv,
                "{n},{t},{:e},{},{},{:e},{},{},{p1},{p2},{p3},{p4}",
                c.step_i_defect, c.s_a, c.s_avg, c.step_ii_defect, c.hs_bound, c.von_neumann_bound
            )
            .unwrap();
            if !c.all_pass() {
                failures.push(format!("N = {n}, T = {t}: passes {:?}", c.passes));
            }
        }
    }
    rec.write("chain.csv", csv.as_bytes())?;
    Ok(if failures.is_empty() { Ok(()) } else { Err(failures.join("; ")) })
}

fn grid_csv(g: usize, values: &[f64]) -> String {
    let mut out = String::new();
    for iq in 0..g {
        let row: Vec<String> = (0..g).map(|ip| values[iq * g + ip].to_string()).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

fn husimi_export(
    rec: &mut Recorder,
    cache: &SpectralCache,
    seed: Option<u64>,
    map: CatMap,
    sizes: &[usize],
    grid: usize,
    states: &[usize],
) -> Result<Verdict, CliError> {
    for &n in sizes {
        let sys = system(rec, cache, seed, map, n)?;
        for &j in states {
            let v = sys.spectrum.vectors();
            let col: Vec<C64> = (0..n).map(|i| v[(i, j)]).collect();
            let h = husimi(&col, grid).map_err(CliError::numerical)?;
            rec.write(&format!("husimi_N{n}_state{j}.csv"), grid_csv(grid, &h.values).as_bytes())?;
        }
    }
    Ok(Ok(()))
}

/// Exploratory: Husimi density `N |<c_{q,p}, u_j>|^2` (uniform value 1) at
/// the periodic points of the classical map.
fn scar_scan(
    rec: &mut Recorder,
    cache: &SpectralCache,
    seed: Option<u64>,
    map: CatMap,
    sizes: &[usize],
    periods: &[u32],
    factor: f64,
) -> Result<Verdict, CliError> {
    let mut csv = String::from("N,period,state,phase,max_density,flagged\n");
    let mut summary = Vec::new();
    for &n in sizes {
        let sys = system(rec, cache, seed, map, n)?;
        let v = sys.spectrum.vectors();
        for &t in periods {
            let points = sys.classical_map().fixed_points(t).map_err(CliError::numerical)?;
            let states: Vec<Vec<C64>> = points
                .iter()
                .map(|(q, p)| coherent_state(n, *q.numer() as f64 / *q.denom() as f64, *p.numer() as f64 / *p.denom() as f64))
                .collect();
            let mut flagged = 0;
            for j in 0..n {
                let max_density = states
                    .iter()
                    .map(|c| n as f64 * (0..n).map(|i| c[i].conj() * v[(i, j)]).sum::<C64>().norm_sqr())
                    .fold(0.0, f64::max);
                let flag = max_density > factor;
                flagged += flag as usize;
                writeln!(csv, "{n},{t},{j},{},{max_density},{flag}", sys.spectrum.phases()[j]).unwrap();
            }
            summary.push(json!({"N": n, "period": t, "periodic_points": points.len(), "flagged": flagged, "fraction": flagged as f64 / n as f64}));
        }
    }
    rec.write("scar.csv", csv.as_bytes())?;
    rec.write_json("scar_summary.json", &json!({"factor": factor, "scans": summary}))?;
    Ok(Ok(()))
}
