//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails. Runs under `cargo test` as a harness-free target.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use qchaos_core::laplace::{
    disk_mass_in_radius, torus_phase_moment, weyl_count_compare, Domain, LaplaceObservable, Monomial, PhaseSymbol, PhaseTerm,
};
use qchaos_core::quantum::{
    max_abs_diff, product_defect, propagator, quantize, translation_egorov_scan, CatSystem, Orientation,
};
use qchaos_core::stats::{catmap_report, hs_identity_check_in, integrated_qe_laplace, loglog_slope, proof_chain_with};
use qchaos_core::torus::{CatMap, LatticeVector, TorusObservable};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

type Criterion<'a> = (&'a str, Duration, Box<dyn FnOnce() -> Verdict + 'a>);

fn cos_x() -> TorusObservable {
    TorusObservable::cos_mode(LatticeVector::new(1, 0))
}

fn modes_up_to(k: i64) -> impl Iterator<Item = LatticeVector> {
    (-k..=k).flat_map(move |m| (-k..=k).map(move |n| LatticeVector::new(m, n)))
}

fn random_complex(k: i64, rng: &mut ChaCha8Rng) -> TorusObservable {
    TorusObservable::new(modes_up_to(k).map(|v| (v, C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))))
}

fn random_real(k: i64, rng: &mut ChaCha8Rng) -> TorusObservable {
    let a = random_complex(k, rng);
    a.add(&a.conj()).scale(C64::new(0.5, 0.0))
}

/// (1) adjoint and trace identities at N = 64.
fn exact_identities() -> Verdict {
    let n = 64;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = (0.0f64, 0.0f64);
    for k in 0..=3 {
        for _ in 0..5 {
            let a = random_complex(k, &mut rng);
            let op = quantize(n, &a).unwrap();
            let conj = quantize(n, &a.conj()).unwrap();
            let adj = op.matrix().adjoint().to_owned();
            worst.0 = worst.0.max(max_abs_diff(conj.matrix(), adj.as_ref()));
            worst.1 = worst.1.max((op.trace() - a.mean() * n as f64).norm());
        }
    }
    verdict(worst.0 < 1e-10 && worst.1 < 1e-10, format!("adjoint {:.1e}, trace {:.1e}", worst.0, worst.1))
}

/// (2) product-law slope over N = 64 .. 512.
fn product_scaling() -> Verdict {
    let a = cos_x();
    let b = TorusObservable::cos_mode(LatticeVector::new(0, 1)).add(&TorusObservable::sin_mode(LatticeVector::new(1, 1)).scale(C64::new(0.5, 0.0)));
    let sizes = [64usize, 128, 256, 512];
    let defects: Vec<f64> = sizes.iter().map(|&n| product_defect(n, &a, &b).unwrap()).collect();
    let xs: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let slope = loglog_slope(&xs, &defects).unwrap();
    verdict((-1.3..=-0.7).contains(&slope), format!("slope {slope:.4}, defects {:?}", defects.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>()))
}

/// (3) unitarity and the exact Egorov identity for all translations.
fn egorov() -> Verdict {
    let mut details = Vec::new();
    let mut pass = true;
    for n in [100usize, 512] {
        let u = propagator(n, CatMap::ARNOLD).unwrap();
        let o = u.calibrate().unwrap();
        let unitarity = u.unitarity_defect();
        let scan = translation_egorov_scan(&u, o, 3, 3).unwrap();
        let worst = scan.iter().map(|s| s.defect).fold(0.0, f64::max);
        pass &= unitarity < 1e-10 && worst < 1e-9 && scan.len() == 49 * 3 && o == Orientation::Forward;
        details.push(format!("N={n}: |U*U-I| {unitarity:.1e}, egorov {worst:.1e} over {} cases", scan.len()));
    }
    verdict(pass, details.join("; "))
}

/// (4) Hilbert-Schmidt identity and bound, 20 random real observables.
fn hs_identity() -> Verdict {
    let sys = CatSystem::build(101, CatMap::ARNOLD).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_identity = 0.0f64;
    let mut min_slack = f64::INFINITY;
    let mut pass = true;
    for _ in 0..20 {
        let a = random_real(3, &mut rng);
        let c = hs_identity_check_in(&sys, &a).unwrap();
        worst_identity = worst_identity.max((c.rhs - c.l2_norm_sq).abs());
        min_slack = min_slack.min(c.slack);
        pass &= (c.rhs - c.l2_norm_sq).abs() < 1e-10 && c.lhs <= c.rhs;
    }
    verdict(pass, format!("identity {worst_identity:.1e}, min slack {min_slack:.3e}"))
}

/// (5) the four steps of the variance bound at N = 1601, T = 4.
fn proof_chain(sys: &CatSystem) -> Verdict {
    let a = cos_x();
    let t = 4;
    let c = proof_chain_with(sys, &a, t).unwrap();
    let disjoint = sys.classical_map().orbit_collision_multiplicity(&a, t).unwrap() == 1;
    let exact_iv = c.hs_bound == 1.0 / (2.0 * t as f64) && c.von_neumann_bound == c.hs_bound;
    verdict(
        c.step_i_defect < 1e-9 && c.step_ii_defect < 1e-9 && c.passes[2] && exact_iv && disjoint,
        format!(
            "(i) {:.1e}, (ii) {:.1e}, (iii) {:.3e} <= {}, (iv) ||<a>_T||^2 = {} (disjoint orbits: {disjoint})",
            c.step_i_defect, c.step_ii_defect, c.s_avg, c.hs_bound, c.hs_bound
        ),
    )
}

/// Reference values of `S_N(cos 2 pi x)` for the default map, recorded from
/// the first full run (`N,S`).
const QE_REFERENCE: &str = include_str!("data/qe_catmap_reference.csv");

/// Relative drift allowed against a recorded value.
const REFERENCE_TOL: f64 = 1e-9;

/// (6) decay of the integrated statistic up to N = 1601.
///
/// Recorded values are enforced only where the spectrum is simple: inside a
/// degenerate eigenspace `S` depends on the basis the eigensolver returns.
fn qe_decay(sys_1601: &CatSystem) -> Verdict {
    let a = cos_x();
    let eps = 0.1;
    let reference: BTreeMap<usize, f64> = QE_REFERENCE
        .lines()
        .skip(1)
        .map(|l| {
            let (n, v) = l.split_once(',').unwrap();
            (n.parse().unwrap(), v.parse().unwrap())
        })
        .collect();
    let mut s = BTreeMap::new();
    let mut pinned = true;
    let mut notes = Vec::new();
    let mut last = None;
    for n in [101usize, 211, 401, 809, 1601] {
        let built;
        let sys = if n == 1601 {
            sys_1601
        } else {
            built = CatSystem::build(n, CatMap::ARNOLD).unwrap();
            &built
        };
        let r = catmap_report(sys, &a).unwrap();
        let drift = reference.get(&n).map_or(f64::INFINITY, |v| (r.s() - v).abs() / v);
        let simple = sys.spectrum.clusters().is_empty();
        if simple {
            pinned &= drift <= REFERENCE_TOL;
        }
        notes.push(format!("N={n}: S {:.4e}, drift {drift:.1e}{}", r.s(), if simple { "" } else { " (degenerate, not pinned)" }));
        s.insert(n, r.s());
        last = Some(r);
    }
    let r = last.unwrap();
    let frac = r.exceptional_fraction(eps);
    let bound = r.chebyshev_bound(eps);
    if std::env::var_os("QCHAOS_PRINT_REFERENCE").is_some() {
        println!("N,S");
        for (n, v) in &s {
            println!("{n},{v:e}");
        }
    }
    verdict(
        s[&1601] < s[&101] / 2.0 && frac <= bound && pinned,
        format!(
            "{}; S_1601/S_101 = {:.3}; fraction(0.1) at 1601 {frac:.4} <= Chebyshev bound {bound:.4}",
            notes.join("; "),
            s[&1601] / s[&101]
        ),
    )
}

/// (7) Weyl law on the unit square.
fn weyl_law() -> Verdict {
    let d = Domain::rectangle(1.0, 1.0).unwrap();
    let mut pass = true;
    let mut prev = f64::INFINITY;
    let mut details = Vec::new();
    for r in [100.0f64, 200.0, 400.0] {
        let w = weyl_count_compare(&d, r).unwrap();
        let gap = (w.count as f64 - w.two_term).abs();
        let rel = w.relative_error();
        pass &= gap <= 3.0 * r.powf(2.0 / 3.0) && rel < prev;
        prev = rel;
        details.push(format!("R={r}: count {}, |count-two_term| {gap:.2} <= {:.1}, rel {rel:.4}", w.count, 3.0 * r.powf(2.0 / 3.0)));
    }
    verdict(pass, details.join("; "))
}

/// (8) circle waves see only their half of the cosphere.
fn circle_localization() -> Verdict {
    // g(xi) = 2 + 3 xi - xi^2: g(1) = 4, g(-1) = -2
    let g = PhaseSymbol::momentum(1, vec![Monomial::new(2.0, &[0]), Monomial::new(3.0, &[1]), Monomial::new(-1.0, &[2])]).unwrap();
    let off = PhaseSymbol::new(
        1,
        vec![
            PhaseTerm { x_mode: vec![1], profile: vec![Monomial::new(1.0, &[0]), Monomial::new(0.5, &[1])] },
            PhaseTerm { x_mode: vec![-3], profile: vec![Monomial::new(2.0, &[2])] },
        ],
    )
    .unwrap();
    let mut pass = true;
    for j in 1..=200 {
        pass &= torus_phase_moment(&[j], &g).unwrap() == C64::new(4.0, 0.0);
        pass &= torus_phase_moment(&[-j], &g).unwrap() == C64::new(-2.0, 0.0);
        pass &= torus_phase_moment(&[j], &off).unwrap() == C64::new(0.0, 0.0);
    }
    verdict(pass, "moments equal g(1) = 4 for k = 1..200 (and g(-1) for -k); off-diagonal moments exactly 0")
}

/// (9) failure of equidistribution in the integrable examples.
fn non_ergodic() -> Verdict {
    let mass = disk_mass_in_radius(50, 1, 0.5).unwrap();
    let g = PhaseSymbol::momentum(2, vec![Monomial::new(1.0, &[2, 0]), Monomial::new(-1.0, &[0, 2])]).unwrap();
    let sigma2 = g.sphere_variance();
    let obs = LaplaceObservable::Phase { symbol: g };
    let mut pass = mass < 1e-6;
    let mut s = Vec::new();
    for r in [50.0, 100.0, 200.0] {
        let v = integrated_qe_laplace(&Domain::FlatTorus2D, &obs, r).unwrap().s();
        pass &= v >= sigma2 / 2.0;
        s.push(format!("{v:.4}"));
    }
    verdict(pass, format!("disk mass {mass:.2e} vs Lebesgue 0.25; flat torus S(R) = {s:?} >= sigma^2/2 = {}", sigma2 / 2.0))
}

fn write(dir: &Path, name: &str, body: &str) {
    std::fs::write(dir.join(name), body).unwrap();
}

/// Every file under `dir`, relative path to bytes; the manifest is reduced to
/// its deterministic fields.
fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
                continue;
            }
            let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
            let mut bytes = std::fs::read(&p).unwrap();
            if p.file_name().is_some_and(|f| f == "manifest.json") {
                let mut m: serde_json::Value = serde_json::from_slice(&bytes).unwrap();
                m.as_object_mut().unwrap().remove("timings");
                bytes = serde_json::to_vec(&m).unwrap();
            }
            out.insert(rel, bytes);
        }
    }
    out
}

/// (10) two fresh runs of every experiment produce identical bytes.
fn determinism() -> Verdict {
    let root = tempfile::tempdir().unwrap();
    let cfg = root.path();
    let cos = r#"{"modes":[{"m":1,"n":0,"re":0.5,"im":0},{"m":-1,"n":0,"re":0.5,"im":0}]}"#;
    write(cfg, "a.json", cos);
    let configs = [
        ("egorov", r#"{"experiment":"egorov","sizes":[16,60],"max_mode":2,"steps":2,"observable":"a.json"}"#.to_string()),
        ("trace", r#"{"experiment":"trace","sizes":[16,32,64],"observable":"a.json","product_with":"a.json"}"#.to_string()),
        ("qe-catmap", r#"{"experiment":"qe-catmap","sizes":[101,211],"observable":"a.json","seed":11}"#.to_string()),
        ("qe-laplace", r#"{"experiment":"qe-laplace","domain":{"kind":"rectangle","l1":1,"l2":2},"radii":[20,40],"observable":{"kind":"position_cosine","p":2}}"#.to_string()),
        ("weyl-count", r#"{"experiment":"weyl-count","domain":{"kind":"disk","radius":1},"radii":[20,40],"export_eigenvalues":true}"#.to_string()),
        ("disk-mass", r#"{"experiment":"disk-mass","modes":[[0,1],[50,1]],"r0":[0.5]}"#.to_string()),
        ("proof-chain", r#"{"experiment":"proof-chain","sizes":[101],"steps":[1,4],"observable":"a.json"}"#.to_string()),
        ("husimi-export", r#"{"experiment":"husimi-export","sizes":[64],"grid":16,"states":[0,5]}"#.to_string()),
        ("scar-scan", r#"{"experiment":"scar-scan","sizes":[50,64],"periods":[1,2]}"#.to_string()),
    ];
    let mut differing = Vec::new();
    for (kind, body) in &configs {
        write(cfg, &format!("{kind}.json"), body);
        let mut snaps = Vec::new();
        for run in ["first", "second"] {
            let out = cfg.join(run).join(kind);
            let status = Command::new(env!("CARGO_BIN_EXE_qchaos"))
                .args([kind, "--config"])
                .arg(cfg.join(format!("{kind}.json")))
                .arg("--out")
                .arg(&out)
                .arg("--cache")
                .arg(out.join("cache"))
                .env_remove("QCHAOS_CACHE")
                .output()
                .unwrap();
            if !status.status.success() {
                return verdict(false, format!("{kind} failed: {}", String::from_utf8_lossy(&status.stderr)));
            }
            snaps.push(snapshot(&out));
        }
        if snaps[0] != snaps[1] {
            let names: Vec<_> = snaps[0].keys().filter(|k| snaps[0].get(*k) != snaps[1].get(*k)).cloned().collect();
            differing.push(format!("{kind}: {names:?}"));
        }
    }
    verdict(differing.is_empty(), if differing.is_empty() { format!("{} experiments byte-identical, caches included", configs.len()) } else { differing.join("; ") })
}

fn main() -> ExitCode {
    // the libtest protocol asks for a listing; this target has no named tests
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let sys_1601 = std::cell::OnceCell::new();
    let shared = || -> &CatSystem { sys_1601.get_or_init(|| CatSystem::build(1601, CatMap::ARNOLD).unwrap()) };
    let criteria: Vec<Criterion> = vec![
        ("1 exact quantization identities", Duration::from_secs(1), Box::new(exact_identities)),
        ("2 product-law scaling", Duration::from_secs(30), Box::new(product_scaling)),
        ("3 unitarity and exact Egorov", Duration::from_secs(60), Box::new(egorov)),
        ("4 Hilbert-Schmidt identity", Duration::from_secs(60), Box::new(hs_identity)),
        ("5 proof chain at N = 1601", Duration::from_secs(600), Box::new(|| proof_chain(shared()))),
        ("6 integrated QE decay", Duration::from_secs(1800), Box::new(|| qe_decay(shared()))),
        ("7 Weyl law", Duration::from_secs(10), Box::new(weyl_law)),
        ("8 circle phase localization", Duration::from_secs(1), Box::new(circle_localization)),
        ("9 non-ergodic failure", Duration::from_secs(60), Box::new(non_ergodic)),
        ("10 determinism", Duration::from_secs(600), Box::new(determinism)),
    ];
    let mut failed = 0;
    for (name, limit, check) in criteria {
        let t0 = Instant::now();
        let v = check();
        let elapsed = t0.elapsed();
        let pass = v.pass && elapsed <= limit;
        failed += usize::from(!pass);
        println!(
            "{} [{name}] {} ({:.2}s, limit {}s)",
            if pass { "PASS" } else { "FAIL" },
            v.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
