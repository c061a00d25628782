//! Integrated quantum-ergodicity statistics for both model families: the
//! variance sum, Chebyshev extraction of a density-one subsequence, the
//! Hilbert-Schmidt bound and the full averaging chain on the torus.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

use crate::laplace::{enumerate_eigenvalues, Domain, LaplaceError, LaplaceObservable, WEYL_MIN_CUTOFF};
use crate::quantum::{quantize, CatSystem, QuantumError};
use crate::torus::{CatMap, TorusError, TorusObservable};

/// Default exceptional threshold.
pub const DEFAULT_EPS: f64 = 0.1;

/// Tolerance on the exact equalities (i) and (ii) of the averaging chain.
pub const CHAIN_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Torus(#[from] TorusError),
    #[error(transparent)]
    Laplace(#[from] LaplaceError),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Where the matrix elements come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QEModel {
    CatMap { n: usize, map: CatMap },
    /// Spectral window `[r, 2r]`.
    Laplace { domain: Domain, r: f64 },
}

impl QEModel {
    pub fn tag(&self) -> &'static str {
        match self {
            QEModel::CatMap { .. } => "cat_map",
            QEModel::Laplace { .. } => "laplace",
        }
    }

    /// `N` or `R`.
    pub fn size(&self) -> f64 {
        match self {
            QEModel::CatMap { n, .. } => *n as f64,
            QEModel::Laplace { r, .. } => *r,
        }
    }
}

/// Matrix elements `V_j` of one observable and the statistic
/// `S = c * sum_j |V_j - L_a|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QEReport {
    model: QEModel,
    liouville_mean: C64,
    values: Vec<C64>,
    normalization: f64,
    s: f64,
}

impl QEReport {
    pub fn new(model: QEModel, liouville_mean: C64, values: Vec<C64>, normalization: f64) -> Self {
        let s = variance_sum(&values, liouville_mean, normalization);
        Self { model, liouville_mean, values, normalization, s }
    }

    pub fn model(&self) -> &QEModel {
        &self.model
    }

    pub fn liouville_mean(&self) -> C64 {
        self.liouville_mean
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    /// Per-index weight `c`: `1/N` for the cat map, `R^{-n}` for a window.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `|V_j - L_a|`.
    pub fn deviations(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().map(move |v| (v - self.liouville_mean).norm())
    }

    /// Fraction of indices with `|V_j - L_a| > eps` (0 for an empty report).
    pub fn exceptional_fraction(&self, eps: f64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.deviations().filter(|&d| d > eps).count() as f64 / self.values.len() as f64
    }

    /// Chebyshev bound `S / (c * len * eps^2)` on the exceptional fraction.
    pub fn chebyshev_bound(&self, eps: f64) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.s / (self.normalization * self.values.len() as f64 * eps * eps)
    }

    /// `{model, N_or_R, L_a, S, eps, exceptional_fraction, V: [{re, im}]}`.
    /// `L_a` is reported by its real part; observables here are real.
    pub fn to_json(&self, eps: f64) -> serde_json::Value {
        json!({
            "model": self.model.tag(),
            "N_or_R": self.model.size(),
            "L_a": self.liouville_mean.re,
            "S": self.s,
            "eps": eps,
            "exceptional_fraction": self.exceptional_fraction(eps),
            "V": self.values.iter().map(|v| json!({"re": v.re, "im": v.im})).collect::<Vec<_>>(),
        })
    }
}

fn variance_sum(values: &[C64], mean: C64, c: f64) -> f64 {
    c * values.iter().map(|v| (v - mean).norm_sqr()).sum::<f64>()
}

fn check_eps(eps: f64) -> Result<(), StatsError> {
    if eps > 0.0 {
        Ok(())
    } else {
        Err(StatsError::InvalidArgument(format!("eps must be positive, got {eps}")))
    }
}

/// Fraction of exceptional indices at threshold `eps`.
pub fn chebyshev_fraction(report: &QEReport, eps: f64) -> Result<f64, StatsError> {
    check_eps(eps)?;
    Ok(report.exceptional_fraction(eps))
}

/// Sorted indices with `|V_j - L_a| <= eps`, the fixed-size stand-in for a
/// density-one subsequence.
pub fn density_one_extract(report: &QEReport, eps: f64) -> Result<Vec<usize>, StatsError> {
    check_eps(eps)?;
    Ok(report.deviations().enumerate().filter(|&(_, d)| d <= eps).map(|(j, _)| j).collect())
}

/// `S_N(a) = N^{-1} sum_j |V_j(a) - L_a|^2` over the eigenbasis of `U_N`.
pub fn integrated_qe_catmap(map: CatMap, a: &TorusObservable, n: usize) -> Result<QEReport, StatsError> {
    catmap_report(&CatSystem::build(n, map)?, a)
}

/// As [`integrated_qe_catmap`] for an already diagonalized system.
pub fn catmap_report(sys: &CatSystem, a: &TorusObservable) -> Result<QEReport, StatsError> {
    let values = sys.matrix_elements(a)?;
    let n = sys.n();
    Ok(QEReport::new(QEModel::CatMap { n, map: sys.map() }, a.mean(), values, 1.0 / n as f64))
}

/// `S(R) = R^{-n} sum_{lambda_j in [R, 2R]} |V_j - L_a|^2` from closed-form
/// matrix elements.
pub fn integrated_qe_laplace(d: &Domain, a: &LaplaceObservable, r: f64) -> Result<QEReport, StatsError> {
    if !(r >= WEYL_MIN_CUTOFF) {
        return Err(StatsError::InvalidArgument(format!("spectral window needs R >= {WEYL_MIN_CUTOFF}, got {r}")));
    }
    a.check_domain(d)?;
    let data = enumerate_eigenvalues(d, 2.0 * r)?;
    let values = data
        .window(r, 2.0 * r)
        .iter()
        .map(|e| a.matrix_element(d, e))
        .collect::<Result<Vec<_>, _>>()?;
    let c = r.powi(-(d.dim() as i32));
    Ok(QEReport::new(QEModel::Laplace { domain: *d, r }, a.liouville_mean(d)?, values, c))
}

/// Both sides of `N^{-1} sum_j |<Op u_j, u_j>|^2 <= N^{-1} tr(Op^* Op)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsCheck {
    pub lhs: f64,
    pub rhs: f64,
    /// `sum |a_k|^2`, which `rhs` reproduces exactly for `K < N/2`.
    pub l2_norm_sq: f64,
    pub slack: f64,
}

impl HsCheck {
    fn new(lhs: f64, rhs: f64, l2_norm_sq: f64) -> Self {
        Self { lhs, rhs, l2_norm_sq, slack: rhs - lhs }
    }

    /// `rhs` matches `||a||^2` to `1e-10` and `lhs <= rhs` up to rounding.
    pub fn holds(&self) -> bool {
        (self.rhs - self.l2_norm_sq).abs() <= 1e-10 * self.l2_norm_sq.max(1.0) && self.slack >= -1e-12 * self.rhs.max(1.0)
    }
}

/// Hilbert-Schmidt bound in the position basis.
pub fn hs_identity_check(a: &TorusObservable, n: usize) -> Result<HsCheck, StatsError> {
    let op = quantize(n, a)?;
    let m = op.matrix();
    let lhs = (0..n).map(|j| m[(j, j)].norm_sqr()).sum::<f64>() / n as f64;
    Ok(HsCheck::new(lhs, op.normalized_hs_norm_sq(), a.l2_norm_sq()))
}

/// Hilbert-Schmidt bound in the eigenbasis of a cat map.
pub fn hs_identity_check_in(sys: &CatSystem, a: &TorusObservable) -> Result<HsCheck, StatsError> {
    let op = quantize(sys.n(), a)?;
    let values = crate::quantum::matrix_elements(&sys.spectrum, &op)?;
    let lhs = values.iter().map(|v| v.norm_sqr()).sum::<f64>() / sys.n() as f64;
    Ok(HsCheck::new(lhs, op.normalized_hs_norm_sq(), a.l2_norm_sq()))
}

/// The four links of the averaging argument for one `(N, T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainRecord {
    pub n: usize,
    pub t: u32,
    /// (i) `max_j |V_j(a) - V_j(<a>_T)|`.
    pub step_i_defect: f64,
    pub s_a: f64,
    pub s_avg: f64,
    /// (ii) `|S_N(a) - S_N(<a>_T)|`.
    pub step_ii_defect: f64,
    /// (iii) bound `||<a>_T||^2` on `S_N(<a>_T)`.
    pub hs_bound: f64,
    /// (iv) `C_a / T` bounding `||<a>_T||^2`.
    pub von_neumann_bound: f64,
    pub passes: [bool; 4],
}

impl ChainRecord {
    pub fn all_pass(&self) -> bool {
        self.passes.iter().all(|&p| p)
    }
}

fn leq_rounded(lhs: f64, rhs: f64) -> bool {
    lhs <= rhs + 1e-12 * rhs.abs().max(1e-3)
}

pub fn proof_chain_check(map: CatMap, a: &TorusObservable, n: usize, t: u32) -> Result<ChainRecord, StatsError> {
    proof_chain_with(&CatSystem::build(n, map)?, a, t)
}

/// Verifies (i) `V_j(a) = V_j(<a>_T)`, (ii) `S_N(a) = S_N(<a>_T)`,
/// (iii) `S_N(<a>_T) <= ||<a>_T||^2` and (iv) `||<a>_T||^2 <= C_a / T` for a
/// mean-zero `a`, with `<a>_T` averaged along the map the propagator realizes.
pub fn proof_chain_with(sys: &CatSystem, a: &TorusObservable, t: u32) -> Result<ChainRecord, StatsError> {
    if a.mean().norm() > 1e-12 {
        return Err(StatsError::InvalidArgument(format!("observable must have mean zero, got {}", a.mean())));
    }
    if t == 0 {
        return Err(StatsError::InvalidArgument("averaging length must be positive".into()));
    }
    let classical = sys.classical_map();
    let avg = classical.ergodic_average(a, t)?;
    let direct = catmap_report(sys, a)?;
    let averaged = catmap_report(sys, &avg)?;
    let step_i_defect = direct
        .values()
        .iter()
        .zip(averaged.values())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    let step_ii_defect = (direct.s() - averaged.s()).abs();
    let hs_bound = avg.l2_norm_sq();
    let von_neumann_bound = classical.von_neumann_constant(a, t)? / t as f64;
    let passes = [
        step_i_defect < CHAIN_TOL,
        step_ii_defect < CHAIN_TOL,
        leq_rounded(averaged.s(), hs_bound),
        leq_rounded(hs_bound, von_neumann_bound),
    ];
    Ok(ChainRecord {
        n: sys.n(),
        t,
        step_i_defect,
        s_a: direct.s(),
        s_avg: averaged.s(),
        step_ii_defect,
        hs_bound,
        von_neumann_bound,
        passes,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayPoint {
    /// `N` or `R`.
    pub size: f64,
    pub s: f64,
    pub fraction: f64,
}

/// `S` and the exceptional fraction along increasing sizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    pub eps: f64,
    pub points: Vec<DecayPoint>,
}

impl DecaySeries {
    pub fn from_reports(reports: &[QEReport], eps: f64) -> Result<Self, StatsError> {
        check_eps(eps)?;
        let points: Vec<DecayPoint> = reports
            .iter()
            .map(|r| DecayPoint { size: r.model().size(), s: r.s(), fraction: r.exceptional_fraction(eps) })
            .collect();
        if points.windows(2).any(|w| w[0].size >= w[1].size) {
            return Err(StatsError::InvalidArgument("sizes must be strictly increasing".into()));
        }
        Ok(Self { eps, points })
    }

    /// `size,S,frac` with a header row.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,S,frac\n");
        for p in &self.points {
            out.push_str(&format!("{},{:.17e},{:.17e}\n", p.size, p.s, p.fraction));
        }
        out
    }
}

fn check_increasing<T: PartialOrd + Copy + std::fmt::Debug>(sizes: &[T]) -> Result<(), StatsError> {
    if sizes.is_empty() || sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(StatsError::InvalidArgument(format!("sizes must be nonempty and strictly increasing, got {sizes:?}")));
    }
    Ok(())
}

/// Cat-map sweep over `N`; primes avoid short quantum periods.
pub fn decay_experiment(map: CatMap, a: &TorusObservable, sizes: &[usize], eps: f64) -> Result<DecaySeries, StatsError> {
    check_increasing(sizes)?;
    check_eps(eps)?;
    let reports = sizes.iter().map(|&n| integrated_qe_catmap(map, a, n)).collect::<Result<Vec<_>, _>>()?;
    DecaySeries::from_reports(&reports, eps)
}

/// Laplace sweep over window parameters `R`.
pub fn laplace_decay_experiment(d: &Domain, a: &LaplaceObservable, radii: &[f64], eps: f64) -> Result<DecaySeries, StatsError> {
    check_increasing(radii)?;
    check_eps(eps)?;
    let reports = radii.iter().map(|&r| integrated_qe_laplace(d, a, r)).collect::<Result<Vec<_>, _>>()?;
    DecaySeries::from_reports(&reports, eps)
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64, StatsError> {
    if xs.len() != ys.len() || xs.len() < 2 || xs.iter().chain(ys).any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(StatsError::InvalidArgument("slope fit needs >= 2 matching positive samples".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let k = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / k, ly.iter().sum::<f64>() / k);
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(StatsError::InvalidArgument("slope fit needs distinct x values".into()));
    }
    Ok(sxy / sxx)
}
