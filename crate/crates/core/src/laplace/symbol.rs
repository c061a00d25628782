use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::LaplaceError;

/// `c * xi_1^{p_1} (* xi_2^{p_2})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub re: f64,
    #[serde(default)]
    pub im: f64,
    pub powers: Vec<u32>,
}

impl Monomial {
    pub fn new(c: f64, powers: &[u32]) -> Self {
        Self { re: c, im: 0.0, powers: powers.to_vec() }
    }

    fn coeff(&self) -> C64 {
        C64::new(self.re, self.im)
    }

    fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }

    fn eval(&self, xi: &[f64]) -> C64 {
        self.coeff() * self.powers.iter().zip(xi).map(|(&p, &x)| x.powi(p as i32)).product::<f64>()
    }
}

/// `e^{i m . x} g(xi)` with `g` a polynomial in `xi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseTerm {
    pub x_mode: Vec<i64>,
    pub profile: Vec<Monomial>,
}

/// Phase-space observable `a(x, xi) = sum e^{i m . x} g_m(xi)` on the circle
/// or the flat 2-torus (`x` is `2 pi`-periodic).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSymbol {
    pub dim: usize,
    pub terms: Vec<PhaseTerm>,
}

impl PhaseSymbol {
    pub fn new(dim: usize, terms: Vec<PhaseTerm>) -> Result<Self, LaplaceError> {
        let s = Self { dim, terms };
        s.validate()?;
        Ok(s)
    }

    /// A function of `xi` alone.
    pub fn momentum(dim: usize, profile: Vec<Monomial>) -> Result<Self, LaplaceError> {
        Self::new(dim, vec![PhaseTerm { x_mode: vec![0; dim], profile }])
    }

    pub fn constant(dim: usize, c: f64) -> Result<Self, LaplaceError> {
        Self::momentum(dim, vec![Monomial::new(c, &vec![0; dim])])
    }

    pub fn validate(&self) -> Result<(), LaplaceError> {
        if !(1..=2).contains(&self.dim) {
            return Err(LaplaceError::InvalidArgument(format!("symbol dimension must be 1 or 2, got {}", self.dim)));
        }
        for t in &self.terms {
            if t.x_mode.len() != self.dim || t.profile.iter().any(|m| m.powers.len() != self.dim) {
                return Err(LaplaceError::InvalidArgument(format!("symbol term does not match dimension {}", self.dim)));
            }
            if t.profile.iter().any(|m| !(m.re.is_finite() && m.im.is_finite())) {
                return Err(LaplaceError::InvalidArgument("non-finite symbol coefficient".into()));
            }
        }
        Ok(())
    }

    /// `a + c`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut s = self.clone();
        s.terms.push(PhaseTerm { x_mode: vec![0; self.dim], profile: vec![Monomial::new(c, &vec![0; self.dim])] });
        s
    }

    /// The `x`-independent part `g_0(xi)`.
    pub fn zero_mode_profile(&self, xi: &[f64]) -> C64 {
        self.terms
            .iter()
            .filter(|t| t.x_mode.iter().all(|&m| m == 0))
            .flat_map(|t| &t.profile)
            .map(|m| m.eval(xi))
            .sum()
    }

    fn degree(&self) -> u32 {
        self.terms.iter().flat_map(|t| &t.profile).map(Monomial::degree).max().unwrap_or(0)
    }

    /// Values of `g_0` at quadrature nodes on the unit sphere `{|xi| = 1}`,
    /// equally weighted. For the circle these are `xi = +-1`; for the torus
    /// an equispaced rule that is exact for the polynomial degree at hand.
    fn sphere_samples(&self) -> Vec<C64> {
        if self.dim == 1 {
            return vec![self.zero_mode_profile(&[1.0]), self.zero_mode_profile(&[-1.0])];
        }
        let nodes = 2 * self.degree() as usize + 8;
        (0..nodes)
            .map(|i| {
                let phi = std::f64::consts::TAU * i as f64 / nodes as f64;
                self.zero_mode_profile(&[phi.cos(), phi.sin()])
            })
            .collect()
    }

    /// Liouville average over the unit cosphere bundle. Nonzero `x`-modes
    /// integrate to zero, leaving the sphere mean of `g_0`.
    pub fn liouville_mean(&self) -> C64 {
        let s = self.sphere_samples();
        s.iter().sum::<C64>() / s.len() as f64
    }

    /// Variance of `g_0` on the unit sphere.
    pub fn sphere_variance(&self) -> f64 {
        let s = self.sphere_samples();
        let mean = s.iter().sum::<C64>() / s.len() as f64;
        s.iter().map(|z| (z - mean).norm_sqr()).sum::<f64>() / s.len() as f64
    }
}

/// `<Op_h(a) u_k, u_k>` for the plane wave `u_k = e^{i k . x}` with `h = 1/|k|`.
///
/// The `x`-modes `m != 0` move `u_k` to `u_{k+m}`, which is orthogonal, so only
/// `g_0` contributes, evaluated at `h k = k / |k|`.
pub fn torus_phase_moment(k: &[i64], a: &PhaseSymbol) -> Result<C64, LaplaceError> {
    a.validate()?;
    if k.len() != a.dim {
        return Err(LaplaceError::InvalidArgument(format!("mode of length {} for a {}-dimensional symbol", k.len(), a.dim)));
    }
    let norm = k.iter().map(|&c| (c as f64).powi(2)).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(LaplaceError::InvalidArgument("the constant mode has no frequency direction".into()));
    }
    let xi: Vec<f64> = k.iter().map(|&c| c as f64 / norm).collect();
    Ok(a.zero_mode_profile(&xi))
}
