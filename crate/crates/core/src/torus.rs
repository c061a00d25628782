//! Classical phase space on the 2-torus.
//!
//! Observables are trigonometric polynomials stored by their Fourier
//! coefficients, and the dynamics are hyperbolic elements of `SL(2, Z)` acting
//! on `T^2 = R^2 / Z^2`. Every operation here is exact on the coefficient
//! level: pullbacks relabel modes, so L2 norms and means are preserved to the
//! last bit.

use std::collections::BTreeMap;
use std::fmt;

use num_complex::Complex64 as C64;
use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default bound on the magnitude of any mode component produced by a pullback.
pub const DEFAULT_MODE_BOUND: i64 = i32::MAX as i64;

/// Relative tolerance used when checking `a(-v) = conj(a(v))`.
const REALITY_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TorusError {
    #[error("mode component {component} exceeds the configured bound {bound}")]
    ModeOverflow { component: i128, bound: i64 },
    #[error("integer overflow while raising the map to the power {0}")]
    PowerOverflow(i64),
    #[error("invalid cat map {map}: {reason}")]
    InvalidMap { map: String, reason: &'static str },
    #[error("observable is not real: coefficient of ({m}, {n}) is not the conjugate of ({}, {})", -m, -n)]
    NotReal { m: i64, n: i64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed observable JSON: {0}")]
    Json(String),
}

/// Integer Fourier mode `(m, n)`, indexing `e^{2 pi i (m x + n xi)}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LatticeVector {
    pub m: i64,
    pub n: i64,
}

impl LatticeVector {
    pub const ZERO: LatticeVector = LatticeVector { m: 0, n: 0 };

    pub const fn new(m: i64, n: i64) -> Self {
        Self { m, n }
    }

    /// Max-norm `max(|m|, |n|)`.
    pub fn max_norm(self) -> i64 {
        self.m.abs().max(self.n.abs())
    }

    /// Symplectic form `m n' - n m'`.
    pub fn wedge(self, other: LatticeVector) -> i64 {
        self.m * other.n - self.n * other.m
    }
}

impl std::ops::Neg for LatticeVector {
    type Output = LatticeVector;
    fn neg(self) -> LatticeVector {
        LatticeVector::new(-self.m, -self.n)
    }
}

impl std::ops::Add for LatticeVector {
    type Output = LatticeVector;
    fn add(self, rhs: LatticeVector) -> LatticeVector {
        LatticeVector::new(self.m + rhs.m, self.n + rhs.n)
    }
}

impl fmt::Display for LatticeVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.m, self.n)
    }
}

/// Band-limited observable on `T^2`: `a(x, xi) = sum a_v e^{2 pi i (m x + n xi)}`.
///
/// Exact zeros are never stored, so the band limit reflects the actual support.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TorusObservable {
    coeffs: BTreeMap<LatticeVector, C64>,
    band_limit: i64,
}

impl TorusObservable {
    /// Builds an observable, summing repeated modes.
    pub fn new(modes: impl IntoIterator<Item = (LatticeVector, C64)>) -> Self {
        let mut coeffs: BTreeMap<LatticeVector, C64> = BTreeMap::new();
        for (v, c) in modes {
            *coeffs.entry(v).or_default() += c;
        }
        Self::from_map(coeffs)
    }

    fn from_map(mut coeffs: BTreeMap<LatticeVector, C64>) -> Self {
        coeffs.retain(|_, c| *c != C64::new(0.0, 0.0));
        let band_limit = coeffs.keys().map(|v| v.max_norm()).max().unwrap_or(0);
        Self { coeffs, band_limit }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Self::new([(LatticeVector::ZERO, C64::new(c, 0.0))])
    }

    /// Single exponential `amp * e_v`.
    pub fn mode(v: LatticeVector, amp: C64) -> Self {
        Self::new([(v, amp)])
    }

    /// `cos(2 pi (m x + n xi))`.
    pub fn cos_mode(v: LatticeVector) -> Self {
        let half = C64::new(0.5, 0.0);
        Self::new([(v, half), (-v, half)])
    }

    /// `sin(2 pi (m x + n xi))`.
    pub fn sin_mode(v: LatticeVector) -> Self {
        Self::new([(v, C64::new(0.0, -0.5)), (-v, C64::new(0.0, 0.5))])
    }

    pub fn coeff(&self, v: LatticeVector) -> C64 {
        self.coeffs.get(&v).copied().unwrap_or_default()
    }

    /// Stored modes in lattice order.
    pub fn modes(&self) -> impl Iterator<Item = (LatticeVector, C64)> + '_ {
        self.coeffs.iter().map(|(v, c)| (*v, *c))
    }

    pub fn num_modes(&self) -> usize {
        self.coeffs.len()
    }

    /// Max-norm of the largest stored mode (`K`).
    pub fn band_limit(&self) -> i64 {
        self.band_limit
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_real(&self) -> bool {
        self.first_reality_violation().is_none()
    }

    fn first_reality_violation(&self) -> Option<LatticeVector> {
        let scale = self.coeffs.values().map(|c| c.norm()).fold(0.0, f64::max);
        self.coeffs
            .iter()
            .find(|(v, c)| (self.coeff(-**v).conj() - **c).norm() > REALITY_TOL * scale.max(1.0))
            .map(|(v, _)| *v)
    }

    /// Lebesgue mean, i.e. the `(0, 0)` coefficient.
    pub fn mean(&self) -> C64 {
        self.coeff(LatticeVector::ZERO)
    }

    /// `||a||^2` on `T^2` with unit Lebesgue measure (Plancherel).
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    /// Pointwise value of the trigonometric polynomial.
    pub fn evaluate(&self, x: f64, xi: f64) -> C64 {
        let tau = std::f64::consts::TAU;
        self.coeffs
            .iter()
            .map(|(v, c)| {
                // Reduce the phase mod 1 before scaling to keep large modes accurate.
                let phase = (v.m as f64 * x + v.n as f64 * xi).rem_euclid(1.0);
                c * C64::from_polar(1.0, tau * phase)
            })
            .sum()
    }

    pub fn conj(&self) -> Self {
        Self::new(self.coeffs.iter().map(|(v, c)| (-*v, c.conj())))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.coeffs.iter().map(|(v, c)| (*v, c * s)))
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::new(self.modes().chain(other.modes()))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    /// `a + c`.
    pub fn shifted(&self, c: f64) -> Self {
        self.add(&Self::constant(c))
    }

    /// `a - mean(a)`.
    pub fn without_mean(&self) -> Self {
        let mut coeffs = self.coeffs.clone();
        coeffs.remove(&LatticeVector::ZERO);
        Self::from_map(coeffs)
    }

    /// Pointwise product, i.e. the convolution of the coefficient sequences.
    pub fn product(&self, other: &Self) -> Self {
        Self::new(
            self.modes()
                .flat_map(|(v, a)| other.modes().map(move |(w, b)| (v + w, a * b))),
        )
    }

    pub fn to_json_value(&self) -> serde_json::Value {
        let modes = self
            .modes()
            .map(|(v, c)| ModeRecord { m: v.m, n: v.n, re: c.re, im: c.im })
            .collect();
        serde_json::to_value(ObservableRecord { modes }).expect("observable serializes")
    }

    /// Parses `{"modes": [{"m", "n", "re", "im"}]}` and checks reality.
    pub fn from_json_value(value: &serde_json::Value) -> Result<Self, TorusError> {
        let rec: ObservableRecord =
            serde_json::from_value(value.clone()).map_err(|e| TorusError::Json(e.to_string()))?;
        rec.try_into()
    }

    pub fn from_json_str(s: &str) -> Result<Self, TorusError> {
        let rec: ObservableRecord =
            serde_json::from_str(s).map_err(|e| TorusError::Json(e.to_string()))?;
        rec.try_into()
    }
}

/// On-disk form of a [`TorusObservable`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObservableRecord {
    pub modes: Vec<ModeRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeRecord {
    pub m: i64,
    pub n: i64,
    pub re: f64,
    pub im: f64,
}

impl TryFrom<ObservableRecord> for TorusObservable {
    type Error = TorusError;

    fn try_from(rec: ObservableRecord) -> Result<Self, TorusError> {
        if let Some(bad) = rec.modes.iter().find(|r| !r.re.is_finite() || !r.im.is_finite()) {
            return Err(TorusError::Json(format!(
                "non-finite coefficient at ({}, {})",
                bad.m, bad.n
            )));
        }
        let obs = TorusObservable::new(
            rec.modes
                .into_iter()
                .map(|r| (LatticeVector::new(r.m, r.n), C64::new(r.re, r.im))),
        );
        match obs.first_reality_violation() {
            Some(v) => Err(TorusError::NotReal { m: v.m, n: v.n }),
            None => Ok(obs),
        }
    }
}

/// 2x2 integer matrix, row-major.
type IntMat = [[i64; 2]; 2];

fn mat_mul(p: &IntMat, q: &IntMat) -> Option<IntMat> {
    let mut r = [[0i64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = p[i][0]
                .checked_mul(q[0][j])?
                .checked_add(p[i][1].checked_mul(q[1][j])?)?;
        }
    }
    Some(r)
}

/// Hyperbolic toral automorphism `[[a, b], [c, d]]` acting on column vectors
/// `(x, xi)` mod 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "[i64; 4]", into = "[i64; 4]")]
pub struct CatMap {
    a: i64,
    b: i64,
    c: i64,
    d: i64,
}

impl CatMap {
    /// Arnold's map `[[2, 1], [3, 2]]`, the default throughout the crate.
    pub const ARNOLD: CatMap = CatMap { a: 2, b: 1, c: 3, d: 2 };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self, TorusError> {
        let map = CatMap { a, b, c, d };
        let det = (a as i128) * (d as i128) - (b as i128) * (c as i128);
        if det != 1 {
            return Err(TorusError::InvalidMap { map: map.to_string(), reason: "determinant must be 1" });
        }
        if (a as i128 + d as i128).abs() <= 2 {
            return Err(TorusError::InvalidMap { map: map.to_string(), reason: "|trace| must exceed 2" });
        }
        Ok(map)
    }

    pub fn entries(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn trace(&self) -> i64 {
        self.a + self.d
    }

    /// Expanding eigenvalue `lambda` with `|lambda| > 1`.
    pub fn expansion_rate(&self) -> f64 {
        let tr = self.trace() as f64;
        (tr.abs() + (tr * tr - 4.0).sqrt()) / 2.0
    }

    /// `b = 1` and `a, d` even: the class with an explicit Gauss-sum propagator.
    pub fn is_quantizable(&self) -> bool {
        self.b == 1 && self.a % 2 == 0 && self.d % 2 == 0
    }

    pub fn inverse(&self) -> CatMap {
        CatMap { a: self.d, b: -self.b, c: -self.c, d: self.a }
    }

    fn matrix(&self) -> IntMat {
        [[self.a, self.b], [self.c, self.d]]
    }

    /// `A^t` for any integer `t`, with overflow detection.
    pub fn power(&self, t: i64) -> Result<[[i64; 2]; 2], TorusError> {
        let base = if t < 0 { self.inverse().matrix() } else { self.matrix() };
        let mut e = t.unsigned_abs();
        let mut acc: IntMat = [[1, 0], [0, 1]];
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = mat_mul(&acc, &sq).ok_or(TorusError::PowerOverflow(t))?;
            }
            e >>= 1;
            if e > 0 {
                sq = mat_mul(&sq, &sq).ok_or(TorusError::PowerOverflow(t))?;
            }
        }
        Ok(acc)
    }

    /// `A^t (x, xi) mod 1`, each coordinate in `[0, 1)`.
    pub fn apply(&self, x: f64, xi: f64, t: i64) -> Result<(f64, f64), TorusError> {
        let p = self.power(t)?;
        let wrap = |v: f64| {
            let r = v.rem_euclid(1.0);
            if r >= 1.0 { 0.0 } else { r }
        };
        // Reduce each product mod 1 separately so large entries lose less precision.
        let row = |r: [i64; 2]| wrap(wrap(r[0] as f64 * x) + wrap(r[1] as f64 * xi));
        Ok((row(p[0]), row(p[1])))
    }

    /// Image of a Fourier mode under `a -> a o A^t`: `v -> (A^t)^T v`.
    pub fn transport_mode(&self, v: LatticeVector, t: i64, bound: i64) -> Result<LatticeVector, TorusError> {
        let p = self.power(t)?;
        let check = |x: i128| {
            if x.abs() > bound as i128 {
                Err(TorusError::ModeOverflow { component: x, bound })
            } else {
                Ok(x as i64)
            }
        };
        let (m, n) = (v.m as i128, v.n as i128);
        let wm = p[0][0] as i128 * m + p[1][0] as i128 * n;
        let wn = p[0][1] as i128 * m + p[1][1] as i128 * n;
        Ok(LatticeVector::new(check(wm)?, check(wn)?))
    }

    /// Classical pullback `a o A^t`, an exact relabelling of modes.
    pub fn pullback(&self, a: &TorusObservable, t: i64) -> Result<TorusObservable, TorusError> {
        self.pullback_bounded(a, t, DEFAULT_MODE_BOUND)
    }

    pub fn pullback_bounded(
        &self,
        a: &TorusObservable,
        t: i64,
        bound: i64,
    ) -> Result<TorusObservable, TorusError> {
        let modes = a
            .modes()
            .map(|(v, c)| Ok((self.transport_mode(v, t, bound)?, c)))
            .collect::<Result<Vec<_>, TorusError>>()?;
        Ok(TorusObservable::new(modes))
    }

    /// Discrete ergodic average `(1/T) sum_{t<T} a o A^t`.
    pub fn ergodic_average(&self, a: &TorusObservable, steps: u32) -> Result<TorusObservable, TorusError> {
        self.ergodic_average_bounded(a, steps, DEFAULT_MODE_BOUND)
    }

    pub fn ergodic_average_bounded(
        &self,
        a: &TorusObservable,
        steps: u32,
        bound: i64,
    ) -> Result<TorusObservable, TorusError> {
        if steps == 0 {
            return Err(TorusError::InvalidArgument("averaging length must be positive".into()));
        }
        let mut acc: BTreeMap<LatticeVector, C64> = BTreeMap::new();
        for t in 0..steps as i64 {
            for (v, c) in a.modes() {
                *acc.entry(self.transport_mode(v, t, bound)?).or_default() += c;
            }
        }
        let inv = 1.0 / steps as f64;
        Ok(TorusObservable::new(acc.into_iter().map(|(v, c)| (v, c * inv))))
    }

    /// Largest number of pairs `(t, v)`, `t < T`, `v` in the support of `a`,
    /// landing on the same mode `(A^t)^T v`. Equals 1 when the mode orbits
    /// are pairwise disjoint.
    pub fn orbit_collision_multiplicity(&self, a: &TorusObservable, steps: u32) -> Result<usize, TorusError> {
        let mut hits: BTreeMap<LatticeVector, usize> = BTreeMap::new();
        for t in 0..steps as i64 {
            for (v, _) in a.modes() {
                *hits.entry(self.transport_mode(v, t, DEFAULT_MODE_BOUND)?).or_default() += 1;
            }
        }
        Ok(hits.values().copied().max().unwrap_or(0))
    }

    /// `C_a` with `||<a>_T||^2 <= C_a / T`.
    pub fn von_neumann_constant(&self, a: &TorusObservable, steps: u32) -> Result<f64, TorusError> {
        Ok(a.l2_norm_sq() * self.orbit_collision_multiplicity(a, steps)? as f64)
    }

    /// All points with `A^t x = x` on `T^2`, as reduced rationals sorted
    /// lexicographically. Their number is `|det(A^t - I)| = |tr(A^t) - 2|`.
    pub fn fixed_points(&self, t: u32) -> Result<Vec<(Ratio<i64>, Ratio<i64>)>, TorusError> {
        if t == 0 {
            return Err(TorusError::InvalidArgument("period must be positive".into()));
        }
        let p = self.power(t as i64)?;
        let m = [[p[0][0] as i128 - 1, p[0][1] as i128], [p[1][0] as i128, p[1][1] as i128 - 1]];
        let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).abs();
        if det == 0 || det > i32::MAX as i128 {
            return Err(TorusError::PowerOverflow(t as i64));
        }
        // Every fixed point lies on the (1/D) Z^2 lattice; for each numerator p
        // solve m01 q = -m00 p (mod D), then filter by the second row.
        let dd = det;
        let md = |x: i128| x.rem_euclid(dd);
        let mut out = Vec::with_capacity(dd as usize);
        let g = m[0][1].gcd(&dd);
        let step = dd / g;
        for pn in 0..dd {
            let rhs = md(-m[0][0] * pn);
            if rhs % g != 0 {
                continue;
            }
            let q0 = if step == 1 {
                0
            } else {
                let inv = mod_inverse(md(m[0][1] / g).rem_euclid(step), step);
                ((rhs / g) % step * inv).rem_euclid(step)
            };
            for s in 0..g {
                let qn = q0 + s * step;
                if md(m[1][0] * pn + m[1][1] * qn) == 0 {
                    out.push((
                        Ratio::new(pn as i64, dd as i64),
                        Ratio::new(qn as i64, dd as i64),
                    ));
                }
            }
        }
        out.sort();
        Ok(out)
    }
}

fn mod_inverse(a: i128, m: i128) -> i128 {
    let e = a.extended_gcd(&m);
    debug_assert_eq!(e.gcd, 1);
    e.x.rem_euclid(m)
}

impl fmt::Display for CatMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[[{}, {}], [{}, {}]]", self.a, self.b, self.c, self.d)
    }
}

impl TryFrom<[i64; 4]> for CatMap {
    type Error = TorusError;
    fn try_from(e: [i64; 4]) -> Result<Self, TorusError> {
        CatMap::new(e[0], e[1], e[2], e[3])
    }
}

impl From<CatMap> for [i64; 4] {
    fn from(m: CatMap) -> [i64; 4] {
        m.entries()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cos_x() -> TorusObservable {
        TorusObservable::cos_mode(LatticeVector::new(1, 0))
    }

    #[test]
    fn evaluate_constant_and_cosine() {
        let one = TorusObservable::constant(1.0);
        assert_eq!(one.evaluate(0.3, 0.9), C64::new(1.0, 0.0));
        let a = cos_x();
        assert!((a.evaluate(0.0, 0.7) - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!(a.evaluate(0.25, 0.1).norm() < 1e-15);
        assert!(a.evaluate(0.37, 0.2).im.abs() < 1e-12);
    }

    #[test]
    fn apply_map_examples() {
        let a = CatMap::ARNOLD;
        assert_eq!(a.apply(0.0, 0.0, 5).unwrap(), (0.0, 0.0));
        assert_eq!(a.apply(0.25, 0.0, 1).unwrap(), (0.5, 0.75));
        assert_eq!(a.apply(0.25, 0.0, -1).unwrap(), (0.5, 0.25));
    }

    #[test]
    fn invalid_maps_rejected() {
        assert!(CatMap::new(1, 1, 0, 1).is_err());
        assert!(CatMap::new(2, 1, 1, 2).is_err());
        assert!(CatMap::new(2, 1, 3, 2).unwrap().is_quantizable());
        assert!(!CatMap::new(1, 1, 1, 2).unwrap().is_quantizable());
    }

    #[test]
    fn pullback_of_constant_is_constant() {
        let one = TorusObservable::constant(1.0);
        assert_eq!(CatMap::ARNOLD.pullback(&one, 7).unwrap(), one);
    }

    #[test]
    fn pullback_single_mode_goes_to_transpose_image() {
        let e10 = TorusObservable::mode(LatticeVector::new(1, 0), C64::new(1.0, 0.0));
        let pb = CatMap::ARNOLD.pullback(&e10, 1).unwrap();
        assert_eq!(pb.modes().collect::<Vec<_>>(), vec![(LatticeVector::new(2, 1), C64::new(1.0, 0.0))]);
        // oracle: evaluate a(A(x, xi)) on a 16x16 grid
        for i in 0..16 {
            for j in 0..16 {
                let (x, xi) = (i as f64 / 16.0, j as f64 / 16.0);
                let (y, eta) = CatMap::ARNOLD.apply(x, xi, 1).unwrap();
                assert!((pb.evaluate(x, xi) - e10.evaluate(y, eta)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn pullback_overflow_is_reported() {
        let e = TorusObservable::mode(LatticeVector::new(1, 0), C64::new(1.0, 0.0));
        assert!(matches!(
            CatMap::ARNOLD.pullback_bounded(&e, 6, 100),
            Err(TorusError::ModeOverflow { .. })
        ));
        assert!(matches!(CatMap::ARNOLD.pullback(&e, 40), Err(TorusError::PowerOverflow(40))));
    }

    #[test]
    fn ergodic_average_of_cosine() {
        let a = cos_x();
        let avg = CatMap::ARNOLD.ergodic_average(&a, 4).unwrap();
        // oracle: the 2T modes +-(A^t)^T (1,0) are pairwise distinct
        let mut seen = std::collections::BTreeSet::new();
        for t in 0..4 {
            let w = CatMap::ARNOLD.transport_mode(LatticeVector::new(1, 0), t, DEFAULT_MODE_BOUND).unwrap();
            assert!(seen.insert(w));
            assert!(seen.insert(-w));
        }
        assert_eq!(avg.num_modes(), 8);
        assert_eq!(avg.l2_norm_sq(), 0.125);
        assert_eq!(avg.mean(), C64::new(0.0, 0.0));
        assert_eq!(CatMap::ARNOLD.orbit_collision_multiplicity(&a, 4).unwrap(), 1);
    }

    #[test]
    fn ergodic_average_of_constant_and_zero_length() {
        let one = TorusObservable::constant(1.0);
        for t in 1..6 {
            assert_eq!(CatMap::ARNOLD.ergodic_average(&one, t).unwrap(), one);
        }
        assert!(CatMap::ARNOLD.ergodic_average(&one, 0).is_err());
    }

    #[test]
    fn fixed_point_counts() {
        let a = CatMap::ARNOLD;
        let p1 = a.fixed_points(1).unwrap();
        assert_eq!(p1.len(), 2);
        assert!(p1.contains(&(Ratio::from_integer(0), Ratio::from_integer(0))));

        // brute force over the denominator-12 lattice
        let p2 = a.fixed_points(2).unwrap();
        let pw = a.power(2).unwrap();
        let mut brute = Vec::new();
        for p in 0..12i64 {
            for q in 0..12i64 {
                let x = pw[0][0] * p + pw[0][1] * q - p;
                let y = pw[1][0] * p + pw[1][1] * q - q;
                if x % 12 == 0 && y % 12 == 0 {
                    brute.push((Ratio::new(p, 12), Ratio::new(q, 12)));
                }
            }
        }
        brute.sort();
        assert_eq!(p2, brute);
        assert_eq!(p2.len(), 12);

        for t in 1..=6u32 {
            let pts = a.fixed_points(t).unwrap();
            let lam = a.expansion_rate().powi(t as i32);
            assert_eq!(pts.len() as f64, (lam + 1.0 / lam - 2.0).round());
            assert_eq!(pts[0], (Ratio::from_integer(0), Ratio::from_integer(0)));
            for (x, y) in pts.iter().take(20) {
                let (xf, yf) = (*x.numer() as f64 / *x.denom() as f64, *y.numer() as f64 / *y.denom() as f64);
                let (u, w) = a.apply(xf, yf, t as i64).unwrap();
                let d = |p: f64, q: f64| {
                    let r = (p - q).rem_euclid(1.0);
                    r.min(1.0 - r)
                };
                assert!(d(u, xf) < 1e-9 && d(w, yf) < 1e-9);
            }
        }
    }

    #[test]
    fn json_roundtrip_and_reality_check() {
        let a = cos_x().add(&TorusObservable::sin_mode(LatticeVector::new(1, 2)));
        let back = TorusObservable::from_json_value(&a.to_json_value()).unwrap();
        assert_eq!(a, back);
        let bad = r#"{"modes": [{"m": 1, "n": 0, "re": 1.0, "im": 0.0}]}"#;
        assert_eq!(TorusObservable::from_json_str(bad), Err(TorusError::NotReal { m: 1, n: 0 }));
        let unknown = r#"{"modes": [], "extra": 1}"#;
        assert!(matches!(TorusObservable::from_json_str(unknown), Err(TorusError::Json(_))));
    }
}
