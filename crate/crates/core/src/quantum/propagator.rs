use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{
    check_dimension, frobenius_sq, half_root, operator_norm, quantize,
    translation_op, QuantumError,
};
use crate::torus::{CatMap, LatticeVector, TorusObservable, DEFAULT_MODE_BOUND};

/// Threshold on the calibration defect (Frobenius norm, which bounds the
/// operator norm from above).
const CALIBRATION_TOL: f64 = 1e-8;

/// Which classical map the propagator conjugation realizes:
/// `U^* Op(a) U = Op(a o A')` with `A' = A` or `A' = A^{-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    Forward,
    Inverse,
}

impl Orientation {
    pub fn classical_map(self, map: CatMap) -> CatMap {
        match self {
            Orientation::Forward => map,
            Orientation::Inverse => map.inverse(),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::Forward => "forward",
            Orientation::Inverse => "inverse",
        }
    }
}

/// Quantum cat map `U_N`.
#[derive(Debug, Clone)]
pub struct Propagator {
    n: usize,
    map: CatMap,
    matrix: Mat<C64>,
}

/// Builds `U_N[j', j] = N^{-1/2} exp(i pi (a j^2 - 2 j j' + d j'^2) / N)`.
///
/// Only maps with `b = 1` and `a, d` even are accepted; for them the exponent
/// is well defined mod `2 pi` on `Z_N x Z_N` and the kernel is exactly unitary.
pub fn propagator(n: usize, map: CatMap) -> Result<Propagator, QuantumError> {
    check_dimension(n)?;
    if !map.is_quantizable() {
        return Err(QuantumError::NotQuantizable(map));
    }
    let [a, _, _, d] = map.entries();
    let (a, d) = (a as i128, d as i128);
    let norm = 1.0 / (n as f64).sqrt();
    let matrix = Mat::from_fn(n, n, |row, col| {
        let (jp, j) = (row as i128, col as i128);
        half_root(a * j * j - 2 * j * jp + d * jp * jp, n) * norm
    });
    Ok(Propagator { n, map, matrix })
}

impl Propagator {
    /// Wraps an arbitrary matrix, e.g. a perturbed kernel. No checks are made.
    pub fn from_matrix(map: CatMap, matrix: Mat<C64>) -> Self {
        assert_eq!(matrix.nrows(), matrix.ncols(), "propagator must be square");
        Self { n: matrix.nrows(), map, matrix }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn map(&self) -> CatMap {
        self.map
    }

    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.matrix.as_ref()
    }

    /// Largest entry of `U^* U - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let g = self.matrix.adjoint() * &self.matrix;
        super::identity_defect(g.as_ref())
    }

    /// `U^t` by repeated squaring.
    pub fn power(&self, t: u32) -> Mat<C64> {
        let mut acc = Mat::<C64>::identity(self.n, self.n);
        let mut sq = self.matrix.clone();
        let mut e = t;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &sq;
            }
            e >>= 1;
            if e > 0 {
                sq = &sq * &sq;
            }
        }
        acc
    }

    /// `U^{-t} X U^t`.
    pub fn conjugate(&self, x: MatRef<'_, C64>, t: u32) -> Mat<C64> {
        let ut = self.power(t);
        ut.adjoint() * (x * &ut)
    }

    /// Decides between `A` and `A^{-1}` by testing the exact Egorov identity
    /// for the mode `(1, 0)`.
    pub fn calibrate(&self) -> Result<Orientation, QuantumError> {
        if self.n < 8 {
            return Err(QuantumError::InvalidDimension(format!(
                "calibration needs N >= 8, got {}",
                self.n
            )));
        }
        let v = LatticeVector::new(1, 0);
        let conj = self.conjugate(translation_op(self.n, v)?.as_ref(), 1);
        let defect = |o: Orientation| -> Result<f64, QuantumError> {
            let w = o.classical_map(self.map).transport_mode(v, 1, DEFAULT_MODE_BOUND)?;
            let target = translation_op(self.n, w)?;
            Ok(frobenius_sq((&conj - &target).as_ref()).sqrt())
        };
        let forward = defect(Orientation::Forward)?;
        let inverse = defect(Orientation::Inverse)?;
        match (forward < CALIBRATION_TOL, inverse < CALIBRATION_TOL) {
            (true, false) => Ok(Orientation::Forward),
            (false, true) => Ok(Orientation::Inverse),
            (true, true) if forward <= inverse => Ok(Orientation::Forward),
            (true, true) => Ok(Orientation::Inverse),
            (false, false) => Err(QuantumError::CalibrationFailed { forward, inverse }),
        }
    }
}

/// Orientation of the Gauss-sum kernel for `(N, A)`; needs `N >= 8`.
pub fn calibrate_orientation(n: usize, map: CatMap) -> Result<Orientation, QuantumError> {
    propagator(n, map)?.calibrate()
}

/// `|| U^{-t} Op_N(a) U^t - Op_N(a o A'^t) ||_2`.
///
/// Fails with an aliasing error once the evolved band limit reaches `N/2`.
pub fn egorov_defect(
    u: &Propagator,
    orientation: Orientation,
    a: &TorusObservable,
    t: u32,
) -> Result<f64, QuantumError> {
    let evolved = orientation.classical_map(u.map()).pullback(a, t as i64)?;
    let target = quantize(u.n(), &evolved)?;
    let op = quantize(u.n(), a)?;
    let conj = u.conjugate(op.matrix(), t);
    operator_norm((&conj - target.matrix()).as_ref())
}

/// Egorov defect for a single translation `T(v)`, valid for every `v` in
/// `Z^2` because the identity `U^{-t} T(v) U^t = T((A'^t)^T v)` does not
/// depend on the band limit.
pub fn translation_egorov_defect(
    u: &Propagator,
    orientation: Orientation,
    v: LatticeVector,
    t: u32,
) -> Result<f64, QuantumError> {
    let ut = u.power(t);
    Ok(translation_scan_at(u, orientation, ut.as_ref(), v, t)?.defect)
}

/// One entry of [`translation_egorov_scan`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgorovSample {
    pub v: LatticeVector,
    pub t: u32,
    /// `(A'^t)^T v`.
    pub image: LatticeVector,
    pub defect: f64,
}

/// Translation Egorov defects for all `|v|_inf <= max_mode` and
/// `1 <= t <= steps`, reusing each `U^t`.
pub fn translation_egorov_scan(
    u: &Propagator,
    orientation: Orientation,
    max_mode: i64,
    steps: u32,
) -> Result<Vec<EgorovSample>, QuantumError> {
    let mut out = Vec::new();
    let mut ut = Mat::<C64>::identity(u.n(), u.n());
    for t in 1..=steps {
        ut = &ut * u.matrix();
        for m in -max_mode..=max_mode {
            for n in -max_mode..=max_mode {
                out.push(translation_scan_at(u, orientation, ut.as_ref(), LatticeVector::new(m, n), t)?);
            }
        }
    }
    Ok(out)
}

/// Translations are monomial matrices: `(row, column, value)` per row.
fn monomial(n: usize, v: LatticeVector) -> Result<Vec<(usize, C64)>, QuantumError> {
    let t = translation_op(n, v)?;
    Ok((0..n)
        .map(|row| {
            let col = (0..n).find(|&c| t[(row, c)] != C64::new(0.0, 0.0)).expect("translation has one entry per row");
            (col, t[(row, col)])
        })
        .collect())
}

/// `|| T(v) U^t - U^t T(w) ||_2`, equal to the conjugation defect because
/// `U^t` is unitary, at `O(N^2)` cost before the norm.
fn translation_scan_at(
    u: &Propagator,
    orientation: Orientation,
    ut: MatRef<'_, C64>,
    v: LatticeVector,
    t: u32,
) -> Result<EgorovSample, QuantumError> {
    let n = u.n();
    let w = orientation.classical_map(u.map()).transport_mode(v, t as i64, DEFAULT_MODE_BOUND)?;
    let (tv, tw) = (monomial(n, v)?, monomial(n, w)?);
    let mut d = Mat::<C64>::zeros(n, n);
    for (row, &(col, z)) in tv.iter().enumerate() {
        for c in 0..n {
            d[(row, c)] = z * ut[(col, c)];
        }
    }
    for (j, &(col, z)) in tw.iter().enumerate() {
        for r in 0..n {
            d[(r, col)] -= ut[(r, j)] * z;
        }
    }
    Ok(EgorovSample { v, t, image: w, defect: operator_norm(d.as_ref())? })
}
