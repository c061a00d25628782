//! Quantized cat maps on the `N`-dimensional Hilbert space of the torus.
//!
//! Position states live on `j / N`, `j = 0..N`, and the semiclassical
//! parameter is `h = 1 / (2 pi N)`, so that the trace of a quantized
//! observable equals `N` times its phase-space mean.

mod husimi;
mod propagator;
mod spectrum;

pub use husimi::{coherent_matrix, coherent_state, husimi, husimi_all, HusimiGrid};
pub use propagator::{
    calibrate_orientation, egorov_defect, propagator, translation_egorov_defect, translation_egorov_scan,
    EgorovSample, Orientation, Propagator,
};
pub use spectrum::{matrix_elements, spectrum, SpectralDecomposition, CLUSTER_GAP};

use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::torus::{CatMap, LatticeVector, TorusError, TorusObservable};

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("band limit {band_limit} aliases at N = {n} (need 2K < N)")]
    Aliasing { band_limit: i64, n: usize },
    #[error("map {0} is outside the quantizable class (b = 1, a and d even)")]
    NotQuantizable(CatMap),
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("orientation calibration failed (defects: forward {forward:e}, inverse {inverse:e})")]
    CalibrationFailed { forward: f64, inverse: f64 },
    #[error("eigensolver failed: {0}")]
    EigenSolver(String),
    #[error(transparent)]
    Torus(#[from] TorusError),
}

/// Quantization `Op_N(a)` of a torus observable: a dense `N x N` matrix.
#[derive(Debug, Clone)]
pub struct WeylOperator {
    n: usize,
    matrix: Mat<C64>,
}

impl WeylOperator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn matrix(&self) -> MatRef<'_, C64> {
        self.matrix.as_ref()
    }

    pub fn into_matrix(self) -> Mat<C64> {
        self.matrix
    }

    pub fn trace(&self) -> C64 {
        (0..self.n).map(|j| self.matrix[(j, j)]).sum()
    }

    /// `(1/N) tr(Op^* Op)`, computed as a normalized Frobenius norm.
    pub fn normalized_hs_norm_sq(&self) -> f64 {
        frobenius_sq(self.matrix.as_ref()) / self.n as f64
    }

    /// Largest entry of `Op - Op^*`.
    pub fn hermiticity_defect(&self) -> f64 {
        max_abs_diff(self.matrix.as_ref(), self.matrix.adjoint().to_owned().as_ref())
    }

    pub fn operator_norm(&self) -> Result<f64, QuantumError> {
        operator_norm(self.matrix.as_ref())
    }
}

fn check_dimension(n: usize) -> Result<(), QuantumError> {
    if n == 0 {
        Err(QuantumError::InvalidDimension("N must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `e^{i pi r / N}` with `r` taken mod `2N` in exact integer arithmetic.
fn half_root(r: i128, n: usize) -> C64 {
    let two_n = 2 * n as i128;
    let r = r.rem_euclid(two_n);
    C64::from_polar(1.0, std::f64::consts::PI * r as f64 / n as f64)
}

/// Adds `amp * T(v)` to `out`, where
/// `T(m, n) = e^{i pi m n / N} M_m S_{-n}`, `(S_k psi)(j) = psi(j - k)` and
/// `(M_m psi)(j) = e^{2 pi i m j / N} psi(j)`.
///
/// `e^{2 pi i m x}` becomes multiplication and `e^{2 pi i n xi}` a position
/// shift by `-n / N`. Row `j` has its single entry in column `j + n`, with
/// phase `e^{i pi m (n + 2j) / N}`.
fn add_translation(out: &mut Mat<C64>, v: LatticeVector, amp: C64) {
    let n = out.nrows();
    let ni = n as i128;
    let (m, k) = (v.m as i128, v.n as i128);
    for j in 0..n {
        let col = (j as i128 + k).rem_euclid(ni) as usize;
        out[(j, col)] += amp * half_root(m * (k + 2 * j as i128), n);
    }
}

/// Unitary translation operator `e^{i pi m n / N} M_m S_{-n}`.
pub fn translation_op(n: usize, v: LatticeVector) -> Result<Mat<C64>, QuantumError> {
    check_dimension(n)?;
    let mut out = Mat::zeros(n, n);
    add_translation(&mut out, v, C64::new(1.0, 0.0));
    Ok(out)
}

/// Torus Weyl quantization `Op_N(a) = sum_v a_v T(v)`.
///
/// Requires `2K < N` so that distinct modes give orthogonal translations.
pub fn quantize(n: usize, a: &TorusObservable) -> Result<WeylOperator, QuantumError> {
    check_dimension(n)?;
    if 2 * a.band_limit() as i128 >= n as i128 {
        return Err(QuantumError::Aliasing { band_limit: a.band_limit(), n });
    }
    Ok(quantize_unchecked(n, a))
}

/// Quantization without the aliasing guard. The operator identity for each
/// mode still holds; only trace and Plancherel identities need `2K < N`.
pub fn quantize_unchecked(n: usize, a: &TorusObservable) -> WeylOperator {
    let mut matrix = Mat::zeros(n, n);
    for (v, c) in a.modes() {
        add_translation(&mut matrix, v, c);
    }
    WeylOperator { n, matrix }
}

/// Largest singular value.
pub fn operator_norm(m: MatRef<'_, C64>) -> Result<f64, QuantumError> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let sv = m
        .singular_values()
        .map_err(|e| QuantumError::EigenSolver(format!("{e:?}")))?;
    Ok(sv.into_iter().fold(0.0, f64::max))
}

pub fn frobenius_sq(m: MatRef<'_, C64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s
}

/// Largest `|a_ij - b_ij|`.
pub fn max_abs_diff(a: MatRef<'_, C64>, b: MatRef<'_, C64>) -> f64 {
    assert_eq!((a.nrows(), a.ncols()), (b.nrows(), b.ncols()));
    let mut d: f64 = 0.0;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            d = d.max((a[(i, j)] - b[(i, j)]).norm());
        }
    }
    d
}

/// Largest entry of `M - I`.
pub fn identity_defect(m: MatRef<'_, C64>) -> f64 {
    let id = Mat::<C64>::identity(m.nrows(), m.ncols());
    max_abs_diff(m, id.as_ref())
}

/// `|| Op_N(a) Op_N(b) - Op_N(ab) ||_2`, which decays like `1/N`.
///
/// The product `ab` must itself be alias-free, i.e. `2 (K_a + K_b) < N`.
pub fn product_defect(n: usize, a: &TorusObservable, b: &TorusObservable) -> Result<f64, QuantumError> {
    let ab = quantize(n, &a.product(b))?;
    let lhs = quantize(n, a)?.into_matrix() * quantize(n, b)?.into_matrix();
    operator_norm((&lhs - ab.matrix()).as_ref())
}

/// A quantized cat map at fixed `N` together with its calibrated orientation
/// and eigenbasis: everything the statistics layer needs.
#[derive(Debug, Clone)]
pub struct CatSystem {
    pub propagator: Propagator,
    pub orientation: Orientation,
    pub spectrum: SpectralDecomposition,
}

impl CatSystem {
    pub fn build(n: usize, map: CatMap) -> Result<Self, QuantumError> {
        let propagator = propagator(n, map)?;
        let orientation = if n >= 8 { propagator.calibrate()? } else { Orientation::Forward };
        let spectrum = spectrum(&propagator)?;
        Ok(Self { propagator, orientation, spectrum })
    }

    pub fn n(&self) -> usize {
        self.propagator.n()
    }

    pub fn map(&self) -> CatMap {
        self.propagator.map()
    }

    /// The classical map `A'` whose pullback the propagator conjugation realizes.
    pub fn classical_map(&self) -> CatMap {
        self.orientation.classical_map(self.map())
    }

    /// `V_j(a) = <Op_N(a) u_j, u_j>` for every eigenvector.
    pub fn matrix_elements(&self, a: &TorusObservable) -> Result<Vec<C64>, QuantumError> {
        matrix_elements(&self.spectrum, &quantize(self.n(), a)?)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::torus::CatMap;
    use proptest::prelude::*;

    pub(crate) fn random_real_observable(k: i64, seed: u64) -> TorusObservable {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut modes = Vec::new();
        for m in -k..=k {
            for n in -k..=k {
                let v = LatticeVector::new(m, n);
                if v > -v {
                    continue;
                }
                let c = C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                if v == -v {
                    modes.push((v, C64::new(c.re, 0.0)));
                } else {
                    modes.push((v, c));
                    modes.push((-v, c.conj()));
                }
            }
        }
        TorusObservable::new(modes)
    }

    #[test]
    fn translation_identity_shift_and_clock() {
        let id = translation_op(5, LatticeVector::ZERO).unwrap();
        assert_eq!(identity_defect(id.as_ref()), 0.0);
        let s = translation_op(2, LatticeVector::new(0, 1)).unwrap();
        assert!((s[(0, 1)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((s[(1, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert_eq!(s[(0, 0)], C64::new(0.0, 0.0));
        let c = translation_op(2, LatticeVector::new(1, 0)).unwrap();
        assert!((c[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((c[(1, 1)] + C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn translation_adjoint_is_inverse_translation() {
        // oracle: S_a M_b = e^{-2 pi i a b / N} M_b S_a, checked on explicit
        // shift and clock matrices
        let n = 7;
        let shift = Mat::<C64>::from_fn(n, n, |i, j| {
            if (j + 1) % n == i { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }
        });
        let clock = Mat::<C64>::from_fn(n, n, |i, j| {
            if i == j { C64::from_polar(1.0, std::f64::consts::TAU * i as f64 / n as f64) } else { C64::new(0.0, 0.0) }
        });
        let pow = |m: &Mat<C64>, e: usize| (0..e).fold(Mat::<C64>::identity(n, n), |acc, _| &acc * m);
        let (a, b) = (2usize, 3usize);
        let lhs = &pow(&shift, a) * &pow(&clock, b);
        let rhs = (&pow(&clock, b) * &pow(&shift, a))
            * faer::Scale(C64::from_polar(1.0, -std::f64::consts::TAU * (a * b) as f64 / n as f64));
        assert!(max_abs_diff(lhs.as_ref(), rhs.as_ref()) < 1e-12);

        let t = translation_op(n, LatticeVector::new(2, 3)).unwrap();
        let tm = translation_op(n, LatticeVector::new(-2, -3)).unwrap();
        assert!(max_abs_diff(t.adjoint().to_owned().as_ref(), tm.as_ref()) < 1e-14);
        // the defining product e^{i pi 6 / N} M_2 S_{-3}, with S_{-3} = S_4
        let direct = (&pow(&clock, 2) * &pow(&shift, n - 3))
            * faer::Scale(C64::from_polar(1.0, std::f64::consts::PI * 6.0 / n as f64));
        assert!(max_abs_diff(t.as_ref(), direct.as_ref()) < 1e-12);
    }

    #[test]
    fn position_modes_quantize_to_multiplication() {
        let a = TorusObservable::cos_mode(LatticeVector::new(1, 0));
        let op = quantize(16, &a).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let expected = if i == j { (std::f64::consts::TAU * i as f64 / 16.0).cos() } else { 0.0 };
                assert!((op.matrix()[(i, j)] - C64::new(expected, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn quantize_constant_is_identity() {
        let op = quantize(50, &TorusObservable::constant(1.0)).unwrap();
        assert_eq!(identity_defect(op.matrix()), 0.0);
    }

    #[test]
    fn quantize_cosine_is_traceless_hermitian() {
        let op = quantize(8, &TorusObservable::cos_mode(LatticeVector::new(1, 0))).unwrap();
        assert!(op.hermiticity_defect() < 1e-15);
        assert!(op.trace().norm() < 1e-14);
    }

    #[test]
    fn product_defect_decays() {
        let a = TorusObservable::cos_mode(LatticeVector::new(1, 0));
        let b = TorusObservable::cos_mode(LatticeVector::new(0, 1));
        let d32 = product_defect(32, &a, &b).unwrap();
        let d64 = product_defect(64, &a, &b).unwrap();
        assert!(d32 > 0.0 && (d32 / d64 - 2.0).abs() < 0.1, "{d32} {d64}");
        // functions of x alone commute and multiply exactly
        let c = TorusObservable::cos_mode(LatticeVector::new(2, 0));
        assert!(product_defect(32, &a, &c).unwrap() < 1e-12);
    }

    #[test]
    fn aliasing_guard() {
        let a = TorusObservable::cos_mode(LatticeVector::new(4, 0));
        assert!(matches!(quantize(8, &a), Err(QuantumError::Aliasing { band_limit: 4, n: 8 })));
        assert!(quantize(9, &a).is_ok());
        assert!(matches!(quantize(0, &a), Err(QuantumError::InvalidDimension(_))));
    }

    #[test]
    fn normalized_hs_norm_matches_plancherel() {
        // oracle: (1/N) tr(Op^* Op) by explicit matrix product
        for seed in 0..5 {
            let a = random_real_observable(3, seed);
            let op = quantize(16, &a).unwrap();
            let prod = op.matrix().adjoint() * op.matrix();
            let tr: C64 = (0..16).map(|j| prod[(j, j)]).sum();
            assert!((tr.re / 16.0 - a.l2_norm_sq()).abs() < 1e-12 * a.l2_norm_sq().max(1.0));
            assert!((op.normalized_hs_norm_sq() - a.l2_norm_sq()).abs() < 1e-12);
        }
    }

    #[test]
    fn cat_system_builds_at_small_n() {
        let sys = CatSystem::build(4, CatMap::ARNOLD).unwrap();
        assert_eq!(sys.n(), 4);
        assert_eq!(sys.spectrum.len(), 4);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn adjoint_law_and_trace_formula(seed in any::<u64>(), n in 7usize..40) {
            let a = random_real_observable(3, seed).add(&TorusObservable::mode(LatticeVector::new(1, 2), C64::new(0.3, -0.7)));
            let op = quantize(n, &a).unwrap();
            let op_conj = quantize(n, &a.conj()).unwrap();
            prop_assert!(max_abs_diff(op_conj.matrix(), op.matrix().adjoint().to_owned().as_ref()) < 1e-12);
            prop_assert!((op.trace() - a.mean() * n as f64).norm() < 1e-11);
        }
    }
}
