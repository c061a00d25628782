use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

use super::{Propagator, QuantumError, WeylOperator};

/// Eigenphases closer than this are treated as one degenerate cluster.
pub const CLUSTER_GAP: f64 = 1e-8;

/// Components below this modulus are skipped when fixing eigenvector phases.
const CANONICAL_THRESHOLD: f64 = 1e-8;

/// Orthonormal eigenbasis of a unitary matrix, sorted by eigenphase.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    phases: Vec<f64>,
    vectors: Mat<C64>,
    clusters: Vec<Vec<usize>>,
}

/// Eigendecomposition of the propagator.
pub fn spectrum(u: &Propagator) -> Result<SpectralDecomposition, QuantumError> {
    SpectralDecomposition::of_unitary(u.matrix())
}

impl SpectralDecomposition {
    /// Diagonalizes a unitary (more generally, normal) matrix.
    ///
    /// Columns are sorted by eigenphase in `[0, 2 pi)`. Inside every cluster of
    /// eigenphases with gaps below [`CLUSTER_GAP`] the eigenvectors are
    /// re-orthonormalized by a QR factorization, and each column is then
    /// multiplied by the phase that makes its first non-negligible component
    /// real and positive.
    pub fn of_unitary(u: MatRef<'_, C64>) -> Result<Self, QuantumError> {
        let n = u.nrows();
        if n == 0 || u.ncols() != n {
            return Err(QuantumError::InvalidDimension(format!("{}x{} is not a nonempty square matrix", n, u.ncols())));
        }
        let evd = u.eigen().map_err(|e| QuantumError::EigenSolver(format!("{e:?}")))?;
        let values = evd.S();
        let raw = evd.U();
        let mut order: Vec<(f64, usize)> = (0..n)
            .map(|j| {
                let z = values[j];
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(QuantumError::EigenSolver("non-finite eigenvalue".into()));
                }
                Ok((wrap_phase(z.im.atan2(z.re)), j))
            })
            .collect::<Result<_, _>>()?;
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let phases: Vec<f64> = order.iter().map(|p| p.0).collect();
        let vectors = Mat::from_fn(n, n, |i, c| raw[(i, order[c].1)]);
        Self::from_sorted(phases, vectors)
    }

    /// Reassembles a decomposition from stored parts (e.g. a cache file).
    /// Phases must be sorted; vectors are taken as-is and clusters are recomputed.
    pub fn from_parts(phases: Vec<f64>, vectors: Mat<C64>) -> Result<Self, QuantumError> {
        let n = phases.len();
        if vectors.nrows() != n || vectors.ncols() != n {
            return Err(QuantumError::DimensionMismatch { expected: n, found: vectors.ncols() });
        }
        if phases.windows(2).any(|w| w[0] > w[1]) || phases.iter().any(|p| !(0.0..std::f64::consts::TAU).contains(p)) {
            return Err(QuantumError::EigenSolver("eigenphases must be sorted and lie in [0, 2 pi)".into()));
        }
        Ok(Self { clusters: find_clusters(&phases), phases, vectors })
    }

    fn from_sorted(phases: Vec<f64>, mut vectors: Mat<C64>) -> Result<Self, QuantumError> {
        let clusters = find_clusters(&phases);
        for cluster in &clusters {
            orthonormalize_columns(&mut vectors, cluster, None);
        }
        canonicalize_phases(&mut vectors);
        Ok(Self { phases, vectors, clusters })
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Sorted eigenphases `theta_j` in `[0, 2 pi)`.
    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    /// Eigenvectors as columns.
    pub fn vectors(&self) -> MatRef<'_, C64> {
        self.vectors.as_ref()
    }

    /// Index sets of degenerate clusters (only those with two or more members).
    pub fn clusters(&self) -> &[Vec<usize>] {
        &self.clusters
    }

    pub fn eigenvalue(&self, j: usize) -> C64 {
        C64::from_polar(1.0, self.phases[j])
    }

    /// Applies a seeded Haar-random unitary inside every degenerate cluster.
    /// QE statistics are basis dependent there; this probes that sensitivity.
    pub fn rotate_clusters(&mut self, seed: u64) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for cluster in &self.clusters {
            orthonormalize_columns(&mut self.vectors, cluster, Some(&mut rng));
        }
        canonicalize_phases(&mut self.vectors);
    }

    /// Largest `||U u_j - e^{i theta_j} u_j||_2` over `j`.
    pub fn max_residual(&self, u: MatRef<'_, C64>) -> f64 {
        let uv = u * &self.vectors;
        (0..self.len())
            .map(|j| {
                let lam = self.eigenvalue(j);
                (0..self.len())
                    .map(|i| (uv[(i, j)] - self.vectors[(i, j)] * lam).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// Largest entry of `V^* V - I`.
    pub fn gram_defect(&self) -> f64 {
        let g = self.vectors.adjoint() * &self.vectors;
        super::identity_defect(g.as_ref())
    }
}

fn wrap_phase(theta: f64) -> f64 {
    let t = theta.rem_euclid(std::f64::consts::TAU);
    if t >= std::f64::consts::TAU { 0.0 } else { t }
}

/// Groups sorted phases into clusters, treating the circle as periodic.
fn find_clusters(phases: &[f64]) -> Vec<Vec<usize>> {
    let n = phases.len();
    if n == 0 {
        return Vec::new();
    }
    let mut groups: Vec<Vec<usize>> = vec![vec![0]];
    for j in 1..n {
        if phases[j] - phases[j - 1] < CLUSTER_GAP {
            groups.last_mut().unwrap().push(j);
        } else {
            groups.push(vec![j]);
        }
    }
    if groups.len() > 1 && phases[0] + std::f64::consts::TAU - phases[n - 1] < CLUSTER_GAP {
        let tail = groups.pop().unwrap();
        let mut merged = tail;
        merged.extend(groups[0].iter().copied());
        groups[0] = merged;
    }
    groups.retain(|g| g.len() > 1);
    groups
}

/// Replaces the given columns by an orthonormal basis of their span, optionally
/// rotated by a random unitary.
fn orthonormalize_columns(v: &mut Mat<C64>, cols: &[usize], rng: Option<&mut rand_chacha::ChaCha8Rng>) {
    let n = v.nrows();
    let k = cols.len();
    let block = Mat::from_fn(n, k, |i, c| v[(i, cols[c])]);
    let mut q = block.qr().compute_thin_Q();
    if let Some(rng) = rng {
        let g = Mat::from_fn(k, k, |_, _| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        });
        let haar = g.qr().compute_thin_Q();
        q = &q * &haar;
    }
    for (c, &col) in cols.iter().enumerate() {
        for i in 0..n {
            v[(i, col)] = q[(i, c)];
        }
    }
}

fn canonicalize_phases(v: &mut Mat<C64>) {
    for j in 0..v.ncols() {
        let pivot = (0..v.nrows()).find(|&i| v[(i, j)].norm() > CANONICAL_THRESHOLD);
        if let Some(p) = pivot {
            let z = v[(p, j)];
            let rot = z.conj() / z.norm();
            for i in 0..v.nrows() {
                v[(i, j)] *= rot;
            }
            // exactly real, not merely up to rounding
            v[(p, j)] = C64::new(z.norm(), 0.0);
        }
    }
}

/// `V_j = u_j^* Op u_j` for every eigenvector.
pub fn matrix_elements(spec: &SpectralDecomposition, op: &WeylOperator) -> Result<Vec<C64>, QuantumError> {
    if op.n() != spec.len() {
        return Err(QuantumError::DimensionMismatch { expected: spec.len(), found: op.n() });
    }
    let w = op.matrix() * spec.vectors();
    let v = spec.vectors();
    Ok((0..spec.len())
        .map(|j| (0..spec.len()).map(|i| v[(i, j)].conj() * w[(i, j)]).sum())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{propagator, quantize};
    use crate::torus::{CatMap, LatticeVector, TorusObservable};

    #[test]
    fn one_dimensional_spectrum() {
        let u = propagator(1, CatMap::ARNOLD).unwrap();
        let s = spectrum(&u).unwrap();
        let z = u.matrix()[(0, 0)];
        assert!((s.phases()[0] - wrap_phase(z.arg())).abs() < 1e-15);
        assert!((s.vectors()[(0, 0)] - C64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn identity_is_fully_degenerate() {
        let s = SpectralDecomposition::of_unitary(Mat::<C64>::identity(6, 6).as_ref()).unwrap();
        assert!(s.phases().iter().all(|&p| p == 0.0));
        assert_eq!(s.clusters().len(), 1);
        assert!(s.gram_defect() < 1e-14);
    }

    #[test]
    fn wraparound_cluster_is_merged() {
        let c = find_clusters(&[1e-12, 1.0, std::f64::consts::TAU - 1e-12]);
        assert_eq!(c, vec![vec![2, 0]]);
    }

    #[test]
    fn residuals_and_gram_at_100() {
        let u = propagator(100, CatMap::ARNOLD).unwrap();
        let s = spectrum(&u).unwrap();
        assert!(s.max_residual(u.matrix()) < 1e-8);
        assert!(s.gram_defect() < 1e-10);
        assert!(s.phases().windows(2).all(|w| w[0] <= w[1]));
        assert!(!s.clusters().is_empty(), "N = 100 has degenerate eigenphases");
    }

    #[test]
    fn seeded_rotation_keeps_invariants_and_is_reproducible() {
        let u = propagator(101, CatMap::ARNOLD).unwrap();
        let base = spectrum(&u).unwrap();
        let mut a = base.clone();
        let mut b = base.clone();
        a.rotate_clusters(7);
        b.rotate_clusters(7);
        assert_eq!(a.vectors(), b.vectors());
        assert!(a.max_residual(u.matrix()) < 1e-8);
        assert!(a.gram_defect() < 1e-10);
        assert_ne!(a.vectors(), base.vectors());
    }

    #[test]
    fn matrix_element_identities() {
        let u = propagator(40, CatMap::ARNOLD).unwrap();
        let s = spectrum(&u).unwrap();
        let id = quantize(40, &TorusObservable::constant(1.0)).unwrap();
        for v in matrix_elements(&s, &id).unwrap() {
            assert!((v - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
        let a = TorusObservable::cos_mode(LatticeVector::new(1, 2)).add(&TorusObservable::constant(0.4));
        let op = quantize(40, &a).unwrap();
        let vs = matrix_elements(&s, &op).unwrap();
        let norm = op.operator_norm().unwrap();
        assert!(vs.iter().all(|v| v.im.abs() < 1e-10 && v.norm() <= norm + 1e-12));
        let sum: C64 = vs.iter().sum();
        assert!((sum - op.trace()).norm() < 1e-9);

        let wrong = quantize(8, &a).unwrap();
        assert!(matches!(matrix_elements(&s, &wrong), Err(QuantumError::DimensionMismatch { .. })));
    }
}
