use faer::{Mat, MatRef};
use num_complex::Complex64 as C64;

use super::{QuantumError, SpectralDecomposition};

/// Periodic images summed on each side of the base Gaussian (5 terms total).
const IMAGES: i64 = 2;

/// Husimi density sampled on a `G x G` grid of `T^2`.
///
/// `values[iq * g + ip]` holds the density at `(q, p) = (iq / G, ip / G)`,
/// normalized so that the grid mean is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct HusimiGrid {
    pub g: usize,
    pub values: Vec<f64>,
}

impl HusimiGrid {
    pub fn at(&self, iq: usize, ip: usize) -> f64 {
        self.values[iq * self.g + ip]
    }

    /// Grid mean, i.e. `sum / G^2`.
    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Periodized Gaussian coherent state centred at `(q, p)`:
/// `sum_k exp(-pi N (x - q - k)^2) exp(2 pi i N p (x - q - k))` at `x = j / N`,
/// normalized to unit length.
pub fn coherent_state(n: usize, q: f64, p: f64) -> Vec<C64> {
    let nf = n as f64;
    let mut psi: Vec<C64> = (0..n)
        .map(|j| {
            let x = j as f64 / nf;
            (-IMAGES..=IMAGES)
                .map(|k| {
                    let d = x - q - k as f64;
                    let envelope = (-std::f64::consts::PI * nf * d * d).exp();
                    C64::from_polar(envelope, std::f64::consts::TAU * (nf * p * d).rem_euclid(1.0))
                })
                .sum()
        })
        .collect();
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    for z in &mut psi {
        *z /= norm;
    }
    psi
}

/// All `G^2` coherent states as the columns of an `N x G^2` matrix.
pub fn coherent_matrix(n: usize, g: usize) -> Mat<C64> {
    let mut m = Mat::zeros(n, g * g);
    for iq in 0..g {
        for ip in 0..g {
            let c = coherent_state(n, iq as f64 / g as f64, ip as f64 / g as f64);
            for (j, z) in c.into_iter().enumerate() {
                m[(j, iq * g + ip)] = z;
            }
        }
    }
    m
}

fn check_grid(g: usize) -> Result<(), QuantumError> {
    if g < 8 {
        Err(QuantumError::InvalidDimension(format!("Husimi grid needs G >= 8, got {g}")))
    } else {
        Ok(())
    }
}

fn normalized_grid(g: usize, overlaps: impl Iterator<Item = C64>) -> HusimiGrid {
    let mut values: Vec<f64> = overlaps.map(|z| z.norm_sqr()).collect();
    let scale = (g * g) as f64 / values.iter().sum::<f64>();
    for v in &mut values {
        *v *= scale;
    }
    HusimiGrid { g, values }
}

/// `|<c_{q,p}, u>|^2` on the grid, normalized to unit grid mean.
pub fn husimi(u: &[C64], g: usize) -> Result<HusimiGrid, QuantumError> {
    check_grid(g)?;
    if u.is_empty() || u.iter().all(|z| z.norm() == 0.0) {
        return Err(QuantumError::InvalidDimension("Husimi of a zero vector".into()));
    }
    let c = coherent_matrix(u.len(), g);
    Ok(normalized_grid(g, (0..g * g).map(|col| (0..u.len()).map(|j| c[(j, col)].conj() * u[j]).sum())))
}

/// Husimi densities of every eigenvector, computed with one matrix product.
pub fn husimi_all(spec: &SpectralDecomposition, g: usize) -> Result<Vec<HusimiGrid>, QuantumError> {
    check_grid(g)?;
    let c = coherent_matrix(spec.len(), g);
    let overlaps = c.adjoint() * spec.vectors();
    Ok((0..spec.len()).map(|j| column_grid(g, overlaps.as_ref(), j)).collect())
}

fn column_grid(g: usize, overlaps: MatRef<'_, C64>, j: usize) -> HusimiGrid {
    normalized_grid(g, (0..g * g).map(|r| overlaps[(r, j)]))
}
