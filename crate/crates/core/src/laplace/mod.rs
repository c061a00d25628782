//! Exactly solvable Laplace spectra: the circle, the flat 2-torus, and the
//! Dirichlet rectangle and disk.
//!
//! Eigenvalues are frequencies `lambda` with `-Delta u = lambda^2 u`, counted
//! with multiplicity. The circle and torus use period `2 pi` in every variable.

mod bessel;
mod elements;
mod quad;
mod symbol;

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use bessel::{bessel_j, bessel_zero, bessel_zeros_below, mcmahon_estimate};
pub use elements::{disk_mass_in_radius, rectangle_position_element, LaplaceObservable, DISK_MASS_TOL};
pub use quad::adaptive_simpson;
pub use symbol::{torus_phase_moment, Monomial, PhaseSymbol, PhaseTerm};

#[derive(Debug, Error)]
pub enum LaplaceError {
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("outside validated range: {0}")]
    Range(String),
    #[error("quadrature did not converge on [{a}, {b}] (error estimate {estimate:e})")]
    QuadratureNonConvergence { a: f64, b: f64, estimate: f64 },
    #[error("observable {observable} is not supported on {domain}")]
    UnsupportedObservable { observable: String, domain: String },
}

/// Spatial domain. Rectangle and disk carry Dirichlet conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Domain {
    Circle,
    #[serde(rename = "flat_torus")]
    FlatTorus2D,
    Rectangle { l1: f64, l2: f64 },
    Disk { radius: f64 },
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Domain::Circle => write!(f, "circle"),
            Domain::FlatTorus2D => write!(f, "flat torus"),
            Domain::Rectangle { l1, l2 } => write!(f, "rectangle {l1} x {l2}"),
            Domain::Disk { radius } => write!(f, "disk of radius {radius}"),
        }
    }
}

impl Domain {
    pub fn rectangle(l1: f64, l2: f64) -> Result<Self, LaplaceError> {
        let d = Domain::Rectangle { l1, l2 };
        d.validate()?;
        Ok(d)
    }

    pub fn disk(radius: f64) -> Result<Self, LaplaceError> {
        let d = Domain::Disk { radius };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<(), LaplaceError> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        match *self {
            Domain::Rectangle { l1, l2 } if !(ok(l1) && ok(l2)) => {
                Err(LaplaceError::InvalidDomain(format!("rectangle sides must be positive, got {l1} x {l2}")))
            }
            Domain::Disk { radius } if !ok(radius) => {
                Err(LaplaceError::InvalidDomain(format!("disk radius must be positive, got {radius}")))
            }
            _ => Ok(()),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Circle => 1,
            _ => 2,
        }
    }

    /// Length or area.
    pub fn volume(&self) -> f64 {
        match *self {
            Domain::Circle => 2.0 * PI,
            Domain::FlatTorus2D => 4.0 * PI * PI,
            Domain::Rectangle { l1, l2 } => l1 * l2,
            Domain::Disk { radius } => PI * radius * radius,
        }
    }

    /// Length of the Dirichlet boundary (zero for closed manifolds).
    pub fn boundary_length(&self) -> f64 {
        match *self {
            Domain::Circle | Domain::FlatTorus2D => 0.0,
            Domain::Rectangle { l1, l2 } => 2.0 * (l1 + l2),
            Domain::Disk { radius } => 2.0 * PI * radius,
        }
    }
}

/// Labels an eigenfunction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModeIndex {
    /// `e^{i j x}`.
    Circle { j: i64 },
    /// `e^{i k . x}`.
    Torus { k1: i64, k2: i64 },
    /// `sin(pi m x / L1) sin(pi n y / L2)`.
    Rectangle { m: u32, n: u32 },
    /// `J_|m|(j_{|m|,k} r / rho) e^{i m theta}`.
    Disk { m: i64, k: u32 },
}

impl fmt::Display for ModeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModeIndex::Circle { j } => write!(f, "circle:{j}"),
            ModeIndex::Torus { k1, k2 } => write!(f, "torus:{k1}:{k2}"),
            ModeIndex::Rectangle { m, n } => write!(f, "rect:{m}:{n}"),
            ModeIndex::Disk { m, k } => write!(f, "disk:{m}:{k}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenEntry {
    pub lambda: f64,
    pub mode: ModeIndex,
}

/// Eigenvalues up to a cutoff, nondecreasing, with multiplicity. Coinciding
/// eigenvalues stay separate entries in enumeration order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EigenData {
    pub domain: Domain,
    pub cutoff: f64,
    pub entries: Vec<EigenEntry>,
}

/// Relative tolerance for grouping equal eigenvalues in the CSV export.
const RANK_TOL: f64 = 1e-12;

impl EigenData {
    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `#{ j : lambda_j <= r }`.
    pub fn count_below(&self, r: f64) -> usize {
        self.entries.partition_point(|e| e.lambda <= r)
    }

    /// Entries with `lo <= lambda <= hi`.
    pub fn window(&self, lo: f64, hi: f64) -> &[EigenEntry] {
        let start = self.entries.partition_point(|e| e.lambda < lo);
        let end = self.entries.partition_point(|e| e.lambda <= hi);
        &self.entries[start..end.max(start)]
    }

    /// CSV with columns `lambda,mode,multiplicity_rank`; the rank numbers
    /// entries of one eigenvalue from 1.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("lambda,mode,multiplicity_rank\n");
        let mut rank = 0;
        for (i, e) in self.entries.iter().enumerate() {
            let same = i > 0 && {
                let prev = self.entries[i - 1].lambda;
                (e.lambda - prev).abs() <= RANK_TOL * e.lambda.abs().max(1.0)
            };
            rank = if same { rank + 1 } else { 1 };
            out.push_str(&format!("{:.17e},{},{}\n", e.lambda, e.mode, rank));
        }
        out
    }
}

/// Closed-form frequency of a mode.
pub fn mode_frequency(d: &Domain, mode: ModeIndex) -> Result<f64, LaplaceError> {
    match (*d, mode) {
        (Domain::Circle, ModeIndex::Circle { j }) => Ok(j.unsigned_abs() as f64),
        (Domain::FlatTorus2D, ModeIndex::Torus { k1, k2 }) => Ok((k1 as f64).hypot(k2 as f64)),
        (Domain::Rectangle { l1, l2 }, ModeIndex::Rectangle { m, n }) if m >= 1 && n >= 1 => {
            Ok(PI * (m as f64 / l1).hypot(n as f64 / l2))
        }
        (Domain::Disk { radius }, ModeIndex::Disk { m, k }) => {
            let order = u32::try_from(m.unsigned_abs()).map_err(|_| LaplaceError::Range(format!("angular order {m}")))?;
            Ok(bessel_zero(order, k)? / radius)
        }
        _ => Err(LaplaceError::InvalidArgument(format!("mode {mode} does not belong to the {d}"))),
    }
}

/// All eigenvalues `lambda <= r`, with multiplicity.
///
/// Lattice domains are enumerated directly; the disk enumerates Bessel zeros
/// below `r * radius` for each angular order, listing `m` and `-m` separately.
pub fn enumerate_eigenvalues(d: &Domain, r: f64) -> Result<EigenData, LaplaceError> {
    d.validate()?;
    if !(r.is_finite() && r > 0.0) {
        return Err(LaplaceError::InvalidArgument(format!("cutoff must be positive, got {r}")));
    }
    let mut entries = Vec::new();
    match *d {
        Domain::Circle => {
            let top = r.floor() as i64;
            for j in -top..=top {
                entries.push(EigenEntry { lambda: j.unsigned_abs() as f64, mode: ModeIndex::Circle { j } });
            }
        }
        Domain::FlatTorus2D => {
            let top = r.floor() as i64;
            for k1 in -top..=top {
                for k2 in -top..=top {
                    let lambda = (k1 as f64).hypot(k2 as f64);
                    if lambda <= r {
                        entries.push(EigenEntry { lambda, mode: ModeIndex::Torus { k1, k2 } });
                    }
                }
            }
        }
        Domain::Rectangle { l1, l2 } => {
            let top_m = (r * l1 / PI).floor() as u32;
            for m in 1..=top_m {
                for n in 1.. {
                    let lambda = PI * (m as f64 / l1).hypot(n as f64 / l2);
                    if lambda > r {
                        break;
                    }
                    entries.push(EigenEntry { lambda, mode: ModeIndex::Rectangle { m, n } });
                }
            }
        }
        Domain::Disk { radius } => {
            let xmax = r * radius;
            if xmax > bessel::MAX_ARGUMENT {
                return Err(LaplaceError::Range(format!("disk cutoff needs Bessel zeros up to {xmax}")));
            }
            // j_{m,1} > m, so orders above xmax contribute nothing.
            for m in 0..=(xmax.floor() as u32) {
                for (k, z) in bessel_zeros_below(m, xmax)?.into_iter().enumerate() {
                    let lambda = z / radius;
                    let k = k as u32 + 1;
                    entries.push(EigenEntry { lambda, mode: ModeIndex::Disk { m: m as i64, k } });
                    if m > 0 {
                        entries.push(EigenEntry { lambda, mode: ModeIndex::Disk { m: -(m as i64), k } });
                    }
                }
            }
        }
    }
    entries.sort_by(|a, b| a.lambda.total_cmp(&b.lambda));
    Ok(EigenData { domain: *d, cutoff: r, entries })
}

/// Eigenvalue count against the Weyl law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeylComparison {
    pub r: f64,
    pub count: usize,
    /// `omega_n / (2 pi)^n * vol * R^n`.
    pub leading: f64,
    /// Leading term minus `perimeter / (4 pi) * R` for Dirichlet domains.
    pub two_term: f64,
}

impl WeylComparison {
    pub fn relative_error(&self) -> f64 {
        (self.count as f64 - self.leading).abs() / self.leading
    }
}

/// Volume of the unit ball in dimension `n` (only 1 and 2 occur here).
fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => PI,
        _ => unreachable!("domains have dimension 1 or 2"),
    }
}

/// Smallest cutoff for which the comparison is reported.
pub const WEYL_MIN_CUTOFF: f64 = 10.0;

pub fn weyl_count_compare(d: &Domain, r: f64) -> Result<WeylComparison, LaplaceError> {
    if r < WEYL_MIN_CUTOFF {
        return Err(LaplaceError::InvalidArgument(format!("Weyl comparison needs R >= {WEYL_MIN_CUTOFF}, got {r}")));
    }
    let count = enumerate_eigenvalues(d, r)?.len();
    let n = d.dim();
    let leading = unit_ball_volume(n) / (2.0 * PI).powi(n as i32) * d.volume() * r.powi(n as i32);
    let two_term = leading - d.boundary_length() / (4.0 * PI) * r;
    Ok(WeylComparison { r, count, leading, two_term })
}
