use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::{adaptive_simpson, bessel_j, bessel_zero, torus_phase_moment, Domain, EigenEntry, LaplaceError, ModeIndex, PhaseSymbol};

/// Absolute tolerance passed to the quadrature in [`disk_mass_in_radius`].
pub const DISK_MASS_TOL: f64 = 1e-11;

/// `int a |u_{m,n}|^2` over the Dirichlet rectangle for `a = cos(2 pi p x / L1)`.
///
/// With `|u|^2 = (1 - cos(2 pi m x / L1))(1 - cos(2 pi n y / L2)) / (L1 L2)` the
/// `y` integral is 1 and the `x` integral is
/// `delta_{p,0} - (delta_{p,m} + delta_{p,-m}) / 2`; independent of `L1`.
pub fn rectangle_position_element(m: u32, n: u32, p: u32) -> Result<f64, LaplaceError> {
    if m == 0 || n == 0 || p == 0 {
        return Err(LaplaceError::InvalidArgument(format!("need m, n, p >= 1, got ({m}, {n}), p = {p}")));
    }
    Ok(if p == m { -0.5 } else { 0.0 })
}

/// Fraction of the `L^2` mass of the disk mode `(m, k)` inside radius
/// `r0` (as a fraction of the disk radius).
///
/// The mass is `int_0^{r0} J_m(j r)^2 r dr / (J_{m+1}(j)^2 / 2)` with
/// `j = j_{|m|,k}`; the denominator is the closed-form total.
pub fn disk_mass_in_radius(m: i64, k: u32, r0: f64) -> Result<f64, LaplaceError> {
    if !(r0 > 0.0 && r0 < 1.0) {
        return Err(LaplaceError::InvalidArgument(format!("radius fraction must lie in (0, 1), got {r0}")));
    }
    let order = u32::try_from(m.unsigned_abs()).map_err(|_| LaplaceError::Range(format!("angular order {m}")))?;
    let j = bessel_zero(order, k)?;
    let total = 0.5 * bessel_j(order + 1, j)?.powi(2);
    let mass = adaptive_simpson(|r| Ok(bessel_j(order, j * r)?.powi(2) * r / total), 0.0, r0, DISK_MASS_TOL)?;
    Ok(mass.clamp(0.0, 1.0))
}

/// Observables with closed-form diagonal matrix elements on the model
/// domains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LaplaceObservable {
    /// `cos(2 pi p x / L1)` on a rectangle.
    PositionCosine { p: u32 },
    /// Phase-space symbol on the circle or flat torus.
    Phase { symbol: PhaseSymbol },
    /// Indicator of `r < r0 * radius` on a disk.
    DiskIndicator { r0: f64 },
    /// `base + offset`.
    Shifted { base: Box<LaplaceObservable>, offset: f64 },
}

impl LaplaceObservable {
    fn name(&self) -> &'static str {
        match self {
            LaplaceObservable::PositionCosine { .. } => "position_cosine",
            LaplaceObservable::Phase { .. } => "phase",
            LaplaceObservable::DiskIndicator { .. } => "disk_indicator",
            LaplaceObservable::Shifted { .. } => "shifted",
        }
    }

    pub fn shifted(self, offset: f64) -> Self {
        LaplaceObservable::Shifted { base: Box::new(self), offset }
    }

    /// Fails unless the observable family lives on `d` and its parameters
    /// are valid.
    pub fn check_domain(&self, d: &Domain) -> Result<(), LaplaceError> {
        let unsupported = || LaplaceError::UnsupportedObservable { observable: self.name().into(), domain: d.to_string() };
        match (self, d) {
            (LaplaceObservable::PositionCosine { p }, Domain::Rectangle { .. }) => {
                if *p == 0 {
                    return Err(LaplaceError::InvalidArgument("position cosine needs p >= 1".into()));
                }
                Ok(())
            }
            (LaplaceObservable::Phase { symbol }, Domain::Circle | Domain::FlatTorus2D) => {
                symbol.validate()?;
                if symbol.dim != d.dim() {
                    return Err(unsupported());
                }
                Ok(())
            }
            (LaplaceObservable::DiskIndicator { r0 }, Domain::Disk { .. }) => {
                if !(*r0 > 0.0 && *r0 < 1.0) {
                    return Err(LaplaceError::InvalidArgument(format!("disk indicator needs 0 < r0 < 1, got {r0}")));
                }
                Ok(())
            }
            (LaplaceObservable::Shifted { base, offset }, _) => {
                if !offset.is_finite() {
                    return Err(LaplaceError::InvalidArgument("non-finite shift".into()));
                }
                base.check_domain(d)
            }
            _ => Err(unsupported()),
        }
    }

    /// Liouville average `L_a` over the unit cosphere bundle of `d`.
    pub fn liouville_mean(&self, d: &Domain) -> Result<C64, LaplaceError> {
        self.check_domain(d)?;
        Ok(match self {
            LaplaceObservable::PositionCosine { .. } => C64::new(0.0, 0.0),
            LaplaceObservable::Phase { symbol } => symbol.liouville_mean(),
            LaplaceObservable::DiskIndicator { r0 } => C64::new(r0 * r0, 0.0),
            LaplaceObservable::Shifted { base, offset } => base.liouville_mean(d)? + offset,
        })
    }

    /// Diagonal matrix element `<a u, u>` for the eigenfunction of `entry`.
    pub fn matrix_element(&self, d: &Domain, entry: &EigenEntry) -> Result<C64, LaplaceError> {
        self.check_domain(d)?;
        let mismatch = || LaplaceError::InvalidArgument(format!("mode {} does not belong to the {d}", entry.mode));
        match (self, entry.mode) {
            (LaplaceObservable::PositionCosine { p }, ModeIndex::Rectangle { m, n }) => {
                Ok(C64::new(rectangle_position_element(m, n, *p)?, 0.0))
            }
            (LaplaceObservable::Phase { symbol }, ModeIndex::Circle { j }) => torus_phase_moment(&[j], symbol),
            (LaplaceObservable::Phase { symbol }, ModeIndex::Torus { k1, k2 }) => torus_phase_moment(&[k1, k2], symbol),
            (LaplaceObservable::DiskIndicator { r0 }, ModeIndex::Disk { m, k }) => Ok(C64::new(disk_mass_in_radius(m, k, *r0)?, 0.0)),
            (LaplaceObservable::Shifted { base, offset }, _) => Ok(base.matrix_element(d, entry)? + offset),
            _ => Err(mismatch()),
        }
    }
}
