//! Adaptive Simpson quadrature with Richardson correction.

use super::LaplaceError;

const MAX_DEPTH: u32 = 48;

/// `int_a^b f` to absolute tolerance `tol`.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> Result<f64, LaplaceError>
where
    F: Fn(f64) -> Result<f64, LaplaceError>,
{
    if !(a.is_finite() && b.is_finite()) || tol <= 0.0 {
        return Err(LaplaceError::InvalidArgument(format!("bad quadrature setup [{a}, {b}] tol {tol}")));
    }
    if a == b {
        return Ok(0.0);
    }
    // A fixed pre-split guards against aliasing of oscillatory integrands on
    // the coarsest Simpson stencil.
    const PIECES: usize = 16;
    let h = (b - a) / PIECES as f64;
    let mut total = 0.0;
    for i in 0..PIECES {
        let (lo, hi) = (a + i as f64 * h, if i + 1 == PIECES { b } else { a + (i + 1) as f64 * h });
        let (flo, fhi, fmid) = (f(lo)?, f(hi)?, f(0.5 * (lo + hi))?);
        let whole = simpson(lo, hi, flo, fmid, fhi);
        total += refine(&f, lo, hi, flo, fmid, fhi, whole, tol / PIECES as f64, MAX_DEPTH)?;
    }
    Ok(total)
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn refine<F>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> Result<f64, LaplaceError>
where
    F: Fn(f64) -> Result<f64, LaplaceError>,
{
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(LaplaceError::QuadratureNonConvergence { a, b, estimate: delta.abs() / 15.0 });
    }
    Ok(refine(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)? + refine(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_and_oscillatory() {
        let cubic = adaptive_simpson(|x| Ok(x * x * x - x), 0.0, 2.0, 1e-12).unwrap();
        assert!((cubic - 2.0).abs() < 1e-12);
        let osc = adaptive_simpson(|x| Ok((40.0 * x).sin().powi(2)), 0.0, 1.0, 1e-11).unwrap();
        let exact = 0.5 - (80.0_f64).sin() / 160.0;
        assert!((osc - exact).abs() < 1e-10);
    }

    #[test]
    fn rejects_bad_input_and_reports_non_convergence() {
        assert!(adaptive_simpson(|x| Ok(x), 0.0, f64::INFINITY, 1e-9).is_err());
        let r = adaptive_simpson(|x: f64| Ok(if x > 0.3 { 1.0 / (x - 0.3) } else { 0.0 }), 0.0, 1.0, 1e-12);
        assert!(matches!(r, Err(LaplaceError::QuadratureNonConvergence { .. })));
    }
}
