//! Bessel functions of the first kind and their zeros.

use super::LaplaceError;

/// Largest argument for which `bessel_j` is validated.
pub const MAX_ARGUMENT: f64 = 500.0;

/// Largest order accepted by `bessel_j`.
pub const MAX_ORDER: u32 = 5000;

const RESCALE_ABOVE: f64 = 1e250;

/// `J_m(x)` for integer `m >= 0` and `0 <= x <= 500`: the power series for
/// `x < 1`, otherwise Miller's backward recurrence normalized with
/// `J_0 + 2 sum_k J_{2k} = 1`.
pub fn bessel_j(m: u32, x: f64) -> Result<f64, LaplaceError> {
    if !(0.0..=MAX_ARGUMENT).contains(&x) || m > MAX_ORDER {
        return Err(LaplaceError::Range(format!("J_{m}({x}) is outside 0 <= x <= {MAX_ARGUMENT}, m <= {MAX_ORDER}")));
    }
    if x == 0.0 {
        return Ok(if m == 0 { 1.0 } else { 0.0 });
    }
    Ok(if x < SERIES_BELOW { series(m, x) } else { miller(m, x) })
}

const SERIES_BELOW: f64 = 1.0;

/// `sum_s (-1)^s (x/2)^{2s+m} / (s! (s+m)!)`; terms shrink by at least 4x.
fn series(m: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut term = 1.0;
    for i in 1..=m {
        term *= half / i as f64;
        if term == 0.0 {
            return 0.0;
        }
    }
    let mut sum = term;
    for s in 1..40u32 {
        term *= -half * half / (s as f64 * (s + m) as f64);
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    sum
}

fn start_index(m: u32, x: f64) -> u32 {
    let top = (m as f64).max(x);
    let s = (top + 30.0 + 12.0 * top.cbrt()).ceil() as u32;
    s + (s & 1)
}

fn miller(m: u32, x: f64) -> f64 {
    let start = start_index(m, x);
    let two_over_x = 2.0 / x;
    let (mut above, mut current) = (0.0_f64, 1e-30_f64);
    let mut norm = 0.0;
    let mut saved = 0.0;
    // current = J_k (unnormalized), above = J_{k+1}
    let mut k = start;
    loop {
        if k == m {
            saved = current;
        }
        if k % 2 == 0 {
            norm += if k == 0 { current } else { 2.0 * current };
        }
        if k == 0 {
            break;
        }
        let below = k as f64 * two_over_x * current - above;
        above = current;
        current = below;
        k -= 1;
        if current.abs() > RESCALE_ABOVE {
            current /= RESCALE_ABOVE;
            above /= RESCALE_ABOVE;
            norm /= RESCALE_ABOVE;
            saved /= RESCALE_ABOVE;
        }
    }
    saved / norm
}

/// McMahon's large-zero expansion of `j_{m,k}`.
pub fn mcmahon_estimate(m: u32, k: u32) -> f64 {
    let mu = 4.0 * (m as f64).powi(2);
    let beta = (k as f64 + m as f64 / 2.0 - 0.25) * std::f64::consts::PI;
    let b8 = 8.0 * beta;
    beta - (mu - 1.0) / b8
        - 4.0 * (mu - 1.0) * (7.0 * mu - 31.0) / (3.0 * b8.powi(3))
        - 32.0 * (mu - 1.0) * (83.0 * mu * mu - 982.0 * mu + 3779.0) / (15.0 * b8.powi(5))
}

/// Refines a sign-change bracket `[lo, hi]` of `J_m` to machine precision.
fn bisect(m: u32, mut lo: f64, mut hi: f64) -> Result<f64, LaplaceError> {
    let mut flo = bessel_j(m, lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fmid = bessel_j(m, mid)?;
        if fmid == 0.0 {
            return Ok(mid);
        }
        if (fmid > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    let (flo, fhi) = (bessel_j(m, lo)?.abs(), bessel_j(m, hi)?.abs());
    Ok(if flo <= fhi { lo } else { hi })
}

/// Scan step; consecutive zeros of `J_m` are more than 3 apart.
const SCAN_STEP: f64 = 0.5;

/// All positive zeros of `J_m` below `xmax`, ascending.
pub fn bessel_zeros_below(m: u32, xmax: f64) -> Result<Vec<f64>, LaplaceError> {
    let mut zeros = Vec::new();
    // J_m > 0 on (0, j_{m,1}) and j_{m,1} > m.
    let mut lo = if m == 0 { 0.0 } else { m as f64 };
    if lo >= xmax {
        return Ok(zeros);
    }
    let mut flo = bessel_j(m, lo)?;
    while lo < xmax {
        let hi = (lo + SCAN_STEP).min(MAX_ARGUMENT);
        let fhi = bessel_j(m, hi)?;
        if (flo > 0.0) != (fhi > 0.0) {
            let z = bisect(m, lo, hi)?;
            if z <= xmax {
                zeros.push(z);
            }
        }
        if hi >= MAX_ARGUMENT {
            break;
        }
        lo = hi;
        flo = fhi;
    }
    Ok(zeros)
}

/// `k`-th positive zero `j_{m,k}` (`k >= 1`).
///
/// Far out (`k >= 2m + 2`) the McMahon estimate is accurate to well under the
/// half-spacing of zeros, so the bracket `[est - 1, est + 1]` is used
/// directly; otherwise zeros are counted by scanning from `x = m`.
pub fn bessel_zero(m: u32, k: u32) -> Result<f64, LaplaceError> {
    if k == 0 {
        return Err(LaplaceError::InvalidArgument("zero index k starts at 1".into()));
    }
    if k >= 2 * m + 2 {
        let est = mcmahon_estimate(m, k);
        let (lo, hi) = (est - 1.0, est + 1.0);
        if hi <= MAX_ARGUMENT && (bessel_j(m, lo)? > 0.0) != (bessel_j(m, hi)? > 0.0) {
            return bisect(m, lo, hi);
        }
    }
    let mut lo = if m == 0 { 0.0 } else { m as f64 };
    let mut flo = bessel_j(m, lo)?;
    let mut found = 0;
    loop {
        if lo >= MAX_ARGUMENT {
            return Err(LaplaceError::Range(format!("j_({m},{k}) exceeds {MAX_ARGUMENT}")));
        }
        let hi = (lo + SCAN_STEP).min(MAX_ARGUMENT);
        let fhi = bessel_j(m, hi)?;
        if (flo > 0.0) != (fhi > 0.0) {
            found += 1;
            if found == k {
                return bisect(m, lo, hi);
            }
        }
        lo = hi;
        flo = fhi;
    }
}
