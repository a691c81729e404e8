//! Bracketing root finder used by every solver in the crate.

use crate::error::{ModelError, Result};

pub(crate) const MAX_BISECTIONS: usize = 200;

/// Bisection for a root of `f` on `[lo, hi]`, where `f(lo) <= 0 <= f(hi)`.
///
/// Halving stops once the bracket is no wider than `abs_tol`, once it can no
/// longer be split in floating point, or after `max_iter` steps. The
/// endpoint with the smaller residual is returned.
pub(crate) fn bisect<F>(f: F, mut lo: f64, mut hi: f64, abs_tol: f64, max_iter: usize) -> Result<f64>
where
    F: Fn(f64) -> f64,
{
    let mut f_lo = f(lo);
    let mut f_hi = f(hi);
    if f_lo.is_nan() || f_hi.is_nan() || f_lo > 0.0 || f_hi < 0.0 {
        return Err(ModelError::InvalidArgument(format!(
            "bisection bracket [{lo}, {hi}] has no sign change (f = {f_lo}, {f_hi})"
        )));
    }
    for _ in 0..max_iter {
        if hi - lo <= abs_tol {
            break;
        }
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid < 0.0 {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
            f_hi = f_mid;
        }
    }
    Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_sqrt_two() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 0.0, MAX_BISECTIONS).unwrap();
        assert!((r - 2f64.sqrt()).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn respects_tolerance() {
        let r = bisect(|x| x - 0.3, 0.0, 1.0, 1e-3, MAX_BISECTIONS).unwrap();
        assert!((r - 0.3).abs() <= 1e-3);
    }

    #[test]
    fn rejects_bad_bracket() {
        assert!(bisect(|x| x + 1.0, 0.0, 1.0, 0.0, 10).is_err());
    }
}
