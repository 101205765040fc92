use std::f64::consts::SQRT_2;

use statrs::function::erf::{erf_inv, erfc};

use crate::error::{Error, Result};

/// Gaussian tail probability `P(X > x)` for a standard normal `X`.
pub fn qfunc(x: f64) -> f64 {
    0.5 * erfc(x / SQRT_2)
}

/// Half-width `z` of the two-sided standard-normal interval `[-z, z]` that
/// holds `confidence` of the mass.
pub fn normal_quantile(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::invalid(format!(
            "confidence {confidence} must lie strictly between 0 and 1"
        )));
    }
    Ok(SQRT_2 * erf_inv(confidence))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Bisection on the tail function, independent of the inverse-erf path.
    fn quantile_by_bisection(confidence: f64) -> f64 {
        let target = (1.0 - confidence) / 2.0;
        let (mut lo, mut hi) = (0.0, 40.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if qfunc(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn qfunc_values() {
        assert_eq!(qfunc(0.0), 0.5);
        let ber = qfunc((2.0 * 10f64.powf(0.68)).sqrt());
        assert!((ber - 9.9e-4).abs() < 0.05e-4, "{ber}");
        assert!((qfunc(3.0940) - 9.9e-4).abs() < 0.05e-4);
        assert!(qfunc(10.0) < 1e-20);
        assert!((qfunc(-1.0) + qfunc(1.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn qfunc_monotone() {
        let mut prev = qfunc(-8.0);
        for i in -79..80 {
            let v = qfunc(i as f64 / 10.0);
            assert!(v < prev);
            prev = v;
        }
    }

    #[test]
    fn quantiles_match_bisection() {
        for (c, expected) in [(0.95, 1.9600), (0.6827, 1.0), (0.5, 0.6745)] {
            let z = normal_quantile(c).unwrap();
            assert!((z - quantile_by_bisection(c)).abs() < 1e-9);
            assert!((z - expected).abs() < 1e-3, "{c}: {z}");
        }
    }

    #[test]
    fn quantile_rejects_out_of_range() {
        for c in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(normal_quantile(c).is_err());
        }
    }
}
