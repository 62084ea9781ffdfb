use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SafetyKind {
    /// Distribution-free one-sided Chebyshev (Cantelli) bound.
    Chebyshev,
    /// Exact standard-normal quantile; only valid for Gaussian noise.
    GaussianExact,
}

/// Tightening multiplier `z(η̄)`: `√((1−η̄)/η̄)` or `Φ⁻¹(1−η̄)`.
pub fn safety_factor(eta_bar: f64, kind: SafetyKind) -> Result<f64> {
    if !(eta_bar > 0.0 && eta_bar <= 0.5) {
        return Err(Error::arg(format!("per-row tolerance must lie in (0, 0.5], got {eta_bar}")));
    }
    Ok(match kind {
        SafetyKind::Chebyshev => ((1.0 - eta_bar) / eta_bar).sqrt(),
        SafetyKind::GaussianExact => {
            let n = Normal::standard();
            n.inverse_cdf(1.0 - eta_bar).max(0.0)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert_eq!(safety_factor(0.5, SafetyKind::Chebyshev).unwrap(), 1.0);
        assert!(safety_factor(0.5, SafetyKind::GaussianExact).unwrap().abs() < 1e-12);
        let z = safety_factor(0.05, SafetyKind::GaussianExact).unwrap();
        assert!((z - 1.6448536269514722).abs() < 1e-4);
        assert!(safety_factor(0.6, SafetyKind::Chebyshev).is_err());
        assert!(safety_factor(0.0, SafetyKind::Chebyshev).is_err());
    }

    /// Φ via the Maclaurin series of erf, inverted by bisection.
    fn quantile_oracle(p: f64) -> f64 {
        let erf = |x: f64| {
            let (mut term, mut sum) = (x, x);
            for n in 1..200 {
                term *= -x * x / n as f64;
                sum += term / (2 * n + 1) as f64;
            }
            2.0 / std::f64::consts::PI.sqrt() * sum
        };
        let cdf = |x: f64| 0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2));
        let (mut lo, mut hi) = (-6.0, 6.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn gaussian_matches_series_oracle() {
        for e in [0.01, 0.05, 0.1, 0.25, 0.5] {
            let z = safety_factor(e, SafetyKind::GaussianExact).unwrap();
            assert!((z - quantile_oracle(1.0 - e)).abs() < 1e-8, "η̄ = {e}");
        }
    }

    #[test]
    fn chebyshev_dominates_gaussian() {
        for e in [0.01, 0.05, 0.1, 0.3] {
            assert!(
                safety_factor(e, SafetyKind::Chebyshev).unwrap() > safety_factor(e, SafetyKind::GaussianExact).unwrap()
            );
        }
    }
}
