//! Binomial interval estimates for exceedance frequencies.

use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

/// Wilson score interval for `successes` out of `trials` at two-sided `confidence`.
pub fn wilson_interval(successes: u64, trials: u64, confidence: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = Normal::standard().inverse_cdf(0.5 + confidence / 2.0);
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// One-sided Clopper-Pearson upper bound when no exceedance was seen:
/// `1 - (1 - confidence)^(1 / trials)`.
pub fn clopper_pearson_zero(trials: u64, confidence: f64) -> f64 {
    1.0 - (1.0 - confidence).powf(1.0 / trials as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExceedanceEstimate {
    pub exceedances: u64,
    pub trials: u64,
    /// `exceedances / trials`, absent when zero.
    pub estimate: Option<f64>,
    pub wilson: (f64, f64),
    /// Present when no exceedance was seen.
    pub upper_bound: Option<f64>,
}

impl ExceedanceEstimate {
    pub fn new(exceedances: u64, trials: u64, confidence: f64) -> Self {
        let zero = exceedances == 0;
        Self {
            exceedances,
            trials,
            estimate: (!zero).then(|| exceedances as f64 / trials as f64),
            wilson: wilson_interval(exceedances, trials, confidence),
            upper_bound: zero.then(|| clopper_pearson_zero(trials, confidence)),
        }
    }

    /// The point estimate, or the upper bound when there is none.
    pub fn value(&self) -> f64 {
        self.estimate.or(self.upper_bound).expect("one of the two is set")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_reference_values() {
        // 10 of 100 at 95%: (0.0552, 0.1744).
        let (lo, hi) = wilson_interval(10, 100, 0.95);
        assert!((lo - 0.05522).abs() < 1e-4 && (hi - 0.17436).abs() < 1e-4, "{lo} {hi}");
        let (lo, hi) = wilson_interval(0, 50, 0.95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.1);
    }

    #[test]
    fn zero_exceedances_use_the_bound() {
        let e = ExceedanceEstimate::new(0, 2000, 0.95);
        assert_eq!(e.estimate, None);
        let b = e.upper_bound.unwrap();
        assert!((b - (1.0 - 0.05f64.powf(1.0 / 2000.0))).abs() < 1e-15);
        assert!((b - 3.0 / 2000.0).abs() < 2e-5);
        assert_eq!(e.value(), b);
        assert_eq!(ExceedanceEstimate::new(7, 100, 0.95).value(), 0.07);
    }
}
