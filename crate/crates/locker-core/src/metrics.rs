//! Capacity-normalized error metrics. Absolute errors are divided by locker
//! capacity rather than by the actual value, so a one-package miss counts
//! the same fraction of a locker whether demand was one or one hundred, and
//! model error shares units with throughput.

use crate::error::{LockerError, Result};

/// `|actual - predicted| / capacity`.
pub fn capacity_normalized_error(actual: f64, predicted: f64, capacity: u32) -> Result<f64> {
    if capacity == 0 {
        return Err(LockerError::InvalidConfig(
            "capacity must be >= 1 for normalized error".to_string(),
        ));
    }
    Ok((actual - predicted).abs() / f64::from(capacity))
}

/// Unweighted mean of per-cell capacity-normalized errors.
pub fn mean_capacity_normalized_error(
    cells: &[(f64, f64)],
    capacity: u32,
) -> Result<f64> {
    if cells.is_empty() {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for &(actual, predicted) in cells {
        total += capacity_normalized_error(actual, predicted, capacity)?;
    }
    Ok(total / cells.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn one_package_miss_large_locker() {
        assert!((capacity_normalized_error(2.0, 1.0, 100).unwrap() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn one_package_miss_small_locker() {
        let e = capacity_normalized_error(2.0, 1.0, 3).unwrap();
        assert!((e - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn exact_prediction_is_zero() {
        assert_eq!(capacity_normalized_error(7.0, 7.0, 50).unwrap(), 0.0);
    }

    #[test]
    fn zero_capacity_is_error() {
        assert!(capacity_normalized_error(1.0, 1.0, 0).is_err());
    }

    #[test]
    fn mean_of_empty_is_zero() {
        assert_eq!(mean_capacity_normalized_error(&[], 10).unwrap(), 0.0);
    }

    proptest! {
        #[test]
        fn symmetric_in_actual_and_predicted(a in 0.0..1000.0f64, p in 0.0..1000.0f64, c in 1u32..500) {
            let e1 = capacity_normalized_error(a, p, c).unwrap();
            let e2 = capacity_normalized_error(p, a, c).unwrap();
            prop_assert!((e1 - e2).abs() < 1e-12);
        }

        #[test]
        fn scales_inversely_with_capacity(a in 0.0..1000.0f64, p in 0.0..1000.0f64, c in 1u32..200, k in 1u32..8) {
            let base = capacity_normalized_error(a, p, c).unwrap();
            let scaled = capacity_normalized_error(a, p, c * k).unwrap();
            prop_assert!((scaled * f64::from(k) - base).abs() < 1e-9);
        }
    }
}
