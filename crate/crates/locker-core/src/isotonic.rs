//! Isotonic regression by pool-adjacent-violators, and the step-function
//! calibration maps fitted with it.
//!
//! Given `(score, outcome)` pairs, the fit is the least-squares
//! non-decreasing function of score. Outcomes sharing a score are pooled
//! first, since a function of score cannot separate them. The fitted map is
//! evaluated as a step function: a query takes the value of the highest
//! breakpoint at or below it, clamped at both ends.

use serde::{Deserialize, Serialize};

/// Monotone non-decreasing step map from raw score to calibrated value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CalibrationMap {
    /// Returned for empty training input: scores pass through, clamped to
    /// `[0, 1]`.
    Identity,
    /// Breakpoints `(score, value)` sorted by score, values non-decreasing.
    Steps(Vec<(f64, f64)>),
}

impl CalibrationMap {
    pub fn evaluate(&self, score: f64) -> f64 {
        match self {
            CalibrationMap::Identity => score.clamp(0.0, 1.0),
            CalibrationMap::Steps(points) => {
                debug_assert!(!points.is_empty());
                if score <= points[0].0 {
                    return points[0].1;
                }
                // last breakpoint with score <= query
                let mut value = points[0].1;
                for &(x, y) in points {
                    if x <= score {
                        value = y;
                    } else {
                        break;
                    }
                }
                value
            }
        }
    }
}

/// Weighted least-squares non-decreasing fit of `values` in sequence order.
/// Returns one fitted value per input position.
pub fn pav(values: &[f64], weights: &[f64]) -> Vec<f64> {
    assert_eq!(values.len(), weights.len());
    let n = values.len();
    if n == 0 {
        return Vec::new();
    }
    // Blocks of (mean, weight, count), merged while out of order.
    let mut means: Vec<f64> = Vec::with_capacity(n);
    let mut wsum: Vec<f64> = Vec::with_capacity(n);
    let mut count: Vec<usize> = Vec::with_capacity(n);
    for i in 0..n {
        means.push(values[i]);
        wsum.push(weights[i]);
        count.push(1);
        while means.len() > 1 {
            let last = means.len() - 1;
            if means[last - 1] <= means[last] {
                break;
            }
            let merged_w = wsum[last - 1] + wsum[last];
            let merged_mean = (means[last - 1] * wsum[last - 1] + means[last] * wsum[last]) / merged_w;
            means[last - 1] = merged_mean;
            wsum[last - 1] = merged_w;
            count[last - 1] += count[last];
            means.pop();
            wsum.pop();
            count.pop();
        }
    }
    let mut fitted = Vec::with_capacity(n);
    for (block, &c) in count.iter().enumerate() {
        for _ in 0..c {
            fitted.push(means[block]);
        }
    }
    fitted
}

/// Fit a calibration map from `(raw score, outcome)` pairs.
pub fn fit_isotonic(pairs: &[(f64, f64)]) -> CalibrationMap {
    if pairs.is_empty() {
        return CalibrationMap::Identity;
    }
    let mut sorted: Vec<(f64, f64)> = pairs.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));

    // Pool ties in score before running PAV.
    let mut scores: Vec<f64> = Vec::new();
    let mut outcome_mean: Vec<f64> = Vec::new();
    let mut weight: Vec<f64> = Vec::new();
    for &(score, outcome) in &sorted {
        if let Some(last) = scores.last() {
            if *last == score {
                let k = scores.len() - 1;
                let w = weight[k];
                outcome_mean[k] = (outcome_mean[k] * w + outcome) / (w + 1.0);
                weight[k] = w + 1.0;
                continue;
            }
        }
        scores.push(score);
        outcome_mean.push(outcome);
        weight.push(1.0);
    }

    let fitted = pav(&outcome_mean, &weight);
    let points: Vec<(f64, f64)> = scores.into_iter().zip(fitted).collect();
    CalibrationMap::Steps(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DetRng;

    /// Independent oracle for the isotonic QP: the minimax characterization
    /// `f*_i = max_{a<=i} min_{b>=i} weighted_mean(y[a..=b])`, computed from
    /// prefix sums. Never touches the PAV path.
    pub(crate) fn minimax_isotonic(values: &[f64], weights: &[f64]) -> Vec<f64> {
        let n = values.len();
        let mut pw = vec![0.0; n + 1];
        let mut pwy = vec![0.0; n + 1];
        for i in 0..n {
            pw[i + 1] = pw[i] + weights[i];
            pwy[i + 1] = pwy[i] + weights[i] * values[i];
        }
        let mean = |a: usize, b: usize| (pwy[b + 1] - pwy[a]) / (pw[b + 1] - pw[a]);
        (0..n)
            .map(|i| {
                (0..=i)
                    .map(|a| {
                        (i..n)
                            .map(|b| mean(a, b))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect()
    }

    #[test]
    fn monotone_input_reproduced_exactly() {
        let y = [0.1, 0.2, 0.2, 0.9];
        let w = [1.0; 4];
        assert_eq!(pav(&y, &w), y.to_vec());
    }

    #[test]
    fn hand_case_two_pooled_then_step() {
        let fitted = pav(&[0.7, 0.2, 0.5], &[1.0, 1.0, 1.0]);
        assert!((fitted[0] - 0.45).abs() < 1e-12);
        assert!((fitted[1] - 0.45).abs() < 1e-12);
        assert!((fitted[2] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn all_ones_constant_map() {
        let map = fit_isotonic(&[(0.1, 1.0), (0.5, 1.0), (0.9, 1.0)]);
        assert_eq!(map.evaluate(0.0), 1.0);
        assert_eq!(map.evaluate(0.7), 1.0);
    }

    #[test]
    fn empty_input_gives_identity() {
        let map = fit_isotonic(&[]);
        assert_eq!(map.evaluate(0.3), 0.3);
        assert_eq!(map.evaluate(1.5), 1.0);
    }

    #[test]
    fn step_evaluation_uses_predecessor_and_clamps() {
        let map = fit_isotonic(&[(0.2, 0.0), (0.4, 0.5), (0.8, 1.0)]);
        assert_eq!(map.evaluate(0.0), 0.0); // below first: clamp
        assert_eq!(map.evaluate(0.3), 0.0); // predecessor is 0.2
        assert_eq!(map.evaluate(0.4), 0.5);
        assert_eq!(map.evaluate(0.79), 0.5);
        assert_eq!(map.evaluate(0.9), 1.0); // above last: clamp
    }

    #[test]
    fn tied_scores_are_pooled() {
        let map = fit_isotonic(&[(0.5, 0.0), (0.5, 1.0)]);
        assert_eq!(map.evaluate(0.5), 0.5);
    }

    #[test]
    fn pav_matches_minimax_oracle_on_random_sequences() {
        let mut rng = DetRng::seed_from_u64(271);
        for _ in 0..300 {
            let n = 1 + rng.next_below(20) as usize;
            let values: Vec<f64> = (0..n).map(|_| rng.next_f64()).collect();
            let weights: Vec<f64> = (0..n).map(|_| 0.25 + rng.next_f64()).collect();
            let fitted = pav(&values, &weights);
            let oracle = minimax_isotonic(&values, &weights);
            for (f, o) in fitted.iter().zip(&oracle) {
                assert!((f - o).abs() < 1e-8, "pav {f} vs oracle {o}");
            }
        }
    }

    #[test]
    fn calibration_preserves_score_ranking() {
        let mut rng = DetRng::seed_from_u64(99);
        let pairs: Vec<(f64, f64)> = (0..50)
            .map(|_| (rng.next_f64(), f64::from(rng.next_below(2) as u32)))
            .collect();
        let map = fit_isotonic(&pairs);
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=100 {
            let v = map.evaluate(i as f64 / 100.0);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
    }
}
