//! Dwell-time estimation: per-option probability mass functions over dwell
//! days 0..=6, learned by a calibrated classification forest, and the
//! presence probabilities derived from them.
//!
//! A package delivered on day `v` is present on day `t` exactly when its
//! dwell is at least `t - v`, so presence probabilities are tail sums of
//! the dwell pmf. Presence at lag 0 is 1 by construction: a package
//! occupies a slot on its delivery day even if picked up the same day.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{LockerError, Result};
use crate::events::collect_orders;
use crate::forest::{ClassificationForest, ForestHyper};
use crate::isotonic::{fit_isotonic, CalibrationMap};
use crate::metrics::mean_capacity_normalized_error;
use crate::rng::derive_indexed_seed;
use crate::types::{day_of_month, day_of_week, LockerConfig, PackageEvent, DWELL_CLASSES};

/// Features describing one delivered package for dwell classification.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwellFeatureRow {
    /// Mean dwell of same-option packages delivered on this weekday in the
    /// previous four weeks.
    pub avg_dwell: f64,
    pub min_dwell: f64,
    pub max_dwell: f64,
    pub ship_option: u8,
    pub delivery_dow: u8,
    pub delivery_dom: u8,
}

impl DwellFeatureRow {
    pub fn to_vector(&self) -> Vec<f64> {
        vec![
            self.avg_dwell,
            self.min_dwell,
            self.max_dwell,
            f64::from(self.ship_option),
            f64::from(self.delivery_dow),
            f64::from(self.delivery_dom),
        ]
    }
}

/// Probability that a package dwells exactly `k` days, `k` in 0..=6.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwellPmf {
    probs: [f64; DWELL_CLASSES],
}

impl DwellPmf {
    pub fn new(probs: [f64; DWELL_CLASSES]) -> Result<Self> {
        let pmf = Self { probs };
        pmf.validate()?;
        Ok(pmf)
    }

    pub fn validate(&self) -> Result<()> {
        let sum: f64 = self.probs.iter().sum();
        if self.probs.iter().any(|&p| !(0.0..=1.0 + 1e-9).contains(&p)) {
            return Err(LockerError::InvalidConfig(
                "dwell pmf entries must lie in [0, 1]".to_string(),
            ));
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(LockerError::InvalidConfig(format!(
                "dwell pmf sums to {sum}, expected 1"
            )));
        }
        Ok(())
    }

    /// Point mass at dwell `k`.
    pub fn delta(k: usize) -> Self {
        let mut probs = [0.0; DWELL_CLASSES];
        probs[k] = 1.0;
        Self { probs }
    }

    pub fn uniform() -> Self {
        Self {
            probs: [1.0 / DWELL_CLASSES as f64; DWELL_CLASSES],
        }
    }

    /// Normalize non-negative weights into a pmf; `None` if all zero.
    pub fn from_weights(weights: [f64; DWELL_CLASSES]) -> Option<Self> {
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return None;
        }
        let mut probs = weights;
        for p in &mut probs {
            *p /= sum;
        }
        Some(Self { probs })
    }

    pub fn prob(&self, k: usize) -> f64 {
        self.probs[k]
    }

    pub fn probs(&self) -> &[f64; DWELL_CLASSES] {
        &self.probs
    }

    /// P(dwell >= lag); 1 at lag 0, 0 beyond the maximum dwell.
    pub fn tail(&self, lag: i32) -> f64 {
        if lag <= 0 {
            return 1.0;
        }
        let lag = lag as usize;
        if lag >= DWELL_CLASSES {
            return 0.0;
        }
        self.probs[lag..].iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(k, p)| k as f64 * p)
            .sum()
    }

    /// Blend `weight` of `self` with `1 - weight` of `other`.
    pub fn blend(&self, other: &DwellPmf, weight: f64) -> DwellPmf {
        let w = weight.clamp(0.0, 1.0);
        let mut probs = [0.0; DWELL_CLASSES];
        for (k, p) in probs.iter_mut().enumerate() {
            *p = w * self.probs[k] + (1.0 - w) * other.probs[k];
        }
        DwellPmf { probs }
    }
}

/// Laplace-smoothed empirical pmf over observed dwell classes.
pub fn empirical_pmf(classes: &[usize], laplace: f64) -> DwellPmf {
    let mut weights = [laplace; DWELL_CLASSES];
    for &c in classes {
        weights[c.min(DWELL_CLASSES - 1)] += 1.0;
    }
    DwellPmf::from_weights(weights).unwrap_or_else(DwellPmf::uniform)
}

/// Apply per-class calibration maps to raw forest scores and renormalize.
/// Falls back to `pooled` when every calibrated value is zero.
pub fn calibrated_pmf(
    raw_scores: &[f64; DWELL_CLASSES],
    maps: &[CalibrationMap],
    pooled: &DwellPmf,
) -> DwellPmf {
    debug_assert_eq!(maps.len(), DWELL_CLASSES);
    let mut weights = [0.0; DWELL_CLASSES];
    for (k, w) in weights.iter_mut().enumerate() {
        *w = maps[k].evaluate(raw_scores[k]).max(0.0);
    }
    DwellPmf::from_weights(weights).unwrap_or_else(|| pooled.clone())
}

/// Train the raw 7-way dwell classification forest.
pub fn train_dwell_classifier(
    rows: &[(DwellFeatureRow, usize)],
    hyper: &ForestHyper,
    seed: u64,
) -> Result<ClassificationForest> {
    let encoded: Vec<(Vec<f64>, usize)> = rows
        .iter()
        .map(|(row, class)| (row.to_vector(), *class))
        .collect();
    ClassificationForest::train(&encoded, hyper, seed)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwellModelConfig {
    pub hyper: ForestHyper,
    /// Cross-validation folds used to fit the calibration maps.
    pub folds: usize,
    /// Additive smoothing for empirical pmfs.
    pub laplace: f64,
    /// Below this many observed packages for a (locker, option) pool the
    /// prediction is blended toward the pooled empirical pmf.
    pub min_pool: usize,
}

impl Default for DwellModelConfig {
    fn default() -> Self {
        Self {
            hyper: ForestHyper::default(),
            folds: 3,
            laplace: 1.0,
            min_pool: 10,
        }
    }
}

/// Calibrated dwell classifier: a classification forest plus one isotonic
/// map per dwell class, fitted one-vs-rest on held-out folds, plus the
/// pooled empirical pmf used for sparse-data fallback.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwellModel {
    pub version: u32,
    pub rng_seed: u64,
    forest: Option<ClassificationForest>,
    maps: Vec<CalibrationMap>,
    pooled: DwellPmf,
}

pub const DWELL_MODEL_VERSION: u32 = 1;

impl DwellModel {
    /// Train on pooled rows (typically all lockers sharing a zip code).
    /// Empty input falls back to the smoothed pooled pmf alone.
    pub fn train(rows: &[(DwellFeatureRow, usize)], cfg: &DwellModelConfig, seed: u64) -> Result<Self> {
        let classes: Vec<usize> = rows.iter().map(|(_, c)| *c).collect();
        let pooled = empirical_pmf(&classes, cfg.laplace);
        if rows.is_empty() {
            return Ok(Self {
                version: DWELL_MODEL_VERSION,
                rng_seed: seed,
                forest: None,
                maps: vec![CalibrationMap::Identity; DWELL_CLASSES],
                pooled,
            });
        }

        let forest = train_dwell_classifier(rows, &cfg.hyper, seed)?;

        // One-vs-rest calibration pairs from held-out folds.
        let folds = cfg.folds.max(2);
        let mut pairs: Vec<Vec<(f64, f64)>> = vec![Vec::new(); DWELL_CLASSES];
        if rows.len() >= 2 * folds {
            for fold in 0..folds {
                let train_rows: Vec<(DwellFeatureRow, usize)> = rows
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i % folds != fold)
                    .map(|(_, r)| r.clone())
                    .collect();
                let held_out: Vec<&(DwellFeatureRow, usize)> = rows
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| i % folds == fold)
                    .map(|(_, r)| r)
                    .collect();
                let fold_forest = train_dwell_classifier(
                    &train_rows,
                    &cfg.hyper,
                    derive_indexed_seed(seed, fold as u64 + 1),
                )?;
                for (row, class) in held_out {
                    let scores = fold_forest.predict_scores(&row.to_vector());
                    for (k, pair_list) in pairs.iter_mut().enumerate() {
                        let outcome = if *class == k { 1.0 } else { 0.0 };
                        pair_list.push((scores[k], outcome));
                    }
                }
            }
        }
        let maps: Vec<CalibrationMap> = pairs.iter().map(|p| fit_isotonic(p)).collect();

        Ok(Self {
            version: DWELL_MODEL_VERSION,
            rng_seed: seed,
            forest: Some(forest),
            maps,
            pooled,
        })
    }

    pub fn pooled_pmf(&self) -> &DwellPmf {
        &self.pooled
    }

    pub fn raw_scores(&self, row: &DwellFeatureRow) -> [f64; DWELL_CLASSES] {
        match &self.forest {
            Some(f) => f.predict_scores(&row.to_vector()),
            None => *self.pooled.probs(),
        }
    }

    /// Calibrated pmf for one package profile. `own_count` is how many
    /// packages the requesting (locker, option) pool has itself observed;
    /// sparse pools are blended toward the pooled empirical pmf.
    pub fn predict_pmf(&self, row: &DwellFeatureRow, own_count: usize, cfg: &DwellModelConfig) -> DwellPmf {
        let raw = self.raw_scores(row);
        let model = calibrated_pmf(&raw, &self.maps, &self.pooled);
        if own_count >= cfg.min_pool {
            model
        } else {
            let weight = own_count as f64 / cfg.min_pool as f64;
            model.blend(&self.pooled, weight)
        }
    }
}

/// Dwell pmfs per (option, delivery day) over `v in -6..=T`, the shape the
/// optimizer consumes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DwellProfileSet {
    num_options: usize,
    horizon: u32,
    pmfs: Vec<DwellPmf>,
}

impl DwellProfileSet {
    pub fn days_per_option(horizon: u32) -> usize {
        horizon as usize + 7
    }

    /// Build from a function of (option index, delivery day).
    pub fn from_fn(
        num_options: usize,
        horizon: u32,
        mut pmf_for: impl FnMut(usize, i32) -> DwellPmf,
    ) -> Self {
        let days = Self::days_per_option(horizon);
        let mut pmfs = Vec::with_capacity(num_options * days);
        for s in 0..num_options {
            for vi in 0..days {
                pmfs.push(pmf_for(s, vi as i32 - 6));
            }
        }
        Self {
            num_options,
            horizon,
            pmfs,
        }
    }

    /// One pmf per option, shared across delivery days.
    pub fn per_option(pmfs: Vec<DwellPmf>, horizon: u32) -> Self {
        let num_options = pmfs.len();
        Self::from_fn(num_options, horizon, |s, _| pmfs[s].clone())
    }

    pub fn num_options(&self) -> usize {
        self.num_options
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// Pmf for option index `s` and delivery day `v in -6..=T`.
    pub fn pmf(&self, s: usize, v: i32) -> &DwellPmf {
        debug_assert!((-6..=self.horizon as i32).contains(&v));
        &self.pmfs[s * Self::days_per_option(self.horizon) + (v + 6) as usize]
    }

    pub fn iter(&self) -> impl Iterator<Item = &DwellPmf> {
        self.pmfs.iter()
    }

    pub fn validate(&self) -> Result<()> {
        for pmf in &self.pmfs {
            pmf.validate()?;
        }
        Ok(())
    }
}

/// Presence probabilities `p[s][v][t]`: probability that a package of
/// option `s` delivered on day `v` still occupies a slot on day `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresenceMatrix {
    num_options: usize,
    horizon: u32,
    values: Vec<f64>,
}

impl PresenceMatrix {
    pub fn num_options(&self) -> usize {
        self.num_options
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    fn index(&self, s: usize, v: i32, t: u32) -> usize {
        let days = DwellProfileSet::days_per_option(self.horizon);
        let ti = (t - 1) as usize;
        (s * days + (v + 6) as usize) * self.horizon as usize + ti
    }

    /// `p_svt` for `v in -6..=T`, `t in 1..=T`, `t >= v`.
    pub fn presence(&self, s: usize, v: i32, t: u32) -> f64 {
        debug_assert!(t >= 1 && t <= self.horizon);
        debug_assert!(v >= -6 && v <= t as i32);
        self.values[self.index(s, v, t)]
    }
}

/// Tail-sum conversion from dwell pmfs to presence probabilities.
pub fn pmf_to_presence(profiles: &DwellProfileSet) -> Result<PresenceMatrix> {
    profiles.validate()?;
    let horizon = profiles.horizon();
    let num_options = profiles.num_options();
    let days = DwellProfileSet::days_per_option(horizon);
    let mut values = vec![0.0; num_options * days * horizon as usize];
    let mut out = PresenceMatrix {
        num_options,
        horizon,
        values: Vec::new(),
    };
    for s in 0..num_options {
        for vi in 0..days {
            let v = vi as i32 - 6;
            let pmf = profiles.pmf(s, v);
            for t in 1..=horizon {
                if (t as i32) < v {
                    continue;
                }
                let lag = t as i32 - v;
                let idx = (s * days + vi) * horizon as usize + (t - 1) as usize;
                values[idx] = pmf.tail(lag);
            }
        }
    }
    out.values = values;
    Ok(out)
}

/// Mean capacity-normalized pickup error over `(actual, expected)` cells.
pub fn pickup_error_metric(cells: &[(f64, f64)], capacity: u32) -> Result<f64> {
    mean_capacity_normalized_error(cells, capacity)
}

/// Expected pickups per day: deliveries convolved with the dwell pmf.
/// `deliveries` maps `(option index, day)` to a delivered count; the pmf per
/// option decides when those packages leave.
pub fn expected_pickups_by_day(
    deliveries: &BTreeMap<(usize, i32), f64>,
    pmfs: &[DwellPmf],
    from_day: i32,
    to_day: i32,
) -> Vec<f64> {
    let mut out = vec![0.0; (to_day - from_day + 1) as usize];
    for (&(s, v), &count) in deliveries {
        let pmf = &pmfs[s];
        for k in 0..DWELL_CLASSES {
            let day = v + k as i32;
            if day >= from_day && day <= to_day {
                out[(day - from_day) as usize] += count * pmf.prob(k);
            }
        }
    }
    out
}

/// One observed package: (option index, delivery day, dwell class).
pub type DwellObservation = (usize, i32, usize);

/// Per-package dwell observations extracted from a sorted, validated event
/// stream. Dwells beyond six days are clamped to six; the count of clamped
/// packages is returned for data-quality reporting.
pub fn observed_dwells(
    events: &[PackageEvent],
    config: &LockerConfig,
) -> Result<(Vec<DwellObservation>, usize)> {
    let mut diagnostics = Vec::new();
    let orders = collect_orders(events, config, &mut diagnostics);
    let mut out = Vec::new();
    let mut clamped = 0;
    for rec in orders.values() {
        let (Some((deliv_day, _)), Some(term_day)) = (rec.delivery, rec.terminal_day()) else {
            continue;
        };
        let dwell = (term_day - deliv_day).max(0);
        let class = if dwell as usize >= DWELL_CLASSES {
            clamped += 1;
            DWELL_CLASSES - 1
        } else {
            dwell as usize
        };
        let s = config.option_index(rec.ship_option)?;
        out.push((s, deliv_day, class));
    }
    out.sort_unstable();
    Ok((out, clamped))
}

/// Index of observed dwells keyed by (option, delivery day), used to build
/// the avg/min/max dwell features.
#[derive(Debug, Clone, Default)]
pub struct DwellHistory {
    by_option_day: BTreeMap<(usize, i32), Vec<usize>>,
    per_option_counts: Vec<usize>,
}

impl DwellHistory {
    pub fn from_observations(observations: &[DwellObservation], num_options: usize) -> Self {
        let mut by_option_day: BTreeMap<(usize, i32), Vec<usize>> = BTreeMap::new();
        let mut per_option_counts = vec![0usize; num_options];
        for &(s, day, class) in observations {
            by_option_day.entry((s, day)).or_default().push(class);
            per_option_counts[s] += 1;
        }
        Self {
            by_option_day,
            per_option_counts,
        }
    }

    /// Observed packages of one option, for the sparse-pool blending rule.
    pub fn option_count(&self, s: usize) -> usize {
        self.per_option_counts.get(s).copied().unwrap_or(0)
    }

    /// Feature row for a package of option `s` delivered on `day`.
    pub fn feature_for(&self, config: &LockerConfig, s: usize, day: i32) -> DwellFeatureRow {
        let (avg, min, max) = self.stats_for(s, day);
        DwellFeatureRow {
            avg_dwell: avg,
            min_dwell: min,
            max_dwell: max,
            ship_option: config.ship_options[s].id,
            delivery_dow: day_of_week(day),
            delivery_dom: day_of_month(day),
        }
    }

    /// Dwell statistics of same-option packages on the same weekday of the
    /// previous four weeks, falling back to the option's previous 28 days,
    /// then to a neutral prior spanning the full dwell range.
    fn stats_for(&self, s: usize, day: i32) -> (f64, f64, f64) {
        let mut pool: Vec<usize> = Vec::new();
        for lag_weeks in 1..=4 {
            if let Some(dwells) = self.by_option_day.get(&(s, day - 7 * lag_weeks)) {
                pool.extend_from_slice(dwells);
            }
        }
        if pool.is_empty() {
            for d in (day - 28)..day {
                if let Some(dwells) = self.by_option_day.get(&(s, d)) {
                    pool.extend_from_slice(dwells);
                }
            }
        }
        if pool.is_empty() {
            return (3.0, 0.0, 6.0);
        }
        let sum: usize = pool.iter().sum();
        let avg = sum as f64 / pool.len() as f64;
        let min = *pool.iter().min().expect("non-empty") as f64;
        let max = *pool.iter().max().expect("non-empty") as f64;
        (avg, min, max)
    }
}

/// Training rows for the dwell classifier from one locker's history.
pub fn build_dwell_training_rows(
    events: &[PackageEvent],
    config: &LockerConfig,
) -> Result<Vec<(DwellFeatureRow, usize)>> {
    let (observations, _) = observed_dwells(events, config)?;
    let history = DwellHistory::from_observations(&observations, config.num_options());
    let rows = observations
        .iter()
        .map(|&(s, day, class)| (history.feature_for(config, s, day), class))
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::isotonic::CalibrationMap;
    use crate::rng::DetRng;

    #[test]
    fn pmf_rejects_bad_sum() {
        assert!(DwellPmf::new([0.5, 0.4, 0.0, 0.0, 0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn tail_of_delta_zero() {
        let pmf = DwellPmf::delta(0);
        assert_eq!(pmf.tail(0), 1.0);
        assert_eq!(pmf.tail(1), 0.0);
    }

    #[test]
    fn tail_of_uniform_is_linear() {
        let pmf = DwellPmf::uniform();
        assert!((pmf.tail(3) - 4.0 / 7.0).abs() < 1e-12);
        assert_eq!(pmf.tail(7), 0.0);
    }

    #[test]
    fn empirical_pmf_two_extremes_spreads_mass() {
        // Two observed packages, dwell 0 and dwell 6: raw frequencies would
        // be (0.5, 0, ..., 0.5); smoothing spreads probability everywhere.
        let pmf = empirical_pmf(&[0, 6], 1.0);
        assert!(pmf.prob(0) < 0.5);
        for k in 1..6 {
            assert!(pmf.prob(k) > 0.0);
        }
        assert!((pmf.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn calibrated_pmf_identity_maps_normalize() {
        let maps = vec![CalibrationMap::Identity; DWELL_CLASSES];
        let pooled = DwellPmf::uniform();
        let raw = [0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0];
        let pmf = calibrated_pmf(&raw, &maps, &pooled);
        assert!((pmf.prob(0) - 0.5).abs() < 1e-12);
        assert!((pmf.prob(1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn calibrated_pmf_all_zero_falls_back() {
        let maps = vec![CalibrationMap::Steps(vec![(0.0, 0.0), (1.0, 0.0)]); DWELL_CLASSES];
        let pooled = DwellPmf::delta(2);
        let raw = [0.1; DWELL_CLASSES];
        let pmf = calibrated_pmf(&raw, &maps, &pooled);
        assert_eq!(pmf, pooled);
    }

    #[test]
    fn calibrated_pmf_sums_to_one() {
        let mut rng = DetRng::seed_from_u64(31);
        let maps = vec![CalibrationMap::Identity; DWELL_CLASSES];
        let pooled = DwellPmf::uniform();
        for _ in 0..100 {
            let mut raw = [0.0; DWELL_CLASSES];
            for v in &mut raw {
                *v = rng.next_f64();
            }
            let pmf = calibrated_pmf(&raw, &maps, &pooled);
            assert!((pmf.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn presence_lag_zero_is_one() {
        let profiles = DwellProfileSet::per_option(vec![DwellPmf::uniform()], 7);
        let presence = pmf_to_presence(&profiles).unwrap();
        for t in 1..=7 {
            assert_eq!(presence.presence(0, t as i32, t), 1.0);
        }
    }

    #[test]
    fn presence_delta_zero_empties_next_day() {
        let profiles = DwellProfileSet::per_option(vec![DwellPmf::delta(0)], 7);
        let presence = pmf_to_presence(&profiles).unwrap();
        assert_eq!(presence.presence(0, 1, 1), 1.0);
        assert_eq!(presence.presence(0, 1, 2), 0.0);
    }

    #[test]
    fn presence_uniform_tail_at_lag_three() {
        let profiles = DwellProfileSet::per_option(vec![DwellPmf::uniform()], 7);
        let presence = pmf_to_presence(&profiles).unwrap();
        assert!((presence.presence(0, 1, 4) - 4.0 / 7.0).abs() < 1e-12);
    }

    #[test]
    fn presence_monotone_and_zero_beyond_lag_six() {
        let mut rng = DetRng::seed_from_u64(13);
        for _ in 0..20 {
            let mut weights = [0.0; DWELL_CLASSES];
            for w in &mut weights {
                *w = rng.next_f64();
            }
            let pmf = DwellPmf::from_weights(weights).unwrap();
            let profiles = DwellProfileSet::per_option(vec![pmf], 10);
            let presence = pmf_to_presence(&profiles).unwrap();
            for v in -6..=10i32 {
                let mut prev = f64::INFINITY;
                for t in 1..=10u32 {
                    if (t as i32) < v {
                        continue;
                    }
                    let p = presence.presence(0, v, t);
                    assert!(p <= prev + 1e-12);
                    if t as i32 - v > 6 {
                        assert_eq!(p, 0.0);
                    }
                    prev = p;
                }
            }
        }
    }

    #[test]
    fn expected_pickups_shift_by_dwell() {
        let mut deliveries = BTreeMap::new();
        deliveries.insert((0usize, 0i32), 4.0);
        let pmfs = vec![DwellPmf::delta(2)];
        let pickups = expected_pickups_by_day(&deliveries, &pmfs, 0, 3);
        assert_eq!(pickups, vec![0.0, 0.0, 4.0, 0.0]);
    }

    #[test]
    fn dwell_model_degenerate_class() {
        let rows: Vec<(DwellFeatureRow, usize)> = (0..20)
            .map(|i| {
                (
                    DwellFeatureRow {
                        avg_dwell: 0.0,
                        min_dwell: 0.0,
                        max_dwell: 0.0,
                        ship_option: 1,
                        delivery_dow: (i % 7) as u8,
                        delivery_dom: 1 + (i % 28) as u8,
                    },
                    0,
                )
            })
            .collect();
        let cfg = DwellModelConfig {
            hyper: ForestHyper {
                n_trees: 10,
                ..ForestHyper::default()
            },
            ..DwellModelConfig::default()
        };
        let model = DwellModel::train(&rows, &cfg, 3).unwrap();
        let scores = model.raw_scores(&rows[0].0);
        assert_eq!(scores[0], 1.0);
    }

    #[test]
    fn dwell_model_same_seed_identical() {
        let mut rng = DetRng::seed_from_u64(41);
        let rows: Vec<(DwellFeatureRow, usize)> = (0..60)
            .map(|_| {
                (
                    DwellFeatureRow {
                        avg_dwell: rng.next_f64() * 6.0,
                        min_dwell: 0.0,
                        max_dwell: 6.0,
                        ship_option: 1 + rng.next_below(3) as u8,
                        delivery_dow: rng.next_below(7) as u8,
                        delivery_dom: 1 + rng.next_below(28) as u8,
                    },
                    rng.next_below(7) as usize,
                )
            })
            .collect();
        let cfg = DwellModelConfig {
            hyper: ForestHyper {
                n_trees: 12,
                ..ForestHyper::default()
            },
            ..DwellModelConfig::default()
        };
        let a = DwellModel::train(&rows, &cfg, 9).unwrap();
        let b = DwellModel::train(&rows, &cfg, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_training_falls_back_to_pool() {
        let cfg = DwellModelConfig::default();
        let model = DwellModel::train(&[], &cfg, 1).unwrap();
        let row = DwellFeatureRow {
            avg_dwell: 1.0,
            min_dwell: 0.0,
            max_dwell: 2.0,
            ship_option: 1,
            delivery_dow: 0,
            delivery_dom: 1,
        };
        let pmf = model.predict_pmf(&row, 0, &cfg);
        assert_eq!(pmf, DwellPmf::uniform());
    }

    #[test]
    fn sparse_pool_blends_toward_pooled() {
        let rows: Vec<(DwellFeatureRow, usize)> = (0..40)
            .map(|i| {
                (
                    DwellFeatureRow {
                        avg_dwell: 0.0,
                        min_dwell: 0.0,
                        max_dwell: 0.0,
                        ship_option: 1,
                        delivery_dow: (i % 7) as u8,
                        delivery_dom: 1,
                    },
                    if i % 2 == 0 { 0 } else { 6 },
                )
            })
            .collect();
        let cfg = DwellModelConfig {
            hyper: ForestHyper {
                n_trees: 8,
                ..ForestHyper::default()
            },
            ..DwellModelConfig::default()
        };
        let model = DwellModel::train(&rows, &cfg, 2).unwrap();
        let full = model.predict_pmf(&rows[0].0, 100, &cfg);
        let sparse = model.predict_pmf(&rows[0].0, 0, &cfg);
        assert_eq!(sparse, *model.pooled_pmf());
        assert!((full.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}
