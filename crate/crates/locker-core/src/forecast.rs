//! Delivery-demand forecasting: one random-forest regressor per horizon
//! day, trained on sixteen weeks of history plus a configurable peak window
//! from the previous year, with the legacy proportion rule as baseline.
//!
//! Feature groups per row: same-weekday delivery counts of the previous
//! four weeks, prior-year home deliveries in the locker's zip (with a
//! missing-data flag), the first-rejection time of day, delivery day of
//! week, day of month, and the ship option id.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{LockerError, Result};
use crate::forest::{ForestHyper, RegressionForest};
use crate::metrics::capacity_normalized_error;
use crate::rng::derive_indexed_seed;
use crate::types::{
    day_of_month, day_of_week, fraction_of_day, iso_week, EventKind, LockerConfig, PackageEvent,
};

/// Feature row for one (ship option, target day) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastFeatureRow {
    /// Deliveries of this option on the same weekday in each of the
    /// previous four weeks, most recent first.
    pub recent_deliveries: [f64; 4],
    /// Home deliveries in the locker's zip for this week of the previous
    /// year; 0 with `home_missing` set when the record is absent.
    pub home_deliveries_ly: f64,
    pub home_missing: bool,
    /// Fraction of the day at which the first rejected request was seen;
    /// 1.0 means no rejection was observed.
    pub first_rejection_time: f64,
    pub delivery_dow: u8,
    pub delivery_dom: u8,
    pub ship_option: u8,
}

impl ForecastFeatureRow {
    pub fn to_vector(&self) -> Vec<f64> {
        vec![
            self.recent_deliveries[0],
            self.recent_deliveries[1],
            self.recent_deliveries[2],
            self.recent_deliveries[3],
            self.home_deliveries_ly,
            if self.home_missing { 1.0 } else { 0.0 },
            self.first_rejection_time,
            f64::from(self.delivery_dow),
            f64::from(self.delivery_dom),
            f64::from(self.ship_option),
        ]
    }
}

/// Predicted deliveries per (option, horizon day); entries are real and
/// non-negative.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandForecast {
    num_options: usize,
    horizon: u32,
    values: Vec<f64>,
}

impl DemandForecast {
    pub fn new(num_options: usize, horizon: u32, values: Vec<f64>) -> Result<Self> {
        if values.len() != num_options * horizon as usize {
            return Err(LockerError::Dimension(format!(
                "demand matrix has {} entries, expected {}",
                values.len(),
                num_options * horizon as usize
            )));
        }
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(LockerError::Dimension(
                "demand entries must be finite and non-negative".to_string(),
            ));
        }
        Ok(Self {
            num_options,
            horizon,
            values,
        })
    }

    pub fn num_options(&self) -> usize {
        self.num_options
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    /// d_st for option index `s` and horizon day `t in 1..=T`.
    pub fn demand(&self, s: usize, t: u32) -> f64 {
        debug_assert!(t >= 1 && t <= self.horizon);
        self.values[s * self.horizon as usize + (t - 1) as usize]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Weekly home-delivery counts keyed by (zip, iso week, ship option id).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct HomeDeliveries {
    counts: BTreeMap<(String, u32, u8), f64>,
}

impl HomeDeliveries {
    pub fn insert(&mut self, zip: impl Into<String>, week: u32, option_id: u8, count: f64) {
        self.counts.insert((zip.into(), week, option_id), count);
    }

    /// `(count, missing)` for one zip/week/option cell.
    pub fn lookup(&self, zip: &str, week: u32, option_id: u8) -> (f64, bool) {
        match self.counts.get(&(zip.to_string(), week, option_id)) {
            Some(&c) => (c, false),
            None => (0.0, true),
        }
    }

    /// Per-option counts for one zip and week, in option-id order.
    pub fn week_counts(&self, zip: &str, week: u32, config: &LockerConfig) -> Vec<f64> {
        config
            .ship_options
            .iter()
            .map(|o| self.lookup(zip, week, o.id).0)
            .collect()
    }

    /// Parse the `zip,iso_week,ship_option,count` format.
    pub fn parse(text: &str) -> Result<Self> {
        let mut out = Self::default();
        for (i, line) in text.lines().enumerate() {
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.len() != 4 {
                return Err(LockerError::Parse {
                    line: i + 1,
                    message: format!("expected 4 fields, found {}", fields.len()),
                });
            }
            let week: u32 = fields[1].parse().map_err(|_| LockerError::Parse {
                line: i + 1,
                message: format!("bad iso_week {:?}", fields[1]),
            })?;
            let option_id: u8 = fields[2].parse().map_err(|_| LockerError::Parse {
                line: i + 1,
                message: format!("bad ship_option {:?}", fields[2]),
            })?;
            let count: f64 = fields[3].parse().map_err(|_| LockerError::Parse {
                line: i + 1,
                message: format!("bad count {:?}", fields[3]),
            })?;
            out.insert(fields[0], week, option_id, count);
        }
        Ok(out)
    }

    pub fn format(&self) -> String {
        let mut out = String::new();
        for ((zip, week, option_id), count) in &self.counts {
            out.push_str(&format!("{zip},{week},{option_id},{count:?}\n"));
        }
        out
    }
}

/// Per-day delivery counts and rejection times scanned from one locker's
/// event stream.
#[derive(Debug, Clone, Default)]
pub struct DemandHistory {
    deliveries: BTreeMap<(usize, i32), f64>,
    /// Earliest rejected-request fraction of day per (option, day).
    first_rejection: BTreeMap<(usize, i32), f64>,
    earliest_day: Option<i32>,
    latest_day: Option<i32>,
}

impl DemandHistory {
    pub fn scan(events: &[PackageEvent], config: &LockerConfig) -> Result<Self> {
        let mut delivered_orders: BTreeMap<&str, ()> = BTreeMap::new();
        for e in events {
            if e.kind == EventKind::Delivery {
                delivered_orders.insert(&e.order_id, ());
            }
        }
        let mut out = Self::default();
        for e in events {
            out.earliest_day = Some(out.earliest_day.map_or(e.day, |d: i32| d.min(e.day)));
            out.latest_day = Some(out.latest_day.map_or(e.day, |d: i32| d.max(e.day)));
            let s = config.option_index(e.ship_option)?;
            match e.kind {
                EventKind::Delivery => {
                    *out.deliveries.entry((s, e.day)).or_insert(0.0) += 1.0;
                }
                EventKind::Request
                    if !delivered_orders.contains_key(e.order_id.as_str()) => {
                        let frac = fraction_of_day(e.within_day_seq);
                        out.first_rejection
                            .entry((s, e.day))
                            .and_modify(|f| *f = f.min(frac))
                            .or_insert(frac);
                    }
                _ => {}
            }
        }
        Ok(out)
    }

    pub fn delivery_count(&self, s: usize, day: i32) -> f64 {
        self.deliveries.get(&(s, day)).copied().unwrap_or(0.0)
    }

    pub fn rejection_time(&self, s: usize, day: i32) -> f64 {
        self.first_rejection.get(&(s, day)).copied().unwrap_or(1.0)
    }

    pub fn deliveries(&self) -> &BTreeMap<(usize, i32), f64> {
        &self.deliveries
    }

    pub fn earliest_day(&self) -> Option<i32> {
        self.earliest_day
    }
}

/// Windowing for training-set construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingWindow {
    /// Weeks of history immediately before the run date.
    pub train_weeks: u32,
    /// Iso weeks of the previous year counted as peak.
    pub peak_weeks: Vec<u32>,
    /// Below this much usable history the caller falls back to the
    /// proportion rule.
    pub min_weeks: u32,
}

impl Default for TrainingWindow {
    fn default() -> Self {
        Self {
            train_weeks: 16,
            peak_weeks: vec![47, 48, 49, 50],
            min_weeks: 4,
        }
    }
}

/// Most recent same-weekday day at or before `limit`, strictly before
/// `target`.
fn anchor_same_weekday(target: i32, limit: i32) -> i32 {
    let mut d = target - 7;
    while d > limit {
        d -= 7;
    }
    d
}

#[allow(clippy::too_many_arguments)]
fn feature_row(
    history: &DemandHistory,
    home: &HomeDeliveries,
    zip: &str,
    config: &LockerConfig,
    s: usize,
    target_day: i32,
    anchor: i32,
    rejection_day: i32,
) -> ForecastFeatureRow {
    let recent = [
        history.delivery_count(s, anchor),
        history.delivery_count(s, anchor - 7),
        history.delivery_count(s, anchor - 14),
        history.delivery_count(s, anchor - 21),
    ];
    let option_id = config.ship_options[s].id;
    let (home_count, home_missing) = home.lookup(zip, iso_week(target_day), option_id);
    ForecastFeatureRow {
        recent_deliveries: recent,
        home_deliveries_ly: home_count,
        home_missing,
        first_rejection_time: history.rejection_time(s, rejection_day),
        delivery_dow: day_of_week(target_day),
        delivery_dom: day_of_month(target_day),
        ship_option: option_id,
    }
}

/// Training rows for one horizon-day model: one per (option, historical
/// day) in the training window plus the prior-year peak window, with the
/// observed delivery count as target. Returns an empty set when the stream
/// has no usable coverage.
pub fn build_training_set(
    events: &[PackageEvent],
    home: &HomeDeliveries,
    zip: &str,
    config: &LockerConfig,
    run_date: i32,
    _horizon_day: u32,
    window: &TrainingWindow,
) -> Result<Vec<(ForecastFeatureRow, f64)>> {
    let history = DemandHistory::scan(events, config)?;
    let Some(earliest) = history.earliest_day() else {
        return Ok(Vec::new());
    };
    // four weeks of lag features must be observable
    let first_usable = earliest + 28;
    let mut target_days: Vec<i32> = (run_date - 7 * window.train_weeks as i32..run_date)
        .filter(|d| *d >= first_usable)
        .collect();
    let window_start = run_date - 7 * window.train_weeks as i32;
    for d in first_usable..window_start {
        if window.peak_weeks.contains(&iso_week(d)) {
            target_days.push(d);
        }
    }
    target_days.sort_unstable();
    target_days.dedup();

    let mut rows = Vec::new();
    for &day in &target_days {
        for s in 0..config.num_options() {
            // training rows read the target day's own rejection time
            let row = feature_row(&history, home, zip, config, s, day, day - 7, day);
            let target = history.delivery_count(s, day);
            rows.push((row, target));
        }
    }
    Ok(rows)
}

/// Whole usable weeks of history before the run date.
pub fn usable_history_weeks(history: &DemandHistory, run_date: i32) -> u32 {
    match history.earliest_day() {
        Some(earliest) if earliest < run_date => ((run_date - earliest) / 7).max(0) as u32,
        _ => 0,
    }
}

/// Prediction-time feature rows for every (option, horizon day) cell. The
/// rejection-time feature reads the most recent observed same weekday.
pub fn prediction_features(
    events: &[PackageEvent],
    home: &HomeDeliveries,
    zip: &str,
    config: &LockerConfig,
    run_date: i32,
    horizon: u32,
) -> Result<Vec<Vec<ForecastFeatureRow>>> {
    let history = DemandHistory::scan(events, config)?;
    let mut per_option = Vec::with_capacity(config.num_options());
    for s in 0..config.num_options() {
        let mut per_day = Vec::with_capacity(horizon as usize);
        for t in 1..=horizon {
            let target_day = run_date + t as i32;
            let anchor = anchor_same_weekday(target_day, run_date);
            per_day.push(feature_row(
                &history, home, zip, config, s, target_day, anchor, anchor,
            ));
        }
        per_option.push(per_day);
    }
    Ok(per_option)
}

/// Train the forest for one horizon day.
pub fn train_forest(
    rows: &[(ForecastFeatureRow, f64)],
    hyper: &ForestHyper,
    seed: u64,
    horizon_day: u32,
) -> Result<RegressionForest> {
    let encoded: Vec<(Vec<f64>, f64)> = rows
        .iter()
        .map(|(row, target)| (row.to_vector(), *target))
        .collect();
    RegressionForest::train(&encoded, hyper, seed, horizon_day)
}

/// Versioned forecast artifact: one forest per horizon day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastModel {
    pub version: u32,
    pub locker_id: String,
    pub rng_seed: u64,
    pub hyper: ForestHyper,
    forests: Vec<RegressionForest>,
}

pub const FORECAST_MODEL_VERSION: u32 = 1;

impl ForecastModel {
    /// Train one forest per horizon day on the shared training rows.
    pub fn train(
        rows: &[(ForecastFeatureRow, f64)],
        hyper: &ForestHyper,
        seed: u64,
        horizon: u32,
        locker_id: &str,
    ) -> Result<Self> {
        let forests = (1..=horizon)
            .map(|t| train_forest(rows, hyper, derive_indexed_seed(seed, u64::from(t)), t))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            version: FORECAST_MODEL_VERSION,
            locker_id: locker_id.to_string(),
            rng_seed: seed,
            hyper: *hyper,
            forests,
        })
    }

    pub fn horizon(&self) -> u32 {
        self.forests.len() as u32
    }

    pub fn forests(&self) -> &[RegressionForest] {
        &self.forests
    }
}

/// Predict d_st with one trained forest per horizon day.
pub fn predict_demand(
    forests: &[RegressionForest],
    features: &[Vec<ForecastFeatureRow>],
) -> Result<DemandForecast> {
    let horizon = forests.len() as u32;
    if horizon == 0 {
        return Err(LockerError::InvalidConfig(
            "no forests supplied for prediction".to_string(),
        ));
    }
    for (t, forest) in forests.iter().enumerate() {
        if forest.horizon_day != t as u32 + 1 {
            return Err(LockerError::InvalidConfig(format!(
                "forest at position {t} is trained for horizon day {}",
                forest.horizon_day
            )));
        }
    }
    let num_options = features.len();
    let mut values = Vec::with_capacity(num_options * horizon as usize);
    for rows in features {
        if rows.len() != horizon as usize {
            return Err(LockerError::Dimension(format!(
                "feature rows cover {} days, forests cover {horizon}",
                rows.len()
            )));
        }
        for (t, row) in rows.iter().enumerate() {
            let raw = forests[t].predict(&row.to_vector());
            values.push(raw.max(0.0));
        }
    }
    DemandForecast::new(num_options, horizon, values)
}

/// The legacy baseline: slot shares proportional to prior-year home
/// deliveries, normalized by locker capacity. All-zero home counts fall
/// back to uniform shares.
pub fn proportion_rule_forecast(home_counts: &[f64], capacity: u32) -> Vec<f64> {
    let total: f64 = home_counts.iter().sum();
    let c = f64::from(capacity);
    if total <= 0.0 {
        return vec![c / home_counts.len() as f64; home_counts.len()];
    }
    home_counts.iter().map(|h| c * h / total).collect()
}

/// Mean capacity-normalized error between forecast and actual matrices.
pub fn forecast_nmape(forecast: &DemandForecast, actuals: &DemandForecast, capacity: u32) -> Result<f64> {
    if forecast.num_options() != actuals.num_options() || forecast.horizon() != actuals.horizon() {
        return Err(LockerError::Dimension(
            "forecast and actuals shapes differ".to_string(),
        ));
    }
    let mut total = 0.0;
    for (f, a) in forecast.values().iter().zip(actuals.values()) {
        total += capacity_normalized_error(*a, *f, capacity)?;
    }
    Ok(total / forecast.values().len() as f64)
}
