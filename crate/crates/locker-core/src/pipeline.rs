//! Per-locker orchestration: forecast, dwell estimation, and reservation
//! optimization run end to end over a set of lockers, with dwell training
//! pooled per zip and optional per-locker fan-out across worker threads.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dwell::{
    build_dwell_training_rows, expected_pickups_by_day, observed_dwells, pickup_error_metric,
    pmf_to_presence, DwellHistory, DwellModel, DwellModelConfig, DwellPmf, DwellProfileSet,
    PresenceMatrix,
};
use crate::error::{LockerError, Result};
use crate::events::extract_carryover;
use crate::forecast::{
    build_training_set, forecast_nmape, predict_demand, prediction_features,
    proportion_rule_forecast, usable_history_weeks, DemandForecast, DemandHistory, ForecastModel,
    HomeDeliveries, TrainingWindow,
};
use crate::forest::ForestHyper;
use crate::optimize::{build_lp, solve_lp, ReservationPlan};
use crate::rng::derive_seed;
use crate::types::{iso_week, Carryover, EventKind, LockerConfig, PackageEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSeeds {
    pub forecast: u64,
    pub dwell: u64,
}

impl StageSeeds {
    pub fn from_master(master: u64) -> Self {
        Self {
            forecast: derive_seed(master, "forecast"),
            dwell: derive_seed(master, "dwell"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineParams {
    pub run_date: i32,
    /// Horizon the plan covers; forecasting trains one forest per day.
    pub plan_horizon: u32,
    pub forecast_hyper: ForestHyper,
    pub dwell: DwellModelConfig,
    pub window: TrainingWindow,
    pub seeds: StageSeeds,
    /// Emit per-(option, delivery-day) pmfs; otherwise collapse to one pmf
    /// per option.
    pub per_day_pmfs: bool,
    /// Cap on pooled dwell training rows per zip (stride-subsampled).
    pub max_dwell_rows: usize,
    /// Backtest the final history week for nMAPE and pickup error.
    pub compute_metrics: bool,
}

impl Default for PipelineParams {
    fn default() -> Self {
        Self {
            run_date: 0,
            plan_horizon: 7,
            forecast_hyper: ForestHyper::default(),
            dwell: DwellModelConfig::default(),
            window: TrainingWindow::default(),
            seeds: StageSeeds::from_master(0),
            per_day_pmfs: true,
            max_dwell_rows: 2_500,
            compute_metrics: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LockerInput {
    pub config: LockerConfig,
    pub zip: String,
    pub history: Vec<PackageEvent>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageMetrics {
    /// Backtest nMAPE of the forest forecast over the held-out week.
    pub forest_nmape: Option<f64>,
    /// Backtest nMAPE of the proportion-rule baseline.
    pub proportion_nmape: Option<f64>,
    /// Capacity-normalized pickup error of the learned pmfs.
    pub pickup_error: Option<f64>,
    /// Same metric under the all-same-day-pickup assumption.
    pub same_day_pickup_error: Option<f64>,
    /// Dwells beyond six days clamped during training (data quality).
    pub clamped_dwells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LockerPlanOutput {
    pub locker_id: String,
    pub zip: String,
    pub forecast: DemandForecast,
    pub forecast_model: Option<ForecastModel>,
    /// Legacy per-option slot shares for the proportion policy.
    pub proportion_shares: Vec<f64>,
    pub profiles: DwellProfileSet,
    pub presence: PresenceMatrix,
    /// One pmf per option (delivery day collapsed), for replay projections.
    pub option_pmfs: Vec<DwellPmf>,
    pub carryover: Carryover,
    pub plan: ReservationPlan,
    pub metrics: StageMetrics,
}

/// Train the pooled dwell model for one zip.
fn train_zip_dwell_model(
    inputs: &[&LockerInput],
    params: &PipelineParams,
) -> Result<DwellModel> {
    let mut rows = Vec::new();
    for input in inputs {
        rows.extend(build_dwell_training_rows(&input.history, &input.config)?);
    }
    if rows.len() > params.max_dwell_rows {
        let stride_rows: Vec<_> = (0..params.max_dwell_rows)
            .map(|i| rows[i * rows.len() / params.max_dwell_rows].clone())
            .collect();
        rows = stride_rows;
    }
    let zip = inputs.first().map(|i| i.zip.as_str()).unwrap_or("");
    DwellModel::train(&rows, &params.dwell, derive_seed(params.seeds.dwell, zip))
}

fn forecast_for_locker(
    input: &LockerInput,
    home: &HomeDeliveries,
    params: &PipelineParams,
    run_date: i32,
    horizon: u32,
) -> Result<(DemandForecast, Option<ForecastModel>)> {
    let history = DemandHistory::scan(&input.history, &input.config)?;
    let weeks = usable_history_weeks(&history, run_date);
    let s_count = input.config.num_options();
    if weeks < params.window.min_weeks {
        // sparse history: fall back to the legacy proportion rule
        let counts = home.week_counts(&input.zip, iso_week(run_date + 1), &input.config);
        let shares = proportion_rule_forecast(&counts, input.config.capacity);
        let mut values = Vec::with_capacity(s_count * horizon as usize);
        for share in &shares {
            for _ in 0..horizon {
                values.push(*share);
            }
        }
        return Ok((DemandForecast::new(s_count, horizon, values)?, None));
    }
    let rows = build_training_set(
        &input.history,
        home,
        &input.zip,
        &input.config,
        run_date,
        1,
        &params.window,
    )?;
    if rows.is_empty() {
        return Err(LockerError::Training(format!(
            "locker {}: no training rows despite {weeks} weeks of history",
            input.config.locker_id
        )));
    }
    let model = ForecastModel::train(
        &rows,
        &params.forecast_hyper,
        derive_seed(params.seeds.forecast, &input.config.locker_id),
        horizon,
        &input.config.locker_id,
    )?;
    let features = prediction_features(
        &input.history,
        home,
        &input.zip,
        &input.config,
        run_date,
        horizon,
    )?;
    let forecast = predict_demand(model.forests(), &features)?;
    Ok((forecast, Some(model)))
}

fn backtest_metrics(
    input: &LockerInput,
    home: &HomeDeliveries,
    dwell_model: &DwellModel,
    params: &PipelineParams,
) -> Result<StageMetrics> {
    let mut metrics = StageMetrics::default();
    let config = &input.config;
    let backtest_run = params.run_date - 7;
    let history = DemandHistory::scan(&input.history, config)?;
    let s_count = config.num_options();

    // held-out week actuals
    let mut actual_values = Vec::with_capacity(s_count * 7);
    for s in 0..s_count {
        for t in 1..=7u32 {
            actual_values.push(history.delivery_count(s, backtest_run + t as i32));
        }
    }
    let actuals = DemandForecast::new(s_count, 7, actual_values)?;

    if usable_history_weeks(&history, backtest_run) >= params.window.min_weeks {
        let (forecast, _) = forecast_for_locker(input, home, params, backtest_run, 7)?;
        metrics.forest_nmape = Some(forecast_nmape(&forecast, &actuals, config.capacity)?);

        let counts = home.week_counts(&input.zip, iso_week(backtest_run + 1), config);
        let shares = proportion_rule_forecast(&counts, config.capacity);
        let mut baseline_values = Vec::with_capacity(s_count * 7);
        for share in &shares {
            for _ in 0..7 {
                baseline_values.push(*share);
            }
        }
        let baseline = DemandForecast::new(s_count, 7, baseline_values)?;
        metrics.proportion_nmape = Some(forecast_nmape(&baseline, &actuals, config.capacity)?);
    }

    // pickup error over the held-out week: learned pmfs vs the all-same-day
    // assumption, both applied to actual deliveries
    let (observations, clamped) = observed_dwells(&input.history, config)?;
    metrics.clamped_dwells = clamped;
    let dwell_history = DwellHistory::from_observations(&observations, s_count);
    let mut learned_pmfs = Vec::with_capacity(s_count);
    for s in 0..s_count {
        let row = dwell_history.feature_for(config, s, backtest_run + 1);
        learned_pmfs.push(dwell_model.predict_pmf(&row, dwell_history.option_count(s), &params.dwell));
    }
    let same_day_pmfs: Vec<DwellPmf> = (0..s_count).map(|_| DwellPmf::delta(0)).collect();

    let from_day = backtest_run + 1;
    let to_day = backtest_run + 7;
    let mut actual_pickups = [0.0; 7];
    for e in &input.history {
        if matches!(e.kind, EventKind::Pickup | EventKind::Return)
            && e.day >= from_day
            && e.day <= to_day
        {
            actual_pickups[(e.day - from_day) as usize] += 1.0;
        }
    }
    let expected_learned =
        expected_pickups_by_day(history.deliveries(), &learned_pmfs, from_day, to_day);
    let expected_same_day =
        expected_pickups_by_day(history.deliveries(), &same_day_pmfs, from_day, to_day);
    let cells_learned: Vec<(f64, f64)> = actual_pickups
        .iter()
        .zip(&expected_learned)
        .map(|(&a, &e)| (a, e))
        .collect();
    let cells_same_day: Vec<(f64, f64)> = actual_pickups
        .iter()
        .zip(&expected_same_day)
        .map(|(&a, &e)| (a, e))
        .collect();
    metrics.pickup_error = Some(pickup_error_metric(&cells_learned, config.capacity)?);
    metrics.same_day_pickup_error = Some(pickup_error_metric(&cells_same_day, config.capacity)?);
    Ok(metrics)
}

fn plan_one_locker(
    input: &LockerInput,
    home: &HomeDeliveries,
    dwell_model: &DwellModel,
    params: &PipelineParams,
) -> Result<LockerPlanOutput> {
    let config = &input.config;
    let horizon = params.plan_horizon;
    let s_count = config.num_options();

    let (forecast, forecast_model) =
        forecast_for_locker(input, home, params, params.run_date, horizon)?;

    let counts = home.week_counts(&input.zip, iso_week(params.run_date + 1), config);
    let proportion_shares = proportion_rule_forecast(&counts, config.capacity);

    let (observations, _) = observed_dwells(&input.history, config)?;
    let dwell_history = DwellHistory::from_observations(&observations, s_count);
    let option_pmfs: Vec<DwellPmf> = (0..s_count)
        .map(|s| {
            let row = dwell_history.feature_for(config, s, params.run_date + 1);
            dwell_model.predict_pmf(&row, dwell_history.option_count(s), &params.dwell)
        })
        .collect();
    let profiles = if params.per_day_pmfs {
        DwellProfileSet::from_fn(s_count, horizon, |s, v| {
            let row = dwell_history.feature_for(config, s, params.run_date + v);
            dwell_model.predict_pmf(&row, dwell_history.option_count(s), &params.dwell)
        })
    } else {
        DwellProfileSet::per_option(option_pmfs.clone(), horizon)
    };
    let presence = pmf_to_presence(&profiles)?;

    let carryover = extract_carryover(&input.history, params.run_date, config)?;
    let instance = build_lp(&forecast, &presence, &carryover, config)?;
    let plan = solve_lp(&instance)?;

    let metrics = if params.compute_metrics {
        backtest_metrics(input, home, dwell_model, params)?
    } else {
        StageMetrics::default()
    };

    Ok(LockerPlanOutput {
        locker_id: config.locker_id.clone(),
        zip: input.zip.clone(),
        forecast,
        forecast_model,
        proportion_shares,
        profiles,
        presence,
        option_pmfs,
        carryover,
        plan,
        metrics,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    /// One plan per input locker, in input order.
    pub lockers: Vec<LockerPlanOutput>,
    /// The pooled dwell model trained for each zip.
    pub dwell_models: BTreeMap<String, DwellModel>,
}

/// Per-locker results from a lenient run: failures are isolated so the
/// surviving lockers' plans can still be written.
#[derive(Debug)]
pub struct LenientPipelineOutput {
    /// `(locker_id, result)` in input order.
    pub lockers: Vec<(String, Result<LockerPlanOutput>)>,
    pub dwell_models: BTreeMap<String, DwellModel>,
}

/// Run the full planning pipeline over a set of lockers, isolating
/// per-locker failures. Dwell models are trained once per zip (a zip pool
/// failure fails that zip's lockers); per-locker stages fan out over
/// `workers` threads. Output order matches input order regardless of
/// scheduling.
pub fn run_pipeline_lenient(
    inputs: &[LockerInput],
    home: &HomeDeliveries,
    params: &PipelineParams,
    workers: usize,
) -> LenientPipelineOutput {
    let mut by_zip: BTreeMap<&str, Vec<&LockerInput>> = BTreeMap::new();
    for input in inputs {
        by_zip.entry(input.zip.as_str()).or_default().push(input);
    }
    let mut dwell_models: BTreeMap<String, DwellModel> = BTreeMap::new();
    let mut zip_errors: BTreeMap<String, String> = BTreeMap::new();
    for (zip, zip_inputs) in &by_zip {
        match train_zip_dwell_model(zip_inputs, params) {
            Ok(model) => {
                dwell_models.insert(zip.to_string(), model);
            }
            Err(e) => {
                zip_errors.insert(zip.to_string(), e.to_string());
            }
        }
    }

    let run_one = |input: &LockerInput| -> Result<LockerPlanOutput> {
        match dwell_models.get(input.zip.as_str()) {
            Some(model) => plan_one_locker(input, home, model, params),
            None => Err(LockerError::Training(format!(
                "dwell pool for zip {} failed: {}",
                input.zip,
                zip_errors
                    .get(&input.zip)
                    .map(String::as_str)
                    .unwrap_or("unknown")
            ))),
        }
    };

    let workers = workers.max(1).min(inputs.len().max(1));
    let results: Vec<Result<LockerPlanOutput>> = if workers <= 1 || inputs.len() <= 1 {
        inputs.iter().map(run_one).collect()
    } else {
        let mut slots: Vec<Option<Result<LockerPlanOutput>>> = Vec::new();
        slots.resize_with(inputs.len(), || None);
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots_mutex = std::sync::Mutex::new(&mut slots);
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::SeqCst);
                    if i >= inputs.len() {
                        break;
                    }
                    let out = run_one(&inputs[i]);
                    let mut guard = slots_mutex.lock().expect("results lock");
                    guard[i] = Some(out);
                });
            }
        });
        slots
            .into_iter()
            .map(|r| r.expect("every locker processed"))
            .collect()
    };

    LenientPipelineOutput {
        lockers: inputs
            .iter()
            .map(|i| i.config.locker_id.clone())
            .zip(results)
            .collect(),
        dwell_models,
    }
}

/// Strict variant: the first per-locker failure fails the whole run.
pub fn run_pipeline(
    inputs: &[LockerInput],
    home: &HomeDeliveries,
    params: &PipelineParams,
    workers: usize,
) -> Result<PipelineOutput> {
    let lenient = run_pipeline_lenient(inputs, home, params, workers);
    let lockers = lenient
        .lockers
        .into_iter()
        .map(|(_, r)| r)
        .collect::<Result<Vec<_>>>()?;
    Ok(PipelineOutput {
        lockers,
        dwell_models: lenient.dwell_models,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{build_benchmark, BenchParams};

    fn small_benchmark() -> (Vec<LockerInput>, HomeDeliveries) {
        let params = BenchParams {
            lockers_per_tier: 1,
            history_days: 84,
            eval_days: 7,
            ..BenchParams::default()
        };
        let bench = build_benchmark(&params).unwrap();
        let inputs = bench
            .lockers
            .iter()
            .map(|l| LockerInput {
                config: l.config.clone(),
                zip: l.spec.zip.clone(),
                history: l.bundle.history.clone(),
            })
            .collect();
        (inputs, bench.home)
    }

    fn fast_params() -> PipelineParams {
        PipelineParams {
            plan_horizon: 7,
            forecast_hyper: ForestHyper {
                n_trees: 8,
                ..ForestHyper::default()
            },
            dwell: DwellModelConfig {
                hyper: ForestHyper {
                    n_trees: 8,
                    ..ForestHyper::default()
                },
                ..DwellModelConfig::default()
            },
            max_dwell_rows: 600,
            ..PipelineParams::default()
        }
    }

    #[test]
    fn pipeline_produces_consistent_plans() {
        let (inputs, home) = small_benchmark();
        let outputs = run_pipeline(&inputs, &home, &fast_params(), 1).unwrap().lockers;
        assert_eq!(outputs.len(), inputs.len());
        for out in &outputs {
            assert_eq!(out.plan.horizon, 7);
            assert!(out.plan.objective >= -1e-9);
            assert!(out.plan.objective <= out.forecast.total() + 1e-6);
            for pmf in out.profiles.iter() {
                pmf.validate().unwrap();
            }
            assert_eq!(out.proportion_shares.len(), 4);
            assert!(out.metrics.forest_nmape.is_some());
        }
    }

    #[test]
    fn pipeline_is_deterministic_across_worker_counts() {
        let (inputs, home) = small_benchmark();
        let a = run_pipeline(&inputs, &home, &fast_params(), 1).unwrap().lockers;
        let b = run_pipeline(&inputs, &home, &fast_params(), 3).unwrap().lockers;
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.plan, y.plan);
            assert_eq!(x.forecast, y.forecast);
        }
    }

    #[test]
    fn learned_pmfs_do_not_lose_to_same_day_assumption() {
        let (inputs, home) = small_benchmark();
        let outputs = run_pipeline(&inputs, &home, &fast_params(), 1).unwrap().lockers;
        let mut learned = 0.0;
        let mut same_day = 0.0;
        for out in &outputs {
            learned += out.metrics.pickup_error.unwrap();
            same_day += out.metrics.same_day_pickup_error.unwrap();
        }
        assert!(
            learned <= same_day + 1e-12,
            "learned pmfs {learned} vs same-day assumption {same_day}"
        );
    }

    #[test]
    fn sparse_history_falls_back_to_proportion_rule() {
        let (mut inputs, home) = small_benchmark();
        // keep only orders that start inside the last week of history
        let mut first_day: BTreeMap<String, i32> = BTreeMap::new();
        for e in &inputs[0].history {
            let entry = first_day.entry(e.order_id.clone()).or_insert(e.day);
            *entry = (*entry).min(e.day);
        }
        inputs[0].history.retain(|e| first_day[&e.order_id] >= -7);
        let outputs = run_pipeline(&inputs[..1], &home, &fast_params(), 1).unwrap().lockers;
        assert!(outputs[0].forecast_model.is_none());
        // the fallback forecast is flat across days at the share value
        let f = &outputs[0].forecast;
        for s in 0..4 {
            for t in 2..=7 {
                assert_eq!(f.demand(s, t), f.demand(s, 1));
            }
        }
    }
}
