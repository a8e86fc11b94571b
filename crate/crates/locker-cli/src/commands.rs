//! Subcommand implementations: ingest, train, plan, simulate, bench,
//! report. Each command is idempotent under identical inputs and seeds.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use serde::{Deserialize, Serialize};

use locker_core::dwell::DwellPmf;
use locker_core::events::{format_event_log, parse_event_line, sort_events, validate_stream};
use locker_core::forecast::HomeDeliveries;
use locker_core::optimize::{format_plan_file, parse_plan_file};
use locker_core::pipeline::{run_pipeline_lenient, LenientPipelineOutput, LockerInput, StageMetrics};
use locker_core::simulate::{
    compare_policies, format_trace_file, AdmissionPolicy, PlanWindow, PolicyContext, ReplayParams,
    SimulationReport,
};
use locker_core::synth::{build_benchmark, BenchParams};
use locker_core::types::{LockerConfig, PackageEvent};

use crate::config::{format_lockers_file, parse_lockers_file, Cadence, LockerEntry, Settings};

fn write_file(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    std::fs::write(path, content).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, &text)
}

/// Load the locker set and home deliveries named by the settings.
fn load_inputs(settings: &Settings) -> Result<(Vec<LockerEntry>, HomeDeliveries)> {
    let lockers_path = settings
        .lockers_path
        .as_ref()
        .ok_or_else(|| anyhow!("no lockers file configured (set `lockers` in the config)"))?;
    let entries = parse_lockers_file(&read_file(lockers_path)?, &settings.ship_options)?;
    if entries.is_empty() {
        bail!("lockers file {} is empty", lockers_path.display());
    }
    let home = match &settings.home_deliveries_path {
        Some(path) => HomeDeliveries::parse(&read_file(path)?)
            .map_err(|e| anyhow!("{}: {e}", path.display()))?,
        None => HomeDeliveries::default(),
    };
    Ok((entries, home))
}

fn events_dir(settings: &Settings) -> Result<&PathBuf> {
    settings
        .events_dir
        .as_ref()
        .ok_or_else(|| anyhow!("no events directory configured (set `events_dir` in the config)"))
}

fn history_path(dir: &Path, locker_id: &str) -> PathBuf {
    let preferred = dir.join(format!("{locker_id}.history.events"));
    if preferred.exists() {
        preferred
    } else {
        dir.join(format!("{locker_id}.events"))
    }
}

fn load_history(settings: &Settings, entries: &[LockerEntry]) -> Result<Vec<LockerInput>> {
    let dir = events_dir(settings)?;
    let mut inputs = Vec::with_capacity(entries.len());
    for entry in entries {
        let path = history_path(dir, &entry.config.locker_id);
        let text = read_file(&path)?;
        let events = locker_core::events::parse_event_log(&text)
            .map_err(|e| anyhow!("{}: {e}", path.display()))?;
        let (mut kept, diagnostics) = validate_stream(events, &entry.config);
        if !diagnostics.is_empty() {
            eprintln!(
                "warning: {}: dropped {} malformed order(s)",
                path.display(),
                diagnostics.len()
            );
        }
        sort_events(&mut kept);
        inputs.push(LockerInput {
            config: entry.config.clone(),
            zip: entry.zip.clone(),
            history: kept,
        });
    }
    Ok(inputs)
}

// ---------------------------------------------------------------------------
// ingest

pub fn cmd_ingest(events: &Path, out: &Path, settings: &Settings, skip_bad: bool) -> Result<()> {
    let text = read_file(events)?;
    let mut parsed: Vec<(usize, PackageEvent)> = Vec::new();
    let mut parse_failures = 0usize;
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        match parse_event_line(trimmed, i + 1) {
            Ok(e) => parsed.push((i + 1, e)),
            Err(e) => {
                eprintln!("{}: {e}", events.display());
                parse_failures += 1;
            }
        }
    }
    if parse_failures > 0 && !skip_bad {
        return Err(locker_core::LockerError::invalid_event(format!(
            "{parse_failures} unparseable line(s); rerun with --skip-bad to drop them"
        ))
        .into());
    }

    // validate per locker, preserving original line numbers in diagnostics
    let mut by_locker: BTreeMap<String, Vec<(usize, PackageEvent)>> = BTreeMap::new();
    for (line, e) in parsed {
        by_locker.entry(e.locker_id.clone()).or_default().push((line, e));
    }
    let mut store: Vec<PackageEvent> = Vec::new();
    let mut bad_orders = 0usize;
    for (locker_id, pairs) in by_locker {
        let config = LockerConfig::new(
            locker_id.clone(),
            u32::MAX,
            settings.ship_options.clone(),
            7,
        )?;
        let line_of: BTreeMap<(String, i32, u32), usize> = pairs
            .iter()
            .map(|(line, e)| ((e.order_id.clone(), e.day, e.within_day_seq), *line))
            .collect();
        let events_only: Vec<PackageEvent> = pairs.into_iter().map(|(_, e)| e).collect();
        let (kept, diagnostics) = validate_stream(events_only, &config);
        for d in &diagnostics {
            let line = line_of
                .iter()
                .find(|((oid, _, _), _)| *oid == d.order_id)
                .map(|(_, line)| *line);
            match line {
                Some(line) => eprintln!(
                    "{}:{line}: order {}: {}",
                    events.display(),
                    d.order_id,
                    d.message
                ),
                None => eprintln!("{}: order {}: {}", events.display(), d.order_id, d.message),
            }
        }
        bad_orders += diagnostics.len();
        store.extend(kept);
    }
    if bad_orders > 0 && !skip_bad {
        return Err(locker_core::LockerError::invalid_event(format!(
            "{bad_orders} invalid record(s); rerun with --skip-bad to drop them"
        ))
        .into());
    }
    sort_events(&mut store);
    write_file(out, &format_event_log(&store))?;
    println!("ingested {} events into {}", store.len(), out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// train / plan

#[derive(Debug, Serialize, Deserialize)]
struct MetricsFile {
    per_locker: BTreeMap<String, StageMetrics>,
}

fn run_pipeline_at(
    settings: &Settings,
    run_date: i32,
) -> Result<(Vec<LockerEntry>, LenientPipelineOutput)> {
    let (entries, home) = load_inputs(settings)?;
    let inputs = load_history(settings, &entries)?;
    let mut params = settings.pipeline_params();
    params.run_date = run_date;
    let output = run_pipeline_lenient(&inputs, &home, &params, settings.workers);
    Ok((entries, output))
}

/// Report per-locker failures and surface the first one after partial
/// outputs have been written.
fn first_failure(output: LenientPipelineOutput) -> Result<()> {
    let mut first = None;
    for (locker_id, result) in output.lockers {
        if let Err(e) = result {
            eprintln!("error: locker {locker_id}: {e}");
            if first.is_none() {
                first = Some(e);
            }
        }
    }
    match first {
        Some(e) => Err(e.into()),
        None => Ok(()),
    }
}

pub fn cmd_train(settings: &Settings, out_dir: &Path) -> Result<()> {
    let (_, output) = run_pipeline_at(settings, settings.run_date)?;
    let mut metrics = MetricsFile {
        per_locker: BTreeMap::new(),
    };
    let mut trained = 0usize;
    for (_, result) in &output.lockers {
        let Ok(locker) = result else { continue };
        if let Some(model) = &locker.forecast_model {
            write_json(
                &out_dir.join(format!("{}.forecast.json", locker.locker_id)),
                model,
            )?;
        }
        metrics
            .per_locker
            .insert(locker.locker_id.clone(), locker.metrics.clone());
        trained += 1;
    }
    for (zip, model) in &output.dwell_models {
        write_json(&out_dir.join(format!("zip-{zip}.dwell.json")), model)?;
    }
    write_json(&out_dir.join("metrics.json"), &metrics)?;
    println!(
        "trained {} forecast model(s) and {} dwell model(s) into {}",
        trained,
        output.dwell_models.len(),
        out_dir.display()
    );
    first_failure(output)
}

/// Per-locker sidecar consumed by `simulate`: projection pmfs and the
/// legacy proportion shares.
#[derive(Debug, Serialize, Deserialize)]
struct PolicyContextFile {
    locker_id: String,
    option_pmfs: Vec<DwellPmf>,
    proportion_shares: Vec<f64>,
}

pub fn cmd_plan(settings: &Settings, out_dir: &Path) -> Result<()> {
    let run_dates: Vec<i32> = match settings.cadence {
        Cadence::Once => vec![settings.run_date],
        cadence => {
            let step = cadence.step_days();
            (0..)
                .map(|i| settings.run_date + i * step)
                .take_while(|r| *r < settings.run_date + settings.horizon as i32)
                .collect()
        }
    };
    let mut metrics = MetricsFile {
        per_locker: BTreeMap::new(),
    };
    let mut plan_count = 0usize;
    let mut failures: Vec<LenientPipelineOutput> = Vec::new();
    for (pass, &run_date) in run_dates.iter().enumerate() {
        let (_, output) = run_pipeline_at(settings, run_date)?;
        for (_, result) in &output.lockers {
            let Ok(locker) = result else { continue };
            let plan_path = out_dir.join(format!("{}.r{}.plan", locker.locker_id, run_date));
            write_file(
                &plan_path,
                &format_plan_file(&locker.plan, &locker.locker_id, run_date),
            )?;
            plan_count += 1;
            if pass == 0 {
                write_json(
                    &out_dir.join(format!("{}.context.json", locker.locker_id)),
                    &PolicyContextFile {
                        locker_id: locker.locker_id.clone(),
                        option_pmfs: locker.option_pmfs.clone(),
                        proportion_shares: locker.proportion_shares.clone(),
                    },
                )?;
                metrics
                    .per_locker
                    .insert(locker.locker_id.clone(), locker.metrics.clone());
            }
        }
        failures.push(output);
    }
    write_json(&out_dir.join("metrics.json"), &metrics)?;
    println!("wrote {plan_count} plan file(s) into {}", out_dir.display());
    for output in failures {
        first_failure(output)?;
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// simulate / report

#[derive(Debug, Serialize, Deserialize)]
struct PolicySummary {
    policy: String,
    throughput: u64,
    accepted_requests: u64,
    rejections: u64,
    unjustified_rejections: u64,
    failed_deliveries: u64,
    peak_occupancy: u32,
    agreement_vs_reference: Option<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LockerSummary {
    locker_id: String,
    tier: Option<String>,
    reference_policy: String,
    policies: Vec<PolicySummary>,
    uplift_vs_reference_pct: Vec<f64>,
}

impl LockerSummary {
    fn from_reports(
        locker_id: &str,
        tier: Option<String>,
        reports: &[SimulationReport],
        uplift: &[f64],
    ) -> Self {
        Self {
            locker_id: locker_id.to_string(),
            tier,
            reference_policy: reports[0].policy.clone(),
            policies: reports
                .iter()
                .map(|r| PolicySummary {
                    policy: r.policy.clone(),
                    throughput: r.throughput,
                    accepted_requests: r.accepted_requests,
                    rejections: r.rejections,
                    unjustified_rejections: r.unjustified_rejections,
                    failed_deliveries: r.failed_deliveries,
                    peak_occupancy: r.peak_occupancy,
                    agreement_vs_reference: r.agreement_vs_reference,
                })
                .collect(),
            uplift_vs_reference_pct: uplift.to_vec(),
        }
    }
}

fn build_policies(
    settings: &Settings,
    context: &PolicyContextFile,
    plans: Vec<PlanWindow>,
) -> Result<Vec<AdmissionPolicy>> {
    let mut policies = Vec::new();
    for name in &settings.policies {
        let policy = match name.as_str() {
            "fcfs" => AdmissionPolicy::Fcfs,
            "proportion" => AdmissionPolicy::ProportionRule {
                shares: context.proportion_shares.clone(),
            },
            "reservation" => AdmissionPolicy::Reservation {
                plans: plans.clone(),
            },
            other => bail!("unknown policy {other:?} (expected fcfs|proportion|reservation)"),
        };
        policies.push(policy);
    }
    Ok(policies)
}

fn load_plans_for(plans_dir: &Path, locker_id: &str) -> Result<Vec<PlanWindow>> {
    let mut windows = Vec::new();
    for entry in std::fs::read_dir(plans_dir)
        .with_context(|| format!("reading {}", plans_dir.display()))?
    {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with(&format!("{locker_id}.r")) && name.ends_with(".plan") {
            let (_, run_date, plan) = parse_plan_file(&read_file(&path)?)?;
            windows.push(PlanWindow::from_plan(&plan, run_date));
        }
    }
    windows.sort_by_key(|w| w.run_date);
    Ok(windows)
}

pub fn cmd_simulate(settings: &Settings, plans_dir: &Path, out_dir: &Path) -> Result<()> {
    if settings.policies.len() < 2 {
        bail!("simulate needs at least two policies to compare");
    }
    let (entries, _) = load_inputs(settings)?;
    let dir = events_dir(settings)?;
    let params = ReplayParams {
        safety_margin: settings.safety_margin,
        window_end: None,
    };
    let mut summaries: Vec<LockerSummary> = Vec::new();
    for entry in &entries {
        let locker_id = &entry.config.locker_id;
        let context_path = plans_dir.join(format!("{locker_id}.context.json"));
        if !context_path.exists() {
            eprintln!("warning: no plan context for {locker_id}, skipping");
            continue;
        }
        let context: PolicyContextFile = serde_json::from_str(&read_file(&context_path)?)?;
        let plans = load_plans_for(plans_dir, locker_id)?;
        if plans.is_empty() && settings.policies.iter().any(|p| p == "reservation") {
            eprintln!("warning: no plan files for {locker_id}, skipping");
            continue;
        }
        let eval_path = dir.join(format!("{locker_id}.eval.events"));
        let eval_path = if eval_path.exists() {
            eval_path
        } else {
            dir.join(format!("{locker_id}.events"))
        };
        let events = locker_core::events::parse_event_log(&read_file(&eval_path)?)
            .map_err(|e| anyhow!("{}: {e}", eval_path.display()))?;
        let ctx = PolicyContext {
            option_pmfs: context.option_pmfs.clone(),
        };
        let policies = build_policies(settings, &context, plans)?;
        let comparison = compare_policies(&events, &policies, &entry.config, &ctx, &params)?;
        for report in &comparison.reports {
            write_file(
                &out_dir.join(format!("{locker_id}.{}.trace", report.policy)),
                &format_trace_file(&report.decisions),
            )?;
        }
        let summary = LockerSummary::from_reports(
            locker_id,
            entry.tier.clone(),
            &comparison.reports,
            &comparison.uplift_vs_reference_pct,
        );
        write_json(&out_dir.join(format!("{locker_id}.summary.json")), &summary)?;
        summaries.push(summary);
    }
    if summaries.is_empty() {
        bail!("no lockers simulated (missing plans?)");
    }
    write_file(&out_dir.join("uplift.csv"), &uplift_table(&summaries))?;
    println!(
        "simulated {} locker(s), {} policies each; uplift table at {}",
        summaries.len(),
        settings.policies.len(),
        out_dir.join("uplift.csv").display()
    );
    Ok(())
}

/// Uplift table rows sorted by decreasing reservation uplift against the
/// reference policy.
fn uplift_table(summaries: &[LockerSummary]) -> String {
    let mut rows: Vec<(&LockerSummary, f64)> = summaries
        .iter()
        .map(|s| {
            let uplift = s
                .policies
                .iter()
                .position(|p| p.policy == "reservation")
                .map(|i| s.uplift_vs_reference_pct[i])
                .unwrap_or(0.0);
            (s, uplift)
        })
        .collect();
    rows.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.locker_id.cmp(&b.0.locker_id)));
    let mut out = String::from("# locker_id,tier,reference,throughputs,uplift_pct\n");
    for (s, uplift) in rows {
        let throughputs: Vec<String> = s
            .policies
            .iter()
            .map(|p| format!("{}={}", p.policy, p.throughput))
            .collect();
        out.push_str(&format!(
            "{},{},{},{},{:.4}\n",
            s.locker_id,
            s.tier.as_deref().unwrap_or("-"),
            s.reference_policy,
            throughputs.join(";"),
            uplift
        ));
    }
    out
}

pub fn cmd_report(reports_dir: &Path, plans_dir: Option<&Path>) -> Result<()> {
    use std::fmt::Write as _;

    let mut summaries: Vec<LockerSummary> = Vec::new();
    for entry in std::fs::read_dir(reports_dir)
        .with_context(|| format!("reading {}", reports_dir.display()))?
    {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.ends_with(".summary.json") {
            summaries.push(serde_json::from_str(&read_file(&path)?)?);
        }
    }
    if summaries.is_empty() {
        bail!("no summaries found under {}", reports_dir.display());
    }
    summaries.sort_by(|a, b| a.locker_id.cmp(&b.locker_id));
    let mut out = uplift_table(&summaries);

    let mut uplifts = Vec::new();
    for s in &summaries {
        if let Some(i) = s.policies.iter().position(|p| p.policy == "reservation") {
            uplifts.push(s.uplift_vs_reference_pct[i]);
        }
    }
    if !uplifts.is_empty() {
        let mean = uplifts.iter().sum::<f64>() / uplifts.len() as f64;
        let max = uplifts.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let _ = writeln!(
            out,
            "# mean_uplift_pct={mean:.4} max_uplift_pct={max:.4} lockers={}",
            uplifts.len()
        );
    }

    if let Some(plans_dir) = plans_dir {
        let metrics_path = plans_dir.join("metrics.json");
        if metrics_path.exists() {
            let metrics: MetricsFile = serde_json::from_str(&read_file(&metrics_path)?)?;
            let fmt = |v: Option<f64>| v.map(|v| format!("{v:.6}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "# locker_id,forest_nmape,proportion_nmape,pickup_error,same_day_pickup_error"
            );
            for (locker_id, m) in &metrics.per_locker {
                let _ = writeln!(
                    out,
                    "{locker_id},{},{},{},{}",
                    fmt(m.forest_nmape),
                    fmt(m.proportion_nmape),
                    fmt(m.pickup_error),
                    fmt(m.same_day_pickup_error),
                );
            }
        }
    }

    // tolerate a closed pipe: `locker report | head` is normal usage
    use std::io::Write as _;
    let _ = std::io::stdout().write_all(out.as_bytes());
    Ok(())
}

// ---------------------------------------------------------------------------
// bench

#[derive(Debug, Serialize, Deserialize)]
struct TruthFile {
    lockers: BTreeMap<String, LockerTruth>,
}

#[derive(Debug, Serialize, Deserialize)]
struct LockerTruth {
    tier: String,
    zip: String,
    capacity: u32,
    daily_rates: Vec<f64>,
    dwell_pmfs: Vec<DwellPmf>,
}

#[derive(Debug, Serialize, Deserialize)]
struct BenchManifest {
    params: BenchParams,
    lockers: Vec<String>,
}

pub fn cmd_bench(params: &BenchParams, out_dir: &Path) -> Result<()> {
    let bench = build_benchmark(params)?;
    let mut locker_rows = Vec::new();
    let mut truth = TruthFile {
        lockers: BTreeMap::new(),
    };
    for locker in &bench.lockers {
        let id = &locker.spec.locker_id;
        write_file(
            &out_dir.join(format!("events/{id}.history.events")),
            &format_event_log(&locker.bundle.history),
        )?;
        write_file(
            &out_dir.join(format!("events/{id}.eval.events")),
            &format_event_log(&locker.bundle.eval),
        )?;
        locker_rows.push((
            id.clone(),
            locker.spec.zip.clone(),
            locker.spec.capacity,
            locker.spec.horizon_days,
            locker.tier.as_str().to_string(),
        ));
        truth.lockers.insert(
            id.clone(),
            LockerTruth {
                tier: locker.tier.as_str().to_string(),
                zip: locker.spec.zip.clone(),
                capacity: locker.spec.capacity,
                daily_rates: locker.spec.options.iter().map(|o| o.daily_rate).collect(),
                dwell_pmfs: locker.spec.truth_pmfs(),
            },
        );
    }
    write_file(&out_dir.join("lockers.csv"), &format_lockers_file(&locker_rows))?;
    write_file(&out_dir.join("home_deliveries.csv"), &bench.home.format())?;
    write_json(&out_dir.join("truth.json"), &truth)?;
    write_json(
        &out_dir.join("manifest.json"),
        &BenchManifest {
            params: params.clone(),
            lockers: locker_rows.iter().map(|(id, ..)| id.clone()).collect(),
        },
    )?;

    // a ready-to-run pipeline config: plan over the whole eval window,
    // with a one-slot-in-twenty admission margin absorbing dwell noise
    let config = crate::config::ConfigFile {
        version: Some(1),
        run_date: Some(0),
        horizon: Some(params.eval_days),
        seed: Some(params.seed),
        safety_margin: Some(0.05),
        policies: Some(vec![
            "proportion".to_string(),
            "fcfs".to_string(),
            "reservation".to_string(),
        ]),
        ship_options: Some(
            crate::config::default_ship_options()
                .iter()
                .map(|o| crate::config::ShipOptionDef {
                    id: o.id,
                    label: o.label.clone(),
                    speed_rank: o.speed_rank,
                })
                .collect(),
        ),
        lockers: Some(PathBuf::from("lockers.csv")),
        home_deliveries: Some(PathBuf::from("home_deliveries.csv")),
        events_dir: Some(PathBuf::from("events")),
        ..Default::default()
    };
    write_json(&out_dir.join("config.json"), &config)?;
    println!(
        "benchmark with {} locker(s) written to {}",
        bench.lockers.len(),
        out_dir.display()
    );
    Ok(())
}
