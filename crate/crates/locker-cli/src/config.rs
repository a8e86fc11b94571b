//! Pipeline configuration: command-line flags merged with an optional JSON
//! config file. File values override flags; relative paths in the file
//! resolve against the file's own directory.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use locker_core::dwell::DwellModelConfig;
use locker_core::forecast::TrainingWindow;
use locker_core::forest::ForestHyper;
use locker_core::pipeline::{PipelineParams, StageSeeds};
use locker_core::types::{LockerConfig, ShipOption};

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub run_date: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forecast_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dwell_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub policies: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub safety_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cadence: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub per_day_pmfs: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peak_weeks: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub forest: Option<ForestHyper>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dwell_forest: Option<ForestHyper>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dwell_folds: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dwell_min_pool: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_dwell_rows: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ship_options: Option<Vec<ShipOptionDef>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lockers: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub home_deliveries: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub events_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ShipOptionDef {
    pub id: u8,
    pub label: String,
    pub speed_rank: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cadence {
    Once,
    Weekly,
    Daily,
}

impl Cadence {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "once" => Ok(Cadence::Once),
            "weekly" => Ok(Cadence::Weekly),
            "daily" => Ok(Cadence::Daily),
            other => bail!("unknown cadence {other:?} (expected once|weekly|daily)"),
        }
    }

    pub fn step_days(self) -> i32 {
        match self {
            Cadence::Once => 0,
            Cadence::Weekly => 7,
            Cadence::Daily => 1,
        }
    }
}

/// Effective settings after merging flags and config file.
#[derive(Debug, Clone)]
pub struct Settings {
    pub run_date: i32,
    pub horizon: u32,
    pub seed: u64,
    pub seeds: StageSeeds,
    pub workers: usize,
    pub policies: Vec<String>,
    pub safety_margin: f64,
    pub cadence: Cadence,
    pub per_day_pmfs: bool,
    pub peak_weeks: Vec<u32>,
    pub forest: ForestHyper,
    pub dwell: DwellModelConfig,
    pub max_dwell_rows: usize,
    pub ship_options: Vec<ShipOption>,
    pub lockers_path: Option<PathBuf>,
    pub home_deliveries_path: Option<PathBuf>,
    pub events_dir: Option<PathBuf>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            run_date: 0,
            horizon: 7,
            seed: 0,
            seeds: StageSeeds::from_master(0),
            workers: 1,
            policies: vec![
                "proportion".to_string(),
                "fcfs".to_string(),
                "reservation".to_string(),
            ],
            safety_margin: 0.0,
            cadence: Cadence::Once,
            per_day_pmfs: true,
            peak_weeks: vec![47, 48, 49, 50],
            forest: ForestHyper::default(),
            dwell: DwellModelConfig::default(),
            max_dwell_rows: 2_500,
            ship_options: default_ship_options(),
            lockers_path: None,
            home_deliveries_path: None,
            events_dir: None,
        }
    }
}

pub fn default_ship_options() -> Vec<ShipOption> {
    vec![
        ShipOption::new(1, "next-day", 1),
        ShipOption::new(2, "two-day", 2),
        ShipOption::new(3, "standard", 3),
        ShipOption::new(4, "return", 4),
    ]
}

/// Flag values that the config file may override.
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub run_date: Option<i32>,
    pub horizon: Option<u32>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub policies: Option<Vec<String>>,
    pub safety_margin: Option<f64>,
    pub cadence: Option<String>,
}

impl Settings {
    /// Flags first, then the config file on top (the file wins).
    pub fn resolve(config_path: Option<&Path>, flags: &FlagOverrides) -> Result<Self> {
        let mut settings = Settings::default();

        if let Some(v) = flags.run_date {
            settings.run_date = v;
        }
        if let Some(v) = flags.horizon {
            settings.horizon = v;
        }
        if let Some(v) = flags.seed {
            settings.seed = v;
            settings.seeds = StageSeeds::from_master(v);
        }
        if let Some(v) = flags.workers {
            settings.workers = v;
        }
        if let Some(v) = &flags.policies {
            settings.policies = v.clone();
        }
        if let Some(v) = flags.safety_margin {
            settings.safety_margin = v;
        }
        if let Some(v) = &flags.cadence {
            settings.cadence = Cadence::parse(v)?;
        }

        let Some(path) = config_path else {
            return Ok(settings);
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let file: ConfigFile = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &PathBuf| -> PathBuf {
            if p.is_absolute() {
                p.clone()
            } else {
                base.join(p)
            }
        };

        if let Some(v) = file.run_date {
            settings.run_date = v;
        }
        if let Some(v) = file.horizon {
            settings.horizon = v;
        }
        if let Some(v) = file.seed {
            settings.seed = v;
            settings.seeds = StageSeeds::from_master(v);
        }
        if let Some(v) = file.forecast_seed {
            settings.seeds.forecast = v;
        }
        if let Some(v) = file.dwell_seed {
            settings.seeds.dwell = v;
        }
        if let Some(v) = file.workers {
            settings.workers = v;
        }
        if let Some(v) = file.policies {
            settings.policies = v;
        }
        if let Some(v) = file.safety_margin {
            settings.safety_margin = v;
        }
        if let Some(v) = &file.cadence {
            settings.cadence = Cadence::parse(v)?;
        }
        if let Some(v) = file.per_day_pmfs {
            settings.per_day_pmfs = v;
        }
        if let Some(v) = file.peak_weeks {
            settings.peak_weeks = v;
        }
        if let Some(v) = file.forest {
            settings.forest = v;
        }
        if let Some(v) = file.dwell_forest {
            settings.dwell.hyper = v;
        }
        if let Some(v) = file.dwell_folds {
            settings.dwell.folds = v;
        }
        if let Some(v) = file.dwell_min_pool {
            settings.dwell.min_pool = v;
        }
        if let Some(v) = file.max_dwell_rows {
            settings.max_dwell_rows = v;
        }
        if let Some(v) = file.ship_options {
            settings.ship_options = v
                .into_iter()
                .map(|d| ShipOption::new(d.id, d.label, d.speed_rank))
                .collect();
        }
        if let Some(v) = &file.lockers {
            settings.lockers_path = Some(resolve(v));
        }
        if let Some(v) = &file.home_deliveries {
            settings.home_deliveries_path = Some(resolve(v));
        }
        if let Some(v) = &file.events_dir {
            settings.events_dir = Some(resolve(v));
        }
        Ok(settings)
    }

    pub fn pipeline_params(&self) -> PipelineParams {
        PipelineParams {
            run_date: self.run_date,
            plan_horizon: self.horizon,
            forecast_hyper: self.forest,
            dwell: self.dwell.clone(),
            window: TrainingWindow {
                peak_weeks: self.peak_weeks.clone(),
                ..TrainingWindow::default()
            },
            seeds: self.seeds,
            per_day_pmfs: self.per_day_pmfs,
            max_dwell_rows: self.max_dwell_rows,
            compute_metrics: true,
        }
    }
}

/// One row of the lockers file: `locker_id,zip,capacity,horizon_days[,tier]`.
#[derive(Debug, Clone)]
pub struct LockerEntry {
    pub config: LockerConfig,
    pub zip: String,
    pub tier: Option<String>,
}

pub fn parse_lockers_file(text: &str, ship_options: &[ShipOption]) -> Result<Vec<LockerEntry>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() < 4 {
            bail!("lockers file line {}: expected at least 4 fields", i + 1);
        }
        let capacity: u32 = fields[2]
            .parse()
            .with_context(|| format!("lockers file line {}: bad capacity", i + 1))?;
        let horizon: u32 = fields[3]
            .parse()
            .with_context(|| format!("lockers file line {}: bad horizon_days", i + 1))?;
        let config = LockerConfig::new(fields[0], capacity, ship_options.to_vec(), horizon)?;
        out.push(LockerEntry {
            config,
            zip: fields[1].to_string(),
            tier: fields.get(4).map(|s| s.to_string()),
        });
    }
    Ok(out)
}

pub fn format_lockers_file(entries: &[(String, String, u32, u32, String)]) -> String {
    let mut out = String::from("# locker_id,zip,capacity,horizon_days,tier\n");
    for (id, zip, capacity, horizon, tier) in entries {
        out.push_str(&format!("{id},{zip},{capacity},{horizon},{tier}\n"));
    }
    out
}
