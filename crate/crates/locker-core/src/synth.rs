//! Seeded synthetic workloads: offered package-event streams with
//! configurable demand rates, weekly seasonality, per-option lead times and
//! dwell distributions, plus the three-tier benchmark used by the
//! acceptance suite.
//!
//! Offered history is passed through a first-come-first-served realization
//! replay before it is handed to the training stages, so training data is
//! capacity-constrained the way recorded production history would be.

use serde::{Deserialize, Serialize};

use crate::dwell::DwellPmf;
use crate::error::Result;
use crate::events::sort_events;
use crate::forecast::HomeDeliveries;
use crate::rng::{derive_seed, hash_label, DetRng};
use crate::simulate::{replay, AdmissionPolicy, PolicyContext, ReplayParams};
use crate::types::{EventKind, LockerConfig, PackageEvent, ShipOption};

/// Demand and dwell behaviour of one ship option in a synthetic workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptionWorkload {
    pub option: ShipOption,
    /// Mean deliveries per day before seasonality.
    pub daily_rate: f64,
    pub dow_multipliers: [f64; 7],
    /// Uniform request lead time in days (inclusive bounds); slower options
    /// order earlier.
    pub lead_time_days: (u32, u32),
    pub dwell_pmf: DwellPmf,
}

/// One locker's synthetic workload.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockerWorkload {
    pub locker_id: String,
    pub zip: String,
    pub capacity: u32,
    /// Planning horizon recorded in the locker config.
    pub horizon_days: u32,
    pub options: Vec<OptionWorkload>,
    /// Fraction of demand drawn as Poisson noise; 0 is deterministic.
    pub demand_noise: f64,
    /// Demand multiplier applied to eval-window days (day >= 1); above 1
    /// the eval window is a peak episode the history never saw.
    pub eval_rate_multiplier: f64,
    pub history_days: u32,
    pub eval_days: u32,
    pub seed: u64,
}

impl LockerWorkload {
    pub fn config(&self) -> Result<LockerConfig> {
        LockerConfig::new(
            self.locker_id.clone(),
            self.capacity,
            self.options.iter().map(|o| o.option.clone()).collect(),
            self.horizon_days,
        )
    }

    pub fn truth_pmfs(&self) -> Vec<DwellPmf> {
        self.options.iter().map(|o| o.dwell_pmf.clone()).collect()
    }

    pub fn policy_context(&self) -> PolicyContext {
        PolicyContext {
            option_pmfs: self.truth_pmfs(),
        }
    }
}

/// Offered stream: every package whose delivery falls between `from_day`
/// and `to_day` inclusive, with request, delivery, and terminal events.
pub fn generate_offered(spec: &LockerWorkload, from_day: i32, to_day: i32) -> Result<Vec<PackageEvent>> {
    for opt in &spec.options {
        opt.dwell_pmf.validate()?;
    }
    let mut rng = DetRng::seed_from_u64(derive_seed(spec.seed, &spec.locker_id));
    let mut events = Vec::new();
    for day in from_day..=to_day {
        let dow = crate::types::day_of_week(day) as usize;
        let peak = if day >= 1 { spec.eval_rate_multiplier } else { 1.0 };
        for opt in &spec.options {
            let lambda = opt.daily_rate * opt.dow_multipliers[dow] * peak;
            let noise = spec.demand_noise.clamp(0.0, 1.0);
            let deterministic = (lambda * (1.0 - noise)).round() as u32;
            let noisy = if noise > 0.0 {
                rng.poisson(lambda * noise)
            } else {
                0
            };
            let count = deterministic + noisy;
            for j in 0..count {
                let order_id = format!("{}.d{}.s{}.{}", spec.locker_id, day, opt.option.id, j);
                let lead = rng.int_in(opt.lead_time_days.0, opt.lead_time_days.1);
                let request_day = day - lead as i32;
                let (request_seq, delivery_seq) = if lead == 0 {
                    let rq = rng.int_in(0, 14_399);
                    let dl = rng.int_in(rq + 1, 28_799);
                    (rq, dl)
                } else {
                    (rng.int_in(0, 86_399), rng.int_in(0, 28_799))
                };
                let dwell = rng.categorical(opt.dwell_pmf.probs()) as i32;
                let terminal_seq = rng.int_in(28_800, 86_399);
                let terminal_kind = if dwell >= 3 {
                    EventKind::Return
                } else {
                    EventKind::Pickup
                };
                let mk = |kind, day, seq| PackageEvent {
                    locker_id: spec.locker_id.clone(),
                    order_id: order_id.clone(),
                    kind,
                    ship_option: opt.option.id,
                    day,
                    within_day_seq: seq,
                };
                events.push(mk(EventKind::Request, request_day, request_seq));
                events.push(mk(EventKind::Delivery, day, delivery_seq));
                events.push(mk(terminal_kind, day + dwell, terminal_seq));
            }
        }
    }
    sort_events(&mut events);
    Ok(events)
}

/// History and eval streams for one locker.
#[derive(Debug, Clone, PartialEq)]
pub struct WorkloadBundle {
    /// Realized history: all requests, plus delivery/terminal events of
    /// packages the legacy discipline actually admitted, truncated at the
    /// planning day.
    pub history: Vec<PackageEvent>,
    /// Offered eval stream: open packages carried across the planning day
    /// (as pre-accepted deliveries) plus every order delivering inside the
    /// eval window.
    pub eval: Vec<PackageEvent>,
}

/// Generate the offered workload and realize its history under a
/// first-come-first-served pass, splitting at day 0.
pub fn generate_workload(spec: &LockerWorkload) -> Result<WorkloadBundle> {
    let config = spec.config()?;
    let history_start = 1 - spec.history_days as i32;
    let offered_history = generate_offered(spec, history_start, 0)?;
    let offered_eval = generate_offered_eval(spec)?;

    // realize history: what the locker actually recorded
    let ctx = spec.policy_context();
    let report = replay(
        &offered_history,
        &AdmissionPolicy::Fcfs,
        &config,
        &ctx,
        &ReplayParams::default(),
    )?;
    let mut delivered: std::collections::BTreeSet<&str> = report
        .decisions
        .iter()
        .filter(|d| d.decision == crate::simulate::Decision::Accept)
        .map(|d| d.order_id.as_str())
        .collect();
    // accepted orders whose delivery failed at a full door never entered
    for id in &report.failed_order_ids {
        delivered.remove(id.as_str());
    }

    let mut history = Vec::new();
    let mut backlog = Vec::new();
    let mut terminal_day: std::collections::BTreeMap<&str, i32> = std::collections::BTreeMap::new();
    for e in &offered_history {
        if matches!(e.kind, EventKind::Pickup | EventKind::Return) {
            terminal_day.insert(&e.order_id, e.day);
        }
    }
    for e in &offered_history {
        let keep = match e.kind {
            EventKind::Request => e.day <= 0,
            _ => delivered.contains(e.order_id.as_str()) && e.day <= 0,
        };
        if keep {
            history.push(e.clone());
        }
        // open packages cross into the eval stream as pre-accepted backlog
        if delivered.contains(e.order_id.as_str())
            && terminal_day.get(e.order_id.as_str()).copied().unwrap_or(0) > 0
            && e.kind != EventKind::Request
        {
            backlog.push(e.clone());
        }
    }

    let mut eval = backlog;
    eval.extend(offered_eval);
    sort_events(&mut eval);
    sort_events(&mut history);
    Ok(WorkloadBundle { history, eval })
}

fn generate_offered_eval(spec: &LockerWorkload) -> Result<Vec<PackageEvent>> {
    // continue the same generator stream past day 0 by regenerating the
    // full range and keeping eval deliveries; draw order is identical
    let history_start = 1 - spec.history_days as i32;
    let all = generate_offered(spec, history_start, spec.eval_days as i32)?;
    let mut ids: std::collections::BTreeSet<&str> = std::collections::BTreeSet::new();
    for e in &all {
        if e.kind == EventKind::Delivery && e.day >= 1 {
            ids.insert(&e.order_id);
        }
    }
    Ok(all
        .iter()
        .filter(|e| ids.contains(e.order_id.as_str()))
        .cloned()
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DemandTier {
    Low,
    Medium,
    High,
}

impl DemandTier {
    pub fn as_str(self) -> &'static str {
        match self {
            DemandTier::Low => "low",
            DemandTier::Medium => "medium",
            DemandTier::High => "high",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchParams {
    pub seed: u64,
    pub lockers_per_tier: u32,
    pub history_days: u32,
    pub eval_days: u32,
    pub demand_noise: f64,
}

impl Default for BenchParams {
    fn default() -> Self {
        Self {
            seed: 1,
            lockers_per_tier: 10,
            history_days: 140,
            eval_days: 15,
            demand_noise: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchLocker {
    pub tier: DemandTier,
    pub spec: LockerWorkload,
    pub config: LockerConfig,
    pub bundle: WorkloadBundle,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub lockers: Vec<BenchLocker>,
    pub home: HomeDeliveries,
}

/// Dwell concentrates near each option's characteristic stay: faster
/// options turn slots over sooner, and occupancy projections made from the
/// pmfs are sharp enough to honor.
fn standard_options(rate_scale: &[f64; 4]) -> Vec<OptionWorkload> {
    let dow = [1.2, 1.0, 0.9, 1.0, 1.1, 1.4, 0.8];
    vec![
        OptionWorkload {
            option: ShipOption::new(1, "next-day", 1),
            daily_rate: rate_scale[0],
            dow_multipliers: dow,
            lead_time_days: (1, 1),
            dwell_pmf: DwellPmf::new([0.94, 0.06, 0.0, 0.0, 0.0, 0.0, 0.0]).expect("valid pmf"),
        },
        OptionWorkload {
            option: ShipOption::new(2, "two-day", 2),
            daily_rate: rate_scale[1],
            dow_multipliers: dow,
            lead_time_days: (2, 2),
            dwell_pmf: DwellPmf::new([0.03, 0.94, 0.03, 0.0, 0.0, 0.0, 0.0]).expect("valid pmf"),
        },
        OptionWorkload {
            option: ShipOption::new(3, "standard", 3),
            daily_rate: rate_scale[2],
            dow_multipliers: dow,
            lead_time_days: (5, 6),
            dwell_pmf: DwellPmf::new([0.0, 0.03, 0.10, 0.80, 0.07, 0.0, 0.0]).expect("valid pmf"),
        },
        OptionWorkload {
            option: ShipOption::new(4, "return", 4),
            daily_rate: rate_scale[3],
            dow_multipliers: dow,
            lead_time_days: (1, 2),
            dwell_pmf: DwellPmf::new([0.0, 0.0, 0.0, 0.08, 0.80, 0.09, 0.03]).expect("valid pmf"),
        },
    ]
}

struct TierSetup {
    tier: DemandTier,
    capacity: u32,
    rates: [f64; 4],
    eval_rate_multiplier: f64,
    home_proportions: [f64; 4],
}

/// High tier runs near capacity through history and is flooded by a peak
/// episode in the eval window; medium is comfortable with a legacy mix
/// that starves fast options; low never touches capacity.
fn tier_setups() -> Vec<TierSetup> {
    vec![
        TierSetup {
            tier: DemandTier::High,
            capacity: 20,
            rates: [3.2, 2.4, 1.8, 0.6],
            eval_rate_multiplier: 2.0,
            // strongly divergent from the locker mix
            home_proportions: [0.05, 0.15, 0.60, 0.20],
        },
        TierSetup {
            tier: DemandTier::Medium,
            capacity: 25,
            rates: [1.6, 1.6, 1.4, 0.5],
            eval_rate_multiplier: 1.0,
            home_proportions: [0.10, 0.20, 0.50, 0.20],
        },
        TierSetup {
            tier: DemandTier::Low,
            capacity: 30,
            rates: [1.0, 1.0, 1.0, 0.3],
            eval_rate_multiplier: 1.0,
            home_proportions: [0.25, 0.25, 0.35, 0.15],
        },
    ]
}

/// The three-tier study: per tier, `lockers_per_tier` lockers grouped five
/// per zip, four dwell-differentiated ship options, slower options ordering
/// earlier, and home-delivery mixes that diverge from the locker mix.
pub fn build_benchmark(params: &BenchParams) -> Result<Benchmark> {
    let mut lockers = Vec::new();
    let mut home = HomeDeliveries::default();
    let mut zip_volumes: Vec<(String, [f64; 4])> = Vec::new();

    for (tier_idx, setup) in tier_setups().iter().enumerate() {
        for i in 0..params.lockers_per_tier {
            let zip = format!("98{}{:02}", tier_idx + 1, i / 5 + 1);
            let locker_id = format!("{}-{:02}", setup.tier.as_str(), i + 1);
            let spec = LockerWorkload {
                locker_id,
                zip: zip.clone(),
                capacity: setup.capacity,
                horizon_days: 7,
                options: standard_options(&setup.rates),
                demand_noise: params.demand_noise,
                eval_rate_multiplier: setup.eval_rate_multiplier,
                history_days: params.history_days,
                eval_days: params.eval_days,
                seed: derive_seed(params.seed, &format!("locker-{tier_idx}-{i}")),
            };
            if !zip_volumes.iter().any(|(z, _)| *z == zip) {
                zip_volumes.push((zip.clone(), setup.home_proportions));
            }
            let config = spec.config()?;
            let bundle = generate_workload(&spec)?;
            lockers.push(BenchLocker {
                tier: setup.tier,
                spec,
                config,
                bundle,
            });
        }
    }

    // weekly home-delivery counts for every zip and week of the year
    let mut home_rng = DetRng::seed_from_u64(derive_seed(params.seed, "home-deliveries"));
    for (zip, proportions) in &zip_volumes {
        let volume = 3_000.0 + home_rng.next_f64() * 2_000.0;
        for week in 1..=52u32 {
            let wiggle = 0.9 + 0.2 * ((f64::from(week) * 0.7 + hash_label(zip) as f64 % 7.0).sin() * 0.5 + 0.5);
            for (s, prop) in proportions.iter().enumerate() {
                let count = (volume * prop * wiggle).round();
                home.insert(zip.clone(), week, s as u8 + 1, count);
            }
        }
    }

    Ok(Benchmark { lockers, home })
}
