//! Deterministic replay of package-event streams under admission policies.
//!
//! A replay walks a sorted event stream once. Every `Request` goes through
//! the active policy; accepted orders re-enact their recorded delivery and
//! pickup events, rejected orders vanish. Occupancy is tracked per event
//! and may never exceed capacity. A second pass marks every rejection whose
//! delivery day had space after all: the unjustified rejections.
//!
//! Three policies are provided: plain first-come-first-served projection,
//! the legacy proportion rule, and booking limits from a reservation plan.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::dwell::DwellPmf;
use crate::error::{LockerError, Result};
use crate::events::{check_sorted, collect_orders};
use crate::optimize::ReservationPlan;
use crate::types::{EventKind, LockerConfig, PackageEvent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Decision {
    Accept,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionReason {
    Accepted,
    CapacityFull,
    LimitExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub order_id: String,
    /// Request day.
    pub day: i32,
    pub ship_option: u8,
    pub delivery_day: i32,
    pub decision: Decision,
    pub reason: DecisionReason,
    pub hindsight_space_available: bool,
}

/// Booking limits from one plan run, addressable by absolute day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanWindow {
    pub run_date: i32,
    pub horizon: u32,
    pub num_options: usize,
    /// s-major over horizon days.
    pub limits: Vec<u32>,
}

impl PlanWindow {
    pub fn from_plan(plan: &ReservationPlan, run_date: i32) -> Self {
        Self {
            run_date,
            horizon: plan.horizon,
            num_options: plan.num_options,
            limits: plan.booking_limits.clone(),
        }
    }

    /// Limit for option index `s` on absolute day `day`, when covered.
    pub fn limit_for(&self, s: usize, day: i32) -> Option<u32> {
        if day > self.run_date && day <= self.run_date + self.horizon as i32 {
            let t = (day - self.run_date - 1) as usize;
            Some(self.limits[s * self.horizon as usize + t])
        } else {
            None
        }
    }
}

/// Find the most recent plan covering a delivery day.
pub fn limit_from_plans(plans: &[PlanWindow], s: usize, day: i32) -> Option<u32> {
    plans
        .iter()
        .filter(|p| p.run_date < day)
        .max_by_key(|p| p.run_date)
        .and_then(|p| p.limit_for(s, day))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AdmissionPolicy {
    Fcfs,
    /// Legacy rule: per-option slot shares.
    ProportionRule { shares: Vec<f64> },
    /// Booking limits from one or more plan runs.
    Reservation { plans: Vec<PlanWindow> },
}

impl AdmissionPolicy {
    pub fn name(&self) -> &'static str {
        match self {
            AdmissionPolicy::Fcfs => "fcfs",
            AdmissionPolicy::ProportionRule { .. } => "proportion",
            AdmissionPolicy::Reservation { .. } => "reservation",
        }
    }

    pub fn validate(&self, config: &LockerConfig) -> Result<()> {
        match self {
            AdmissionPolicy::Fcfs => Ok(()),
            AdmissionPolicy::ProportionRule { shares } => {
                if shares.len() != config.num_options() {
                    return Err(LockerError::InvalidConfig(format!(
                        "proportion shares cover {} options, config has {}",
                        shares.len(),
                        config.num_options()
                    )));
                }
                if shares.iter().any(|s| !s.is_finite() || *s < 0.0) {
                    return Err(LockerError::InvalidConfig(
                        "proportion shares must be finite and non-negative".to_string(),
                    ));
                }
                Ok(())
            }
            AdmissionPolicy::Reservation { plans } => {
                if plans.is_empty() {
                    return Err(LockerError::InvalidConfig(
                        "reservation policy needs at least one plan".to_string(),
                    ));
                }
                for p in plans {
                    if p.num_options != config.num_options() {
                        return Err(LockerError::InvalidConfig(
                            "plan option count differs from config".to_string(),
                        ));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Per-option dwell pmfs used by the occupancy projections.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyContext {
    pub option_pmfs: Vec<DwellPmf>,
}

impl PolicyContext {
    fn tail(&self, s: usize, lag: i32) -> f64 {
        self.option_pmfs[s].tail(lag)
    }

    /// Probability a package delivered `elapsed` days ago and still present
    /// today remains present `lag` days after delivery. Conditioning on
    /// survival matters at saturation: the locker holds the packages that
    /// stayed, and the plain tail undercounts them.
    fn survival(&self, s: usize, lag: i32, elapsed: i32) -> f64 {
        let denominator = self.option_pmfs[s].tail(elapsed);
        if denominator <= 0.0 {
            return 0.0;
        }
        self.option_pmfs[s].tail(lag) / denominator
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplayParams {
    /// Fraction of capacity held back from the projection guard.
    pub safety_margin: f64,
    /// Deliveries after this day count as accepted but not throughput.
    pub window_end: Option<i32>,
}

impl Default for ReplayParams {
    fn default() -> Self {
        Self {
            safety_margin: 0.0,
            window_end: None,
        }
    }
}

/// Mutable replay state: who occupies a slot, what has been accepted but
/// not yet delivered, and cumulative accepted counts for limit checks.
#[derive(Debug, Clone, Default)]
pub struct LockerState {
    pub day: i32,
    occupants: BTreeMap<String, (usize, i32)>,
    /// accepted, not yet delivered, by (option, delivery day)
    ledger: BTreeMap<(usize, i32), u32>,
    /// cumulative accepted per (option, delivery day)
    accepted_total: BTreeMap<(usize, i32), u32>,
}

impl LockerState {
    pub fn occupied(&self) -> u32 {
        self.occupants.len() as u32
    }

    pub fn accepted_count(&self, s: usize, delivery_day: i32) -> u32 {
        self.accepted_total.get(&(s, delivery_day)).copied().unwrap_or(0)
    }

    /// Expected occupancy on `day`: current occupants kept with their
    /// survival probability given they are still here, plus
    /// accepted-undelivered packages expected to be present.
    pub fn projected_occupancy(&self, day: i32, ctx: &PolicyContext) -> f64 {
        let mut total = 0.0;
        for (s, delivered) in self.occupants.values() {
            total += ctx.survival(*s, day - delivered, self.day - delivered);
        }
        for (&(s, delivery_day), &count) in &self.ledger {
            if delivery_day <= day {
                total += f64::from(count) * ctx.tail(s, day - delivery_day);
            }
        }
        total
    }

    /// Same projection restricted to one option.
    pub fn projected_option_occupancy(&self, s: usize, day: i32, ctx: &PolicyContext) -> f64 {
        let mut total = 0.0;
        for (os, delivered) in self.occupants.values() {
            if *os == s {
                total += ctx.survival(s, day - delivered, self.day - delivered);
            }
        }
        for (&(os, delivery_day), &count) in &self.ledger {
            if os == s && delivery_day <= day {
                total += f64::from(count) * ctx.tail(s, day - delivery_day);
            }
        }
        total
    }

    fn accept(&mut self, s: usize, delivery_day: i32) {
        *self.ledger.entry((s, delivery_day)).or_insert(0) += 1;
        *self.accepted_total.entry((s, delivery_day)).or_insert(0) += 1;
    }

    fn mark_delivery_due(&mut self, s: usize, delivery_day: i32) {
        if let Some(count) = self.ledger.get_mut(&(s, delivery_day)) {
            *count = count.saturating_sub(1);
            if *count == 0 {
                self.ledger.remove(&(s, delivery_day));
            }
        }
    }

    fn occupy(&mut self, order_id: &str, s: usize, delivery_day: i32) {
        self.occupants.insert(order_id.to_string(), (s, delivery_day));
    }

    fn vacate(&mut self, order_id: &str) -> bool {
        self.occupants.remove(order_id).is_some()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RequestInfo<'a> {
    pub order_id: &'a str,
    pub option_index: usize,
    pub ship_option: u8,
    pub request_day: i32,
    pub delivery_day: i32,
}

fn effective_capacity(config: &LockerConfig, params: &ReplayParams) -> f64 {
    f64::from(config.capacity) * (1.0 - params.safety_margin.clamp(0.0, 1.0))
}

fn occupancy_guard_passes(
    state: &LockerState,
    request: &RequestInfo,
    ctx: &PolicyContext,
    config: &LockerConfig,
    params: &ReplayParams,
) -> bool {
    let projected = state.projected_occupancy(request.delivery_day, ctx);
    projected + 1e-9 < effective_capacity(config, params)
}

fn record(request: &RequestInfo, decision: Decision, reason: DecisionReason) -> DecisionRecord {
    DecisionRecord {
        order_id: request.order_id.to_string(),
        day: request.request_day,
        ship_option: request.ship_option,
        delivery_day: request.delivery_day,
        decision,
        reason,
        hindsight_space_available: false,
    }
}

/// First-come-first-served: accept while the projected occupancy on the
/// delivery day leaves room for one more package.
pub fn fcfs_decide(
    state: &LockerState,
    request: &RequestInfo,
    ctx: &PolicyContext,
    config: &LockerConfig,
    params: &ReplayParams,
) -> DecisionRecord {
    if occupancy_guard_passes(state, request, ctx, config, params) {
        record(request, Decision::Accept, DecisionReason::Accepted)
    } else {
        record(request, Decision::Reject, DecisionReason::CapacityFull)
    }
}

/// Booking-limit admission: the cumulative accepted count for the
/// (option, delivery day) cell must stay below the plan limit, and the
/// occupancy guard must also pass. Requests beyond every plan's horizon
/// fall back to the guard alone.
pub fn reservation_decide(
    state: &LockerState,
    request: &RequestInfo,
    plans: &[PlanWindow],
    ctx: &PolicyContext,
    config: &LockerConfig,
    params: &ReplayParams,
) -> DecisionRecord {
    if let Some(limit) = limit_from_plans(plans, request.option_index, request.delivery_day) {
        if state.accepted_count(request.option_index, request.delivery_day) >= limit {
            return record(request, Decision::Reject, DecisionReason::LimitExhausted);
        }
    }
    fcfs_decide(state, request, ctx, config, params)
}

/// Legacy proportion rule: the option's expected occupancy on the delivery
/// day must stay below its slot share, and the occupancy guard must pass.
pub fn proportion_decide(
    state: &LockerState,
    request: &RequestInfo,
    shares: &[f64],
    ctx: &PolicyContext,
    config: &LockerConfig,
    params: &ReplayParams,
) -> DecisionRecord {
    let share = shares[request.option_index];
    let projected = state.projected_option_occupancy(request.option_index, request.delivery_day, ctx);
    if projected + 1e-9 >= share {
        return record(request, Decision::Reject, DecisionReason::LimitExhausted);
    }
    fcfs_decide(state, request, ctx, config, params)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationReport {
    pub policy: String,
    pub locker_id: String,
    pub total_requests: u64,
    pub accepted_requests: u64,
    pub rejections: u64,
    /// Packages delivered inside the replay window.
    pub throughput: u64,
    pub per_option_throughput: Vec<u64>,
    /// Accepted orders whose delivery arrived at a full locker.
    pub failed_deliveries: u64,
    /// Order ids of those failed deliveries, sorted.
    pub failed_order_ids: Vec<String>,
    /// Accepted orders delivered after the replay window.
    pub delivered_beyond_window: u64,
    /// Deliveries of backlog orders that carried no request.
    pub pre_accepted_deliveries: u64,
    pub unjustified_rejections: u64,
    pub peak_occupancy: u32,
    pub decisions: Vec<DecisionRecord>,
    /// Fraction of identical decisions against a reference trace.
    pub agreement_vs_reference: Option<f64>,
    #[serde(skip)]
    pub runtime: Duration,
}

impl PartialEq for SimulationReport {
    fn eq(&self, other: &Self) -> bool {
        // runtime is measurement noise, not simulation output
        self.policy == other.policy
            && self.locker_id == other.locker_id
            && self.total_requests == other.total_requests
            && self.accepted_requests == other.accepted_requests
            && self.rejections == other.rejections
            && self.throughput == other.throughput
            && self.per_option_throughput == other.per_option_throughput
            && self.failed_deliveries == other.failed_deliveries
            && self.failed_order_ids == other.failed_order_ids
            && self.delivered_beyond_window == other.delivered_beyond_window
            && self.pre_accepted_deliveries == other.pre_accepted_deliveries
            && self.unjustified_rejections == other.unjustified_rejections
            && self.peak_occupancy == other.peak_occupancy
            && self.decisions == other.decisions
            && self.agreement_vs_reference == other.agreement_vs_reference
    }
}

/// Replay a complete offered stream under one policy.
///
/// Every `Request` must carry its recorded `Delivery` (and terminal) events
/// so accepted orders can be re-enacted; orders with a delivery but no
/// request are treated as pre-accepted backlog.
pub fn replay(
    events: &[PackageEvent],
    policy: &AdmissionPolicy,
    config: &LockerConfig,
    ctx: &PolicyContext,
    params: &ReplayParams,
) -> Result<SimulationReport> {
    let started = Instant::now();
    check_sorted(events).map_err(|e| LockerError::Replay(e.to_string()))?;
    policy.validate(config)?;
    if ctx.option_pmfs.len() != config.num_options() {
        return Err(LockerError::Replay(
            "policy context pmfs do not match config options".to_string(),
        ));
    }

    let mut diagnostics = Vec::new();
    let orders = collect_orders(events, config, &mut diagnostics);
    if let Some(d) = diagnostics.first() {
        return Err(LockerError::Replay(format!(
            "malformed stream at order {}: {}",
            d.order_id, d.message
        )));
    }
    for (order_id, rec) in &orders {
        if rec.request.is_some() && rec.delivery.is_none() {
            return Err(LockerError::Replay(format!(
                "order {order_id} has a request but no recorded delivery to re-enact"
            )));
        }
    }

    let window_end = params
        .window_end
        .or_else(|| events.iter().map(|e| e.day).max())
        .unwrap_or(0);

    let mut state = LockerState::default();
    let mut decisions: Vec<DecisionRecord> = Vec::new();
    let mut accepted: BTreeMap<&str, ()> = BTreeMap::new();
    let mut failed: BTreeMap<&str, ()> = BTreeMap::new();
    let mut day_peaks: BTreeMap<i32, u32> = BTreeMap::new();
    let mut peak_occupancy: u32 = 0;
    let mut throughput: u64 = 0;
    let mut delivered_beyond_window: u64 = 0;
    let mut pre_accepted_deliveries: u64 = 0;
    let mut per_option_throughput = vec![0u64; config.num_options()];
    let mut current_day = events.first().map(|e| e.day).unwrap_or(0);
    day_peaks.insert(current_day, 0);

    for e in events {
        if e.day > current_day {
            // occupancy is flat through event-free days
            for day in current_day + 1..=e.day {
                day_peaks.insert(day, state.occupied());
            }
            current_day = e.day;
        }
        state.day = current_day;
        let s = config.option_index(e.ship_option)?;
        let rec = orders
            .get(&e.order_id)
            .ok_or_else(|| LockerError::Replay(format!("unknown order {}", e.order_id)))?;
        match e.kind {
            EventKind::Request => {
                let (delivery_day, _) = rec.delivery.expect("checked above");
                let request = RequestInfo {
                    order_id: &e.order_id,
                    option_index: s,
                    ship_option: e.ship_option,
                    request_day: e.day,
                    delivery_day,
                };
                let decision = match policy {
                    AdmissionPolicy::Fcfs => fcfs_decide(&state, &request, ctx, config, params),
                    AdmissionPolicy::ProportionRule { shares } => {
                        proportion_decide(&state, &request, shares, ctx, config, params)
                    }
                    AdmissionPolicy::Reservation { plans } => {
                        reservation_decide(&state, &request, plans, ctx, config, params)
                    }
                };
                if decision.decision == Decision::Accept {
                    state.accept(s, delivery_day);
                    accepted.insert(&e.order_id, ());
                }
                decisions.push(decision);
            }
            EventKind::Delivery => {
                let pre_accepted = rec.request.is_none();
                if !pre_accepted && !accepted.contains_key(e.order_id.as_str()) {
                    continue; // rejected order: no delivery happens
                }
                if !pre_accepted {
                    state.mark_delivery_due(s, e.day);
                }
                if pre_accepted {
                    pre_accepted_deliveries += 1;
                }
                if state.occupied() >= config.capacity {
                    // full locker: the delivery fails at the door
                    failed.insert(&e.order_id, ());
                    continue;
                }
                state.occupy(&e.order_id, s, e.day);
                assert!(
                    state.occupied() <= config.capacity,
                    "occupancy exceeded capacity at order {}",
                    e.order_id
                );
                peak_occupancy = peak_occupancy.max(state.occupied());
                let entry = day_peaks.entry(e.day).or_insert(0);
                *entry = (*entry).max(state.occupied());
                if e.day <= window_end {
                    throughput += 1;
                    per_option_throughput[s] += 1;
                } else {
                    delivered_beyond_window += 1;
                }
            }
            EventKind::Pickup | EventKind::Return => {
                state.vacate(&e.order_id);
            }
        }
    }

    // hindsight pass: a rejection is unjustified when its delivery day
    // still had room for one more package
    let capacity = config.capacity;
    let final_occ = state.occupied();
    let mut unjustified_rejections = 0u64;
    for decision in &mut decisions {
        let peak = day_peaks
            .get(&decision.delivery_day)
            .copied()
            .unwrap_or(final_occ);
        match decision.decision {
            Decision::Reject => {
                decision.hindsight_space_available = peak < capacity;
                if decision.hindsight_space_available {
                    unjustified_rejections += 1;
                }
            }
            Decision::Accept => {
                decision.hindsight_space_available =
                    !failed.contains_key(decision.order_id.as_str());
            }
        }
    }

    let total_requests = decisions.len() as u64;
    let accepted_requests = decisions
        .iter()
        .filter(|d| d.decision == Decision::Accept)
        .count() as u64;
    let rejections = total_requests - accepted_requests;

    Ok(SimulationReport {
        policy: policy.name().to_string(),
        locker_id: config.locker_id.clone(),
        total_requests,
        accepted_requests,
        rejections,
        throughput,
        per_option_throughput,
        failed_deliveries: failed.len() as u64,
        failed_order_ids: failed.keys().map(|id| id.to_string()).collect(),
        delivered_beyond_window,
        pre_accepted_deliveries,
        unjustified_rejections,
        peak_occupancy,
        decisions,
        agreement_vs_reference: None,
        runtime: started.elapsed(),
    })
}

/// Fraction of orders on which two traces reach the same decision.
pub fn decision_agreement(reference: &[DecisionRecord], other: &[DecisionRecord]) -> f64 {
    if reference.is_empty() && other.is_empty() {
        return 1.0;
    }
    let by_order: BTreeMap<&str, Decision> = reference
        .iter()
        .map(|d| (d.order_id.as_str(), d.decision))
        .collect();
    let mut matched = 0usize;
    let mut compared = 0usize;
    for d in other {
        if let Some(reference_decision) = by_order.get(d.order_id.as_str()) {
            compared += 1;
            if *reference_decision == d.decision {
                matched += 1;
            }
        }
    }
    if compared == 0 {
        0.0
    } else {
        matched as f64 / compared as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyComparison {
    pub locker_id: String,
    /// Reports in input order; the first policy is the reference.
    pub reports: Vec<SimulationReport>,
    /// Throughput uplift of each policy against the reference, percent.
    pub uplift_vs_reference_pct: Vec<f64>,
    /// Policy names ranked by decreasing uplift.
    pub ranking: Vec<String>,
}

/// Replay one stream under several policies; the first is the reference
/// for agreement and uplift.
pub fn compare_policies(
    events: &[PackageEvent],
    policies: &[AdmissionPolicy],
    config: &LockerConfig,
    ctx: &PolicyContext,
    params: &ReplayParams,
) -> Result<PolicyComparison> {
    if policies.len() < 2 {
        return Err(LockerError::InvalidConfig(
            "compare_policies needs at least two policies".to_string(),
        ));
    }
    let mut reports = Vec::with_capacity(policies.len());
    for policy in policies {
        reports.push(replay(events, policy, config, ctx, params)?);
    }
    let reference_decisions = reports[0].decisions.clone();
    let reference_throughput = reports[0].throughput;
    for report in &mut reports {
        report.agreement_vs_reference =
            Some(decision_agreement(&reference_decisions, &report.decisions));
    }
    let uplift_vs_reference_pct: Vec<f64> = reports
        .iter()
        .map(|r| {
            if reference_throughput == 0 {
                0.0
            } else {
                (r.throughput as f64 - reference_throughput as f64) / reference_throughput as f64
                    * 100.0
            }
        })
        .collect();
    let mut order: Vec<usize> = (0..reports.len()).collect();
    order.sort_by(|&a, &b| {
        uplift_vs_reference_pct[b]
            .total_cmp(&uplift_vs_reference_pct[a])
            .then(a.cmp(&b))
    });
    let ranking = order.iter().map(|&i| reports[i].policy.clone()).collect();
    Ok(PolicyComparison {
        locker_id: config.locker_id.clone(),
        reports,
        uplift_vs_reference_pct,
        ranking,
    })
}

/// Decision-trace file: one `order_id,day,option,decision,reason,hindsight`
/// record per request, in decision order.
pub fn format_trace_file(decisions: &[DecisionRecord]) -> String {
    let mut out = String::from("# order_id,day,option,decision,reason,hindsight\n");
    for d in decisions {
        let decision = match d.decision {
            Decision::Accept => "Accept",
            Decision::Reject => "Reject",
        };
        let reason = match d.reason {
            DecisionReason::Accepted => "Accepted",
            DecisionReason::CapacityFull => "CapacityFull",
            DecisionReason::LimitExhausted => "LimitExhausted",
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            d.order_id, d.day, d.ship_option, decision, reason, d.hindsight_space_available
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ShipOption;

    fn config(capacity: u32) -> LockerConfig {
        LockerConfig::new(
            "L1",
            capacity,
            vec![
                ShipOption::new(1, "next-day", 1),
                ShipOption::new(2, "standard", 2),
            ],
            7,
        )
        .unwrap()
    }

    fn ctx_deterministic() -> PolicyContext {
        PolicyContext {
            option_pmfs: vec![DwellPmf::delta(1), DwellPmf::delta(2)],
        }
    }

    fn order_events(
        order: &str,
        s: u8,
        request_day: i32,
        request_seq: u32,
        delivery_day: i32,
        dwell: i32,
    ) -> Vec<PackageEvent> {
        let mk = |kind, day, seq| PackageEvent {
            locker_id: "L1".into(),
            order_id: order.into(),
            kind,
            ship_option: s,
            day,
            within_day_seq: seq,
        };
        let terminal_kind = if dwell >= 3 {
            EventKind::Return
        } else {
            EventKind::Pickup
        };
        vec![
            mk(EventKind::Request, request_day, request_seq),
            mk(EventKind::Delivery, delivery_day, 20_000),
            mk(terminal_kind, delivery_day + dwell, 50_000),
        ]
    }

    fn sorted(mut events: Vec<PackageEvent>) -> Vec<PackageEvent> {
        crate::events::sort_events(&mut events);
        events
    }

    #[test]
    fn empty_stream_zero_report() {
        let report = replay(
            &[],
            &AdmissionPolicy::Fcfs,
            &config(4),
            &ctx_deterministic(),
            &ReplayParams::default(),
        )
        .unwrap();
        assert_eq!(report.total_requests, 0);
        assert_eq!(report.throughput, 0);
        assert_eq!(report.rejections, 0);
    }

    #[test]
    fn capacity_one_second_request_rejected() {
        let mut events = order_events("a", 1, 0, 100, 1, 1);
        events.extend(order_events("b", 1, 0, 200, 1, 1));
        let events = sorted(events);
        let report = replay(
            &events,
            &AdmissionPolicy::Fcfs,
            &config(1),
            &ctx_deterministic(),
            &ReplayParams::default(),
        )
        .unwrap();
        assert_eq!(report.accepted_requests, 1);
        assert_eq!(report.rejections, 1);
        let reject = report
            .decisions
            .iter()
            .find(|d| d.decision == Decision::Reject)
            .unwrap();
        assert_eq!(reject.order_id, "b");
        assert_eq!(reject.reason, DecisionReason::CapacityFull);
    }

    #[test]
    fn fcfs_empty_locker_accepts() {
        let events = sorted(order_events("a", 1, 0, 100, 2, 0));
        let report = replay(
            &events,
            &AdmissionPolicy::Fcfs,
            &config(4),
            &ctx_deterministic(),
            &ReplayParams::default(),
        )
        .unwrap();
        assert_eq!(report.accepted_requests, 1);
        assert_eq!(report.throughput, 1);
    }

    /// Four standard orders fill the locker before an expedited request
    /// arrives; the expedited order is rejected.
    #[test]
    fn fcfs_standard_fills_expedited_rejected() {
        let mut events = Vec::new();
        for i in 0..4 {
            events.extend(order_events(&format!("std{i}"), 2, 0, 100 + i, 3, 2));
        }
        events.extend(order_events("expedited", 1, 2, 100, 3, 0));
        let events = sorted(events);
        let report = replay(
            &events,
            &AdmissionPolicy::Fcfs,
            &config(4),
            &ctx_deterministic(),
            &ReplayParams::default(),
        )
        .unwrap();
        let expedited = report
            .decisions
            .iter()
            .find(|d| d.order_id == "expedited")
            .unwrap();
        assert_eq!(expedited.decision, Decision::Reject);
        assert_eq!(expedited.reason, DecisionReason::CapacityFull);
        assert_eq!(report.throughput, 4);
    }

    #[test]
    fn reservation_limit_zero_rejects_with_empty_locker() {
        let events = sorted(order_events("a", 2, 0, 100, 1, 1));
        let plan = PlanWindow {
            run_date: 0,
            horizon: 7,
            num_options: 2,
            limits: vec![5, 5, 5, 5, 5, 5, 5, 0, 0, 0, 0, 0, 0, 0],
        };
        let report = replay(
            &events,
            &AdmissionPolicy::Reservation { plans: vec![plan] },
            &config(4),
            &ctx_deterministic(),
            &ReplayParams::default(),
        )
        .unwrap();
        assert_eq!(report.rejections, 1);
        assert_eq!(report.decisions[0].reason, DecisionReason::LimitExhausted);
    }

    /// Limits sized for the mix admit everything: both standard and
    /// expedited orders fit.
    #[test]
    fn reservation_sized_limits_accept_all_five() {
        let mut events = Vec::new();
        for i in 0..3 {
            events.extend(order_events(&format!("std{i}"), 2, 0, 100 + i, 3, 2));
        }
        events.extend(order_events("exp0", 1, 2, 100, 3, 0));
        events.extend(order_events("exp1", 1, 2, 200, 3, 0));
        let events = sorted(events);
        let plan = PlanWindow {
            run_date: 0,
            horizon: 7,
            num_options: 2,
            limits: vec![2, 2, 2, 2, 2, 2, 2, 3, 3, 3, 3, 3, 3, 3],
        };
        let report = replay(
            &events,
            &AdmissionPolicy::Reservation { plans: vec![plan] },
            &config(5),
            &ctx_deterministic(),
            &ReplayParams::default(),
        )
        .unwrap();
        assert_eq!(report.accepted_requests, 5);
        assert_eq!(report.throughput, 5);
    }

    #[test]
    fn reservation_zero_demand_plan_rejects_everything() {
        let mut events = order_events("a", 1, 0, 100, 1, 0);
        events.extend(order_events("b", 2, 0, 200, 2, 1));
        let events = sorted(events);
        let plan = PlanWindow {
            run_date: 0,
            horizon: 7,
            num_options: 2,
            limits: vec![0; 14],
        };
        let report = replay(
            &events,
            &AdmissionPolicy::Reservation { plans: vec![plan] },
            &config(4),
            &ctx_deterministic(),
            &ReplayParams::default(),
        )
        .unwrap();
        assert_eq!(report.rejections, 2);
        assert!(report
            .decisions
            .iter()
            .all(|d| d.reason == DecisionReason::LimitExhausted));
    }

    #[test]
    fn proportion_share_exhaustion() {
        // shares {75, 25}; 25 standard packages already booked for one day
        // reject the 26th standard request
        let cfg = LockerConfig::new(
            "ruby",
            100,
            vec![
                ShipOption::new(1, "two-day", 1),
                ShipOption::new(2, "standard", 2),
            ],
            7,
        )
        .unwrap();
        let ctx = PolicyContext {
            option_pmfs: vec![DwellPmf::delta(0), DwellPmf::delta(0)],
        };
        let mut events = Vec::new();
        for i in 0..26 {
            events.extend(order_events(&format!("std{i}"), 2, 0, 100 + i, 2, 0));
        }
        let events = sorted(events);
        let policy = AdmissionPolicy::ProportionRule {
            shares: vec![75.0, 25.0],
        };
        let report = replay(&events, &policy, &cfg, &ctx, &ReplayParams::default()).unwrap();
        assert_eq!(report.accepted_requests, 25);
        assert_eq!(report.rejections, 1);
        assert_eq!(
            report.decisions.last().unwrap().reason,
            DecisionReason::LimitExhausted
        );
    }

    #[test]
    fn proportion_first_request_accepted() {
        let events = sorted(order_events("a", 1, 0, 100, 1, 1));
        let policy = AdmissionPolicy::ProportionRule {
            shares: vec![75.0, 25.0],
        };
        let report = replay(
            &events,
            &policy,
            &config(100),
            &ctx_deterministic(),
            &ReplayParams::default(),
        )
        .unwrap();
        assert_eq!(report.accepted_requests, 1);
    }

    #[test]
    fn proportion_zero_share_rejects_option() {
        let events = sorted(order_events("a", 1, 0, 100, 1, 1));
        let policy = AdmissionPolicy::ProportionRule {
            shares: vec![0.0, 25.0],
        };
        let report = replay(
            &events,
            &policy,
            &config(100),
            &ctx_deterministic(),
            &ReplayParams::default(),
        )
        .unwrap();
        assert_eq!(report.rejections, 1);
        assert_eq!(report.decisions[0].reason, DecisionReason::LimitExhausted);
    }

    #[test]
    fn replay_is_deterministic() {
        let mut events = Vec::new();
        for i in 0..20 {
            events.extend(order_events(
                &format!("o{i}"),
                1 + (i % 2) as u8,
                (i / 4) as i32,
                100 + i,
                (i / 4) as i32 + 1 + (i % 2) as i32,
                (i % 3) as i32,
            ));
        }
        let events = sorted(events);
        let a = replay(
            &events,
            &AdmissionPolicy::Fcfs,
            &config(3),
            &ctx_deterministic(),
            &ReplayParams::default(),
        )
        .unwrap();
        let b = replay(
            &events,
            &AdmissionPolicy::Fcfs,
            &config(3),
            &ctx_deterministic(),
            &ReplayParams::default(),
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn self_agreement_is_total() {
        let mut events = Vec::new();
        for i in 0..10 {
            events.extend(order_events(&format!("o{i}"), 1, 0, 100 + i, 1, 1));
        }
        let events = sorted(events);
        let report = replay(
            &events,
            &AdmissionPolicy::Fcfs,
            &config(3),
            &ctx_deterministic(),
            &ReplayParams::default(),
        )
        .unwrap();
        assert_eq!(decision_agreement(&report.decisions, &report.decisions), 1.0);
    }

    #[test]
    fn accounting_identity_holds() {
        let mut events = Vec::new();
        for i in 0..30 {
            events.extend(order_events(
                &format!("o{i}"),
                1 + (i % 2) as u8,
                (i / 6) as i32,
                100 + i,
                (i / 6) as i32 + 1,
                (i % 4) as i32,
            ));
        }
        let events = sorted(events);
        let report = replay(
            &events,
            &AdmissionPolicy::Fcfs,
            &config(4),
            &ctx_deterministic(),
            &ReplayParams::default(),
        )
        .unwrap();
        assert_eq!(report.accepted_requests + report.rejections, report.total_requests);
        assert_eq!(
            report.throughput + report.failed_deliveries + report.delivered_beyond_window,
            report.accepted_requests + report.pre_accepted_deliveries
        );
    }

    #[test]
    fn fcfs_no_unjustified_rejections_on_deterministic_dwell() {
        let mut events = Vec::new();
        for i in 0..40 {
            events.extend(order_events(
                &format!("o{i}"),
                1,
                (i / 8) as i32,
                100 + i,
                (i / 8) as i32 + 1,
                1,
            ));
        }
        let events = sorted(events);
        let report = replay(
            &events,
            &AdmissionPolicy::Fcfs,
            &config(3),
            &ctx_deterministic(),
            &ReplayParams::default(),
        )
        .unwrap();
        assert!(report.rejections > 0, "workload should overload capacity");
        assert_eq!(report.unjustified_rejections, 0);
        assert_eq!(report.failed_deliveries, 0);
    }

    #[test]
    fn limit_policy_can_cause_unjustified_rejections() {
        let events = sorted(order_events("a", 1, 0, 100, 1, 0));
        let plan = PlanWindow {
            run_date: 0,
            horizon: 7,
            num_options: 2,
            limits: vec![0; 14],
        };
        let report = replay(
            &events,
            &AdmissionPolicy::Reservation { plans: vec![plan] },
            &config(4),
            &ctx_deterministic(),
            &ReplayParams::default(),
        )
        .unwrap();
        assert_eq!(report.unjustified_rejections, 1);
        assert!(report.decisions[0].hindsight_space_available);
    }

    #[test]
    fn compare_policies_identical_zero_delta() {
        let mut events = Vec::new();
        for i in 0..10 {
            events.extend(order_events(&format!("o{i}"), 1, 0, 100 + i, 1, 1));
        }
        let events = sorted(events);
        let comparison = compare_policies(
            &events,
            &[AdmissionPolicy::Fcfs, AdmissionPolicy::Fcfs],
            &config(3),
            &ctx_deterministic(),
            &ReplayParams::default(),
        )
        .unwrap();
        assert_eq!(comparison.uplift_vs_reference_pct, vec![0.0, 0.0]);
        assert_eq!(comparison.reports[1].agreement_vs_reference, Some(1.0));
    }

    #[test]
    fn malformed_stream_names_offender() {
        let events = vec![PackageEvent {
            locker_id: "L1".into(),
            order_id: "bad-one".into(),
            kind: EventKind::Pickup,
            ship_option: 1,
            day: 0,
            within_day_seq: 10,
        }];
        let err = replay(
            &events,
            &AdmissionPolicy::Fcfs,
            &config(4),
            &ctx_deterministic(),
            &ReplayParams::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("bad-one"));
    }

    #[test]
    fn plan_window_lookup() {
        let early = PlanWindow {
            run_date: 0,
            horizon: 7,
            num_options: 1,
            limits: vec![1, 1, 1, 1, 1, 1, 1],
        };
        let late = PlanWindow {
            run_date: 7,
            horizon: 7,
            num_options: 1,
            limits: vec![9, 9, 9, 9, 9, 9, 9],
        };
        let plans = vec![early, late];
        assert_eq!(limit_from_plans(&plans, 0, 3), Some(1));
        assert_eq!(limit_from_plans(&plans, 0, 8), Some(9));
        assert_eq!(limit_from_plans(&plans, 0, 20), None);
    }
}
