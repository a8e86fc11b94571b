//! Capacity-reservation optimization: a linear program that maximizes total
//! accepted volume over the horizon subject to per-day expected-occupancy
//! capacity rows, per-cell demand bounds, and the defining equalities that
//! tie reserved slots to accepted volume through the presence
//! probabilities.
//!
//! For ship option `s` and horizon day `t`, `y[s][t]` is the accepted
//! package volume and `x[s][t]` the expected slots reserved:
//!
//! ```text
//! max  sum_{s,t} y[s][t]
//! s.t. sum_s ( sum_{v=1..t} p[s][v][t] y[s][v] + carry[s][t] ) <= C   per t
//!      y[s][t] <= d[s][t]                                             per s,t
//!      x[s][t]  = sum_{v=1..t} p[s][v][t] y[s][v] + carry[s][t]       per s,t
//!      x, y >= 0
//! ```
//!
//! where `carry[s][t]` is the expected residue of packages already in the
//! locker at planning time. The LP is always feasible (y = 0) and bounded
//! (objective at most total demand). Variables are ordered fastest ship
//! option first, so ties on degenerate optimal faces resolve toward faster
//! options deterministically.

use serde::{Deserialize, Serialize};

use crate::dwell::PresenceMatrix;
use crate::error::{LockerError, Result};
use crate::forecast::DemandForecast;
use crate::simplex::{solve, StandardLp};
use crate::types::{Carryover, LockerConfig};

/// Residual tolerance required of a returned plan.
pub const PLAN_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct LpInstance {
    num_options: usize,
    horizon: u32,
    capacity: f64,
    demand: DemandForecast,
    presence: PresenceMatrix,
    /// Option indices fastest first: the fixed variable ordering.
    speed_order: Vec<usize>,
    /// Position of each option index within `speed_order`.
    speed_pos: Vec<usize>,
    /// carry[s][t]: expected occupancy on day t from pre-horizon packages.
    carry_x: Vec<f64>,
    /// Per-day total of `carry_x`.
    carry_load: Vec<f64>,
}

impl LpInstance {
    pub fn num_options(&self) -> usize {
        self.num_options
    }

    pub fn horizon(&self) -> u32 {
        self.horizon
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn demand(&self) -> &DemandForecast {
        &self.demand
    }

    pub fn presence(&self) -> &PresenceMatrix {
        &self.presence
    }

    pub fn num_variables(&self) -> usize {
        2 * self.num_options * self.horizon as usize
    }

    pub fn num_capacity_rows(&self) -> usize {
        self.horizon as usize
    }

    pub fn num_demand_bounds(&self) -> usize {
        self.num_options * self.horizon as usize
    }

    pub fn num_equalities(&self) -> usize {
        self.num_options * self.horizon as usize
    }

    /// Structural variable index of `y[s][t]` (option index, day 1..=T).
    pub fn var_y(&self, s: usize, t: u32) -> usize {
        self.speed_pos[s] * self.horizon as usize + (t - 1) as usize
    }

    /// Structural variable index of `x[s][t]`.
    pub fn var_x(&self, s: usize, t: u32) -> usize {
        self.num_options * self.horizon as usize + self.var_y(s, t)
    }

    /// Expected day-`t` occupancy contributed by carryover packages.
    pub fn carry_load(&self, t: u32) -> f64 {
        self.carry_load[(t - 1) as usize]
    }

    /// Carryover contribution to `x[s][t]`.
    pub fn carry_x(&self, s: usize, t: u32) -> f64 {
        self.carry_x[s * self.horizon as usize + (t - 1) as usize]
    }

    fn to_standard(&self) -> StandardLp {
        let s_count = self.num_options;
        let t_count = self.horizon as usize;
        let st = s_count * t_count;
        let n = 2 * st + t_count + st; // y, x, capacity slacks, demand slacks
        let m = t_count + 2 * st;
        let slack_cap = 2 * st;
        let slack_demand = 2 * st + t_count;

        let mut objective = vec![0.0; n];
        for s in 0..s_count {
            for t in 1..=self.horizon {
                objective[self.var_y(s, t)] = 1.0;
            }
        }

        let mut rows = vec![vec![0.0; n]; m];
        let mut rhs = vec![0.0; m];
        let mut basis = vec![0usize; m];

        // capacity rows, one per day
        for t in 1..=self.horizon {
            let r = (t - 1) as usize;
            for s in 0..s_count {
                for v in 1..=t {
                    rows[r][self.var_y(s, v)] += self.presence.presence(s, v as i32, t);
                }
            }
            rows[r][slack_cap + r] = 1.0;
            rhs[r] = self.capacity - self.carry_load(t);
            basis[r] = slack_cap + r;
        }

        // demand bounds, one per (option, day)
        for s in 0..s_count {
            for t in 1..=self.horizon {
                let r = t_count + self.var_y(s, t);
                rows[r][self.var_y(s, t)] = 1.0;
                rows[r][slack_demand + self.var_y(s, t)] = 1.0;
                rhs[r] = self.demand.demand(s, t);
                basis[r] = slack_demand + self.var_y(s, t);
            }
        }

        // defining equalities: x - sum p y = carry
        for s in 0..s_count {
            for t in 1..=self.horizon {
                let r = t_count + st + self.var_y(s, t);
                rows[r][self.var_x(s, t)] = 1.0;
                for v in 1..=t {
                    rows[r][self.var_y(s, v)] -= self.presence.presence(s, v as i32, t);
                }
                rhs[r] = self.carry_x(s, t);
                basis[r] = self.var_x(s, t);
            }
        }

        StandardLp {
            objective,
            rows,
            rhs,
            basis,
        }
    }
}

/// Assemble the LP from forecast, presence, and carryover.
pub fn build_lp(
    forecast: &DemandForecast,
    presence: &PresenceMatrix,
    carryover: &Carryover,
    config: &LockerConfig,
) -> Result<LpInstance> {
    let s_count = config.num_options();
    let horizon = forecast.horizon();
    if forecast.num_options() != s_count
        || presence.num_options() != s_count
        || carryover.num_options() != s_count
    {
        return Err(LockerError::Dimension(format!(
            "option counts disagree: config {s_count}, forecast {}, presence {}, carryover {}",
            forecast.num_options(),
            presence.num_options(),
            carryover.num_options()
        )));
    }
    if presence.horizon() != horizon {
        return Err(LockerError::Dimension(format!(
            "horizons disagree: forecast {horizon}, presence {}",
            presence.horizon()
        )));
    }
    carryover.validate(config.capacity)?;

    let speed_order = config.speed_order();
    let mut speed_pos = vec![0usize; s_count];
    for (pos, &s) in speed_order.iter().enumerate() {
        speed_pos[s] = pos;
    }

    let t_count = horizon as usize;
    let mut carry_x = vec![0.0; s_count * t_count];
    let mut carry_load = vec![0.0; t_count];
    for s in 0..s_count {
        for t in 1..=horizon {
            let mut load = 0.0;
            for v in -6..=0 {
                let e = f64::from(carryover.count(s, v));
                if e > 0.0 {
                    load += presence.presence(s, v, t) * e;
                }
            }
            carry_x[s * t_count + (t - 1) as usize] = load;
            carry_load[(t - 1) as usize] += load;
        }
    }

    Ok(LpInstance {
        num_options: s_count,
        horizon,
        capacity: f64::from(config.capacity),
        demand: forecast.clone(),
        presence: presence.clone(),
        speed_order,
        speed_pos,
        carry_x,
        carry_load,
    })
}

/// Solved reservation plan: accepted volume `y`, reserved slots `x`, and
/// the integer booking limits derived from `y`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReservationPlan {
    pub num_options: usize,
    pub horizon: u32,
    /// Accepted volume per (option, day), s-major.
    pub y: Vec<f64>,
    /// Reserved slots per (option, day), s-major.
    pub x: Vec<f64>,
    pub objective: f64,
    pub booking_limits: Vec<u32>,
    pub iterations: usize,
    pub max_primal_residual: f64,
    pub max_dual_residual: f64,
}

impl ReservationPlan {
    pub fn y_at(&self, s: usize, t: u32) -> f64 {
        self.y[s * self.horizon as usize + (t - 1) as usize]
    }

    pub fn x_at(&self, s: usize, t: u32) -> f64 {
        self.x[s * self.horizon as usize + (t - 1) as usize]
    }

    pub fn limit_at(&self, s: usize, t: u32) -> u32 {
        self.booking_limits[s * self.horizon as usize + (t - 1) as usize]
    }
}

/// Solve to optimality and extract the plan, with residual checks at
/// `PLAN_TOL`. Booking limits come from `integerize_plan`.
pub fn solve_lp(instance: &LpInstance) -> Result<ReservationPlan> {
    let standard = instance.to_standard();
    let solution = solve(&standard)?;
    if solution.max_primal_residual > PLAN_TOL || solution.max_dual_residual > PLAN_TOL {
        return Err(LockerError::Solver {
            message: "solution residuals exceed tolerance".to_string(),
            primal_residual: solution.max_primal_residual,
            dual_residual: solution.max_dual_residual,
        });
    }
    let t_count = instance.horizon as usize;
    let mut y = vec![0.0; instance.num_options * t_count];
    let mut x = vec![0.0; instance.num_options * t_count];
    for s in 0..instance.num_options {
        for t in 1..=instance.horizon {
            y[s * t_count + (t - 1) as usize] = solution.values[instance.var_y(s, t)];
            x[s * t_count + (t - 1) as usize] = solution.values[instance.var_x(s, t)];
        }
    }
    let booking_limits = integerize_plan(&y, instance);
    Ok(ReservationPlan {
        num_options: instance.num_options,
        horizon: instance.horizon,
        y,
        x,
        objective: solution.objective,
        booking_limits,
        iterations: solution.iterations,
        max_primal_residual: solution.max_primal_residual,
        max_dual_residual: solution.max_dual_residual,
    })
}

/// Expected occupancy per day implied by accepted volumes `y` (s-major)
/// plus the carryover residue: the left-hand side of the capacity rows.
pub fn expected_occupancy(y: &[f64], instance: &LpInstance) -> Vec<f64> {
    let t_count = instance.horizon as usize;
    let mut out = Vec::with_capacity(t_count);
    for t in 1..=instance.horizon {
        let mut total = instance.carry_load(t);
        for s in 0..instance.num_options {
            for v in 1..=t {
                total += instance.presence().presence(s, v as i32, t)
                    * y[s * t_count + (v - 1) as usize];
            }
        }
        out.push(total);
    }
    out
}

/// Round fractional accepted volumes to integer booking limits: floors
/// first, then one unit at a time by largest fractional remainder (ties to
/// the faster option), each addition re-checked against expected occupancy.
pub fn integerize_plan(y: &[f64], instance: &LpInstance) -> Vec<u32> {
    let t_count = instance.horizon as usize;
    let s_count = instance.num_options;
    let mut limits = vec![0u32; s_count * t_count];
    let mut frac = vec![0.0f64; s_count * t_count];
    for (i, &value) in y.iter().enumerate() {
        let snapped = if (value - value.round()).abs() < 1e-6 {
            value.round()
        } else {
            value
        };
        let floor = snapped.floor();
        limits[i] = floor as u32;
        frac[i] = snapped - floor;
    }

    // Integer expected occupancy so far, updated as units are granted.
    let occupancy = |limits: &[u32], t: u32, instance: &LpInstance| -> f64 {
        let mut total = instance.carry_load(t);
        for s in 0..s_count {
            for v in 1..=t {
                total += instance.presence().presence(s, v as i32, t)
                    * f64::from(limits[s * t_count + (v - 1) as usize]);
            }
        }
        total
    };

    for t in 1..=instance.horizon {
        let day_total: f64 = (0..s_count).map(|s| y[s * t_count + (t - 1) as usize]).sum();
        let target = (day_total + 1e-9).round() as i64;
        let floors: i64 = (0..s_count)
            .map(|s| i64::from(limits[s * t_count + (t - 1) as usize]))
            .sum();
        let mut remaining = (target - floors).max(0);

        // candidates by descending remainder, faster option first on ties
        let mut candidates: Vec<usize> = instance.speed_order.clone();
        candidates.sort_by(|&a, &b| {
            let fa = frac[a * t_count + (t - 1) as usize];
            let fb = frac[b * t_count + (t - 1) as usize];
            fb.total_cmp(&fa)
                .then(instance.speed_pos[a].cmp(&instance.speed_pos[b]))
        });
        for &s in &candidates {
            if remaining == 0 {
                break;
            }
            let idx = s * t_count + (t - 1) as usize;
            if frac[idx] <= 1e-9 {
                continue;
            }
            limits[idx] += 1;
            let feasible = (t..=instance.horizon)
                .all(|tau| occupancy(&limits, tau, instance) <= instance.capacity + 1e-9);
            if feasible {
                remaining -= 1;
            } else {
                limits[idx] -= 1;
            }
        }
    }
    limits
}

/// Plan file: `# objective:` and `# run_date:` headers, then one
/// `locker_id,ship_option,day,y_lp,x_lp,booking_limit` record per cell.
pub fn format_plan_file(plan: &ReservationPlan, locker_id: &str, run_date: i32) -> String {
    let mut out = String::new();
    out.push_str("# plan-version: 1\n");
    out.push_str(&format!("# objective: {:?}\n", plan.objective));
    out.push_str(&format!("# run_date: {run_date}\n"));
    out.push_str(&format!("# horizon: {}\n", plan.horizon));
    out.push_str(&format!("# options: {}\n", plan.num_options));
    for s in 0..plan.num_options {
        for t in 1..=plan.horizon {
            out.push_str(&format!(
                "{},{},{},{:?},{:?},{}\n",
                locker_id,
                s + 1,
                t,
                plan.y_at(s, t),
                plan.x_at(s, t),
                plan.limit_at(s, t)
            ));
        }
    }
    out
}

/// Parsed plan file: locker id, run date, and the reconstructed plan.
pub fn parse_plan_file(text: &str) -> Result<(String, i32, ReservationPlan)> {
    let mut objective = 0.0;
    let mut run_date = 0i32;
    let mut horizon = 0u32;
    let mut num_options = 0usize;
    let mut records: Vec<(String, usize, u32, f64, f64, u32)> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("objective:") {
                objective = v.trim().parse().map_err(|_| LockerError::Parse {
                    line: line_no,
                    message: "bad objective".to_string(),
                })?;
            } else if let Some(v) = rest.strip_prefix("run_date:") {
                run_date = v.trim().parse().map_err(|_| LockerError::Parse {
                    line: line_no,
                    message: "bad run_date".to_string(),
                })?;
            } else if let Some(v) = rest.strip_prefix("horizon:") {
                horizon = v.trim().parse().map_err(|_| LockerError::Parse {
                    line: line_no,
                    message: "bad horizon".to_string(),
                })?;
            } else if let Some(v) = rest.strip_prefix("options:") {
                num_options = v.trim().parse().map_err(|_| LockerError::Parse {
                    line: line_no,
                    message: "bad options".to_string(),
                })?;
            }
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        if fields.len() != 6 {
            return Err(LockerError::Parse {
                line: line_no,
                message: format!("expected 6 fields, found {}", fields.len()),
            });
        }
        let parse_err = |message: String| LockerError::Parse {
            line: line_no,
            message,
        };
        let option: usize = fields[1]
            .parse()
            .map_err(|_| parse_err(format!("bad ship_option {:?}", fields[1])))?;
        let day: u32 = fields[2]
            .parse()
            .map_err(|_| parse_err(format!("bad day {:?}", fields[2])))?;
        let y: f64 = fields[3]
            .parse()
            .map_err(|_| parse_err(format!("bad y_lp {:?}", fields[3])))?;
        let x: f64 = fields[4]
            .parse()
            .map_err(|_| parse_err(format!("bad x_lp {:?}", fields[4])))?;
        let limit: u32 = fields[5]
            .parse()
            .map_err(|_| parse_err(format!("bad booking_limit {:?}", fields[5])))?;
        records.push((fields[0].to_string(), option, day, y, x, limit));
    }
    if records.is_empty() || horizon == 0 || num_options == 0 {
        return Err(LockerError::Parse {
            line: 0,
            message: "plan file has no records or missing headers".to_string(),
        });
    }
    let locker_id = records[0].0.clone();
    let t_count = horizon as usize;
    let mut y = vec![0.0; num_options * t_count];
    let mut x = vec![0.0; num_options * t_count];
    let mut limits = vec![0u32; num_options * t_count];
    for (_, option, day, yy, xx, limit) in &records {
        let idx = (option - 1) * t_count + (*day - 1) as usize;
        y[idx] = *yy;
        x[idx] = *xx;
        limits[idx] = *limit;
    }
    let plan = ReservationPlan {
        num_options,
        horizon,
        y,
        x,
        objective,
        booking_limits: limits,
        iterations: 0,
        max_primal_residual: 0.0,
        max_dual_residual: 0.0,
    };
    Ok((locker_id, run_date, plan))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dwell::{pmf_to_presence, DwellPmf, DwellProfileSet};
    use crate::types::ShipOption;

    fn config(num_options: usize, capacity: u32, horizon: u32) -> LockerConfig {
        let options = (1..=num_options as u8)
            .map(|id| ShipOption::new(id, format!("opt-{id}"), id))
            .collect();
        LockerConfig::new("L1", capacity, options, horizon).unwrap()
    }

    fn presence_all_dwell_zero(num_options: usize, horizon: u32) -> PresenceMatrix {
        let pmfs = vec![DwellPmf::delta(0); num_options];
        pmf_to_presence(&DwellProfileSet::per_option(pmfs, horizon)).unwrap()
    }

    #[test]
    fn smallest_instance_dimensions() {
        let cfg = config(1, 5, 1);
        let forecast = DemandForecast::new(1, 1, vec![3.0]).unwrap();
        let presence = presence_all_dwell_zero(1, 1);
        let instance = build_lp(&forecast, &presence, &Carryover::zero(1), &cfg).unwrap();
        assert_eq!(instance.num_variables(), 2);
        assert_eq!(instance.num_capacity_rows(), 1);
        assert_eq!(instance.num_demand_bounds(), 1);
        assert_eq!(instance.num_equalities(), 1);
    }

    #[test]
    fn full_size_dimensions() {
        let cfg = config(4, 20, 7);
        let forecast = DemandForecast::new(4, 7, vec![1.0; 28]).unwrap();
        let presence = presence_all_dwell_zero(4, 7);
        let instance = build_lp(&forecast, &presence, &Carryover::zero(4), &cfg).unwrap();
        assert_eq!(instance.num_variables(), 56);
        assert_eq!(instance.num_capacity_rows(), 7);
        assert_eq!(instance.num_demand_bounds(), 28);
        assert_eq!(instance.num_equalities(), 28);
    }

    #[test]
    fn dimension_mismatch_is_build_error() {
        let cfg = config(2, 5, 1);
        let forecast = DemandForecast::new(1, 1, vec![3.0]).unwrap();
        let presence = presence_all_dwell_zero(2, 1);
        assert!(build_lp(&forecast, &presence, &Carryover::zero(2), &cfg).is_err());
    }

    #[test]
    fn carryover_only_instance_is_feasible_at_zero() {
        let cfg = config(1, 5, 3);
        let forecast = DemandForecast::new(1, 3, vec![0.0; 3]).unwrap();
        let pmfs = vec![DwellPmf::uniform()];
        let presence = pmf_to_presence(&DwellProfileSet::per_option(pmfs, 3)).unwrap();
        let mut carry = Carryover::zero(1);
        carry.add(0, 0, 4);
        let instance = build_lp(&forecast, &presence, &carry, &cfg).unwrap();
        let plan = solve_lp(&instance).unwrap();
        assert_eq!(plan.objective, 0.0);
        assert!(plan.y.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn unconstrained_single_cell() {
        let cfg = config(1, 5, 1);
        let forecast = DemandForecast::new(1, 1, vec![3.0]).unwrap();
        let presence = presence_all_dwell_zero(1, 1);
        let instance = build_lp(&forecast, &presence, &Carryover::zero(1), &cfg).unwrap();
        let plan = solve_lp(&instance).unwrap();
        assert!((plan.objective - 3.0).abs() < 1e-9);
        assert!((plan.y_at(0, 1) - 3.0).abs() < 1e-9);
        assert!((plan.x_at(0, 1) - 3.0).abs() < 1e-9);
        assert_eq!(plan.limit_at(0, 1), 3);
    }

    #[test]
    fn binding_knapsack_splits_capacity() {
        let cfg = config(2, 4, 1);
        let forecast = DemandForecast::new(2, 1, vec![3.0, 3.0]).unwrap();
        let presence = presence_all_dwell_zero(2, 1);
        let instance = build_lp(&forecast, &presence, &Carryover::zero(2), &cfg).unwrap();
        let plan = solve_lp(&instance).unwrap();
        assert!((plan.objective - 4.0).abs() < 1e-9);
        assert!((plan.y_at(0, 1) + plan.y_at(1, 1) - 4.0).abs() < 1e-9);
        // deterministic tie-break: the faster option fills first
        assert!(plan.y_at(0, 1) >= plan.y_at(1, 1));
    }

    #[test]
    fn equality_identity_matches_expected_occupancy() {
        let cfg = config(2, 6, 3);
        let forecast = DemandForecast::new(2, 3, vec![2.0, 1.0, 2.0, 1.0, 2.0, 1.0]).unwrap();
        let pmfs = vec![DwellPmf::delta(0), DwellPmf::uniform()];
        let presence = pmf_to_presence(&DwellProfileSet::per_option(pmfs, 3)).unwrap();
        let mut carry = Carryover::zero(2);
        carry.add(1, -1, 2);
        let instance = build_lp(&forecast, &presence, &carry, &cfg).unwrap();
        let plan = solve_lp(&instance).unwrap();
        let occ = expected_occupancy(&plan.y, &instance);
        for t in 1..=3u32 {
            let x_sum: f64 = (0..2).map(|s| plan.x_at(s, t)).sum();
            assert!((x_sum - occ[(t - 1) as usize]).abs() < 1e-9);
            assert!(x_sum <= 6.0 + 1e-9);
        }
    }

    #[test]
    fn carryover_lag_contribution() {
        // 2 packages with lag-1 presence 0.5 contribute 1.0 on day 1
        let cfg = config(1, 10, 1);
        let forecast = DemandForecast::new(1, 1, vec![0.0]).unwrap();
        let pmf = DwellPmf::new([0.5, 0.5, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let presence = pmf_to_presence(&DwellProfileSet::per_option(vec![pmf], 1)).unwrap();
        let mut carry = Carryover::zero(1);
        carry.add(0, 0, 2);
        let instance = build_lp(&forecast, &presence, &carry, &cfg).unwrap();
        assert!((instance.carry_load(1) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn integerize_exact_values_unchanged() {
        let cfg = config(2, 10, 1);
        let forecast = DemandForecast::new(2, 1, vec![2.0, 1.0]).unwrap();
        let presence = presence_all_dwell_zero(2, 1);
        let instance = build_lp(&forecast, &presence, &Carryover::zero(2), &cfg).unwrap();
        let limits = integerize_plan(&[2.0, 1.0], &instance);
        assert_eq!(limits, vec![2, 1]);
    }

    #[test]
    fn integerize_equal_remainders_fast_option_wins() {
        let cfg = config(2, 10, 1);
        let forecast = DemandForecast::new(2, 1, vec![1.6, 1.6]).unwrap();
        let presence = presence_all_dwell_zero(2, 1);
        let instance = build_lp(&forecast, &presence, &Carryover::zero(2), &cfg).unwrap();
        let limits = integerize_plan(&[1.6, 1.6], &instance);
        assert_eq!(limits, vec![2, 1]);
    }

    #[test]
    fn integerize_zero_plan_is_zero() {
        let cfg = config(3, 10, 2);
        let forecast = DemandForecast::new(3, 2, vec![0.0; 6]).unwrap();
        let presence = presence_all_dwell_zero(3, 2);
        let instance = build_lp(&forecast, &presence, &Carryover::zero(3), &cfg).unwrap();
        let limits = integerize_plan(&[0.0; 6], &instance);
        assert!(limits.iter().all(|&l| l == 0));
    }

    #[test]
    fn zero_expected_occupancy_for_zero_plan() {
        let cfg = config(2, 10, 3);
        let forecast = DemandForecast::new(2, 3, vec![0.0; 6]).unwrap();
        let presence = presence_all_dwell_zero(2, 3);
        let instance = build_lp(&forecast, &presence, &Carryover::zero(2), &cfg).unwrap();
        let occ = expected_occupancy(&[0.0; 6], &instance);
        assert_eq!(occ, vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn carryover_exceeding_capacity_rejected() {
        let cfg = config(1, 2, 1);
        let forecast = DemandForecast::new(1, 1, vec![0.0]).unwrap();
        let presence = presence_all_dwell_zero(1, 1);
        let mut carry = Carryover::zero(1);
        carry.add(0, 0, 3);
        assert!(build_lp(&forecast, &presence, &carry, &cfg).is_err());
    }

    #[test]
    fn plan_file_roundtrip() {
        let cfg = config(2, 6, 2);
        let forecast = DemandForecast::new(2, 2, vec![2.5, 1.0, 3.0, 0.5]).unwrap();
        let presence = presence_all_dwell_zero(2, 2);
        let instance = build_lp(&forecast, &presence, &Carryover::zero(2), &cfg).unwrap();
        let plan = solve_lp(&instance).unwrap();
        let text = format_plan_file(&plan, "L1", 5);
        let (locker_id, run_date, parsed) = parse_plan_file(&text).unwrap();
        assert_eq!(locker_id, "L1");
        assert_eq!(run_date, 5);
        assert_eq!(parsed.booking_limits, plan.booking_limits);
        assert_eq!(parsed.y, plan.y);
        assert_eq!(parsed.x, plan.x);
        assert_eq!(parsed.objective, plan.objective);
    }
}
