//! Independent oracles shared by the integration and acceptance tests.
//! Nothing here touches the implementation paths it checks: the LP oracle
//! enumerates a feasible lattice, the isotonic oracle evaluates the
//! minimax characterization directly.

use locker_core::dwell::{pmf_to_presence, DwellPmf, DwellProfileSet, PresenceMatrix};
use locker_core::forecast::DemandForecast;
use locker_core::optimize::{build_lp, LpInstance};
use locker_core::rng::DetRng;
use locker_core::types::{Carryover, LockerConfig, ShipOption, DWELL_CLASSES};

/// Exhaustive grid search over accepted volumes `y` on a fixed step
/// lattice, honoring the capacity rows and demand bounds. Returns the best
/// feasible objective. Feasibility is pruned per variable, so only the
/// feasible lattice is visited.
pub fn grid_search_objective(instance: &LpInstance, step: f64) -> f64 {
    let s_count = instance.num_options();
    let horizon = instance.horizon();
    let t_count = horizon as usize;

    // capacity budget per day, already net of carryover
    let budgets: Vec<f64> = (1..=horizon)
        .map(|t| instance.capacity() - instance.carry_load(t))
        .collect();

    // variable order (s, t); coefficient of var (s, v) in capacity row t
    let coef = |s: usize, v: u32, t: u32| -> f64 {
        if v <= t {
            instance.presence().presence(s, v as i32, t)
        } else {
            0.0
        }
    };

    let mut best = 0.0f64;
    let mut used = vec![0.0f64; t_count];
    let mut current = 0.0f64;

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        var: usize,
        s_count: usize,
        horizon: u32,
        step: f64,
        instance: &LpInstance,
        budgets: &[f64],
        used: &mut Vec<f64>,
        current: &mut f64,
        best: &mut f64,
        coef: &impl Fn(usize, u32, u32) -> f64,
    ) {
        let t_count = horizon as usize;
        if var == s_count * t_count {
            if *current > *best {
                *best = *current;
            }
            return;
        }
        let s = var / t_count;
        let v = (var % t_count) as u32 + 1;
        // largest feasible value for this variable given current usage
        let mut upper = instance.demand().demand(s, v);
        for t in v..=horizon {
            let c = coef(s, v, t);
            if c > 1e-12 {
                upper = upper.min((budgets[(t - 1) as usize] - used[(t - 1) as usize] + 1e-9) / c);
            }
        }
        let steps = (upper / step).floor().max(0.0) as usize;
        for k in (0..=steps).rev() {
            let value = k as f64 * step;
            for t in v..=horizon {
                used[(t - 1) as usize] += coef(s, v, t) * value;
            }
            *current += value;
            recurse(
                var + 1,
                s_count,
                horizon,
                step,
                instance,
                budgets,
                used,
                current,
                best,
                coef,
            );
            *current -= value;
            for t in v..=horizon {
                used[(t - 1) as usize] -= coef(s, v, t) * value;
            }
        }
    }

    recurse(
        0, s_count, horizon, step, instance, &budgets, &mut used, &mut current, &mut best, &coef,
    );
    best
}

/// Minimax characterization of weighted isotonic regression:
/// `f*_i = max_{a<=i} min_{b>=i} weighted_mean(y[a..=b])`.
#[allow(dead_code)]
pub fn minimax_isotonic(values: &[f64], weights: &[f64]) -> Vec<f64> {
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
                .map(|a| (i..n).map(|b| mean(a, b)).fold(f64::INFINITY, f64::min))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

pub fn config_with(num_options: usize, capacity: u32, horizon: u32) -> LockerConfig {
    let options = (1..=num_options as u8)
        .map(|id| ShipOption::new(id, format!("opt-{id}"), id))
        .collect();
    LockerConfig::new("oracle", capacity, options, horizon).expect("valid config")
}

pub fn random_pmf(rng: &mut DetRng) -> DwellPmf {
    let mut weights = [0.0; DWELL_CLASSES];
    for w in &mut weights {
        *w = rng.next_f64();
    }
    DwellPmf::from_weights(weights).expect("positive weights")
}

/// Random LP instance: `S <= max_options`, `T <= max_horizon`, capacity up
/// to `max_capacity`, decaying dwell pmfs, optional carryover.
pub fn random_instance(
    rng: &mut DetRng,
    max_options: usize,
    max_horizon: u32,
    max_capacity: u32,
    max_demand: f64,
) -> LpInstance {
    let s_count = 1 + rng.next_below(max_options as u64) as usize;
    let horizon = 1 + rng.next_below(u64::from(max_horizon)) as u32;
    let capacity = 1 + rng.next_below(u64::from(max_capacity)) as u32;
    let config = config_with(s_count, capacity, horizon);

    let values: Vec<f64> = (0..s_count * horizon as usize)
        .map(|_| rng.next_f64() * max_demand)
        .collect();
    let forecast = DemandForecast::new(s_count, horizon, values).expect("valid demand");

    let pmfs: Vec<DwellPmf> = (0..s_count).map(|_| random_pmf(rng)).collect();
    let presence: PresenceMatrix =
        pmf_to_presence(&DwellProfileSet::per_option(pmfs, horizon)).expect("valid profiles");

    let mut carryover = Carryover::zero(s_count);
    let mut remaining = rng.next_below(u64::from(capacity) + 1) as u32;
    'outer: for s in 0..s_count {
        for v in -6..=0 {
            if remaining == 0 {
                break 'outer;
            }
            let take = rng.next_below(u64::from(remaining) + 1) as u32;
            carryover.add(s, v, take);
            remaining -= take;
        }
    }

    build_lp(&forecast, &presence, &carryover, &config).expect("buildable instance")
}
