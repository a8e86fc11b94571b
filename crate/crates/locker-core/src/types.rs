//! Domain types: ship options, locker configuration, package events, and
//! the carryover snapshot taken at planning time.
//!
//! Time is whole days. Day 0 is the planning day, horizon days are `1..=T`,
//! history days are negative. `within_day_seq` orders events inside a day
//! and doubles as a seconds-of-day clock (0..86400) where a fraction of the
//! day is needed.

use serde::{Deserialize, Serialize};

use crate::error::{LockerError, Result};

/// Number of distinct dwell classes: a package stays 0..=6 whole days.
pub const DWELL_CLASSES: usize = 7;
/// Largest representable dwell in days.
pub const MAX_DWELL_DAYS: i32 = 6;
/// Seconds in one locker operating day; `within_day_seq` values at or above
/// this are clamped when converted to a fraction of the day.
pub const SECONDS_PER_DAY: u32 = 86_400;

/// One shipping-speed class. `id`s are contiguous from 1; a lower
/// `speed_rank` means a faster option.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShipOption {
    pub id: u8,
    pub label: String,
    pub speed_rank: u8,
}

impl ShipOption {
    pub fn new(id: u8, label: impl Into<String>, speed_rank: u8) -> Self {
        Self {
            id,
            label: label.into(),
            speed_rank,
        }
    }
}

/// Static description of one locker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LockerConfig {
    pub locker_id: String,
    /// Slot count C.
    pub capacity: u32,
    pub ship_options: Vec<ShipOption>,
    /// Planning horizon T in days.
    pub horizon_days: u32,
}

impl LockerConfig {
    pub fn new(
        locker_id: impl Into<String>,
        capacity: u32,
        ship_options: Vec<ShipOption>,
        horizon_days: u32,
    ) -> Result<Self> {
        let cfg = Self {
            locker_id: locker_id.into(),
            capacity,
            ship_options,
            horizon_days,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.capacity < 1 {
            return Err(LockerError::InvalidConfig(format!(
                "locker {}: capacity must be >= 1",
                self.locker_id
            )));
        }
        if self.horizon_days < 1 {
            return Err(LockerError::InvalidConfig(format!(
                "locker {}: horizon_days must be >= 1",
                self.locker_id
            )));
        }
        if self.ship_options.is_empty() {
            return Err(LockerError::InvalidConfig(format!(
                "locker {}: at least one ship option required",
                self.locker_id
            )));
        }
        for (i, opt) in self.ship_options.iter().enumerate() {
            if opt.id as usize != i + 1 {
                return Err(LockerError::InvalidConfig(format!(
                    "locker {}: ship option ids must be contiguous from 1, found id {} at position {}",
                    self.locker_id, opt.id, i
                )));
            }
        }
        let mut labels: Vec<&str> = self.ship_options.iter().map(|o| o.label.as_str()).collect();
        labels.sort_unstable();
        labels.dedup();
        if labels.len() != self.ship_options.len() {
            return Err(LockerError::InvalidConfig(format!(
                "locker {}: ship option labels must be unique",
                self.locker_id
            )));
        }
        Ok(())
    }

    pub fn num_options(&self) -> usize {
        self.ship_options.len()
    }

    /// 0-based index of a 1-based ship option id.
    pub fn option_index(&self, id: u8) -> Result<usize> {
        let idx = id as usize;
        if idx >= 1 && idx <= self.ship_options.len() {
            Ok(idx - 1)
        } else {
            Err(LockerError::invalid_event(format!(
                "unknown ship option id {id} for locker {}",
                self.locker_id
            )))
        }
    }

    /// Option indices ordered fastest first (by `speed_rank`, then id).
    /// This is the fixed variable ordering used by the optimizer and the
    /// tie-break order for integerization.
    pub fn speed_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.ship_options.len()).collect();
        order.sort_by_key(|&i| (self.ship_options[i].speed_rank, self.ship_options[i].id));
        order
    }
}

/// Event kinds, in the lifecycle order of one package.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Request,
    Delivery,
    Pickup,
    Return,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Request => "Request",
            EventKind::Delivery => "Delivery",
            EventKind::Pickup => "Pickup",
            EventKind::Return => "Return",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "Request" => Some(EventKind::Request),
            "Delivery" => Some(EventKind::Delivery),
            "Pickup" => Some(EventKind::Pickup),
            "Return" => Some(EventKind::Return),
            _ => None,
        }
    }
}

/// One timestamped fact about one package at one locker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackageEvent {
    pub locker_id: String,
    pub order_id: String,
    pub kind: EventKind,
    /// 1-based ship option id.
    pub ship_option: u8,
    /// Day index; negative for pre-horizon history.
    pub day: i32,
    /// Within-day ordering; interpreted as seconds-of-day where a clock is
    /// needed.
    pub within_day_seq: u32,
}

impl PackageEvent {
    pub fn sort_key(&self) -> (i32, u32, EventKind, &str) {
        (self.day, self.within_day_seq, self.kind, &self.order_id)
    }
}

/// Whole days a package occupied a slot, per the convention that a same-day
/// pickup counts as dwell zero.
pub fn dwell_days(delivery_day: i32, terminal_day: i32) -> Result<i32> {
    if terminal_day < delivery_day {
        return Err(LockerError::invalid_event(format!(
            "terminal day {terminal_day} precedes delivery day {delivery_day}"
        )));
    }
    Ok(terminal_day - delivery_day)
}

/// Packages delivered up to six days before the planning day and still in
/// the locker at the end of it. `counts[s][v + 6]` is the count for option
/// index `s` delivered on relative day `v` in `-6..=0`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Carryover {
    counts: Vec<[u32; 7]>,
}

impl Carryover {
    pub fn zero(num_options: usize) -> Self {
        Self {
            counts: vec![[0; 7]; num_options],
        }
    }

    pub fn from_counts(counts: Vec<[u32; 7]>) -> Self {
        Self { counts }
    }

    pub fn num_options(&self) -> usize {
        self.counts.len()
    }

    /// Count for option index `s` and relative delivery day `v` in `-6..=0`.
    pub fn count(&self, option_idx: usize, rel_day: i32) -> u32 {
        debug_assert!((-6..=0).contains(&rel_day));
        self.counts[option_idx][(rel_day + 6) as usize]
    }

    pub fn add(&mut self, option_idx: usize, rel_day: i32, n: u32) {
        self.counts[option_idx][(rel_day + 6) as usize] += n;
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().flatten().sum()
    }

    pub fn validate(&self, capacity: u32) -> Result<()> {
        if self.total() > capacity {
            return Err(LockerError::InvalidConfig(format!(
                "carryover total {} exceeds capacity {capacity}",
                self.total()
            )));
        }
        Ok(())
    }
}

/// Per-day occupancy broken out by option.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupancySnapshot {
    pub day: i32,
    pub per_option_counts: Vec<u32>,
    pub total: u32,
}

impl OccupancySnapshot {
    pub fn new(day: i32, per_option_counts: Vec<u32>) -> Self {
        let total = per_option_counts.iter().sum();
        Self {
            day,
            per_option_counts,
            total,
        }
    }
}

/// Fraction of the operating day at which a seconds-of-day seq falls.
pub fn fraction_of_day(seq: u32) -> f64 {
    f64::from(seq.min(SECONDS_PER_DAY - 1)) / f64::from(SECONDS_PER_DAY)
}

/// Weekday of a day index, 0..=6. Day 0 is weekday 0.
pub fn day_of_week(day: i32) -> u8 {
    day.rem_euclid(7) as u8
}

/// Day-of-month of a day index under the synthetic 28-day month, 1..=28.
pub fn day_of_month(day: i32) -> u8 {
    (day.rem_euclid(28) + 1) as u8
}

/// Week number of a day index, 1..=52, wrapping yearly.
pub fn iso_week(day: i32) -> u32 {
    (day.div_euclid(7).rem_euclid(52) + 1) as u32
}
