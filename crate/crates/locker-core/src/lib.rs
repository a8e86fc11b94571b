//! Yield management for parcel lockers.
//!
//! The crate forecasts per-ship-option delivery demand with seeded random
//! forests, estimates package dwell-time distributions with calibrated
//! forest classifiers, turns both into throughput-maximizing capacity
//! reservations via a linear program, and evaluates admission policies by
//! deterministic replay of package-event streams.
//!
//! Everything is deterministic under explicit seeds: identical inputs and
//! seeds produce byte-identical artifacts and reports.

pub mod dwell;
pub mod error;
pub mod events;
pub mod forecast;
pub mod forest;
pub mod isotonic;
pub mod metrics;
pub mod optimize;
pub mod pipeline;
pub mod rng;
pub mod simplex;
pub mod simulate;
pub mod synth;
pub mod types;

pub use error::{LockerError, Result};
