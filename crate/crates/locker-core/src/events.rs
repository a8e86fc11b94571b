//! Event-log handling: the line-based file format, stream validation, and
//! the carryover extraction that seeds the optimizer.
//!
//! Log format, one record per line, comma-separated, exact column order:
//!
//! ```text
//! locker_id,order_id,kind,ship_option,day,seq
//! ```
//!
//! `kind` is spelled `Request|Delivery|Pickup|Return`. Blank lines and lines
//! starting with `#` are ignored on read.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{LockerError, Result};
use crate::types::{
    dwell_days, Carryover, EventKind, LockerConfig, OccupancySnapshot, PackageEvent,
    MAX_DWELL_DAYS,
};

pub fn parse_event_line(line: &str, line_no: usize) -> Result<PackageEvent> {
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() != 6 {
        return Err(LockerError::Parse {
            line: line_no,
            message: format!("expected 6 fields, found {}", fields.len()),
        });
    }
    let kind = EventKind::parse(fields[2]).ok_or_else(|| LockerError::Parse {
        line: line_no,
        message: format!("unknown event kind {:?}", fields[2]),
    })?;
    let ship_option: u8 = fields[3].parse().map_err(|_| LockerError::Parse {
        line: line_no,
        message: format!("bad ship option {:?}", fields[3]),
    })?;
    let day: i32 = fields[4].parse().map_err(|_| LockerError::Parse {
        line: line_no,
        message: format!("bad day {:?}", fields[4]),
    })?;
    let seq: u32 = fields[5].parse().map_err(|_| LockerError::Parse {
        line: line_no,
        message: format!("bad seq {:?}", fields[5]),
    })?;
    Ok(PackageEvent {
        locker_id: fields[0].to_string(),
        order_id: fields[1].to_string(),
        kind,
        ship_option,
        day,
        within_day_seq: seq,
    })
}

pub fn parse_event_log(text: &str) -> Result<Vec<PackageEvent>> {
    let mut events = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        events.push(parse_event_line(trimmed, i + 1)?);
    }
    Ok(events)
}

pub fn format_event_log(events: &[PackageEvent]) -> String {
    let mut out = String::new();
    for e in events {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            e.locker_id,
            e.order_id,
            e.kind.as_str(),
            e.ship_option,
            e.day,
            e.within_day_seq
        )
        .expect("write to string");
    }
    out
}

/// Check the `(day, seq)` ordering precondition shared by carryover
/// extraction and replay.
pub fn check_sorted(events: &[PackageEvent]) -> Result<()> {
    for (i, pair) in events.windows(2).enumerate() {
        let (a, b) = (&pair[0], &pair[1]);
        if (b.day, b.within_day_seq) < (a.day, a.within_day_seq) {
            return Err(LockerError::UnsortedStream { index: i + 1 });
        }
    }
    Ok(())
}

pub fn sort_events(events: &mut [PackageEvent]) {
    events.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
}

/// One order's collected events.
#[derive(Debug, Clone, Default)]
pub struct OrderRecord {
    pub ship_option: u8,
    pub request: Option<(i32, u32)>,
    pub delivery: Option<(i32, u32)>,
    pub pickup: Option<(i32, u32)>,
    pub ret: Option<(i32, u32)>,
}

impl OrderRecord {
    pub fn terminal_day(&self) -> Option<i32> {
        self.pickup.or(self.ret).map(|(d, _)| d)
    }
}

/// A single diagnostic produced by validation, tied to a record index.
#[derive(Debug, Clone)]
pub struct Diagnostic {
    pub record_index: usize,
    pub order_id: String,
    pub message: String,
}

/// Group a sorted stream by order id, checking the per-order lifecycle
/// invariants. Offending orders are reported through `diagnostics`; their
/// events are excluded from the returned map.
pub fn collect_orders(
    events: &[PackageEvent],
    config: &LockerConfig,
    diagnostics: &mut Vec<Diagnostic>,
) -> BTreeMap<String, OrderRecord> {
    let mut orders: BTreeMap<String, OrderRecord> = BTreeMap::new();
    let mut bad: Vec<String> = Vec::new();
    for (idx, e) in events.iter().enumerate() {
        let mut flag = |msg: String| {
            diagnostics.push(Diagnostic {
                record_index: idx,
                order_id: e.order_id.clone(),
                message: msg,
            });
            bad.push(e.order_id.clone());
        };
        if config.option_index(e.ship_option).is_err() {
            flag(format!("unknown ship option {}", e.ship_option));
            continue;
        }
        let rec = orders.entry(e.order_id.clone()).or_default();
        if rec.request.is_none() && rec.delivery.is_none() && rec.pickup.is_none() && rec.ret.is_none()
        {
            rec.ship_option = e.ship_option;
        } else if rec.ship_option != e.ship_option {
            flag("ship option differs across events of one order".to_string());
            continue;
        }
        let stamp = (e.day, e.within_day_seq);
        let slot = match e.kind {
            EventKind::Request => &mut rec.request,
            EventKind::Delivery => &mut rec.delivery,
            EventKind::Pickup => &mut rec.pickup,
            EventKind::Return => &mut rec.ret,
        };
        if slot.is_some() {
            flag(format!("duplicate {} event", e.kind.as_str()));
            continue;
        }
        *slot = Some(stamp);
    }

    for (order_id, rec) in &orders {
        let mut flag = |msg: String| {
            diagnostics.push(Diagnostic {
                record_index: usize::MAX,
                order_id: order_id.clone(),
                message: msg,
            });
            bad.push(order_id.clone());
        };
        if rec.pickup.is_some() && rec.ret.is_some() {
            flag("both Pickup and Return present".to_string());
            continue;
        }
        if (rec.pickup.is_some() || rec.ret.is_some()) && rec.delivery.is_none() {
            flag("pickup/return without delivery".to_string());
            continue;
        }
        if let (Some((rq_day, rq_seq)), Some((dl_day, dl_seq))) = (rec.request, rec.delivery) {
            if dl_day < rq_day || (dl_day == rq_day && dl_seq <= rq_seq) {
                flag("delivery precedes request".to_string());
                continue;
            }
        }
        if let Some((dl_day, dl_seq)) = rec.delivery {
            if let Some((pk_day, pk_seq)) = rec.pickup {
                match dwell_days(dl_day, pk_day) {
                    Ok(d) if d <= MAX_DWELL_DAYS => {
                        if d == 0 && pk_seq <= dl_seq {
                            flag("same-day pickup precedes delivery".to_string());
                        }
                    }
                    _ => flag(format!("pickup dwell out of range ({dl_day}..{pk_day})")),
                }
            }
            if let Some((rt_day, _)) = rec.ret {
                match dwell_days(dl_day, rt_day) {
                    Ok(d) if (3..=MAX_DWELL_DAYS).contains(&d) => {}
                    _ => flag(format!("return dwell out of range ({dl_day}..{rt_day})")),
                }
            }
        }
    }

    bad.sort_unstable();
    bad.dedup();
    for id in bad {
        orders.remove(&id);
    }
    orders
}

/// Validate a stream: sortedness plus per-order invariants. Returns the
/// surviving, sorted events and the diagnostics for rejected records.
pub fn validate_stream(
    mut events: Vec<PackageEvent>,
    config: &LockerConfig,
) -> (Vec<PackageEvent>, Vec<Diagnostic>) {
    sort_events(&mut events);
    let mut diagnostics = Vec::new();
    let orders = collect_orders(&events, config, &mut diagnostics);
    let kept: Vec<PackageEvent> = events
        .into_iter()
        .filter(|e| orders.contains_key(&e.order_id))
        .collect();
    (kept, diagnostics)
}

/// Count packages still occupying a slot at the end of `as_of_day`, bucketed
/// by option and relative delivery day `-6..=0` (day `as_of_day` maps to 0).
pub fn extract_carryover(
    events: &[PackageEvent],
    as_of_day: i32,
    config: &LockerConfig,
) -> Result<Carryover> {
    check_sorted(events)?;
    let mut carry = Carryover::zero(config.num_options());
    // delivery day + option per order, for orders delivered in the window
    let mut open: BTreeMap<&str, (usize, i32)> = BTreeMap::new();
    for e in events {
        if e.day > as_of_day {
            break;
        }
        match e.kind {
            EventKind::Delivery => {
                let s = config.option_index(e.ship_option)?;
                if e.day >= as_of_day - 6 {
                    open.insert(&e.order_id, (s, e.day));
                }
            }
            EventKind::Pickup | EventKind::Return => {
                if open.remove(e.order_id.as_str()).is_none() {
                    // A terminal for a pre-window delivery is fine; a terminal
                    // with no delivery at all is not.
                    let delivered_earlier = events.iter().any(|d| {
                        d.kind == EventKind::Delivery
                            && d.order_id == e.order_id
                            && (d.day, d.within_day_seq) <= (e.day, e.within_day_seq)
                    });
                    if !delivered_earlier {
                        return Err(LockerError::invalid_event(format!(
                            "{} for order {} without prior delivery",
                            e.kind.as_str(),
                            e.order_id
                        )));
                    }
                }
            }
            EventKind::Request => {}
        }
    }
    for (_, (s, day)) in open {
        carry.add(s, day - as_of_day, 1);
    }
    Ok(carry)
}

/// End-of-day occupancy per day over `[from_day, to_day]`, from delivery and
/// terminal events alone.
pub fn scan_occupancy(
    events: &[PackageEvent],
    config: &LockerConfig,
    from_day: i32,
    to_day: i32,
) -> Result<Vec<OccupancySnapshot>> {
    check_sorted(events)?;
    let mut per_option = vec![0u32; config.num_options()];
    let mut snapshots = Vec::new();
    let mut iter = events.iter().peekable();
    for day in from_day..=to_day {
        while let Some(e) = iter.peek() {
            if e.day > day {
                break;
            }
            let e = iter.next().expect("peeked");
            let s = config.option_index(e.ship_option)?;
            match e.kind {
                EventKind::Delivery => per_option[s] += 1,
                EventKind::Pickup | EventKind::Return => {
                    per_option[s] = per_option[s].saturating_sub(1);
                }
                EventKind::Request => {}
            }
        }
        snapshots.push(OccupancySnapshot::new(day, per_option.clone()));
    }
    Ok(snapshots)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::ShipOption;

    fn config() -> LockerConfig {
        LockerConfig::new(
            "L1",
            10,
            vec![
                ShipOption::new(1, "two-day", 1),
                ShipOption::new(2, "standard", 2),
            ],
            7,
        )
        .unwrap()
    }

    fn ev(order: &str, kind: EventKind, s: u8, day: i32, seq: u32) -> PackageEvent {
        PackageEvent {
            locker_id: "L1".into(),
            order_id: order.into(),
            kind,
            ship_option: s,
            day,
            within_day_seq: seq,
        }
    }

    #[test]
    fn log_roundtrip() {
        let events = vec![
            ev("o1", EventKind::Request, 1, -3, 100),
            ev("o1", EventKind::Delivery, 1, 0, 200),
            ev("o1", EventKind::Pickup, 1, 1, 50_000),
        ];
        let text = format_event_log(&events);
        assert_eq!(parse_event_log(&text).unwrap(), events);
    }

    #[test]
    fn parse_rejects_short_line() {
        let err = parse_event_log("L1,o1,Delivery,1,0").unwrap_err();
        assert!(matches!(err, LockerError::Parse { line: 1, .. }));
    }

    #[test]
    fn parse_rejects_bad_kind() {
        assert!(parse_event_log("L1,o1,Dropoff,1,0,0").is_err());
    }

    #[test]
    fn comments_and_blanks_skipped() {
        let text = "# header\n\nL1,o1,Delivery,1,0,10\n";
        assert_eq!(parse_event_log(text).unwrap().len(), 1);
    }

    #[test]
    fn carryover_empty_stream_is_zero() {
        let carry = extract_carryover(&[], 0, &config()).unwrap();
        assert_eq!(carry.total(), 0);
    }

    #[test]
    fn carryover_single_unpicked_delivery() {
        let events = vec![ev("o1", EventKind::Delivery, 1, 0, 10)];
        let carry = extract_carryover(&events, 0, &config()).unwrap();
        assert_eq!(carry.count(0, 0), 1);
        assert_eq!(carry.total(), 1);
    }

    #[test]
    fn carryover_picked_up_contributes_nothing() {
        let events = vec![
            ev("o1", EventKind::Delivery, 1, -3, 10),
            ev("o1", EventKind::Pickup, 1, -1, 40_000),
        ];
        let carry = extract_carryover(&events, 0, &config()).unwrap();
        assert_eq!(carry.total(), 0);
    }

    #[test]
    fn carryover_window_is_six_days() {
        let events = vec![
            ev("o1", EventKind::Delivery, 1, -7, 10),
            ev("o2", EventKind::Delivery, 2, -6, 10),
        ];
        let carry = extract_carryover(&events, 0, &config()).unwrap();
        assert_eq!(carry.count(1, -6), 1);
        assert_eq!(carry.total(), 1);
    }

    #[test]
    fn carryover_reindexes_relative_to_as_of_day() {
        let events = vec![ev("o1", EventKind::Delivery, 1, 8, 10)];
        let carry = extract_carryover(&events, 10, &config()).unwrap();
        assert_eq!(carry.count(0, -2), 1);
    }

    #[test]
    fn carryover_unsorted_stream_is_error() {
        let events = vec![
            ev("o1", EventKind::Delivery, 1, 2, 10),
            ev("o2", EventKind::Delivery, 1, 1, 10),
        ];
        assert!(matches!(
            extract_carryover(&events, 3, &config()),
            Err(LockerError::UnsortedStream { .. })
        ));
    }

    #[test]
    fn carryover_pickup_without_delivery_is_error() {
        let events = vec![ev("o9", EventKind::Pickup, 1, 0, 10)];
        assert!(extract_carryover(&events, 0, &config()).is_err());
    }

    #[test]
    fn carryover_never_exceeds_delivery_count() {
        let mut events = Vec::new();
        for i in 0..5 {
            events.push(ev(&format!("o{i}"), EventKind::Delivery, 1, -i, 10));
        }
        sort_events(&mut events);
        let deliveries = events.len() as u32;
        let carry = extract_carryover(&events, 0, &config()).unwrap();
        assert!(carry.total() <= deliveries);
    }

    #[test]
    fn validate_flags_duplicate_delivery() {
        let events = vec![
            ev("o1", EventKind::Delivery, 1, 0, 10),
            ev("o1", EventKind::Delivery, 1, 1, 10),
        ];
        let (kept, diags) = validate_stream(events, &config());
        assert!(kept.is_empty());
        assert!(!diags.is_empty());
        assert_eq!(diags[0].order_id, "o1");
    }

    #[test]
    fn validate_flags_pickup_before_delivery() {
        let events = vec![
            ev("o1", EventKind::Pickup, 1, 0, 10),
            ev("o1", EventKind::Delivery, 1, 1, 10),
        ];
        let (kept, diags) = validate_stream(events, &config());
        assert!(kept.is_empty());
        assert!(diags.iter().any(|d| d.order_id == "o1"));
    }

    #[test]
    fn validate_flags_return_dwell_window() {
        // Return one day after delivery violates the 3..=6 window.
        let events = vec![
            ev("o1", EventKind::Delivery, 1, 0, 10),
            ev("o1", EventKind::Return, 1, 1, 40_000),
        ];
        let (kept, _) = validate_stream(events, &config());
        assert!(kept.is_empty());
    }

    #[test]
    fn validate_keeps_well_formed_order() {
        let events = vec![
            ev("o1", EventKind::Request, 1, -2, 100),
            ev("o1", EventKind::Delivery, 1, 0, 200),
            ev("o1", EventKind::Return, 1, 4, 40_000),
        ];
        let (kept, diags) = validate_stream(events, &config());
        assert_eq!(kept.len(), 3);
        assert!(diags.is_empty());
    }

    #[test]
    fn occupancy_scan_counts_residency() {
        let events = vec![
            ev("o1", EventKind::Delivery, 1, 0, 10),
            ev("o2", EventKind::Delivery, 2, 1, 10),
            ev("o1", EventKind::Pickup, 1, 2, 40_000),
        ];
        let snaps = scan_occupancy(&events, &config(), 0, 2).unwrap();
        assert_eq!(snaps[0].total, 1);
        assert_eq!(snaps[1].total, 2);
        assert_eq!(snaps[2].total, 1);
        assert_eq!(snaps[2].per_option_counts, vec![0, 1]);
    }
}
