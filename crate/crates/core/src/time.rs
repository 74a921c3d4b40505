//! Timestamps are microseconds since the Unix epoch, read as naive local
//! wall-clock time.

use chrono::{DateTime, Datelike, NaiveDateTime, Timelike};

pub const US_PER_S: u64 = 1_000_000;
pub const DAY_S: u64 = 86_400;
pub const DAY_US: u64 = DAY_S * US_PER_S;

/// Monday 2025-03-03 00:00:00, the start of every simulated capture.
pub const SIM_EPOCH_US: u64 = 1_740_960_000 * US_PER_S;

pub fn naive(ts_us: u64) -> NaiveDateTime {
    DateTime::from_timestamp((ts_us / US_PER_S) as i64, ((ts_us % US_PER_S) * 1000) as u32)
        .unwrap_or_default()
        .naive_utc()
}

/// `YYYY-MM-DDTHH:MM:SS`, sub-second part dropped.
pub fn iso(ts_us: u64) -> String {
    naive(ts_us).format("%Y-%m-%dT%H:%M:%S").to_string()
}

pub fn parse_iso(s: &str) -> Option<u64> {
    let t = NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").ok()?;
    u64::try_from(t.and_utc().timestamp()).ok().map(|s| s * US_PER_S)
}

pub fn midnight_floor(ts_us: u64) -> u64 {
    ts_us - ts_us % DAY_US
}

/// Seconds since local midnight.
pub fn second_of_day(ts_us: u64) -> u64 {
    (ts_us % DAY_US) / US_PER_S
}

pub fn hour_of_day(ts_us: u64) -> u32 {
    naive(ts_us).hour()
}

/// 0 = Monday.
pub fn weekday(ts_us: u64) -> u32 {
    naive(ts_us).weekday().num_days_from_monday()
}

/// `HH:MM` for an offset in seconds from midnight; 24:00 for a full day.
pub fn hhmm(seconds: u64) -> String {
    format!("{:02}:{:02}", seconds / 3600, (seconds % 3600) / 60)
}
