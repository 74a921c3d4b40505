//! Recurring time spans such as `mon-fri 09:00-12:00` or `d1 21:00-24:00`.

use std::fmt;
use std::str::FromStr;

use crate::time::DAY_S;

#[derive(Debug, Clone, PartialEq, Eq)]
enum DaySpec {
    Every,
    /// Weekdays, 0 = Monday.
    Weekdays(Vec<u32>),
    /// Day indices counted from the scenario start.
    Days(Vec<u64>),
}

/// A daily span, optionally restricted to some days. An end at or before
/// the start wraps past midnight.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Span {
    days: DaySpec,
    start_s: u64,
    end_s: u64,
    text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("bad time span {0:?}")]
pub struct SpanError(pub String);

const WEEKDAYS: [&str; 7] = ["mon", "tue", "wed", "thu", "fri", "sat", "sun"];

/// `HH:MM` or `HH:MM:SS`, up to `24:00`.
pub fn parse_clock(s: &str) -> Option<u64> {
    let parts: Vec<&str> = s.trim().split(':').collect();
    if !(2..=3).contains(&parts.len()) || parts.iter().any(|p| p.len() != 2) {
        return None;
    }
    let nums: Vec<u64> = parts.iter().map(|p| p.parse().ok()).collect::<Option<_>>()?;
    let secs = nums[0] * 3600 + nums[1] * 60 + nums.get(2).copied().unwrap_or(0);
    (nums[1] < 60 && nums.get(2).is_none_or(|&s| s < 60) && secs <= DAY_S).then_some(secs)
}

fn parse_range<T: Copy + PartialOrd>(item: &str, one: impl Fn(&str) -> Option<T>, next: impl Fn(T) -> T) -> Option<Vec<T>> {
    match item.split_once('-') {
        Some((a, b)) => {
            let (mut x, end) = (one(a)?, one(b)?);
            if end < x {
                return None;
            }
            let mut out = vec![x];
            while x < end {
                x = next(x);
                out.push(x);
            }
            Some(out)
        }
        None => Some(vec![one(item)?]),
    }
}

fn parse_dayspec(s: &str) -> Option<DaySpec> {
    if let Some(rest) = s.strip_prefix('d') {
        if rest.starts_with(|c: char| c.is_ascii_digit()) {
            let mut days = Vec::new();
            for item in rest.split(',') {
                let item = item.trim_start_matches('d');
                days.extend(parse_range(item, |x| x.parse::<u64>().ok(), |x| x + 1)?);
            }
            return Some(DaySpec::Days(days));
        }
    }
    let mut days = Vec::new();
    for item in s.split(',') {
        let wd = |name: &str| WEEKDAYS.iter().position(|w| *w == name).map(|i| i as u32);
        days.extend(parse_range(item, wd, |x| x + 1)?);
    }
    Some(DaySpec::Weekdays(days))
}

impl FromStr for Span {
    type Err = SpanError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || SpanError(s.to_string());
        let trimmed = s.trim();
        let (days, clock) = match trimmed.rsplit_once(' ') {
            Some((d, c)) => (parse_dayspec(&d.trim().to_ascii_lowercase()).ok_or_else(err)?, c),
            None => (DaySpec::Every, trimmed),
        };
        let (a, b) = clock.split_once('-').ok_or_else(err)?;
        let (start_s, end_s) = (parse_clock(a).ok_or_else(err)?, parse_clock(b).ok_or_else(err)?);
        if start_s == DAY_S {
            return Err(err());
        }
        Ok(Span {
            days,
            start_s,
            end_s,
            text: trimmed.to_string(),
        })
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Span {
    fn applies(&self, day: u64, weekday: u32) -> bool {
        match &self.days {
            DaySpec::Every => true,
            DaySpec::Weekdays(w) => w.contains(&weekday),
            DaySpec::Days(d) => d.contains(&day),
        }
    }

    /// Absolute `[start, end)` intervals in seconds from the scenario start.
    pub fn intervals(&self, duration_s: u64, start_weekday: u32) -> Vec<(u64, u64)> {
        let days = duration_s.div_ceil(DAY_S);
        (0..days)
            .filter(|&d| self.applies(d, ((u64::from(start_weekday) + d) % 7) as u32))
            .filter_map(|d| {
                let base = d * DAY_S;
                let end = if self.end_s > self.start_s { self.end_s } else { self.end_s + DAY_S };
                let (s, e) = (base + self.start_s, (base + end).min(duration_s));
                (s < e).then_some((s, e))
            })
            .collect()
    }
}

/// Union of spans as sorted, merged absolute intervals.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Schedule {
    pub intervals: Vec<(u64, u64)>,
}

impl Schedule {
    pub fn new(spans: &[Span], duration_s: u64, start_weekday: u32) -> Self {
        let mut all: Vec<(u64, u64)> = spans
            .iter()
            .flat_map(|s| s.intervals(duration_s, start_weekday))
            .collect();
        all.sort_unstable();
        let mut merged: Vec<(u64, u64)> = Vec::new();
        for (s, e) in all {
            match merged.last_mut() {
                Some(last) if s <= last.1 => last.1 = last.1.max(e),
                _ => merged.push((s, e)),
            }
        }
        Schedule { intervals: merged }
    }

    pub fn always(duration_s: u64) -> Self {
        Schedule {
            intervals: vec![(0, duration_s)],
        }
    }

    /// `t` in seconds from the scenario start; fractional seconds allowed.
    pub fn contains(&self, t: f64) -> bool {
        let i = self.intervals.partition_point(|&(s, _)| (s as f64) <= t);
        i > 0 && t < self.intervals[i - 1].1 as f64
    }

    pub fn total_s(&self) -> u64 {
        self.intervals.iter().map(|(s, e)| e - s).sum()
    }

    pub fn intersect(&self, other: &Schedule) -> Schedule {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a, b) = (self.intervals[i], other.intervals[j]);
            let (s, e) = (a.0.max(b.0), a.1.min(b.1));
            if s < e {
                out.push((s, e));
            }
            if a.1 < b.1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Schedule { intervals: out }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn span(s: &str) -> Span {
        s.parse().unwrap()
    }

    #[test]
    fn parse_forms() {
        assert_eq!(parse_clock("06:30"), Some(23_400));
        assert_eq!(parse_clock("24:00"), Some(86_400));
        assert_eq!(parse_clock("24:01"), None);
        assert_eq!(parse_clock("6:30"), None);
        assert!("mon-fri 09:00-16:30".parse::<Span>().is_ok());
        assert!("sat,sun 08:00-24:00".parse::<Span>().is_ok());
        assert!("d1-2 21:00-02:00".parse::<Span>().is_ok());
        assert!("funday 09:00-10:00".parse::<Span>().is_err());
        assert!("09:00".parse::<Span>().is_err());
    }

    #[test]
    fn expansion() {
        let week = 7 * DAY_S;
        let wk = span("mon-fri 09:00-10:00").intervals(week, 0);
        assert_eq!(wk.len(), 5);
        assert_eq!(wk[4], (4 * DAY_S + 9 * 3600, 4 * DAY_S + 10 * 3600));
        let wrap = span("22:00-02:00").intervals(2 * DAY_S, 0);
        assert_eq!(wrap, vec![(22 * 3600, 26 * 3600), (DAY_S + 22 * 3600, 2 * DAY_S)]);
        let d1 = span("d1 21:00-24:00").intervals(3 * DAY_S, 0);
        assert_eq!(d1, vec![(DAY_S + 21 * 3600, 2 * DAY_S)]);
    }

    #[test]
    fn schedule_ops() {
        let s = Schedule::new(&[span("08:00-12:00"), span("11:00-13:00")], DAY_S, 0);
        assert_eq!(s.intervals, vec![(8 * 3600, 13 * 3600)]);
        assert!(s.contains(8.0 * 3600.0));
        assert!(!s.contains(13.0 * 3600.0));
        let a = Schedule::new(&[span("10:00-11:00")], DAY_S, 0);
        assert_eq!(s.intersect(&a), a);
        assert_eq!(s.total_s(), 5 * 3600);
    }
}
