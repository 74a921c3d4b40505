use super::series::TrafficSeries;
use super::TrafficError;
use crate::mac::MacAddress;
use crate::time::{midnight_floor, weekday, DAY_US, US_PER_S};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresenceIntervals {
    pub device: MacAddress,
    /// Half-open `[start_us, end_us)` spans, sorted and disjoint.
    pub intervals: Vec<(u64, u64)>,
    pub gap_s: u64,
}

pub const DEFAULT_GAP_S: u64 = 600;

/// Merges windows with traffic into maximal intervals, bridging silences
/// shorter than `gap_s`.
pub fn presence_intervals(series: &TrafficSeries, gap_s: u64) -> Result<PresenceIntervals, TrafficError> {
    if gap_s < u64::from(series.window_s) {
        return Err(TrafficError::InvalidParameter(format!(
            "gap {gap_s} s is shorter than the {} s window",
            series.window_s
        )));
    }
    let gap_us = gap_s * US_PER_S;
    let mut intervals: Vec<(u64, u64)> = Vec::new();
    for (i, w) in series.windows.iter().enumerate() {
        if w.total_pkts() == 0 {
            continue;
        }
        let (start, end) = (series.window_start(i), series.window_start(i + 1));
        match intervals.last_mut() {
            Some(last) if start - last.1 < gap_us => last.1 = end,
            _ => intervals.push((start, end)),
        }
    }
    Ok(PresenceIntervals {
        device: series.device,
        intervals,
        gap_s,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DayGroup {
    Weekday,
    Weekend,
}

impl DayGroup {
    pub fn of(day_start_us: u64) -> Self {
        if weekday(day_start_us) < 5 {
            DayGroup::Weekday
        } else {
            DayGroup::Weekend
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DayGroup::Weekday => "weekday",
            DayGroup::Weekend => "weekend",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoutineConfig {
    /// Width of one time-of-day cell.
    pub cell_s: u64,
    pub absent_max_p: f64,
    pub present_min_p: f64,
    /// Share of a group's days on which a low-probability run must be
    /// absent from start to end to count as recurring.
    pub min_recurrence: f64,
    pub min_days: usize,
}

impl Default for RoutineConfig {
    fn default() -> Self {
        RoutineConfig {
            cell_s: 3600,
            absent_max_p: 0.25,
            present_min_p: 0.75,
            min_recurrence: 0.6,
            min_days: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupRoutine {
    pub group: DayGroup,
    pub days: usize,
    /// Presence probability per cell of the day.
    pub probability: Vec<f64>,
    /// Recurring absences as `[start, end)` seconds after midnight.
    pub absences: Vec<(u64, u64)>,
    /// Start of the first cell where presence jumps from rare to likely.
    pub wake_s: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeeklyRoutine {
    pub device: MacAddress,
    pub cell_s: u64,
    pub groups: Vec<GroupRoutine>,
}

fn cell_presence(intervals: &[(u64, u64)], day_start: u64, cells: usize, cell_us: u64) -> Vec<bool> {
    let mut present = vec![false; cells];
    for &(s, e) in intervals {
        let (s, e) = (s.max(day_start), e.min(day_start + DAY_US));
        if s >= e {
            continue;
        }
        let first = ((s - day_start) / cell_us) as usize;
        let last = ((e - day_start - 1) / cell_us) as usize;
        present[first..=last.min(cells - 1)].fill(true);
    }
    present
}

/// Recurring absences and wake-up edges per day group (weekdays and
/// weekends). `presence` must span at least `min_days` whole days starting
/// at `first_day_us`.
pub fn weekly_routine(
    presence: &PresenceIntervals,
    first_day_us: u64,
    n_days: usize,
    config: &RoutineConfig,
) -> Result<WeeklyRoutine, TrafficError> {
    if n_days < config.min_days {
        return Err(TrafficError::InsufficientData(format!(
            "{n_days} days of presence, need {}",
            config.min_days
        )));
    }
    if config.cell_s == 0 || 86_400 % config.cell_s != 0 {
        return Err(TrafficError::InvalidParameter(format!(
            "cell of {} s does not divide a day",
            config.cell_s
        )));
    }
    let first_day_us = midnight_floor(first_day_us);
    let cell_us = config.cell_s * US_PER_S;
    let cells = (86_400 / config.cell_s) as usize;
    let mut groups = Vec::new();
    for group in [DayGroup::Weekday, DayGroup::Weekend] {
        let days: Vec<Vec<bool>> = (0..n_days as u64)
            .map(|d| first_day_us + d * DAY_US)
            .filter(|&start| DayGroup::of(start) == group)
            .map(|start| cell_presence(&presence.intervals, start, cells, cell_us))
            .collect();
        if days.is_empty() {
            continue;
        }
        let n = days.len() as f64;
        let probability: Vec<f64> = (0..cells)
            .map(|c| days.iter().filter(|d| d[c]).count() as f64 / n)
            .collect();

        let mut absences = Vec::new();
        let mut c = 0;
        while c < cells {
            if probability[c] > config.absent_max_p {
                c += 1;
                continue;
            }
            let end = (c..cells)
                .find(|&j| probability[j] > config.absent_max_p)
                .unwrap_or(cells);
            let fully_absent = days.iter().filter(|d| d[c..end].iter().all(|p| !p)).count();
            if fully_absent as f64 >= config.min_recurrence * n {
                absences.push((c as u64 * config.cell_s, end as u64 * config.cell_s));
            }
            c = end;
        }

        let wake_s = (1..cells)
            .find(|&c| {
                probability[c - 1] <= config.absent_max_p && probability[c] >= config.present_min_p
            })
            .map(|c| c as u64 * config.cell_s);

        groups.push(GroupRoutine {
            group,
            days: days.len(),
            probability,
            absences,
            wake_s,
        });
    }
    Ok(WeeklyRoutine {
        device: presence.device,
        cell_s: config.cell_s,
        groups,
    })
}
