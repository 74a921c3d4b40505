use crate::time::{DAY_US, US_PER_S};
use crate::traffic::{DeviceState, StateTimeline};

/// Hour after which the search for the morning wake-up starts.
pub const PIVOT_HOUR: u64 = 3;
/// Consecutive awake windows needed to count as getting up.
pub const MIN_AWAKE_WINDOWS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SleepWake {
    pub wake_us: u64,
    /// End of the last awake window before the next day's pivot.
    pub sleep_us: u64,
}

/// Wake-up and bedtime for the day starting at `day_start_us`, from the
/// timelines of manually operated devices. Wake is the first window after
/// 03:00 that follows a window with every device off and opens a run of
/// at least three windows with some device on. `None` when no device ever
/// falls silent or none wakes up. All timelines must share one grid.
pub fn detect_sleep_wake(timelines: &[&StateTimeline], day_start_us: u64) -> Option<SleepWake> {
    let first = timelines.first()?;
    let window_us = u64::from(first.window_s) * US_PER_S;
    let n = timelines.iter().map(|t| t.states.len()).min()?;
    let start = first.start_ts_us;
    let index = |ts: u64| -> usize { (ts.saturating_sub(start) / window_us) as usize };
    let awake = |i: usize| i < n && timelines.iter().any(|t| t.states[i] != DeviceState::Off);
    let pivot = day_start_us + PIVOT_HOUR * 3600 * US_PER_S;
    if pivot < start {
        return None;
    }
    let (lo, hi) = (index(pivot), index(pivot + DAY_US).min(n));
    let asleep_at = (lo..hi).find(|&i| !awake(i))?;
    let wake = (asleep_at + 1..hi).find(|&i| (i..i + MIN_AWAKE_WINDOWS).all(awake))?;
    let last_awake = (wake..hi).rev().find(|&i| awake(i))?;
    Some(SleepWake {
        wake_us: start + wake as u64 * window_us,
        sleep_us: start + (last_awake as u64 + 1) * window_us,
    })
}
