use std::fmt;

use super::series::TrafficSeries;
use super::TrafficError;
use crate::mac::MacAddress;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DeviceState {
    Off,
    Idle,
    Active,
}

impl DeviceState {
    pub fn as_str(self) -> &'static str {
        match self {
            DeviceState::Off => "off",
            DeviceState::Idle => "idle",
            DeviceState::Active => "active",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "off" => Some(DeviceState::Off),
            "idle" => Some(DeviceState::Idle),
            "active" => Some(DeviceState::Active),
            _ => None,
        }
    }
}

impl fmt::Display for DeviceState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateConfig {
    /// Packets per window at or above which a window is active.
    pub th: f64,
    /// Consecutive empty windows after which the device counts as off.
    pub off_gap_windows: usize,
}

impl StateConfig {
    pub const DEFAULT_OFF_GAP: usize = 30;

    pub fn new(th: f64) -> Result<Self, TrafficError> {
        Self::with_gap(th, Self::DEFAULT_OFF_GAP)
    }

    pub fn with_gap(th: f64, off_gap_windows: usize) -> Result<Self, TrafficError> {
        if !(th > 0.0) || off_gap_windows == 0 {
            return Err(TrafficError::InvalidParameter(format!(
                "th must be positive and off gap at least 1 (th={th}, gap={off_gap_windows})"
            )));
        }
        Ok(StateConfig { th, off_gap_windows })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateTimeline {
    pub device: MacAddress,
    pub window_s: u32,
    pub start_ts_us: u64,
    pub states: Vec<DeviceState>,
}

/// Median packet count over the windows that saw any traffic; 1 when the
/// device was silent throughout.
pub fn compute_threshold(series: &TrafficSeries) -> f64 {
    let mut nonzero: Vec<u64> = series.totals().into_iter().filter(|&t| t > 0).collect();
    if nonzero.is_empty() {
        return 1.0;
    }
    nonzero.sort_unstable();
    let n = nonzero.len();
    if n % 2 == 1 {
        nonzero[n / 2] as f64
    } else {
        (nonzero[n / 2 - 1] + nonzero[n / 2]) as f64 / 2.0
    }
}

pub fn classify_states(series: &TrafficSeries, config: &StateConfig) -> StateTimeline {
    let totals = series.totals();
    let mut states = vec![DeviceState::Idle; totals.len()];
    let mut i = 0;
    while i < totals.len() {
        if totals[i] == 0 {
            let run_end = totals[i..]
                .iter()
                .position(|&t| t != 0)
                .map_or(totals.len(), |p| i + p);
            if run_end - i >= config.off_gap_windows {
                states[i..run_end].fill(DeviceState::Off);
            }
            i = run_end;
        } else {
            if totals[i] as f64 >= config.th {
                states[i] = DeviceState::Active;
            }
            i += 1;
        }
    }
    StateTimeline {
        device: series.device,
        window_s: series.window_s,
        start_ts_us: series.start_ts_us,
        states,
    }
}

/// Centered moving average over `k` windows, clipped at the series ends.
pub fn rolling_mean(values: &[f64], k: usize) -> Result<Vec<f64>, TrafficError> {
    if k == 0 || k % 2 == 0 {
        return Err(TrafficError::InvalidParameter(format!("window {k} must be odd")));
    }
    let half = k / 2;
    let mut prefix = Vec::with_capacity(values.len() + 1);
    prefix.push(0.0f64);
    // Kahan-compensated prefix sums keep long series accurate.
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &v in values {
        let y = v - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        prefix.push(sum);
    }
    Ok((0..values.len())
        .map(|i| {
            if k == 1 {
                return values[i];
            }
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(values.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::series::WindowCounts;

    pub(crate) fn series_from(totals: &[u64]) -> TrafficSeries {
        TrafficSeries {
            device: MacAddress::default(),
            window_s: 10,
            start_ts_us: 0,
            windows: totals
                .iter()
                .map(|&t| WindowCounts { up_pkts: t, ..Default::default() })
                .collect(),
            untracked_pkts: 0,
        }
    }

    #[test]
    fn thresholds() {
        assert_eq!(compute_threshold(&series_from(&[0, 7, 7, 0, 7])), 7.0);
        assert_eq!(compute_threshold(&series_from(&[0, 0])), 1.0);
        assert_eq!(compute_threshold(&series_from(&[1, 2, 3, 10])), 2.5);
    }

    #[test]
    fn states() {
        let cfg = StateConfig::with_gap(5.0, 3).unwrap();
        let tl = classify_states(&series_from(&[0, 0, 0, 5, 4, 0, 0, 6, 0, 0, 0]), &cfg);
        use DeviceState::*;
        assert_eq!(
            tl.states,
            vec![Off, Off, Off, Active, Idle, Idle, Idle, Active, Off, Off, Off]
        );
        let empty = classify_states(&series_from(&[0; 40]), &StateConfig::new(1.0).unwrap());
        assert!(empty.states.iter().all(|&s| s == Off));
        assert!(StateConfig::new(0.0).is_err());
    }

    #[test]
    fn rolling() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(rolling_mean(&v, 1).unwrap(), v.to_vec());
        assert_eq!(rolling_mean(&v, 3).unwrap(), vec![1.5, 2.0, 3.0, 3.5]);
        assert_eq!(rolling_mean(&[2.0; 5], 5).unwrap(), vec![2.0; 5]);
        assert!(rolling_mean(&v, 2).is_err());
    }
}
