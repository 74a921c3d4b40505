use std::collections::BTreeMap;

use super::series::TrafficSeries;
use super::TrafficError;
use crate::identity::DeviceKind;
use crate::time::{hour_of_day, US_PER_S};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KindConfig {
    pub min_coverage: f64,
    pub min_night_coverage: f64,
    pub max_manual_night_coverage: f64,
    /// Night hours are `[night_start_h, night_end_h)`.
    pub night_start_h: u32,
    pub night_end_h: u32,
    pub min_span_s: u64,
}

impl Default for KindConfig {
    fn default() -> Self {
        KindConfig {
            min_coverage: 0.9,
            min_night_coverage: 0.75,
            max_manual_night_coverage: 0.25,
            night_start_h: 1,
            night_end_h: 5,
            min_span_s: 20 * 3600,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HourCoverage {
    pub coverage: f64,
    pub night_coverage: f64,
}

/// Fraction of clock hours with traffic, overall and during the night.
/// `active` selects which windows count as traffic.
pub fn hour_coverage(
    series: &TrafficSeries,
    config: &KindConfig,
    active: impl Fn(usize) -> bool,
) -> HourCoverage {
    let hour_us = 3600 * US_PER_S;
    let mut hours: BTreeMap<u64, bool> = BTreeMap::new();
    for i in 0..series.len() {
        let hit = hours.entry(series.window_start(i) / hour_us).or_insert(false);
        *hit |= active(i);
    }
    let is_night = |h: u64| {
        let hod = hour_of_day(h * hour_us);
        (config.night_start_h..config.night_end_h).contains(&hod)
    };
    let frac = |sel: &dyn Fn(u64) -> bool| {
        let (hit, total) = hours
            .iter()
            .filter(|(h, _)| sel(**h))
            .fold((0usize, 0usize), |(a, n), (_, &on)| (a + usize::from(on), n + 1));
        if total == 0 {
            0.0
        } else {
            hit as f64 / total as f64
        }
    };
    HourCoverage {
        coverage: frac(&|_| true),
        night_coverage: frac(&is_night),
    }
}

pub fn kind_from_coverage(c: HourCoverage, config: &KindConfig) -> DeviceKind {
    if c.coverage >= config.min_coverage && c.night_coverage >= config.min_night_coverage {
        DeviceKind::Smart
    } else if c.night_coverage <= config.max_manual_night_coverage {
        DeviceKind::ManuallyControlled
    } else {
        DeviceKind::Unknown
    }
}

/// Devices busy around the clock are smart; devices silent at night are
/// manually controlled.
pub fn classify_device_kind(
    series: &TrafficSeries,
    config: &KindConfig,
) -> Result<DeviceKind, TrafficError> {
    let span_s = series.len() as u64 * u64::from(series.window_s);
    if span_s < config.min_span_s {
        return Err(TrafficError::InsufficientData(format!(
            "series spans {span_s} s, need {} s",
            config.min_span_s
        )));
    }
    let totals = series.totals();
    let c = hour_coverage(series, config, |i| totals[i] > 0);
    Ok(kind_from_coverage(c, config))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mac::MacAddress;
    use crate::time::SIM_EPOCH_US;
    use crate::traffic::series::WindowCounts;

    fn day(active: impl Fn(u64) -> bool) -> TrafficSeries {
        TrafficSeries {
            device: MacAddress::default(),
            window_s: 60,
            start_ts_us: SIM_EPOCH_US,
            windows: (0..1440)
                .map(|m| WindowCounts { up_pkts: u64::from(active(m)), ..Default::default() })
                .collect(),
            untracked_pkts: 0,
        }
    }

    #[test]
    fn table_rows() {
        let cfg = KindConfig::default();
        assert_eq!(classify_device_kind(&day(|_| true), &cfg).unwrap(), DeviceKind::Smart);
        let phone = day(|m| !(30..390).contains(&m));
        assert_eq!(classify_device_kind(&phone, &cfg).unwrap(), DeviceKind::ManuallyControlled);
        // Traffic up to and including 02:00 touches two of the four night hours.
        let evening = day(|m| m >= 18 * 60 || m <= 2 * 60);
        assert_eq!(classify_device_kind(&evening, &cfg).unwrap(), DeviceKind::Unknown);
    }

    #[test]
    fn short_series_rejected() {
        let mut s = day(|_| true);
        s.windows.truncate(600);
        assert!(matches!(
            classify_device_kind(&s, &KindConfig::default()),
            Err(TrafficError::InsufficientData(_))
        ));
    }
}
