use std::collections::{BTreeMap, BTreeSet};

use super::HarError;
use crate::mac::MacAddress;
use crate::time::US_PER_S;
use crate::traffic::{aggregate_windows, classify_states, compute_threshold, hour_coverage, DeviceState, KindConfig, StateConfig};
use crate::wire::{FrameRecord, FrameType};

/// Silence that ends a visit.
pub const DEPARTURE_GAP_S: u64 = 3600;

#[derive(Debug, Clone, PartialEq)]
pub struct GuestEvent {
    pub mac: MacAddress,
    pub arrival_us: u64,
    /// `None` while the device may still be around at the end of the data.
    pub departure_us: Option<u64>,
    pub resembles: Resemblance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resemblance {
    /// Quiet at night, like a phone or laptop.
    Multimedia,
    Unknown,
}

impl Resemblance {
    pub fn as_str(self) -> &'static str {
        match self {
            Resemblance::Multimedia => "multimedia",
            Resemblance::Unknown => "unknown",
        }
    }
}

fn resemblance(mac: MacAddress, frames: &[&FrameRecord], start: u64, end: u64, window_s: u32) -> Resemblance {
    let Ok(series) = aggregate_windows(mac, frames.iter().copied(), window_s, start, end.max(start + 1)) else {
        return Resemblance::Unknown;
    };
    let th = compute_threshold(&series);
    let Ok(cfg) = StateConfig::new(th) else {
        return Resemblance::Unknown;
    };
    let states = classify_states(&series, &cfg).states;
    let kc = KindConfig::default();
    let cov = hour_coverage(&series, &kc, |i| states[i] == DeviceState::Active);
    if cov.night_coverage <= kc.max_manual_night_coverage {
        Resemblance::Multimedia
    } else {
        Resemblance::Unknown
    }
}

/// Stations of `bssid` first heard at or after `observe_from_us` that are
/// not in the baseline. A visit ends at the last frame before an hour of
/// silence; `end_us` marks the end of the observation.
pub fn detect_guests(
    frames: &[&FrameRecord],
    bssid: MacAddress,
    baseline: &BTreeSet<MacAddress>,
    observe_from_us: u64,
    end_us: u64,
    window_s: u32,
) -> Result<Vec<GuestEvent>, HarError> {
    if end_us <= observe_from_us {
        return Err(HarError::InvalidRange(format!("{observe_from_us}..{end_us}")));
    }
    let mut by_station: BTreeMap<MacAddress, Vec<&FrameRecord>> = BTreeMap::new();
    for f in frames {
        if f.fc.ftype != FrameType::Data || f.addrs.bssid != Some(bssid) || f.ts_us() < observe_from_us {
            continue;
        }
        let sta = f.station();
        if sta == bssid || sta.is_multicast() || baseline.contains(&sta) {
            continue;
        }
        by_station.entry(sta).or_default().push(f);
    }
    let gap_us = DEPARTURE_GAP_S * US_PER_S;
    let mut out = Vec::new();
    for (mac, mut fs) in by_station {
        fs.sort_by_key(|f| f.ts_us());
        let mut visit_start = 0;
        for i in 0..fs.len() {
            let last = fs[i].ts_us();
            let next = fs.get(i + 1).map(|f| f.ts_us());
            let closes = match next {
                Some(n) => n - last >= gap_us,
                None => true,
            };
            if !closes {
                continue;
            }
            let arrival = fs[visit_start].ts_us();
            let departed = next.is_some() || end_us.saturating_sub(last) >= gap_us;
            let visit = &fs[visit_start..=i];
            out.push(GuestEvent {
                mac,
                arrival_us: arrival,
                departure_us: departed.then_some(last),
                resembles: resemblance(mac, visit, arrival, last + 1, window_s),
            });
            visit_start = i + 1;
        }
    }
    out.sort_by_key(|g| (g.arrival_us, g.mac));
    Ok(out)
}
