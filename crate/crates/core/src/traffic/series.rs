use std::collections::{BTreeMap, BTreeSet};

use super::TrafficError;
use crate::mac::MacAddress;
use crate::time::US_PER_S;
use crate::wire::{Direction, FrameRecord};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct WindowCounts {
    pub up_pkts: u64,
    pub down_pkts: u64,
    pub up_bytes: u64,
    pub down_bytes: u64,
}

impl WindowCounts {
    pub fn total_pkts(&self) -> u64 {
        self.up_pkts + self.down_pkts
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrafficSeries {
    pub device: MacAddress,
    pub window_s: u32,
    pub start_ts_us: u64,
    pub windows: Vec<WindowCounts>,
    /// Peer, broadcast and AP-to-AP frames; kept out of the up/down counts.
    pub untracked_pkts: u64,
}

impl TrafficSeries {
    pub fn window_us(&self) -> u64 {
        u64::from(self.window_s) * US_PER_S
    }

    pub fn window_start(&self, i: usize) -> u64 {
        self.start_ts_us + i as u64 * self.window_us()
    }

    pub fn end_ts_us(&self) -> u64 {
        self.window_start(self.windows.len())
    }

    pub fn totals(&self) -> Vec<u64> {
        self.windows.iter().map(WindowCounts::total_pkts).collect()
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }
}

/// Bins one device's frames into `window_s` windows covering
/// `[start, end)`. Frames outside the range are ignored.
pub fn aggregate_windows<'a>(
    device: MacAddress,
    frames: impl IntoIterator<Item = &'a FrameRecord>,
    window_s: u32,
    start_ts_us: u64,
    end_ts_us: u64,
) -> Result<TrafficSeries, TrafficError> {
    if end_ts_us <= start_ts_us {
        return Err(TrafficError::InvalidRange {
            start: start_ts_us,
            end: end_ts_us,
        });
    }
    if window_s == 0 {
        return Err(TrafficError::InvalidParameter("window_s must be at least 1".into()));
    }
    let window_us = u64::from(window_s) * US_PER_S;
    let n = (end_ts_us - start_ts_us).div_ceil(window_us) as usize;
    let mut series = TrafficSeries {
        device,
        window_s,
        start_ts_us,
        windows: vec![WindowCounts::default(); n],
        untracked_pkts: 0,
    };
    for f in frames {
        let ts = f.ts_us();
        if ts < start_ts_us || ts >= end_ts_us {
            continue;
        }
        let w = &mut series.windows[((ts - start_ts_us) / window_us) as usize];
        let bytes = u64::from(f.body_len_bytes);
        match f.direction {
            Direction::Uplink => {
                w.up_pkts += 1;
                w.up_bytes += bytes;
            }
            Direction::Downlink => {
                w.down_pkts += 1;
                w.down_bytes += bytes;
            }
            Direction::PeerOrBroadcast | Direction::ApToAp => series.untracked_pkts += 1,
        }
    }
    Ok(series)
}

/// Collapses copies of one transmission heard by several sniffers.
pub fn dedup_frames(frames: &[FrameRecord]) -> Vec<&FrameRecord> {
    let mut seen = BTreeSet::new();
    let mut out: Vec<&FrameRecord> = frames
        .iter()
        .filter(|f| {
            seen.insert((
                f.ts_us(),
                f.addrs.ta,
                f.addrs.ra,
                f.fc.to_bytes(),
                f.body_len_bytes,
                f.direction,
            ))
        })
        .collect();
    out.sort_by_key(|f| f.ts_us());
    out
}

/// Groups frames by the device they belong to: the station end of each
/// frame, and for access points every frame of their BSS.
pub fn frames_by_device<'a>(
    frames: &[&'a FrameRecord],
    access_points: &BTreeSet<MacAddress>,
) -> BTreeMap<MacAddress, Vec<&'a FrameRecord>> {
    let mut out: BTreeMap<MacAddress, Vec<&FrameRecord>> = BTreeMap::new();
    for &f in frames {
        let station = f.station();
        if !station.is_multicast() && !access_points.contains(&station) {
            out.entry(station).or_default().push(f);
        }
        if let Some(b) = f.addrs.bssid.filter(|b| access_points.contains(b)) {
            out.entry(b).or_default().push(f);
        }
    }
    out
}
