use std::collections::BTreeMap;

use super::layout::SnifferLayout;
use crate::mac::MacAddress;
use crate::time::US_PER_S;
use crate::wire::FrameRecord;

/// Per-sniffer median RSSI of one device over one window, aligned with the
/// layout's sniffer order.
#[derive(Debug, Clone, PartialEq)]
pub struct RssiFingerprint {
    pub device: MacAddress,
    pub window_start_us: u64,
    pub values: Vec<Option<f64>>,
    pub support: Vec<u32>,
}

impl RssiFingerprint {
    pub fn present(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }

    pub fn usable(&self) -> bool {
        self.present() >= 3
    }

    pub fn present_indices(&self) -> Vec<usize> {
        (0..self.values.len()).filter(|&i| self.values[i].is_some()).collect()
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

/// Fingerprints per transmitting device, one per window that has at least
/// one reading. Windows are aligned to `origin_us`; frames from sniffers
/// missing in the layout or without RSSI are ignored.
pub fn build_fingerprints(
    frames: &[FrameRecord],
    layout: &SnifferLayout,
    window_s: u32,
    origin_us: u64,
) -> BTreeMap<MacAddress, Vec<RssiFingerprint>> {
    let window_us = u64::from(window_s.max(1)) * US_PER_S;
    let mut readings: BTreeMap<(MacAddress, u64), Vec<Vec<f64>>> = BTreeMap::new();
    for f in frames {
        let (Some(rssi), Some(s)) = (f.meta.rssi_dbm, layout.index_of(&f.sniffer_id)) else {
            continue;
        };
        let ts = f.ts_us();
        if ts < origin_us || f.addrs.ta.is_multicast() {
            continue;
        }
        let w = origin_us + (ts - origin_us) / window_us * window_us;
        readings
            .entry((f.addrs.ta, w))
            .or_insert_with(|| vec![Vec::new(); layout.len()])[s]
            .push(rssi);
    }
    let mut out: BTreeMap<MacAddress, Vec<RssiFingerprint>> = BTreeMap::new();
    for ((device, w), mut per_sniffer) in readings {
        let support = per_sniffer.iter().map(|r| r.len() as u32).collect();
        let values = per_sniffer.iter_mut().map(|r| median(r)).collect();
        out.entry(device).or_default().push(RssiFingerprint {
            device,
            window_start_us: w,
            values,
            support,
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rf::layout::Sniffer;
    use crate::wire::{Direction, FrameControl, FrameType, RadiotapMeta, ResolvedAddresses};

    fn reading(sniffer: &str, ts_s: u64, rssi: f64) -> FrameRecord {
        let sta: MacAddress = "d8:f1:5b:00:00:01".parse().unwrap();
        let ap: MacAddress = "24:2f:d0:00:00:07".parse().unwrap();
        FrameRecord {
            sniffer_id: sniffer.into(),
            meta: RadiotapMeta {
                timestamp_us: ts_s * US_PER_S,
                rssi_dbm: Some(rssi),
                ..Default::default()
            },
            fc: FrameControl::new(FrameType::Data, 8, 1),
            addrs: ResolvedAddresses { sa: sta, da: ap, ta: sta, ra: ap, bssid: Some(ap) },
            direction: Direction::Uplink,
            body_len_bytes: 1,
            ssid: None,
        }
    }

    #[test]
    fn medians_and_absent_sniffers() {
        let layout = SnifferLayout::new(
            ["a", "b", "c"]
                .iter()
                .enumerate()
                .map(|(i, id)| Sniffer { id: id.to_string(), x: i as f64, y: (i % 2) as f64 })
                .collect(),
        )
        .unwrap();
        let frames = vec![
            reading("a", 1, -60.0),
            reading("a", 2, -61.0),
            reading("a", 3, -59.0),
            reading("b", 4, -70.0),
            reading("a", 12, -50.0),
            reading("zz", 4, -1.0),
        ];
        let fps = build_fingerprints(&frames, &layout, 10, 0);
        let fps = &fps[&frames[0].addrs.ta];
        assert_eq!(fps.len(), 2);
        assert_eq!(fps[0].values, vec![Some(-60.0), Some(-70.0), None]);
        assert_eq!(fps[0].support, vec![3, 1, 0]);
        assert!(!fps[0].usable());
        assert_eq!(fps[1].window_start_us, 10 * US_PER_S);
    }
}
