use std::collections::BTreeMap;

use crate::mac::MacAddress;
use crate::wire::FrameRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeStat {
    pub count: u64,
    pub first_seen: u64,
    pub last_seen: u64,
}

/// SSIDs each station has probed for. Wildcard probes are not recorded.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ProbeInventory {
    pub by_source: BTreeMap<MacAddress, BTreeMap<Vec<u8>, ProbeStat>>,
}

impl ProbeInventory {
    pub fn ssids(&self, mac: &MacAddress) -> Vec<String> {
        self.by_source
            .get(mac)
            .map(|m| m.keys().map(|s| String::from_utf8_lossy(s).into_owned()).collect())
            .unwrap_or_default()
    }

    pub fn is_empty(&self) -> bool {
        self.by_source.is_empty()
    }
}

pub fn probe_inventory(frames: &[FrameRecord]) -> ProbeInventory {
    let mut inv = ProbeInventory::default();
    for f in frames.iter().filter(|f| f.is_probe_request()) {
        let Some(ssid) = f.ssid.as_ref().filter(|s| !s.is_empty()) else {
            continue;
        };
        let src = f.addrs.sa;
        if src.is_broadcast() {
            continue;
        }
        let ts = f.ts_us();
        inv.by_source
            .entry(src)
            .or_default()
            .entry(ssid.clone())
            .and_modify(|s| {
                s.count += 1;
                s.first_seen = s.first_seen.min(ts);
                s.last_seen = s.last_seen.max(ts);
            })
            .or_insert(ProbeStat {
                count: 1,
                first_seen: ts,
                last_seen: ts,
            });
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::{Direction, FrameControl, FrameType, RadiotapMeta, ResolvedAddresses};

    fn probe(ts: u64, sta: &str, ssid: &[u8]) -> FrameRecord {
        let sta: MacAddress = sta.parse().unwrap();
        FrameRecord {
            sniffer_id: "rp01".into(),
            meta: RadiotapMeta { timestamp_us: ts, ..Default::default() },
            fc: FrameControl::new(FrameType::Management, 4, 0),
            addrs: ResolvedAddresses {
                sa: sta,
                da: MacAddress::BROADCAST,
                ta: sta,
                ra: MacAddress::BROADCAST,
                bssid: Some(MacAddress::BROADCAST),
            },
            direction: Direction::PeerOrBroadcast,
            body_len_bytes: ssid.len() as u32 + 2,
            ssid: Some(ssid.to_vec()),
        }
    }

    #[test]
    fn inventory() {
        let phone = "a4:45:19:00:00:0a";
        let frames = vec![
            probe(3, phone, b"123456789"),
            probe(1, phone, b"VodafoneMobileWiFi-A123456"),
            probe(2, phone, b"123456789"),
            probe(4, phone, b""),
            probe(5, "6c:5a:b0:00:00:03", b"OpenRouter"),
            probe(6, "6c:5a:b0:00:00:03", b"easy_network"),
        ];
        let inv = probe_inventory(&frames);
        let p: MacAddress = phone.parse().unwrap();
        assert_eq!(inv.ssids(&p), vec!["123456789", "VodafoneMobileWiFi-A123456"]);
        assert_eq!(
            inv.by_source[&p][&b"123456789".to_vec()],
            ProbeStat { count: 2, first_seen: 2, last_seen: 3 }
        );
        assert_eq!(inv.ssids(&"6c:5a:b0:00:00:03".parse().unwrap()).len(), 2);
        assert!(probe_inventory(&[probe(1, phone, b"")]).is_empty());
    }
}
