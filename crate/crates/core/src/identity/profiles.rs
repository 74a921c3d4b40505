use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::oui::{lookup_vendor, OuiDatabase};
use crate::ble::BleAdvRecord;
use crate::mac::MacAddress;
use crate::wire::{FrameRecord, FrameType};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum DeviceKind {
    Smart,
    ManuallyControlled,
    #[default]
    Unknown,
}

impl DeviceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            DeviceKind::Smart => "smart",
            DeviceKind::ManuallyControlled => "manual",
            DeviceKind::Unknown => "unknown",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "smart" => Some(DeviceKind::Smart),
            "manual" | "manually-controlled" => Some(DeviceKind::ManuallyControlled),
            "unknown" => Some(DeviceKind::Unknown),
            _ => None,
        }
    }
}

impl fmt::Display for DeviceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const LABEL_ACCESS_POINT: &str = "access-point";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviceProfile {
    pub mac: MacAddress,
    pub vendor: Option<String>,
    pub randomized_mac: bool,
    pub ble_name: Option<String>,
    pub ble_services: Vec<u16>,
    pub ble_company_id: Option<u16>,
    pub first_seen: u64,
    pub last_seen: u64,
    pub frame_count: u64,
    pub kind: DeviceKind,
    pub labels: BTreeSet<String>,
}

impl DeviceProfile {
    pub fn is_access_point(&self) -> bool {
        self.labels.contains(LABEL_ACCESS_POINT)
    }
}

/// Keeps frames of the target network. Probe requests carry a broadcast
/// BSSID, so with `include_probes` they are kept when their sender also
/// appears in the network.
pub fn filter_network(
    frames: &[FrameRecord],
    target_bssid: MacAddress,
    include_probes: bool,
) -> Vec<FrameRecord> {
    let in_network = |f: &FrameRecord| f.addrs.bssid == Some(target_bssid);
    let members: BTreeSet<MacAddress> = if include_probes {
        frames
            .iter()
            .filter(|f| in_network(f))
            .flat_map(|f| [f.addrs.sa, f.addrs.ta])
            .collect()
    } else {
        BTreeSet::new()
    };
    frames
        .iter()
        .filter(|f| in_network(f) || (f.is_probe_request() && members.contains(&f.addrs.sa)))
        .cloned()
        .collect()
}

/// BSSIDs of data frames, i.e. the access points of observed networks.
pub fn access_points(frames: &[FrameRecord]) -> BTreeSet<MacAddress> {
    frames
        .iter()
        .filter(|f| f.fc.ftype == FrameType::Data)
        .filter_map(|f| f.addrs.bssid)
        .filter(|b| !b.is_broadcast())
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProfileOptions {
    /// Also join a BLE advertiser whose name ends in a hex fragment found
    /// in a station's mac, e.g. `...-08B6` onto `08:b6:...`.
    pub fuzzy_ble_join: bool,
}

/// One profile per non-broadcast station seen as source or transmitter.
pub fn build_profiles(
    frames: &[FrameRecord],
    ble: &[BleAdvRecord],
    oui: &OuiDatabase,
    options: ProfileOptions,
) -> BTreeMap<MacAddress, DeviceProfile> {
    let aps = access_points(frames);
    let mut profiles: BTreeMap<MacAddress, DeviceProfile> = BTreeMap::new();
    for f in frames {
        let ts = f.ts_us();
        let stations: BTreeSet<MacAddress> = [f.addrs.sa, f.addrs.ta].into_iter().collect();
        for mac in stations {
            if mac.is_broadcast() || mac.is_multicast() {
                continue;
            }
            let p = profiles.entry(mac).or_insert_with(|| {
                let v = lookup_vendor(oui, &mac);
                DeviceProfile {
                    mac,
                    vendor: v.vendor.map(str::to_string),
                    randomized_mac: v.randomized,
                    ble_name: None,
                    ble_services: Vec::new(),
                    ble_company_id: None,
                    first_seen: ts,
                    last_seen: ts,
                    frame_count: 0,
                    kind: DeviceKind::Unknown,
                    labels: BTreeSet::new(),
                }
            });
            p.first_seen = p.first_seen.min(ts);
            p.last_seen = p.last_seen.max(ts);
            p.frame_count += 1;
        }
    }
    for (mac, p) in profiles.iter_mut() {
        if aps.contains(mac) {
            p.labels.insert(LABEL_ACCESS_POINT.to_string());
        }
    }

    let mut by_mac: BTreeMap<MacAddress, Vec<&BleAdvRecord>> = BTreeMap::new();
    for r in ble {
        by_mac.entry(r.advertiser).or_default().push(r);
    }
    for p in profiles.values_mut() {
        let mut adverts: Vec<&BleAdvRecord> = by_mac.get(&p.mac).cloned().unwrap_or_default();
        if adverts.is_empty() && options.fuzzy_ble_join {
            let hex = p.mac.to_hex();
            adverts = ble
                .iter()
                .filter(|r| {
                    r.decoded
                        .local_name
                        .as_deref()
                        .and_then(name_hex_suffix)
                        .is_some_and(|suffix| hex.contains(&suffix))
                })
                .collect();
        }
        enrich_from_ble(p, &adverts);
    }
    profiles
}

fn name_hex_suffix(name: &str) -> Option<String> {
    let tail = name.rsplit(['-', '_', ' ']).next()?;
    (tail.len() >= 4 && tail.len() % 2 == 0 && tail.chars().all(|c| c.is_ascii_hexdigit()))
        .then(|| tail.to_ascii_lowercase())
}

fn enrich_from_ble(p: &mut DeviceProfile, adverts: &[&BleAdvRecord]) {
    let mut services = BTreeSet::new();
    for r in adverts {
        let d = &r.decoded;
        let better_name = match (&p.ble_name, &d.local_name) {
            (None, Some(_)) => true,
            (Some(_), Some(_)) => d.name_complete,
            _ => false,
        };
        if better_name {
            p.ble_name = d.local_name.clone();
        }
        services.extend(d.service_uuids16.iter().copied());
        if let Some(m) = &d.manufacturer {
            p.ble_company_id.get_or_insert(m.company_id);
        }
    }
    p.ble_services = services.into_iter().collect();
}
