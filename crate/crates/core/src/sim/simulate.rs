use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::channel::Channel;
use super::scenario::{DeviceSpec, Scenario, TrafficModel};
use super::traffic::{active_schedule, device_events, on_schedule, EventKind};
use super::truth::{GroundTruth, TruthActivity, TruthDevice, TruthGuest, OUTSIDE};
use super::SimError;
use crate::ble::ad::{encode_uuid16_list, AD_COMPLETE_NAME, AD_MANUFACTURER};
use crate::ble::{AdStructure, BleAdvRecord};
use crate::mac::MacAddress;
use crate::rf::{learn_reference_points, median, RssiFingerprint, Sniffer, SnifferLayout, ZoneModel};
use crate::time::US_PER_S;
use crate::traffic::DeviceState;
use crate::wire::frame::{SUBTYPE_BEACON, SUBTYPE_PROBE_REQUEST, SUBTYPE_QOS_DATA};
use crate::wire::{resolve_addresses, Direction, FrameControl, FrameRecord, FrameType, RadiotapMeta};

const FLAG_PROTECTED: u8 = 0x40;
const AD_FLAGS: u8 = 0x01;
/// Samples per sniffer behind one survey fingerprint.
const SURVEY_SAMPLES: usize = 5;

/// Frame counts per device: every event is either received or dropped by
/// each sniffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DeviceStats {
    pub events: u64,
    pub received: u64,
    pub dropped: u64,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub layout: SnifferLayout,
    /// All sniffers' records, ordered by time, then sniffer.
    pub frames: Vec<FrameRecord>,
    /// Device that generated each frame, parallel to `frames`.
    pub origins: Vec<MacAddress>,
    pub ble: Vec<BleAdvRecord>,
    pub truth: GroundTruth,
    pub stats: BTreeMap<MacAddress, DeviceStats>,
    /// Reference fingerprints from a calibration walk through every room.
    pub zones: Option<ZoneModel>,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Independent random stream for one device and purpose.
pub fn device_rng(seed: u64, mac: &MacAddress, purpose: u64) -> ChaCha8Rng {
    let m = mac.0.iter().fold(0u64, |acc, b| acc << 8 | u64::from(*b));
    ChaCha8Rng::seed_from_u64(splitmix(seed ^ splitmix(m ^ (purpose << 48))))
}

pub fn layout_of(s: &Scenario) -> Result<SnifferLayout, SimError> {
    SnifferLayout::new(
        s.sniffers
            .iter()
            .map(|x| Sniffer { id: x.id.clone(), x: x.x, y: x.y })
            .collect(),
    )
    .map_err(|e| SimError::Scenario { path: "sniffers".into(), message: e.to_string() })
}

fn network_of<'a>(s: &'a Scenario, d: &'a DeviceSpec) -> &'a DeviceSpec {
    if d.access_point {
        return d;
    }
    d.bssid
        .and_then(|b| s.device(&b))
        .or_else(|| s.access_point())
        .unwrap_or(d)
}

struct Built {
    frames: Vec<(u64, usize, FrameRecord)>,
    ble: Vec<(u64, usize, BleAdvRecord)>,
    stats: DeviceStats,
}

fn record(
    sniffer: &str,
    ts_us: u64,
    rssi: f64,
    freq: u16,
    rate: u32,
    fc: FrameControl,
    a: (MacAddress, MacAddress, MacAddress),
    body_len: u32,
    ssid: Option<Vec<u8>>,
) -> FrameRecord {
    let addrs = resolve_addresses(&fc, a.0, a.1, a.2, None).expect("three-address frame");
    FrameRecord {
        sniffer_id: sniffer.to_string(),
        meta: RadiotapMeta {
            timestamp_us: ts_us,
            rssi_dbm: Some(rssi),
            channel_freq_mhz: Some(freq),
            data_rate_kbps: Some(rate),
            fcs_at_end: false,
        },
        fc,
        direction: crate::wire::classify_ds(&fc),
        addrs,
        body_len_bytes: body_len,
        ssid,
    }
}

fn ble_structures(d: &DeviceSpec) -> Vec<AdStructure> {
    let Some(b) = &d.ble else { return Vec::new() };
    let mut v = vec![AdStructure::new(AD_FLAGS, vec![0x06])];
    if let Some(n) = &b.local_name {
        v.push(AdStructure::new(AD_COMPLETE_NAME, n.as_bytes().to_vec()));
    }
    if !b.service_uuids.is_empty() {
        v.push(encode_uuid16_list(&b.service_uuids));
    }
    if let Some(h) = &b.manufacturer_hex {
        v.push(AdStructure::new(AD_MANUFACTURER, hex::decode(h).unwrap_or_default()));
    }
    v
}

fn simulate_device(s: &Scenario, layout: &SnifferLayout, channel: &Channel, d: &DeviceSpec) -> Built {
    let start_us = s.start_us();
    let wd = s.start_weekday();
    let ap = network_of(s, d);
    let mut traffic_rng = device_rng(s.seed, &d.mac, 1);
    let mut chan_rng = device_rng(s.seed, &d.mac, 2);
    let events = device_events(d, s.duration_s, wd, &mut traffic_rng);
    let mut built = Built { frames: Vec::new(), ble: Vec::new(), stats: DeviceStats::default() };
    let (own_loc, ap_loc) = (s.locator(d), s.locator(ap));
    let rate = d.rate_kbps.unwrap_or(54_000);
    let freq = s.channel.freq_mhz;
    for ev in &events {
        let t_s = ev.t_us as f64 / US_PER_S as f64;
        let ts = start_us + ev.t_us;
        let (tx, fc, addrs, body, ssid, rate) = match &ev.kind {
            EventKind::Data { direction, bytes } => {
                let flags = direction.ds_flags() | FLAG_PROTECTED;
                let fc = FrameControl::new(FrameType::Data, SUBTYPE_QOS_DATA, flags);
                match direction {
                    Direction::Downlink => (ap, fc, (d.mac, ap.mac, ap.mac), *bytes, None, rate),
                    _ => (d, fc, (ap.mac, d.mac, ap.mac), *bytes, None, rate),
                }
            }
            EventKind::Beacon => {
                let ssid = d.ssid.clone().unwrap_or_default().into_bytes();
                let fc = FrameControl::new(FrameType::Management, SUBTYPE_BEACON, 0);
                let body = 12 + 2 + ssid.len() as u32;
                (d, fc, (MacAddress::BROADCAST, d.mac, d.mac), body, Some(ssid), 1_000)
            }
            EventKind::Probe(name) => {
                let ssid = name.clone().into_bytes();
                let fc = FrameControl::new(FrameType::Management, SUBTYPE_PROBE_REQUEST, 0);
                let body = 2 + ssid.len() as u32;
                let b = MacAddress::BROADCAST;
                (d, fc, (b, d.mac, b), body, Some(ssid), 1_000)
            }
        };
        let pos = if std::ptr::eq(tx, d) { own_loc.at(t_s) } else { ap_loc.at(t_s) };
        built.stats.events += 1;
        for (i, sn) in layout.sniffers.iter().enumerate() {
            match channel.receive(tx.p0_dbm, pos, (sn.x, sn.y), &mut chan_rng) {
                Some(rssi) => {
                    built.stats.received += 1;
                    let r = record(&sn.id, ts, rssi, freq, rate, fc, addrs, body, ssid.clone());
                    built.frames.push((ts, i, r));
                }
                None => built.stats.dropped += 1,
            }
        }
    }
    if let Some(b) = &d.ble {
        let mut rng = device_rng(s.seed, &d.mac, 3);
        let on = on_schedule(d, s.duration_s, wd);
        let structures = ble_structures(d);
        let p0 = b.p0_dbm.unwrap_or(d.p0_dbm);
        let mut t = rng.random::<f64>() * b.interval_s;
        while t < s.duration_s as f64 {
            // Advertising delay of up to 10 ms.
            let tj = t + rng.random::<f64>() * 0.01;
            if on.contains(tj) && tj < s.duration_s as f64 {
                let ts = start_us + (tj * US_PER_S as f64).round() as u64;
                let pos = own_loc.at(tj);
                for (i, sn) in layout.sniffers.iter().enumerate() {
                    if let Some(rssi) = channel.receive(p0, pos, (sn.x, sn.y), &mut rng) {
                        let rec = BleAdvRecord::new(ts, sn.id.clone(), d.mac, Some(rssi), structures.clone())
                            .expect("scenario BLE data is well formed");
                        built.ble.push((ts, i, rec));
                    }
                }
            }
            t += b.interval_s;
        }
    }
    built
}

fn state_at(d: &DeviceSpec, on: &super::schedule::Schedule, active: &super::schedule::Schedule, t: f64) -> DeviceState {
    match d.traffic {
        Some(TrafficModel::Multimedia { .. }) | Some(TrafficModel::Streaming { .. }) => {
            if !on.contains(t) {
                DeviceState::Off
            } else if active.contains(t) {
                DeviceState::Active
            } else {
                DeviceState::Idle
            }
        }
        _ => DeviceState::Idle,
    }
}

pub fn ground_truth(s: &Scenario) -> GroundTruth {
    let wd = s.start_weekday();
    let n = s.n_windows();
    let w = f64::from(s.window_s);
    let start_us = s.start_us();
    let mut truth = GroundTruth {
        start_us,
        window_s: s.window_s,
        n_windows: n,
        devices: Vec::new(),
        states: BTreeMap::new(),
        positions: BTreeMap::new(),
        zones: BTreeMap::new(),
        excluded_zones: s.rooms.iter().filter(|r| r.excluded).map(|r| r.label.clone()).collect(),
        activities: Vec::new(),
        guests: Vec::new(),
    };
    for d in &s.devices {
        let on = on_schedule(d, s.duration_s, wd);
        let active = active_schedule(d, s.duration_s, wd);
        let mid = |i: usize| (i as f64 + 0.5) * w;
        let loc = s.locator(d);
        let positions: Vec<(f64, f64)> = (0..n).map(|i| loc.at(mid(i))).collect();
        let zones = positions
            .iter()
            .map(|&p| s.room_at(p).map_or(OUTSIDE.to_string(), |r| r.label.clone()))
            .collect();
        truth.states.insert(d.mac, (0..n).map(|i| state_at(d, &on, &active, mid(i))).collect());
        truth.positions.insert(d.mac, positions);
        truth.zones.insert(d.mac, zones);
        if d.guest {
            if let (Some(first), Some(last)) = (on.intervals.first(), on.intervals.last()) {
                truth.guests.push(TruthGuest {
                    mac: d.mac,
                    arrival_us: start_us + first.0 * US_PER_S,
                    departure_us: start_us + last.1 * US_PER_S,
                });
            }
        }
        truth.devices.push(TruthDevice {
            mac: d.mac,
            name: d.name.clone(),
            kind_label: d.kind_label.clone().unwrap_or_else(|| "-".into()),
            expected_kind: s.expected_kind(d),
            carried: d.carried_by.is_some(),
            guest: d.guest,
            scripted: !active.intervals.is_empty(),
            access_point: d.access_point,
            network: network_of(s, d).mac,
        });
    }
    for inh in &s.inhabitants {
        for (label, span) in &inh.activities {
            let Ok(span) = span.parse::<super::schedule::Span>() else { continue };
            for (a, b) in span.intervals(s.duration_s, wd) {
                truth.activities.push(TruthActivity {
                    label: label.clone(),
                    start_us: start_us + a * US_PER_S,
                    end_us: start_us + b * US_PER_S,
                });
            }
        }
    }
    truth.activities.sort_by(|a, b| (a.start_us, &a.label).cmp(&(b.start_us, &b.label)));
    truth
}

/// Reference fingerprints from random points in each room, measured with
/// the survey device's transmit power.
pub fn survey(s: &Scenario, layout: &SnifferLayout, channel: &Channel) -> Option<ZoneModel> {
    let spec = s.survey.as_ref()?;
    let device = spec
        .device
        .and_then(|m| s.device(&m))
        .or_else(|| s.devices.iter().find(|d| d.carried_by.is_some()))?;
    let mut rng = device_rng(s.seed, &device.mac, 4);
    let mut labeled = Vec::new();
    for room in &s.rooms {
        let mut fps = Vec::new();
        for _ in 0..spec.points_per_room {
            let p = (
                room.x0 + rng.random::<f64>() * (room.x1 - room.x0),
                room.y0 + rng.random::<f64>() * (room.y1 - room.y0),
            );
            let mut values = Vec::with_capacity(layout.len());
            let mut support = Vec::with_capacity(layout.len());
            for sn in &layout.sniffers {
                let mut got: Vec<f64> = (0..SURVEY_SAMPLES)
                    .filter_map(|_| channel.receive(device.p0_dbm, p, (sn.x, sn.y), &mut rng))
                    .collect();
                support.push(got.len() as u32);
                values.push(median(&mut got));
            }
            fps.push(RssiFingerprint { device: device.mac, window_start_us: 0, values, support });
        }
        let usable = fps.iter().filter(|f| f.usable()).count();
        if usable >= crate::rf::zones::MIN_REFERENCE_FINGERPRINTS {
            labeled.push((room.label.clone(), fps));
        }
    }
    let ids: Vec<String> = layout.sniffers.iter().map(|x| x.id.clone()).collect();
    learn_reference_points(&ids, &labeled).ok()
}

/// Runs a scenario. Output depends only on the scenario and its seed.
pub fn simulate(s: &Scenario) -> Result<SimOutput, SimError> {
    let layout = layout_of(s)?;
    let channel = Channel::from_scenario(s);
    let mut frames = Vec::new();
    let mut ble = Vec::new();
    let mut stats = BTreeMap::new();
    for (di, d) in s.devices.iter().enumerate() {
        let built = simulate_device(s, &layout, &channel, d);
        frames.extend(built.frames.into_iter().map(|(t, i, r)| ((t, i, di), d.mac, r)));
        ble.extend(built.ble.into_iter().map(|(t, i, r)| ((t, i, di), r)));
        stats.insert(d.mac, built.stats);
    }
    frames.sort_by_key(|(k, _, _)| *k);
    ble.sort_by_key(|(k, _)| *k);
    let (origins, frames) = frames.into_iter().map(|(_, m, r)| (m, r)).unzip();
    Ok(SimOutput {
        zones: survey(s, &layout, &channel),
        truth: ground_truth(s),
        layout,
        frames,
        origins,
        ble: ble.into_iter().map(|(_, r)| r).collect(),
        stats,
    })
}
