//! Scenario description: floor plan, sniffers, devices and inhabitants.

use serde::Deserialize;

use super::schedule::{parse_clock, Span};
use super::SimError;
use crate::identity::DeviceKind;
use crate::mac::MacAddress;
use crate::time::{parse_iso, weekday, DAY_S, SIM_EPOCH_US};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    /// Naive local start time; defaults to Monday 2025-03-03 00:00.
    #[serde(default)]
    pub start: Option<String>,
    pub duration_s: u64,
    #[serde(default = "default_window")]
    pub window_s: u32,
    #[serde(default)]
    pub channel: ChannelSpec,
    pub sniffers: Vec<SnifferSpec>,
    #[serde(default)]
    pub rooms: Vec<RoomSpec>,
    #[serde(default)]
    pub walls: Vec<WallSpec>,
    pub devices: Vec<DeviceSpec>,
    #[serde(default)]
    pub inhabitants: Vec<InhabitantSpec>,
    #[serde(default)]
    pub survey: Option<SurveySpec>,
}

fn default_window() -> u32 {
    10
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    #[serde(default = "default_n")]
    pub n: f64,
    #[serde(default = "default_sigma")]
    pub sigma_db: f64,
    #[serde(default = "default_wall")]
    pub wall_db: f64,
    /// Whether weak frames are dropped on a ramp between -70 and -95 dBm.
    #[serde(default = "yes")]
    pub drops: bool,
    #[serde(default = "default_freq")]
    pub freq_mhz: u16,
}

fn default_n() -> f64 {
    3.0
}
fn default_sigma() -> f64 {
    2.0
}
fn default_wall() -> f64 {
    5.0
}
fn default_freq() -> u16 {
    2437
}
fn yes() -> bool {
    true
}

impl Default for ChannelSpec {
    fn default() -> Self {
        ChannelSpec {
            n: default_n(),
            sigma_db: default_sigma(),
            wall_db: default_wall(),
            drops: true,
            freq_mhz: default_freq(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnifferSpec {
    pub id: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoomSpec {
    pub label: String,
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    /// Rooms scored as out of bounds, such as the one housing the sniffers.
    #[serde(default)]
    pub excluded: bool,
}

impl RoomSpec {
    pub fn contains(&self, p: (f64, f64)) -> bool {
        p.0 >= self.x0 && p.0 <= self.x1 && p.1 >= self.y0 && p.1 <= self.y1
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1) / 2.0, (self.y0 + self.y1) / 2.0)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WallSpec {
    pub a: [f64; 2],
    pub b: [f64; 2],
    #[serde(default)]
    pub attenuation_db: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub mac: MacAddress,
    pub name: String,
    /// Device type as it would appear in an inventory, e.g. "light bulb".
    #[serde(default)]
    pub kind_label: Option<String>,
    /// Expected smart/manual classification.
    #[serde(default)]
    pub expected_kind: Option<String>,
    pub p0_dbm: f64,
    #[serde(default)]
    pub position: Option<[f64; 2]>,
    #[serde(default)]
    pub carried_by: Option<String>,
    /// Access points send beacons and relay their stations' downlink.
    #[serde(default)]
    pub access_point: bool,
    #[serde(default)]
    pub ssid: Option<String>,
    #[serde(default = "default_beacon")]
    pub beacon_interval_s: f64,
    /// BSSID the station associates with; defaults to the first access point.
    #[serde(default)]
    pub bssid: Option<MacAddress>,
    #[serde(default)]
    pub guest: bool,
    #[serde(default)]
    pub rate_kbps: Option<u32>,
    #[serde(default)]
    pub traffic: Option<TrafficModel>,
    #[serde(default)]
    pub probes: Option<ProbeSpec>,
    #[serde(default)]
    pub ble: Option<BleSpec>,
}

fn default_beacon() -> f64 {
    60.0
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase", deny_unknown_fields)]
pub enum TrafficModel {
    /// Fixed-interval bursts, always on.
    Periodic {
        interval_s: f64,
        #[serde(default = "one")]
        pkts: u32,
        #[serde(default = "default_bytes")]
        bytes: u32,
        #[serde(default = "yes")]
        uplink: bool,
        #[serde(default)]
        phase_s: Option<f64>,
    },
    /// Poisson traffic at `burst_rate` inside active spans and `idle_rate`
    /// elsewhere while on, plus optional keepalives.
    Multimedia {
        on: Vec<String>,
        #[serde(default)]
        active: Vec<String>,
        burst_rate: f64,
        #[serde(default)]
        idle_rate: f64,
        #[serde(default)]
        keepalive_s: Option<f64>,
        #[serde(default = "default_down")]
        down_fraction: f64,
        #[serde(default = "default_bytes")]
        bytes: u32,
    },
    /// Constant-rate downlink inside active spans, keepalives while on.
    Streaming {
        on: Vec<String>,
        active: Vec<String>,
        rate: f64,
        #[serde(default)]
        keepalive_s: Option<f64>,
        #[serde(default = "default_stream_bytes")]
        bytes: u32,
    },
}

fn one() -> u32 {
    1
}
fn default_bytes() -> u32 {
    120
}
fn default_stream_bytes() -> u32 {
    1400
}
fn default_down() -> f64 {
    0.6
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeSpec {
    pub ssids: Vec<String>,
    #[serde(default = "default_probe")]
    pub interval_s: f64,
}

fn default_probe() -> f64 {
    3600.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BleSpec {
    #[serde(default)]
    pub local_name: Option<String>,
    #[serde(default)]
    pub service_uuids: Vec<u16>,
    /// Company identifier (little-endian on air) followed by payload, as hex.
    #[serde(default)]
    pub manufacturer_hex: Option<String>,
    #[serde(default = "default_adv")]
    pub interval_s: f64,
    #[serde(default)]
    pub p0_dbm: Option<f64>,
}

fn default_adv() -> f64 {
    60.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InhabitantSpec {
    pub name: String,
    /// Daily waypoints `[clock, x, y]`, linearly interpolated and wrapping
    /// at midnight.
    pub path: Vec<(String, f64, f64)>,
    #[serde(default)]
    pub activities: Vec<(String, String)>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveySpec {
    #[serde(default)]
    pub device: Option<MacAddress>,
    #[serde(default = "default_points")]
    pub points_per_room: usize,
}

fn default_points() -> usize {
    40
}

/// A waypoint path in seconds of day, sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    points: Vec<(f64, f64, f64)>,
}

impl Path {
    pub fn at(&self, t_s: f64) -> (f64, f64) {
        let day = DAY_S as f64;
        let tod = t_s.rem_euclid(day);
        let pts = &self.points;
        let i = pts.partition_point(|p| p.0 <= tod);
        let (a, b) = if i == 0 {
            let last = pts[pts.len() - 1];
            ((last.0 - day, last.1, last.2), pts[0])
        } else if i == pts.len() {
            let first = pts[0];
            (pts[i - 1], (first.0 + day, first.1, first.2))
        } else {
            (pts[i - 1], pts[i])
        };
        if b.0 <= a.0 {
            return (a.1, a.2);
        }
        let f = (tod - a.0) / (b.0 - a.0);
        (a.1 + f * (b.1 - a.1), a.2 + f * (b.2 - a.2))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Locator {
    Fixed((f64, f64)),
    Carried(Path),
}

impl Locator {
    pub fn at(&self, t_s: f64) -> (f64, f64) {
        match self {
            Locator::Fixed(p) => *p,
            Locator::Carried(path) => path.at(t_s),
        }
    }
}

impl Scenario {
    pub fn from_toml(text: &str) -> Result<Self, SimError> {
        let s: Scenario = toml::from_str(text).map_err(|e| SimError::Scenario {
            path: "<toml>".into(),
            message: e.to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    pub fn start_us(&self) -> u64 {
        self.start.as_deref().and_then(parse_iso).unwrap_or(SIM_EPOCH_US)
    }

    pub fn start_weekday(&self) -> u32 {
        weekday(self.start_us())
    }

    pub fn n_windows(&self) -> usize {
        (self.duration_s / u64::from(self.window_s)) as usize
    }

    pub fn access_point(&self) -> Option<&DeviceSpec> {
        self.devices.iter().find(|d| d.access_point)
    }

    pub fn device(&self, mac: &MacAddress) -> Option<&DeviceSpec> {
        self.devices.iter().find(|d| d.mac == *mac)
    }

    pub fn path_of(&self, inhabitant: &str) -> Option<Path> {
        let spec = self.inhabitants.iter().find(|i| i.name == inhabitant)?;
        let mut points: Vec<(f64, f64, f64)> = spec
            .path
            .iter()
            .map(|(c, x, y)| parse_clock(c).map(|t| (t as f64, *x, *y)))
            .collect::<Option<_>>()?;
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Some(Path { points })
    }

    pub fn locator(&self, device: &DeviceSpec) -> Locator {
        match (&device.position, &device.carried_by) {
            (Some(p), _) => Locator::Fixed((p[0], p[1])),
            (None, Some(who)) => self.path_of(who).map_or(Locator::Fixed((0.0, 0.0)), Locator::Carried),
            (None, None) => Locator::Fixed((0.0, 0.0)),
        }
    }

    /// Position of a device `t_s` seconds after the start.
    pub fn position_of(&self, device: &DeviceSpec, t_s: f64) -> (f64, f64) {
        self.locator(device).at(t_s)
    }

    pub fn room_at(&self, p: (f64, f64)) -> Option<&RoomSpec> {
        self.rooms.iter().find(|r| r.contains(p))
    }

    pub fn expected_kind(&self, device: &DeviceSpec) -> Option<DeviceKind> {
        device.expected_kind.as_deref().and_then(DeviceKind::parse)
    }

    fn validate(&self) -> Result<(), SimError> {
        let fail = |path: String, message: &str| {
            Err(SimError::Scenario {
                path,
                message: message.to_string(),
            })
        };
        if self.duration_s == 0 {
            return fail("duration_s".into(), "must be positive");
        }
        if self.window_s == 0 || self.duration_s % u64::from(self.window_s) != 0 {
            return fail("window_s".into(), "must be positive and divide duration_s");
        }
        if !(self.channel.n > 0.0) || !(self.channel.sigma_db >= 0.0) || !(self.channel.wall_db >= 0.0) {
            return fail("channel".into(), "n must be positive, sigma_db and wall_db non-negative");
        }
        if self.sniffers.len() < 3 {
            return fail("sniffers".into(), "at least three sniffers are required");
        }
        for (i, r) in self.rooms.iter().enumerate() {
            if !(r.x1 > r.x0 && r.y1 > r.y0) {
                return fail(format!("rooms[{i}]"), "empty rectangle");
            }
        }
        let clock_ok = |s: &str| parse_clock(s).is_some();
        for (i, inh) in self.inhabitants.iter().enumerate() {
            if inh.path.is_empty() {
                return fail(format!("inhabitants[{i}].path"), "needs at least one waypoint");
            }
            for (j, (c, _, _)) in inh.path.iter().enumerate() {
                if !clock_ok(c) {
                    return fail(format!("inhabitants[{i}].path[{j}]"), "bad clock time");
                }
            }
            for (j, (_, span)) in inh.activities.iter().enumerate() {
                if span.parse::<Span>().is_err() {
                    return fail(format!("inhabitants[{i}].activities[{j}]"), "bad time span");
                }
            }
        }
        let mut seen = std::collections::BTreeSet::new();
        let has_ap = self.devices.iter().any(|d| d.access_point);
        for (i, d) in self.devices.iter().enumerate() {
            let at = |field: &str| format!("devices[{i}].{field}");
            if !seen.insert(d.mac) {
                return fail(at("mac"), "duplicate device");
            }
            if d.mac.is_multicast() {
                return fail(at("mac"), "must be unicast");
            }
            match (&d.position, &d.carried_by) {
                (Some(_), None) => {}
                (None, Some(who)) if self.inhabitants.iter().any(|h| &h.name == who) => {}
                (None, Some(_)) => return fail(at("carried_by"), "unknown inhabitant"),
                _ => return fail(at("position"), "exactly one of position and carried_by"),
            }
            if !d.p0_dbm.is_finite() {
                return fail(at("p0_dbm"), "must be finite");
            }
            if d.access_point && !(d.beacon_interval_s > 0.0) {
                return fail(at("beacon_interval_s"), "must be positive");
            }
            if !d.access_point && !has_ap && d.bssid.is_none() {
                return fail(at("bssid"), "no access point to associate with");
            }
            if let Some(k) = &d.expected_kind {
                if DeviceKind::parse(k).is_none() {
                    return fail(at("expected_kind"), "smart, manual or unknown");
                }
            }
            if let Some(m) = &d.traffic {
                validate_model(m).map_err(|(f, msg)| SimError::Scenario {
                    path: at(&format!("traffic.{f}")),
                    message: msg.into(),
                })?;
            }
            if let Some(p) = &d.probes {
                if !(p.interval_s > 0.0) {
                    return fail(at("probes.interval_s"), "must be positive");
                }
            }
            if let Some(b) = &d.ble {
                if !(b.interval_s > 0.0) {
                    return fail(at("ble.interval_s"), "must be positive");
                }
                if let Some(h) = &b.manufacturer_hex {
                    if hex::decode(h).map_or(true, |v| v.len() < 2) {
                        return fail(at("ble.manufacturer_hex"), "hex with at least two octets");
                    }
                }
            }
        }
        if let Some(s) = &self.survey {
            if let Some(m) = &s.device {
                if self.device(m).is_none() {
                    return fail("survey.device".into(), "unknown device");
                }
            }
        }
        Ok(())
    }
}

fn validate_model(m: &TrafficModel) -> Result<(), (&'static str, &'static str)> {
    let spans_ok = |v: &[String]| v.iter().all(|s| s.parse::<Span>().is_ok());
    let positive = |x: f64| x > 0.0 && x.is_finite();
    match m {
        TrafficModel::Periodic { interval_s, phase_s, .. } => {
            if !positive(*interval_s) {
                return Err(("interval_s", "must be positive"));
            }
            if phase_s.is_some_and(|p| !(p >= 0.0)) {
                return Err(("phase_s", "must be non-negative"));
            }
        }
        TrafficModel::Multimedia {
            on,
            active,
            burst_rate,
            idle_rate,
            keepalive_s,
            down_fraction,
            ..
        } => {
            if !spans_ok(on) {
                return Err(("on", "bad time span"));
            }
            if !spans_ok(active) {
                return Err(("active", "bad time span"));
            }
            if !positive(*burst_rate) {
                return Err(("burst_rate", "must be positive"));
            }
            if !(*idle_rate >= 0.0) {
                return Err(("idle_rate", "must be non-negative"));
            }
            if keepalive_s.is_some_and(|k| !positive(k)) {
                return Err(("keepalive_s", "must be positive"));
            }
            if !(0.0..=1.0).contains(down_fraction) {
                return Err(("down_fraction", "must lie in [0, 1]"));
            }
        }
        TrafficModel::Streaming {
            on,
            active,
            rate,
            keepalive_s,
            ..
        } => {
            if !spans_ok(on) {
                return Err(("on", "bad time span"));
            }
            if !spans_ok(active) {
                return Err(("active", "bad time span"));
            }
            if !positive(*rate) {
                return Err(("rate", "must be positive"));
            }
            if keepalive_s.is_some_and(|k| !positive(k)) {
                return Err(("keepalive_s", "must be positive"));
            }
        }
    }
    Ok(())
}

pub const FLAT: &str = include_str!("../../data/scenarios/flat.toml");
pub const GUEST_VISIT: &str = include_str!("../../data/scenarios/guest_visit.toml");
pub const FOUR_ZONE: &str = include_str!("../../data/scenarios/four_zone.toml");
pub const WEEKLY_ROUTINE: &str = include_str!("../../data/scenarios/weekly_routine.toml");

pub const BUNDLED: [(&str, &str); 4] = [
    ("flat", FLAT),
    ("guest_visit", GUEST_VISIT),
    ("four_zone", FOUR_ZONE),
    ("weekly_routine", WEEKLY_ROUTINE),
];

pub fn bundled(name: &str) -> Option<Scenario> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| Scenario::from_toml(text).expect("bundled scenarios are valid"))
}
