//! End-to-end analysis of one capture: identification, states, positions,
//! zones, routines and activities on a single window grid.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::ble::BleAdvRecord;
use crate::har::{
    detect_guests, detect_sleep_wake, evaluate_rules, ActivityEvent, DeviceTrack, GuestEvent, Grid, HarError, Rule,
    SleepWake,
};
use crate::identity::{
    build_profiles, filter_network, probe_inventory, DeviceKind, DeviceProfile, OuiDatabase, ProbeInventory,
    ProfileOptions,
};
use crate::mac::MacAddress;
use crate::rf::{
    build_fingerprints, classify_stationarity, match_zone, trilaterate, PathLossParams, PositionEstimate,
    RfError, SnifferLayout, StationarityConfig, StationarityReport, TrilaterationOptions, ZoneModel,
};
use crate::time::{midnight_floor, DAY_US, US_PER_S};
use crate::traffic::{
    aggregate_windows, classify_device_kind, classify_states, compute_threshold, dedup_frames, frames_by_device,
    presence_intervals, weekly_routine, KindConfig, PresenceIntervals, RoutineConfig, StateConfig, StateTimeline,
    TrafficError, TrafficSeries, WeeklyRoutine, DEFAULT_GAP_S,
};
use crate::wire::{FrameRecord, FrameType};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Traffic(#[from] TrafficError),
    #[error(transparent)]
    Rf(#[from] RfError),
    #[error(transparent)]
    Har(#[from] HarError),
    #[error("window of {0} s does not fit the day")]
    Window(u32),
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    /// Network to analyze; the busiest access point when unset.
    pub bssid: Option<MacAddress>,
    pub window_s: u32,
    /// Grid origin; local midnight before the first frame when unset.
    pub start_us: Option<u64>,
    /// Grid length; enough to cover the last frame when unset.
    pub n_windows: Option<usize>,
    pub layout: Option<SnifferLayout>,
    pub pathloss: PathLossParams,
    pub zones: Option<ZoneModel>,
    /// Zones whose matches are reported but marked unreliable, such as
    /// the room the sniffers sit in.
    pub low_confidence_zones: BTreeSet<String>,
    pub rules: Vec<Rule>,
    /// Start of guest observation; stations seen before it form the
    /// baseline. Defaults to the end of the first day on captures of two
    /// days or more.
    pub observe_from_us: Option<u64>,
    pub oui: OuiDatabase,
    pub profile_options: ProfileOptions,
    pub off_gap_windows: usize,
    pub kind: KindConfig,
    pub stationarity: StationarityConfig,
    pub trilateration: TrilaterationOptions,
    pub presence_gap_s: u64,
    /// Smoothing span for plot data, in windows.
    pub smoothing_windows: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            bssid: None,
            window_s: 10,
            start_us: None,
            n_windows: None,
            layout: None,
            pathloss: PathLossParams::default(),
            zones: None,
            low_confidence_zones: BTreeSet::new(),
            rules: Vec::new(),
            observe_from_us: None,
            oui: OuiDatabase::default(),
            profile_options: ProfileOptions::default(),
            off_gap_windows: StateConfig::DEFAULT_OFF_GAP,
            kind: KindConfig::default(),
            stationarity: StationarityConfig::default(),
            trilateration: TrilaterationOptions::default(),
            presence_gap_s: DEFAULT_GAP_S,
            smoothing_windows: 31,
        }
    }
}

/// Coarse device type guessed from what the device leaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum DeviceType {
    Router,
    SmartTv,
    GamingConsole,
    Laptop,
    Smartphone,
    Sensor,
    SmartDevice,
    Multimedia,
    Unknown,
}

impl DeviceType {
    /// Short label used by rule selectors.
    pub fn label(self) -> &'static str {
        match self {
            DeviceType::Router => "router",
            DeviceType::SmartTv => "tv",
            DeviceType::GamingConsole => "console",
            DeviceType::Laptop => "laptop",
            DeviceType::Smartphone => "phone",
            DeviceType::Sensor => "sensor",
            DeviceType::SmartDevice => "smart",
            DeviceType::Multimedia => "multimedia",
            DeviceType::Unknown => "unknown",
        }
    }

    pub fn display(self) -> &'static str {
        match self {
            DeviceType::Router => "Router",
            DeviceType::SmartTv => "Smart TV",
            DeviceType::GamingConsole => "Gaming console",
            DeviceType::Laptop => "Laptop",
            DeviceType::Smartphone => "Smartphone",
            DeviceType::Sensor => "Sensor",
            DeviceType::SmartDevice => "Smart device",
            DeviceType::Multimedia => "Multimedia",
            DeviceType::Unknown => "Unknown",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeGuess {
    pub device_type: DeviceType,
    pub model: Option<String>,
    /// What gave the type away.
    pub source: &'static str,
}

const LAPTOP_VENDORS: &[&str] = &["intel", "dell", "lenovo", "hewlett", "asustek", "acer"];
const PHONE_VENDORS: &[&str] = &["xiaomi", "samsung", "huawei", "oneplus", "oppo", "motorola"];
const SENSOR_NAMES: &[&str] = &["sensor", "motion", "plusht", "h&t", "temp"];

fn vendor_has(vendor: Option<&str>, needles: &[&str]) -> bool {
    vendor.is_some_and(|v| {
        let v = v.to_ascii_lowercase();
        needles.iter().any(|n| v.contains(n))
    })
}

/// Guesses a type from addressing, BLE name, OUI vendor and, failing
/// those, the day/night traffic pattern.
pub fn infer_type(profile: &DeviceProfile, kind: DeviceKind) -> TypeGuess {
    let vendor = profile.vendor.as_deref();
    let model = profile.ble_name.clone();
    let guess = |device_type, source| TypeGuess { device_type, model: model.clone(), source };
    if profile.is_access_point() {
        return guess(DeviceType::Router, "mac address & addressing");
    }
    if let Some(name) = &profile.ble_name {
        let lower = name.to_ascii_lowercase();
        if lower.split(|c: char| !c.is_ascii_alphanumeric()).any(|w| w == "tv") {
            return guess(DeviceType::SmartTv, "BLE");
        }
        if SENSOR_NAMES.iter().any(|n| lower.contains(n)) {
            return guess(DeviceType::Sensor, "BLE");
        }
    }
    if vendor_has(vendor, &["nintendo"]) {
        return guess(DeviceType::GamingConsole, "mac address");
    }
    if kind == DeviceKind::ManuallyControlled {
        if vendor_has(vendor, LAPTOP_VENDORS) {
            return guess(DeviceType::Laptop, "mac address");
        }
        if vendor_has(vendor, PHONE_VENDORS) {
            return guess(DeviceType::Smartphone, "mac address");
        }
    }
    let source = if model.is_some() { "BLE" } else { "traffic pattern" };
    match kind {
        DeviceKind::Smart => guess(DeviceType::SmartDevice, source),
        DeviceKind::ManuallyControlled => guess(DeviceType::Multimedia, source),
        DeviceKind::Unknown => guess(DeviceType::Unknown, source),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ZoneEstimate {
    pub label: String,
    pub distance_db: f64,
    pub low_confidence: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackPoint {
    pub window: usize,
    pub estimate: PositionEstimate,
    pub zone: Option<ZoneEstimate>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviceAnalysis {
    pub profile: DeviceProfile,
    pub guess: TypeGuess,
    pub series: TrafficSeries,
    pub threshold: f64,
    pub timeline: StateTimeline,
    pub stationarity: Option<StationarityReport>,
    /// Windows with a usable fingerprint, in grid order.
    pub track: Vec<TrackPoint>,
    pub presence: PresenceIntervals,
    pub routine: Option<WeeklyRoutine>,
}

impl DeviceAnalysis {
    /// Zone label per grid window; unreliable matches left out.
    pub fn zone_track(&self, n_windows: usize) -> Vec<Option<String>> {
        let mut out = vec![None; n_windows];
        for p in &self.track {
            if let Some(z) = p.zone.as_ref().filter(|z| !z.low_confidence) {
                out[p.window] = Some(z.label.clone());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DaySleep {
    pub day_start_us: u64,
    pub sleep_wake: Option<SleepWake>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub bssid: Option<MacAddress>,
    pub grid: Grid,
    pub devices: BTreeMap<MacAddress, DeviceAnalysis>,
    pub events: Vec<ActivityEvent>,
    pub sleep: Vec<DaySleep>,
    pub guests: Vec<GuestEvent>,
    pub probes: ProbeInventory,
}

impl Analysis {
    pub fn whole_days(&self) -> usize {
        (self.grid.n_windows as u64 * self.grid.window_us() / DAY_US) as usize
    }
}

/// The access point carrying the most data frames.
pub fn busiest_access_point(frames: &[FrameRecord]) -> Option<MacAddress> {
    let mut counts: BTreeMap<MacAddress, usize> = BTreeMap::new();
    for f in frames.iter().filter(|f| f.fc.ftype == FrameType::Data) {
        if let Some(b) = f.addrs.bssid.filter(|b| !b.is_multicast()) {
            *counts.entry(b).or_default() += 1;
        }
    }
    counts.into_iter().max_by_key(|&(m, n)| (n, std::cmp::Reverse(m))).map(|(m, _)| m)
}

fn grid_for(frames: &[FrameRecord], config: &PipelineConfig) -> Result<Grid, PipelineError> {
    if config.window_s == 0 {
        return Err(PipelineError::Window(0));
    }
    let window_us = u64::from(config.window_s) * US_PER_S;
    let first = frames.iter().map(FrameRecord::ts_us).min();
    let last = frames.iter().map(FrameRecord::ts_us).max();
    let start_us = config.start_us.or(first.map(midnight_floor)).unwrap_or(0);
    let n_windows = config.n_windows.unwrap_or_else(|| match last {
        Some(l) if l >= start_us => ((l + 1 - start_us).div_ceil(window_us)) as usize,
        _ => 0,
    });
    Ok(Grid { start_us, window_s: config.window_s, n_windows })
}

fn routine_config(window_s: u32) -> RoutineConfig {
    let mut c = RoutineConfig::default();
    if 86_400 % u64::from(window_s) == 0 {
        c.cell_s = u64::from(window_s);
    }
    c
}

pub fn analyze(frames: &[FrameRecord], ble: &[BleAdvRecord], config: &PipelineConfig) -> Result<Analysis, PipelineError> {
    let bssid = config.bssid.or_else(|| busiest_access_point(frames));
    let network = match bssid {
        Some(b) => filter_network(frames, b, true),
        None => Vec::new(),
    };
    let grid = grid_for(&network, config)?;
    let end_us = grid.window_start(grid.n_windows);
    let in_grid: Vec<FrameRecord> = network
        .into_iter()
        .filter(|f| (grid.start_us..end_us).contains(&f.ts_us()))
        .collect();
    let mut profiles = build_profiles(&in_grid, ble, &config.oui, config.profile_options);
    let dedup = dedup_frames(&in_grid);
    let aps: BTreeSet<MacAddress> = bssid.into_iter().collect();
    let by_device = frames_by_device(&dedup, &aps);

    let fingerprints = match &config.layout {
        Some(layout) if grid.n_windows > 0 => build_fingerprints(&in_grid, layout, grid.window_s, grid.start_us),
        _ => BTreeMap::new(),
    };
    let n_days = (grid.n_windows as u64 * grid.window_us() / DAY_US) as usize;
    let routine_cfg = routine_config(grid.window_s);
    let state_gap = config.off_gap_windows;

    let mut devices = BTreeMap::new();
    if grid.n_windows > 0 {
        for (mac, profile) in profiles.iter_mut() {
            let own = by_device.get(mac).map(Vec::as_slice).unwrap_or(&[]);
            let series = aggregate_windows(*mac, own.iter().copied(), grid.window_s, grid.start_us, end_us)?;
            let threshold = compute_threshold(&series);
            let timeline = classify_states(&series, &StateConfig::with_gap(threshold, state_gap)?);
            profile.kind = classify_device_kind(&series, &config.kind).unwrap_or(DeviceKind::Unknown);
            let guess = infer_type(profile, profile.kind);
            profile.labels.insert(guess.device_type.label().to_string());

            let fps = fingerprints.get(mac).map(Vec::as_slice).unwrap_or(&[]);
            let stationarity = classify_stationarity(fps, &config.stationarity).ok();
            let mut track = Vec::new();
            if let Some(layout) = &config.layout {
                for fp in fps.iter().filter(|f| f.usable()) {
                    let estimate = match trilaterate(fp, layout, &config.pathloss, config.trilateration) {
                        Ok(e) => e,
                        Err(RfError::DegenerateLayout) => break,
                        Err(e) => return Err(e.into()),
                    };
                    let zone = config.zones.as_ref().and_then(|m| match_zone(m, fp).ok()).map(|m| ZoneEstimate {
                        low_confidence: config.low_confidence_zones.contains(&m.label),
                        label: m.label,
                        distance_db: m.distance_db,
                    });
                    let window = ((fp.window_start_us - grid.start_us) / grid.window_us()) as usize;
                    track.push(TrackPoint { window, estimate, zone });
                }
            }
            let presence = presence_intervals(&series, config.presence_gap_s.max(u64::from(grid.window_s)))?;
            let routine = (n_days >= routine_cfg.min_days && profile.kind == DeviceKind::ManuallyControlled)
                .then(|| weekly_routine(&presence, grid.start_us, n_days, &routine_cfg))
                .transpose()?;
            devices.insert(
                *mac,
                DeviceAnalysis {
                    profile: profile.clone(),
                    guess,
                    series,
                    threshold,
                    timeline,
                    stationarity,
                    track,
                    presence,
                    routine,
                },
            );
        }
    }

    let tracks: Vec<DeviceTrack> = devices
        .values()
        .filter(|d| !d.profile.is_access_point())
        .map(|d| DeviceTrack {
            mac: d.profile.mac,
            kind: d.profile.kind,
            labels: d.profile.labels.clone(),
            states: d.timeline.states.clone(),
            zones: if d.track.is_empty() { Vec::new() } else { d.zone_track(grid.n_windows) },
        })
        .collect();
    let events = evaluate_rules(&config.rules, &grid, &tracks)?;

    let manual: Vec<&StateTimeline> = devices
        .values()
        .filter(|d| d.profile.kind == DeviceKind::ManuallyControlled)
        .map(|d| &d.timeline)
        .collect();
    let first_day = midnight_floor(grid.start_us);
    let sleep = (0..n_days as u64)
        .map(|d| first_day + d * DAY_US)
        .map(|day_start_us| DaySleep {
            day_start_us,
            sleep_wake: detect_sleep_wake(&manual, day_start_us),
        })
        .collect();

    let observe_from = config
        .observe_from_us
        .or((n_days >= 2).then_some(grid.start_us + DAY_US));
    let guests = match (bssid, observe_from) {
        (Some(b), Some(from)) if from < end_us => {
            let baseline: BTreeSet<MacAddress> = dedup
                .iter()
                .filter(|f| f.fc.ftype == FrameType::Data && f.ts_us() < from)
                .map(|f| f.station())
                .collect();
            detect_guests(&dedup, b, &baseline, from, end_us, grid.window_s)?
        }
        _ => Vec::new(),
    };

    Ok(Analysis {
        bssid,
        grid,
        devices,
        events,
        sleep,
        guests,
        probes: probe_inventory(&in_grid),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identity::LABEL_ACCESS_POINT;

    fn profile(vendor: Option<&str>, ble: Option<&str>) -> DeviceProfile {
        DeviceProfile {
            mac: MacAddress::default(),
            vendor: vendor.map(str::to_string),
            randomized_mac: false,
            ble_name: ble.map(str::to_string),
            ble_services: Vec::new(),
            ble_company_id: None,
            first_seen: 0,
            last_seen: 0,
            frame_count: 1,
            kind: DeviceKind::Unknown,
            labels: BTreeSet::new(),
        }
    }

    #[test]
    fn type_guesses() {
        let t = |p: &DeviceProfile, k| infer_type(p, k).device_type;
        let mut router = profile(Some("TP-LINK"), None);
        router.labels.insert(LABEL_ACCESS_POINT.into());
        assert_eq!(t(&router, DeviceKind::Smart), DeviceType::Router);
        let tv = profile(Some("LG Electronics"), Some("[LG] webOS TV UQ75009LF"));
        assert_eq!(t(&tv, DeviceKind::ManuallyControlled), DeviceType::SmartTv);
        assert_eq!(infer_type(&tv, DeviceKind::ManuallyControlled).source, "BLE");
        assert_eq!(t(&profile(Some("Intel Corporate"), None), DeviceKind::ManuallyControlled), DeviceType::Laptop);
        assert_eq!(t(&profile(Some("Intel Corporate"), None), DeviceKind::Smart), DeviceType::SmartDevice);
        assert_eq!(t(&profile(Some("Nintendo Co.,Ltd"), None), DeviceKind::Unknown), DeviceType::GamingConsole);
        assert_eq!(t(&profile(None, Some("ShellyPlusHT-08B61F")), DeviceKind::Smart), DeviceType::Sensor);
        assert_eq!(t(&profile(None, None), DeviceKind::ManuallyControlled), DeviceType::Multimedia);
    }

    #[test]
    fn empty_capture() {
        let a = analyze(&[], &[], &PipelineConfig::default()).unwrap();
        assert_eq!(a.grid.n_windows, 0);
        assert!(a.devices.is_empty() && a.events.is_empty() && a.guests.is_empty());
    }
}
