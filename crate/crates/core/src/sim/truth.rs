//! Ground truth on the scenario's window grid and its delimited-text form.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::SimError;
use crate::identity::DeviceKind;
use crate::mac::MacAddress;
use crate::time::{iso, parse_iso, US_PER_S};
use crate::traffic::DeviceState;

pub const OUTSIDE: &str = "outside";

#[derive(Debug, Clone, PartialEq)]
pub struct TruthDevice {
    pub mac: MacAddress,
    pub name: String,
    pub kind_label: String,
    pub expected_kind: Option<DeviceKind>,
    pub carried: bool,
    pub guest: bool,
    /// Has scripted active spans.
    pub scripted: bool,
    pub access_point: bool,
    pub network: MacAddress,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthActivity {
    pub label: String,
    pub start_us: u64,
    pub end_us: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TruthGuest {
    pub mac: MacAddress,
    pub arrival_us: u64,
    pub departure_us: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub start_us: u64,
    pub window_s: u32,
    pub n_windows: usize,
    pub devices: Vec<TruthDevice>,
    pub states: BTreeMap<MacAddress, Vec<DeviceState>>,
    /// Position at each window's midpoint.
    pub positions: BTreeMap<MacAddress, Vec<(f64, f64)>>,
    /// Room label at each window's midpoint, [`OUTSIDE`] when in none.
    pub zones: BTreeMap<MacAddress, Vec<String>>,
    pub excluded_zones: Vec<String>,
    pub activities: Vec<TruthActivity>,
    pub guests: Vec<TruthGuest>,
}

fn bad(file: &str, line: usize, message: impl Into<String>) -> SimError {
    SimError::Truth {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

fn flag(b: bool) -> &'static str {
    if b {
        "1"
    } else {
        "0"
    }
}

impl GroundTruth {
    pub fn window_us(&self) -> u64 {
        u64::from(self.window_s) * US_PER_S
    }

    pub fn window_start(&self, i: usize) -> u64 {
        self.start_us + i as u64 * self.window_us()
    }

    pub fn device(&self, mac: &MacAddress) -> Option<&TruthDevice> {
        self.devices.iter().find(|d| d.mac == *mac)
    }

    /// Header lines, device table, activities and guests.
    pub fn meta_tsv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "#start\t{}\n#window_s\t{}\n#windows\t{}",
            iso(self.start_us),
            self.window_s,
            self.n_windows
        );
        for z in &self.excluded_zones {
            let _ = writeln!(out, "#excluded\t{z}");
        }
        for d in &self.devices {
            let _ = writeln!(
                out,
                "device\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
                d.mac,
                d.name,
                d.kind_label,
                d.expected_kind.map_or("-", DeviceKind::as_str),
                flag(d.carried),
                flag(d.guest),
                flag(d.scripted),
                flag(d.access_point),
                d.network
            );
        }
        for a in &self.activities {
            let _ = writeln!(out, "activity\t{}\t{}\t{}", a.label, iso(a.start_us), iso(a.end_us));
        }
        for g in &self.guests {
            let _ = writeln!(out, "guest\t{}\t{}\t{}", g.mac, iso(g.arrival_us), iso(g.departure_us));
        }
        out
    }

    /// One row per window and device.
    pub fn grid_tsv(&self) -> String {
        let mut out = String::from("window_start\tdevice\tx\ty\tstate\tzone\n");
        for i in 0..self.n_windows {
            let ts = iso(self.window_start(i));
            for d in &self.devices {
                let (x, y) = self.positions[&d.mac][i];
                let _ = writeln!(
                    out,
                    "{ts}\t{}\t{x}\t{y}\t{}\t{}",
                    d.mac,
                    self.states[&d.mac][i].as_str(),
                    self.zones[&d.mac][i]
                );
            }
        }
        out
    }

    pub fn from_tsv(meta: &str, grid: &str) -> Result<Self, SimError> {
        const META: &str = "truth_meta.tsv";
        const GRID: &str = "truth.tsv";
        let mut t = GroundTruth {
            start_us: 0,
            window_s: 0,
            n_windows: 0,
            devices: Vec::new(),
            states: BTreeMap::new(),
            positions: BTreeMap::new(),
            zones: BTreeMap::new(),
            excluded_zones: Vec::new(),
            activities: Vec::new(),
            guests: Vec::new(),
        };
        for (i, line) in meta.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let ln = i + 1;
            let cols: Vec<&str> = line.split('\t').collect();
            let time = |s: &str| parse_iso(s).ok_or_else(|| bad(META, ln, format!("bad time {s:?}")));
            let mac = |s: &str| s.parse::<MacAddress>().map_err(|e| bad(META, ln, e.to_string()));
            let num = |s: &str| s.parse::<u64>().map_err(|_| bad(META, ln, format!("bad number {s:?}")));
            match (cols[0], cols.len()) {
                ("#start", 2) => t.start_us = time(cols[1])?,
                ("#window_s", 2) => t.window_s = num(cols[1])? as u32,
                ("#windows", 2) => t.n_windows = num(cols[1])? as usize,
                ("#excluded", 2) => t.excluded_zones.push(cols[1].to_string()),
                ("device", 10) => t.devices.push(TruthDevice {
                    mac: mac(cols[1])?,
                    name: cols[2].to_string(),
                    kind_label: cols[3].to_string(),
                    expected_kind: DeviceKind::parse(cols[4]),
                    carried: cols[5] == "1",
                    guest: cols[6] == "1",
                    scripted: cols[7] == "1",
                    access_point: cols[8] == "1",
                    network: mac(cols[9])?,
                }),
                ("activity", 4) => t.activities.push(TruthActivity {
                    label: cols[1].to_string(),
                    start_us: time(cols[2])?,
                    end_us: time(cols[3])?,
                }),
                ("guest", 4) => t.guests.push(TruthGuest {
                    mac: mac(cols[1])?,
                    arrival_us: time(cols[2])?,
                    departure_us: time(cols[3])?,
                }),
                _ => return Err(bad(META, ln, "unrecognized line")),
            }
        }
        if t.window_s == 0 {
            return Err(bad(META, 0, "missing #window_s"));
        }
        for d in &t.devices {
            t.states.insert(d.mac, Vec::with_capacity(t.n_windows));
            t.positions.insert(d.mac, Vec::with_capacity(t.n_windows));
            t.zones.insert(d.mac, Vec::with_capacity(t.n_windows));
        }
        for (i, line) in grid.lines().enumerate().skip(1).filter(|(_, l)| !l.trim().is_empty()) {
            let ln = i + 1;
            let cols: Vec<&str> = line.split('\t').collect();
            if cols.len() != 6 {
                return Err(bad(GRID, ln, "expected 6 columns"));
            }
            let mac: MacAddress = cols[1].parse().map_err(|_| bad(GRID, ln, "bad device"))?;
            let f = |s: &str| s.parse::<f64>().map_err(|_| bad(GRID, ln, "bad coordinate"));
            let state = DeviceState::parse(cols[4]).ok_or_else(|| bad(GRID, ln, "bad state"))?;
            let pos = (f(cols[2])?, f(cols[3])?);
            let (Some(s), Some(p), Some(z)) = (
                t.states.get_mut(&mac),
                t.positions.get_mut(&mac),
                t.zones.get_mut(&mac),
            ) else {
                return Err(bad(GRID, ln, "device not declared"));
            };
            s.push(state);
            p.push(pos);
            z.push(cols[5].to_string());
        }
        if t.states.values().any(|s| s.len() != t.n_windows) {
            return Err(bad(GRID, 0, "grid does not cover every window"));
        }
        Ok(t)
    }
}
