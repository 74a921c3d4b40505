use std::cmp::Reverse;
use std::collections::BTreeSet;

use super::rules::{Condition, Rule, Selector, Target};
use super::HarError;
use crate::identity::DeviceKind;
use crate::mac::MacAddress;
use crate::time::{second_of_day, US_PER_S};
use crate::traffic::DeviceState;

/// Shared window grid of all inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grid {
    pub start_us: u64,
    pub window_s: u32,
    pub n_windows: usize,
}

impl Grid {
    pub fn window_us(&self) -> u64 {
        u64::from(self.window_s) * US_PER_S
    }

    pub fn window_start(&self, i: usize) -> u64 {
        self.start_us + i as u64 * self.window_us()
    }
}

/// One device's per-window states and, when localized, zones.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceTrack {
    pub mac: MacAddress,
    pub kind: DeviceKind,
    pub labels: BTreeSet<String>,
    pub states: Vec<DeviceState>,
    /// Empty when the device has no zone estimates at all.
    pub zones: Vec<Option<String>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityEvent {
    pub label: String,
    pub rule: String,
    pub priority: i32,
    pub start_us: u64,
    pub end_us: u64,
    /// Smallest condition fraction achieved while the rule fired.
    pub confidence: f64,
    pub evidence: Vec<String>,
}

fn selects(sel: &Selector, d: &DeviceTrack) -> bool {
    match &sel.target {
        Target::Mac(m) => d.mac == *m,
        Target::Kind(k) => d.kind == *k,
        Target::Label(l) => d.labels.contains(l),
    }
}

fn prefix(flags: impl Iterator<Item = bool>) -> Vec<u32> {
    let mut out = vec![0];
    let mut acc = 0;
    for f in flags {
        acc += u32::from(f);
        out.push(acc);
    }
    out
}

/// Per-device prefix counts of a condition's hits and of the windows it
/// can be judged on.
struct DeviceCounts {
    mac: MacAddress,
    hits: Vec<u32>,
    judged: Option<Vec<u32>>,
    what: String,
}

impl DeviceCounts {
    fn fraction(&self, i: usize, m: usize) -> f64 {
        let hits = f64::from(self.hits[i + m] - self.hits[i]);
        let judged = match &self.judged {
            Some(j) => f64::from(j[i + m] - j[i]),
            None => m as f64,
        };
        if judged == 0.0 {
            0.0
        } else {
            hits / judged
        }
    }
}

enum Prepared {
    Devices {
        all: bool,
        min: f64,
        devices: Vec<DeviceCounts>,
    },
    Time(Vec<u32>),
}

fn prepare(c: &Condition, grid: &Grid, devices: &[DeviceTrack]) -> Prepared {
    match c {
        Condition::DeviceState {
            selector,
            states,
            min_fraction,
        } => Prepared::Devices {
            all: selector.all,
            min: *min_fraction,
            devices: devices
                .iter()
                .filter(|d| selects(selector, d))
                .map(|d| DeviceCounts {
                    mac: d.mac,
                    hits: prefix(d.states.iter().map(|s| states.contains(s))),
                    judged: None,
                    what: states.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("|"),
                })
                .collect(),
        },
        Condition::DeviceZone {
            selector,
            zone,
            min_fraction,
        } => Prepared::Devices {
            all: selector.all,
            min: *min_fraction,
            devices: devices
                .iter()
                .filter(|d| selects(selector, d) && !d.zones.is_empty())
                .map(|d| DeviceCounts {
                    mac: d.mac,
                    hits: prefix(d.zones.iter().map(|z| z.as_deref() == Some(zone.as_str()))),
                    judged: Some(prefix(d.zones.iter().map(Option::is_some))),
                    what: format!("in {zone}"),
                })
                .collect(),
        },
        Condition::TimeOfDay { start_s, end_s } => Prepared::Time(prefix(
            (0..grid.n_windows).map(|i| Condition::time_contains(*start_s, *end_s, second_of_day(grid.window_start(i)))),
        )),
    }
}

/// Achieved fraction of one condition over windows `[i, i+m)`, and the
/// devices that met it, or `None` when the condition fails.
fn check(p: &Prepared, i: usize, m: usize) -> Option<(f64, Vec<String>)> {
    match p {
        Prepared::Time(pre) => (pre[i + m] - pre[i] == m as u32).then(|| (1.0, Vec::new())),
        Prepared::Devices { all, min, devices } => {
            if devices.is_empty() {
                return None;
            }
            let fr: Vec<f64> = devices.iter().map(|d| d.fraction(i, m)).collect();
            let passing: Vec<String> = devices
                .iter()
                .zip(&fr)
                .filter(|(_, f)| **f >= *min)
                .map(|(d, _)| format!("{} {}", d.mac, d.what))
                .collect();
            if *all {
                (passing.len() == devices.len()).then(|| (fr.iter().copied().fold(f64::INFINITY, f64::min), passing))
            } else {
                let best = fr.iter().copied().filter(|f| f >= min).fold(f64::NEG_INFINITY, f64::max);
                (!passing.is_empty()).then_some((best, passing))
            }
        }
    }
}

/// Slides each rule's minimum duration over the grid. Overlapping or
/// adjacent firings of one rule merge into a single event; different
/// rules may overlap and are all reported, ordered by start time, then by
/// descending priority.
pub fn evaluate_rules(rules: &[Rule], grid: &Grid, devices: &[DeviceTrack]) -> Result<Vec<ActivityEvent>, HarError> {
    for d in devices {
        if d.states.len() != grid.n_windows || (!d.zones.is_empty() && d.zones.len() != grid.n_windows) {
            return Err(HarError::GridMismatch(format!(
                "device {} has {} states and {} zones on a grid of {} windows",
                d.mac,
                d.states.len(),
                d.zones.len(),
                grid.n_windows
            )));
        }
    }
    let mut events = Vec::new();
    for rule in rules {
        let m = (rule.min_duration_s.div_ceil(u64::from(grid.window_s.max(1))) as usize).max(1);
        if m > grid.n_windows {
            continue;
        }
        let prepared: Vec<Prepared> = rule.conditions.iter().map(|c| prepare(c, grid, devices)).collect();
        let mut current: Option<(usize, usize, f64, BTreeSet<String>)> = None;
        for i in 0..=grid.n_windows - m {
            let mut conf = f64::INFINITY;
            let mut evidence = Vec::new();
            let fired = prepared.iter().all(|p| match check(p, i, m) {
                Some((f, ev)) => {
                    conf = conf.min(f);
                    evidence.extend(ev);
                    true
                }
                None => false,
            });
            if !fired {
                continue;
            }
            match &mut current {
                Some((_, end, c, ev)) if i <= *end => {
                    *end = i + m;
                    *c = c.min(conf);
                    ev.extend(evidence);
                }
                _ => {
                    if let Some(done) = current.take() {
                        events.push(finish(rule, grid, done));
                    }
                    current = Some((i, i + m, conf, evidence.into_iter().collect()));
                }
            }
        }
        if let Some(done) = current {
            events.push(finish(rule, grid, done));
        }
    }
    events.sort_by(|a, b| {
        (a.start_us, Reverse(a.priority), &a.rule).cmp(&(b.start_us, Reverse(b.priority), &b.rule))
    });
    Ok(events)
}

fn finish(rule: &Rule, grid: &Grid, (s, e, conf, ev): (usize, usize, f64, BTreeSet<String>)) -> ActivityEvent {
    ActivityEvent {
        label: rule.emit_label.clone(),
        rule: rule.name.clone(),
        priority: rule.priority,
        start_us: grid.window_start(s),
        end_us: grid.window_start(e),
        confidence: conf,
        evidence: ev.into_iter().collect(),
    }
}
