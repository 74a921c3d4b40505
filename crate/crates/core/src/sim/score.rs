//! Pipeline outputs measured against simulator ground truth.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::truth::{GroundTruth, OUTSIDE};
use crate::har::Grid;
use crate::identity::DeviceKind;
use crate::mac::MacAddress;
use crate::pipeline::Analysis;
use crate::rf::stationarity::quantile_sorted;
use crate::rf::Mobility;
use crate::traffic::DeviceState;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScoreError {
    #[error("predictions and truth are not on one grid: {0}")]
    GridMismatch(String),
}

/// The parts of an analysis that truth can judge.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Predictions {
    pub grid: Option<Grid>,
    pub states: BTreeMap<MacAddress, Vec<DeviceState>>,
    pub zones: BTreeMap<MacAddress, Vec<Option<String>>>,
    /// `(window, x, y)` per usable estimate.
    pub positions: BTreeMap<MacAddress, Vec<(usize, f64, f64)>>,
    pub mobility: BTreeMap<MacAddress, Mobility>,
    pub kinds: BTreeMap<MacAddress, DeviceKind>,
    /// `(label, start_us, end_us)`.
    pub events: Vec<(String, u64, u64)>,
    /// `(mac, arrival_us, departure_us)`.
    pub guests: Vec<(MacAddress, u64, Option<u64>)>,
}

impl Predictions {
    pub fn from_analysis(a: &Analysis) -> Self {
        let mut p = Predictions {
            grid: Some(a.grid),
            ..Default::default()
        };
        for (mac, d) in &a.devices {
            p.states.insert(*mac, d.timeline.states.clone());
            p.zones.insert(*mac, d.zone_track(a.grid.n_windows));
            p.positions.insert(*mac, d.track.iter().map(|t| (t.window, t.estimate.x, t.estimate.y)).collect());
            if let Some(s) = &d.stationarity {
                p.mobility.insert(*mac, s.mobility);
            }
            p.kinds.insert(*mac, d.profile.kind);
        }
        p.events = a.events.iter().map(|e| (e.label.clone(), e.start_us, e.end_us)).collect();
        p.guests = a.guests.iter().map(|g| (g.mac, g.arrival_us, g.departure_us)).collect();
        p
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Ratio {
    pub hits: u64,
    pub total: u64,
}

impl Ratio {
    pub fn value(&self) -> Option<f64> {
        (self.total > 0).then(|| self.hits as f64 / self.total as f64)
    }

    fn add(&mut self, hit: bool) {
        self.hits += u64::from(hit);
        self.total += 1;
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorQuantiles {
    pub count: usize,
    pub p50: f64,
    pub p90: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GuestScore {
    pub mac: MacAddress,
    pub arrival_error_s: Option<f64>,
    /// `None` when no departure was detected.
    pub departure_error_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Metrics {
    /// Windows of devices with scripted activity.
    pub state_accuracy: Ratio,
    pub state_by_device: BTreeMap<MacAddress, Ratio>,
    /// Windows with a zone estimate of carried devices in scored rooms.
    pub zone_accuracy: Ratio,
    /// Counts keyed by (truth, prediction); prediction `None` when the
    /// device had too little data.
    pub stationarity: BTreeMap<(Mobility, Option<Mobility>), usize>,
    pub position_error_m: Option<ErrorQuantiles>,
    pub kind_accuracy: Ratio,
    /// Seconds of scripted activity covered by an event with its label.
    pub activity_coverage_s: BTreeMap<String, (u64, u64)>,
    pub guests: Vec<GuestScore>,
}

impl Metrics {
    pub fn activity_coverage(&self) -> Option<f64> {
        let (c, t) = self
            .activity_coverage_s
            .values()
            .fold((0, 0), |(c, t), (a, b)| (c + a, t + b));
        (t > 0).then(|| c as f64 / t as f64)
    }

    pub fn stationarity_errors(&self) -> usize {
        self.stationarity
            .iter()
            .filter(|((t, p), _)| Some(*t) != *p)
            .map(|(_, n)| n)
            .sum()
    }

    /// Plain-text rendering with fixed precision.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let pct = |r: &Ratio| r.value().map_or("n/a".to_string(), |v| format!("{:.4}", v));
        let _ = writeln!(out, "state_accuracy\t{}\t{}/{}", pct(&self.state_accuracy), self.state_accuracy.hits, self.state_accuracy.total);
        for (m, r) in &self.state_by_device {
            let _ = writeln!(out, "state_accuracy[{m}]\t{}\t{}/{}", pct(r), r.hits, r.total);
        }
        let _ = writeln!(out, "zone_accuracy\t{}\t{}/{}", pct(&self.zone_accuracy), self.zone_accuracy.hits, self.zone_accuracy.total);
        for ((t, p), n) in &self.stationarity {
            let _ = writeln!(out, "stationarity[{}->{}]\t{n}", t.as_str(), p.map_or("undetermined", Mobility::as_str));
        }
        match &self.position_error_m {
            Some(q) => {
                let _ = writeln!(out, "position_error_m\tp50={:.3}\tp90={:.3}\tmax={:.3}\tn={}", q.p50, q.p90, q.max, q.count);
            }
            None => {
                let _ = writeln!(out, "position_error_m\tn/a");
            }
        }
        let _ = writeln!(out, "kind_accuracy\t{}\t{}/{}", pct(&self.kind_accuracy), self.kind_accuracy.hits, self.kind_accuracy.total);
        let _ = writeln!(
            out,
            "activity_coverage\t{}",
            self.activity_coverage().map_or("n/a".to_string(), |v| format!("{v:.4}"))
        );
        for (label, (c, t)) in &self.activity_coverage_s {
            let _ = writeln!(out, "activity_coverage[{label}]\t{c}/{t} s");
        }
        for g in &self.guests {
            let f = |e: Option<f64>| e.map_or("missed".to_string(), |v| format!("{v:.3}"));
            let _ = writeln!(out, "guest[{}]\tarrival_error_s={}\tdeparture_error_s={}", g.mac, f(g.arrival_error_s), f(g.departure_error_s));
        }
        out
    }
}

/// Length of `[s, e)` covered by the union of `spans`.
fn covered(s: u64, e: u64, spans: &[(u64, u64)]) -> u64 {
    let mut clipped: Vec<(u64, u64)> = spans
        .iter()
        .map(|&(a, b)| (a.max(s), b.min(e)))
        .filter(|(a, b)| a < b)
        .collect();
    clipped.sort_unstable();
    let mut total = 0;
    let mut reach = s;
    for (a, b) in clipped {
        let a = a.max(reach);
        if b > a {
            total += b - a;
            reach = b;
        }
    }
    total
}

fn abs_diff_s(a: u64, b: u64) -> f64 {
    a.abs_diff(b) as f64 / 1e6
}

pub fn score_against_truth(pred: &Predictions, truth: &GroundTruth) -> Result<Metrics, ScoreError> {
    if let Some(g) = pred.grid {
        if (g.start_us, g.window_s, g.n_windows) != (truth.start_us, truth.window_s, truth.n_windows) {
            return Err(ScoreError::GridMismatch(format!(
                "predictions start {} with {} x {} s, truth starts {} with {} x {} s",
                g.start_us, g.n_windows, g.window_s, truth.start_us, truth.n_windows, truth.window_s
            )));
        }
    }
    for (mac, s) in &pred.states {
        if s.len() != truth.n_windows {
            return Err(ScoreError::GridMismatch(format!("{mac} has {} states, truth {}", s.len(), truth.n_windows)));
        }
    }
    let mut m = Metrics::default();
    let mut errors = Vec::new();
    for d in &truth.devices {
        let states = &truth.states[&d.mac];
        if d.scripted {
            let predicted = pred.states.get(&d.mac);
            let r = m.state_by_device.entry(d.mac).or_default();
            for (i, t) in states.iter().enumerate() {
                let p = predicted.map_or(DeviceState::Off, |p| p[i]);
                r.add(p == *t);
                m.state_accuracy.add(p == *t);
            }
        }
        if d.carried {
            if let Some(zones) = pred.zones.get(&d.mac) {
                for (i, z) in zones.iter().enumerate() {
                    let t = &truth.zones[&d.mac][i];
                    let Some(z) = z else { continue };
                    if t == OUTSIDE || truth.excluded_zones.contains(t) {
                        continue;
                    }
                    m.zone_accuracy.add(z == t);
                }
            }
        }
        if pred.states.contains_key(&d.mac) {
            let t = if d.carried { Mobility::Mobile } else { Mobility::Stationary };
            *m.stationarity.entry((t, pred.mobility.get(&d.mac).copied())).or_default() += 1;
        }
        if let (Some(expected), Some(k)) = (d.expected_kind, pred.kinds.get(&d.mac)) {
            m.kind_accuracy.add(expected == *k);
        }
        if let Some(pos) = pred.positions.get(&d.mac) {
            let truth_pos = &truth.positions[&d.mac];
            errors.extend(
                pos.iter()
                    .filter(|(i, _, _)| *i < truth_pos.len())
                    .map(|&(i, x, y)| (x - truth_pos[i].0).hypot(y - truth_pos[i].1)),
            );
        }
    }
    errors.retain(|e| e.is_finite());
    errors.sort_by(f64::total_cmp);
    if !errors.is_empty() {
        m.position_error_m = Some(ErrorQuantiles {
            count: errors.len(),
            p50: quantile_sorted(&errors, 0.5),
            p90: quantile_sorted(&errors, 0.9),
            max: errors[errors.len() - 1],
        });
    }
    for a in &truth.activities {
        let spans: Vec<(u64, u64)> = pred
            .events
            .iter()
            .filter(|(l, _, _)| *l == a.label)
            .map(|&(_, s, e)| (s, e))
            .collect();
        let entry = m.activity_coverage_s.entry(a.label.clone()).or_default();
        entry.0 += covered(a.start_us, a.end_us, &spans) / 1_000_000;
        entry.1 += (a.end_us - a.start_us) / 1_000_000;
    }
    for g in &truth.guests {
        let found = pred.guests.iter().filter(|p| p.0 == g.mac).min_by_key(|p| p.1.abs_diff(g.arrival_us));
        m.guests.push(GuestScore {
            mac: g.mac,
            arrival_error_s: found.map(|p| abs_diff_s(p.1, g.arrival_us)),
            departure_error_s: found.and_then(|p| p.2).map(|d| abs_diff_s(d, g.departure_us)),
        });
    }
    Ok(m)
}
