//! Frame-event generation from per-device traffic models.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use super::scenario::{DeviceSpec, TrafficModel};
use super::schedule::{Schedule, Span};
use crate::time::US_PER_S;
use crate::wire::Direction;

/// Frames sent when a device joins or leaves the network.
pub const EDGE_BURST: u32 = 3;
/// Spacing between frames of one burst.
pub const BURST_SPACING_US: u64 = 1_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventKind {
    Data { direction: Direction, bytes: u32 },
    Beacon,
    Probe(String),
}

/// One transmission, `t_us` after the scenario start.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrafficEvent {
    pub t_us: u64,
    pub kind: EventKind,
}

fn data(t_us: u64, direction: Direction, bytes: u32) -> TrafficEvent {
    TrafficEvent {
        t_us,
        kind: EventKind::Data { direction, bytes },
    }
}

fn us(t_s: f64) -> u64 {
    (t_s * US_PER_S as f64).round() as u64
}

fn spans(v: &[String]) -> Vec<Span> {
    v.iter().filter_map(|s| s.parse().ok()).collect()
}

/// Intervals during which the device is associated and may transmit.
pub fn on_schedule(device: &DeviceSpec, duration_s: u64, start_weekday: u32) -> Schedule {
    match &device.traffic {
        Some(TrafficModel::Multimedia { on, .. }) | Some(TrafficModel::Streaming { on, .. }) => {
            Schedule::new(&spans(on), duration_s, start_weekday)
        }
        _ => Schedule::always(duration_s),
    }
}

/// Intervals of scripted activity, always inside the on schedule.
pub fn active_schedule(device: &DeviceSpec, duration_s: u64, start_weekday: u32) -> Schedule {
    match &device.traffic {
        Some(TrafficModel::Multimedia { active, .. }) | Some(TrafficModel::Streaming { active, .. }) => {
            let on = on_schedule(device, duration_s, start_weekday);
            Schedule::new(&spans(active), duration_s, start_weekday).intersect(&on)
        }
        _ => Schedule::default(),
    }
}

fn complement_within(on: &Schedule, active: &Schedule) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    for &(s, e) in &on.intervals {
        let mut cur = s;
        for &(a, b) in &active.intervals {
            if b <= cur || a >= e {
                continue;
            }
            if a > cur {
                out.push((cur, a));
            }
            cur = cur.max(b);
        }
        if cur < e {
            out.push((cur, e));
        }
    }
    out
}

fn poisson<R: Rng + ?Sized>(
    out: &mut Vec<TrafficEvent>,
    (s, e): (u64, u64),
    rate: f64,
    down_fraction: f64,
    bytes: u32,
    rng: &mut R,
) {
    let Ok(exp) = Exp::new(rate) else { return };
    let mut t = s as f64;
    loop {
        t += exp.sample(rng);
        if t >= e as f64 {
            break;
        }
        let down = rng.random::<f64>() < down_fraction;
        let dir = if down { Direction::Downlink } else { Direction::Uplink };
        out.push(data(us(t), dir, bytes));
    }
}

fn edges(out: &mut Vec<TrafficEvent>, on: &Schedule, duration_s: u64) {
    for &(s, e) in &on.intervals {
        if s > 0 {
            for k in 0..u64::from(EDGE_BURST) {
                out.push(data(s * US_PER_S + k * BURST_SPACING_US, Direction::Uplink, 64));
            }
        }
        if e < duration_s {
            for k in 1..=u64::from(EDGE_BURST) {
                out.push(data(e * US_PER_S - k * BURST_SPACING_US, Direction::Uplink, 64));
            }
        }
    }
}

fn keepalives(out: &mut Vec<TrafficEvent>, on: &Schedule, period_s: f64) {
    for &(s, e) in &on.intervals {
        let mut t = s as f64 + period_s;
        while t < e as f64 {
            out.push(data(us(t), Direction::Uplink, 64));
            t += period_s;
        }
    }
}

/// Events of a device's own traffic model, sorted by time. Access-point
/// beacons and probe requests are added by [`device_events`].
pub fn generate_traffic<R: Rng + ?Sized>(
    model: &TrafficModel,
    device: &DeviceSpec,
    duration_s: u64,
    start_weekday: u32,
    rng: &mut R,
) -> Vec<TrafficEvent> {
    let mut out = Vec::new();
    let end_us = duration_s * US_PER_S;
    match model {
        TrafficModel::Periodic {
            interval_s,
            pkts,
            bytes,
            uplink,
            phase_s,
        } => {
            let phase = phase_s.unwrap_or_else(|| rng.random::<f64>() * interval_s);
            let dir = if *uplink { Direction::Uplink } else { Direction::Downlink };
            let mut k = 0u64;
            loop {
                let t = us(phase + k as f64 * interval_s);
                if t >= end_us {
                    break;
                }
                for j in 0..u64::from(*pkts) {
                    let tj = t + j * BURST_SPACING_US;
                    if tj < end_us {
                        out.push(data(tj, dir, *bytes));
                    }
                }
                k += 1;
            }
        }
        TrafficModel::Multimedia {
            burst_rate,
            idle_rate,
            keepalive_s,
            down_fraction,
            bytes,
            ..
        } => {
            let on = on_schedule(device, duration_s, start_weekday);
            let active = active_schedule(device, duration_s, start_weekday);
            edges(&mut out, &on, duration_s);
            for &iv in &active.intervals {
                poisson(&mut out, iv, *burst_rate, *down_fraction, *bytes, rng);
            }
            if *idle_rate > 0.0 {
                for iv in complement_within(&on, &active) {
                    poisson(&mut out, iv, *idle_rate, *down_fraction, *bytes, rng);
                }
            }
            if let Some(k) = keepalive_s {
                keepalives(&mut out, &on, *k);
            }
        }
        TrafficModel::Streaming {
            rate,
            keepalive_s,
            bytes,
            ..
        } => {
            let on = on_schedule(device, duration_s, start_weekday);
            let active = active_schedule(device, duration_s, start_weekday);
            edges(&mut out, &on, duration_s);
            let step = 1.0 / rate;
            for &(s, e) in &active.intervals {
                let mut k = 0u64;
                loop {
                    let t = s as f64 + (k as f64 + 0.25) * step;
                    if t >= e as f64 {
                        break;
                    }
                    // Every fifth frame is an acknowledgement from the device.
                    if k % 5 == 4 {
                        out.push(data(us(t), Direction::Uplink, 64));
                    } else {
                        out.push(data(us(t), Direction::Downlink, *bytes));
                    }
                    k += 1;
                }
            }
            if let Some(k) = keepalive_s {
                keepalives(&mut out, &on, *k);
            }
        }
    }
    out.sort_by_key(|e| e.t_us);
    out
}

/// All events of a device: its traffic model, beacons for access points
/// and probe requests while on.
pub fn device_events<R: Rng + ?Sized>(
    device: &DeviceSpec,
    duration_s: u64,
    start_weekday: u32,
    rng: &mut R,
) -> Vec<TrafficEvent> {
    let mut out = match &device.traffic {
        Some(m) => generate_traffic(m, device, duration_s, start_weekday, rng),
        None => Vec::new(),
    };
    let end_us = duration_s * US_PER_S;
    if device.access_point {
        let mut t = rng.random::<f64>() * device.beacon_interval_s;
        while us(t) < end_us {
            out.push(TrafficEvent {
                t_us: us(t),
                kind: EventKind::Beacon,
            });
            t += device.beacon_interval_s;
        }
    }
    if let Some(p) = &device.probes {
        let on = on_schedule(device, duration_s, start_weekday);
        let mut t = rng.random::<f64>() * p.interval_s;
        while us(t) < end_us {
            if on.contains(t) {
                for (j, ssid) in p.ssids.iter().enumerate() {
                    out.push(TrafficEvent {
                        t_us: us(t) + j as u64 * BURST_SPACING_US,
                        kind: EventKind::Probe(ssid.clone()),
                    });
                }
            }
            t += p.interval_s;
        }
    }
    out.retain(|e| e.t_us < end_us);
    out.sort_by_key(|e| e.t_us);
    out
}
