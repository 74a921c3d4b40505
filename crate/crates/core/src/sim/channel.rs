//! Log-distance radio channel with wall losses, shadowing and weak-signal
//! drops.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::scenario::Scenario;

pub const RSSI_FLOOR_DBM: f64 = -120.0;
pub const RSSI_CEIL_DBM: f64 = 0.0;
/// Distances are clamped below this before taking the logarithm.
pub const MIN_DISTANCE_M: f64 = 0.1;
pub const DROP_START_DBM: f64 = -70.0;
pub const DROP_END_DBM: f64 = -95.0;
pub const DROP_MAX: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wall {
    pub a: (f64, f64),
    pub b: (f64, f64),
    pub loss_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Channel {
    pub n: f64,
    pub sigma_db: f64,
    pub drops: bool,
    pub walls: Vec<Wall>,
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Proper crossing of two segments; touching endpoints do not count.
pub fn segments_cross(p: (f64, f64), q: (f64, f64), a: (f64, f64), b: (f64, f64)) -> bool {
    let d1 = cross(a, b, p);
    let d2 = cross(a, b, q);
    let d3 = cross(p, q, a);
    let d4 = cross(p, q, b);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Probability that a sniffer misses a frame received at `rssi_dbm`.
pub fn drop_probability(rssi_dbm: f64) -> f64 {
    if rssi_dbm >= DROP_START_DBM {
        0.0
    } else if rssi_dbm <= DROP_END_DBM {
        DROP_MAX
    } else {
        DROP_MAX * (DROP_START_DBM - rssi_dbm) / (DROP_START_DBM - DROP_END_DBM)
    }
}

impl Channel {
    pub fn from_scenario(s: &Scenario) -> Self {
        Channel {
            n: s.channel.n,
            sigma_db: s.channel.sigma_db,
            drops: s.channel.drops,
            walls: s
                .walls
                .iter()
                .map(|w| Wall {
                    a: (w.a[0], w.a[1]),
                    b: (w.b[0], w.b[1]),
                    loss_db: w.attenuation_db.unwrap_or(s.channel.wall_db),
                })
                .collect(),
        }
    }

    pub fn wall_loss(&self, tx: (f64, f64), rx: (f64, f64)) -> f64 {
        self.walls
            .iter()
            .filter(|w| segments_cross(tx, rx, w.a, w.b))
            .map(|w| w.loss_db)
            .sum()
    }

    /// Expected RSSI before shadowing and clamping.
    pub fn mean_rssi(&self, p0_dbm: f64, tx: (f64, f64), rx: (f64, f64)) -> f64 {
        let d = (tx.0 - rx.0).hypot(tx.1 - rx.1).max(MIN_DISTANCE_M);
        p0_dbm - 10.0 * self.n * d.log10() - self.wall_loss(tx, rx)
    }

    /// One received signal strength sample, clamped to the radio's range.
    pub fn sample_rssi<R: Rng + ?Sized>(&self, p0_dbm: f64, tx: (f64, f64), rx: (f64, f64), rng: &mut R) -> f64 {
        let mean = self.mean_rssi(p0_dbm, tx, rx);
        let noise = if self.sigma_db > 0.0 {
            Normal::new(0.0, self.sigma_db).map_or(0.0, |n| n.sample(rng))
        } else {
            0.0
        };
        (mean + noise).clamp(RSSI_FLOOR_DBM, RSSI_CEIL_DBM)
    }

    /// RSSI of a frame that survives, or `None` when the sniffer drops it.
    pub fn receive<R: Rng + ?Sized>(&self, p0_dbm: f64, tx: (f64, f64), rx: (f64, f64), rng: &mut R) -> Option<f64> {
        let rssi = self.sample_rssi(p0_dbm, tx, rx, rng);
        let p = if self.drops { drop_probability(rssi) } else { 0.0 };
        // Always draw so the stream does not depend on the drop setting.
        let u: f64 = rng.random();
        (u >= p).then_some(rssi)
    }
}
