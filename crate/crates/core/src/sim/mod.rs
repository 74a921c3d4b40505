//! Scenario simulator producing synthetic captures with ground truth.

pub mod channel;
pub mod scenario;
pub mod schedule;
pub mod score;
pub mod simulate;
pub mod traffic;
pub mod truth;

use std::fs;
use std::io;
use std::path::Path;

pub use channel::{drop_probability, Channel};
pub use scenario::{bundled, Scenario, TrafficModel};
pub use score::{score_against_truth, Metrics, Predictions, ScoreError};
pub use simulate::{device_rng, ground_truth, layout_of, simulate, DeviceStats, SimOutput};
pub use traffic::{generate_traffic, TrafficEvent};
pub use truth::{GroundTruth, TruthActivity, TruthDevice, TruthGuest};

use crate::ble::write_ble_records;
use crate::report::write_atomic;
use crate::wire::{write_records, PcapWriter};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario at {path}: {message}")]
    Scenario { path: String, message: String },
    #[error("{file} line {line}: {message}")]
    Truth { file: String, line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub const FRAMES_FILE: &str = "frames.jsonl";
pub const BLE_FILE: &str = "ble.jsonl";
pub const LAYOUT_FILE: &str = "layout.tsv";
pub const ZONES_FILE: &str = "zones.tsv";
pub const TRUTH_FILE: &str = "truth.tsv";
pub const TRUTH_META_FILE: &str = "truth_meta.tsv";

/// A bundled scenario name or a path to a TOML file.
pub fn load_scenario(name_or_path: &str) -> Result<Scenario, SimError> {
    if let Some(s) = bundled(name_or_path) {
        return Ok(s);
    }
    let text = fs::read_to_string(name_or_path)?;
    Scenario::from_toml(&text)
}

/// Writes one pcap per sniffer as `capture_<id>.pcap`.
pub fn write_pcaps(out: &SimOutput, dir: &Path) -> io::Result<()> {
    for sn in &out.layout.sniffers {
        let mut w = PcapWriter::new(Vec::new())?;
        for f in out.frames.iter().filter(|f| f.sniffer_id == sn.id) {
            w.write_packet(f.ts_us(), &f.to_packet())?;
        }
        write_atomic(&dir.join(format!("capture_{}.pcap", sn.id)), &w.into_inner())?;
    }
    Ok(())
}

/// Writes the simulator output bundle into `dir`, file by file atomically.
pub fn write_output(out: &SimOutput, dir: &Path) -> io::Result<()> {
    let mut frames = Vec::new();
    write_records(&mut frames, &out.frames)?;
    write_atomic(&dir.join(FRAMES_FILE), &frames)?;
    let mut ble = Vec::new();
    write_ble_records(&mut ble, &out.ble)?;
    write_atomic(&dir.join(BLE_FILE), &ble)?;
    write_atomic(&dir.join(LAYOUT_FILE), out.layout.to_tsv().as_bytes())?;
    if let Some(z) = &out.zones {
        write_atomic(&dir.join(ZONES_FILE), z.to_tsv().as_bytes())?;
    }
    write_atomic(&dir.join(TRUTH_META_FILE), out.truth.meta_tsv().as_bytes())?;
    write_atomic(&dir.join(TRUTH_FILE), out.truth.grid_tsv().as_bytes())?;
    Ok(())
}

pub fn read_truth(dir: &Path) -> Result<GroundTruth, SimError> {
    let meta = fs::read_to_string(dir.join(TRUTH_META_FILE))?;
    let grid = fs::read_to_string(dir.join(TRUTH_FILE))?;
    GroundTruth::from_tsv(&meta, &grid)
}
