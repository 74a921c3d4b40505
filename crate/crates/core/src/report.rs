//! Report bundle: a summary, CSV exports and per-device plot data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{self, Write as _};
use std::path::Path;

use crate::mac::MacAddress;
use crate::pipeline::Analysis;
use crate::sim::Metrics;
use crate::time::{hhmm, iso};
use crate::traffic::{rolling_mean, DeviceState};

pub const SUMMARY_FILE: &str = "summary.txt";
pub const DEVICES_FILE: &str = "devices.csv";
pub const STATES_FILE: &str = "states.csv";
pub const TRACK_FILE: &str = "track.csv";
pub const EVENTS_FILE: &str = "events.csv";
pub const PRESENCE_FILE: &str = "presence.csv";
pub const METRICS_FILE: &str = "metrics.txt";

fn csv_text(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    // Writing to memory cannot fail.
    w.write_record(header).expect("in-memory csv");
    for r in rows {
        w.write_record(&r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv of utf-8 fields")
}

fn fmt_f(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.3}")
    } else {
        String::new()
    }
}

fn file_stem(mac: &MacAddress) -> String {
    mac.to_hex()
}

pub fn devices_csv(a: &Analysis) -> String {
    csv_text(
        &["mac", "type", "manufacturer", "model", "source", "kind", "threshold", "mobility", "first_seen", "last_seen", "frames"],
        a.devices.values().map(|d| {
            vec![
                d.profile.mac.to_string(),
                d.guess.device_type.display().to_string(),
                d.profile.vendor.clone().unwrap_or_else(|| "Unknown".into()),
                d.guess.model.clone().unwrap_or_else(|| "Unknown".into()),
                d.guess.source.to_string(),
                d.profile.kind.to_string(),
                format!("{}", d.threshold),
                d.stationarity.as_ref().map_or("undetermined", |s| s.mobility.as_str()).to_string(),
                iso(d.profile.first_seen),
                iso(d.profile.last_seen),
                d.profile.frame_count.to_string(),
            ]
        }),
    )
}

pub fn states_csv(a: &Analysis) -> String {
    csv_text(
        &["device", "window_start_iso", "up_pkts", "down_pkts", "up_bytes", "down_bytes", "state"],
        a.devices.values().flat_map(|d| {
            d.series.windows.iter().zip(&d.timeline.states).enumerate().map(move |(i, (w, s))| {
                vec![
                    d.profile.mac.to_string(),
                    iso(d.series.window_start(i)),
                    w.up_pkts.to_string(),
                    w.down_pkts.to_string(),
                    w.up_bytes.to_string(),
                    w.down_bytes.to_string(),
                    s.to_string(),
                ]
            })
        }),
    )
}

pub fn track_csv(a: &Analysis) -> String {
    csv_text(
        &["device", "window_start_iso", "x", "y", "dir_x", "dir_y", "residual", "zone_label"],
        a.devices.values().flat_map(|d| {
            d.track.iter().map(move |t| {
                let (dx, dy) = t.estimate.direction.map_or((String::new(), String::new()), |(x, y)| (fmt_f(x), fmt_f(y)));
                let zone = t.zone.as_ref().map_or(String::new(), |z| {
                    if z.low_confidence {
                        format!("{}?", z.label)
                    } else {
                        z.label.clone()
                    }
                });
                vec![
                    d.profile.mac.to_string(),
                    iso(a.grid.window_start(t.window)),
                    fmt_f(t.estimate.x),
                    fmt_f(t.estimate.y),
                    dx,
                    dy,
                    fmt_f(t.estimate.residual),
                    zone,
                ]
            })
        }),
    )
}

pub fn events_csv(a: &Analysis) -> String {
    csv_text(
        &["label", "start_iso", "end_iso", "confidence", "evidence"],
        a.events.iter().map(|e| {
            vec![
                e.label.clone(),
                iso(e.start_us),
                iso(e.end_us),
                format!("{:.3}", e.confidence),
                e.evidence.join("; "),
            ]
        }),
    )
}

pub fn presence_csv(a: &Analysis) -> String {
    csv_text(
        &["device", "start_iso", "end_iso"],
        a.devices.values().flat_map(|d| {
            d.presence
                .intervals
                .iter()
                .map(move |&(s, e)| vec![d.profile.mac.to_string(), iso(s), iso(e)])
        }),
    )
}

fn two_column(header: &str, rows: impl IntoIterator<Item = (u64, String)>) -> String {
    let mut out = format!("timestamp\t{header}\n");
    for (ts, v) in rows {
        let _ = writeln!(out, "{}\t{v}", iso(ts));
    }
    out
}

fn state_counts(states: &[DeviceState]) -> [usize; 3] {
    let mut c = [0; 3];
    for s in states {
        c[*s as usize] += 1;
    }
    c
}

pub fn summary_text(a: &Analysis, metrics: Option<&Metrics>) -> String {
    let mut out = String::new();
    let g = &a.grid;
    let _ = writeln!(out, "window_s\t{}", g.window_s);
    let _ = writeln!(out, "start\t{}", iso(g.start_us));
    let _ = writeln!(out, "windows\t{}", g.n_windows);
    let _ = writeln!(out, "bssid\t{}", a.bssid.map_or("none".to_string(), |b| b.to_string()));

    let _ = writeln!(out, "\n[devices]");
    let _ = writeln!(out, "{:<18} {:<15} {:<30} {:<26} {}", "mac", "type", "manufacturer", "model", "source");
    for d in a.devices.values() {
        let _ = writeln!(
            out,
            "{:<18} {:<15} {:<30} {:<26} {}",
            d.profile.mac,
            d.guess.device_type.display(),
            d.profile.vendor.as_deref().unwrap_or("Unknown"),
            d.guess.model.as_deref().unwrap_or("Unknown"),
            d.guess.source
        );
    }

    let _ = writeln!(out, "\n[states]");
    let _ = writeln!(out, "mac\tkind\tth\toff\tidle\tactive\tmobility\tmax_iqr_db");
    for d in a.devices.values() {
        let [off, idle, active] = state_counts(&d.timeline.states);
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{off}\t{idle}\t{active}\t{}\t{}",
            d.profile.mac,
            d.profile.kind,
            d.threshold,
            d.stationarity.as_ref().map_or("undetermined", |s| s.mobility.as_str()),
            d.stationarity.as_ref().map_or(String::new(), |s| format!("{:.2}", s.max_iqr())),
        );
    }

    let _ = writeln!(out, "\n[zones]");
    let _ = writeln!(out, "mac\tzone\twindows\tlow_confidence");
    for d in a.devices.values() {
        let mut counts: BTreeMap<(&str, bool), usize> = BTreeMap::new();
        for z in d.track.iter().filter_map(|t| t.zone.as_ref()) {
            *counts.entry((z.label.as_str(), z.low_confidence)).or_default() += 1;
        }
        for ((label, low), n) in counts {
            let _ = writeln!(out, "{}\t{label}\t{n}\t{}", d.profile.mac, u8::from(low));
        }
    }

    let _ = writeln!(out, "\n[events]");
    for e in &a.events {
        let _ = writeln!(out, "{}\t{}\t{}\t{:.3}", iso(e.start_us), iso(e.end_us), e.label, e.confidence);
    }

    let _ = writeln!(out, "\n[sleep]");
    for s in &a.sleep {
        match s.sleep_wake {
            Some(w) => {
                let _ = writeln!(out, "{}\twake {}\tsleep {}", &iso(s.day_start_us)[..10], iso(w.wake_us), iso(w.sleep_us));
            }
            None => {
                let _ = writeln!(out, "{}\tnone", &iso(s.day_start_us)[..10]);
            }
        }
    }

    let _ = writeln!(out, "\n[routines]");
    for d in a.devices.values() {
        for r in d.routine.iter().flat_map(|r| &r.groups) {
            let absences: Vec<String> = r.absences.iter().map(|&(s, e)| format!("{}-{}", hhmm(s), hhmm(e))).collect();
            let _ = writeln!(
                out,
                "{}\t{}\tdays {}\tabsent {}\twake {}",
                d.profile.mac,
                r.group.as_str(),
                r.days,
                if absences.is_empty() { "-".to_string() } else { absences.join(",") },
                r.wake_s.map_or("-".to_string(), hhmm)
            );
        }
    }

    let _ = writeln!(out, "\n[guests]");
    for gu in &a.guests {
        let _ = writeln!(
            out,
            "{}\tarrival {}\tdeparture {}\tresembles {}",
            gu.mac,
            iso(gu.arrival_us),
            gu.departure_us.map_or("-".to_string(), iso),
            gu.resembles.as_str()
        );
    }

    let _ = writeln!(out, "\n[probes]");
    for (mac, ssids) in &a.probes.by_source {
        for (ssid, stat) in ssids {
            let _ = writeln!(out, "{mac}\t{}\t{}", String::from_utf8_lossy(ssid), stat.count);
        }
    }

    if let Some(m) = metrics {
        let _ = writeln!(out, "\n[metrics]");
        out.push_str(&m.to_text());
    }
    out
}

/// Every file of the bundle by relative path.
pub fn render_bundle(a: &Analysis, metrics: Option<&Metrics>, smoothing_windows: usize) -> BTreeMap<String, String> {
    let mut files = BTreeMap::new();
    files.insert(SUMMARY_FILE.to_string(), summary_text(a, metrics));
    files.insert(DEVICES_FILE.to_string(), devices_csv(a));
    files.insert(STATES_FILE.to_string(), states_csv(a));
    files.insert(TRACK_FILE.to_string(), track_csv(a));
    files.insert(EVENTS_FILE.to_string(), events_csv(a));
    files.insert(PRESENCE_FILE.to_string(), presence_csv(a));
    if let Some(m) = metrics {
        files.insert(METRICS_FILE.to_string(), m.to_text());
    }
    let k = if smoothing_windows % 2 == 1 { smoothing_windows } else { smoothing_windows + 1 };
    for d in a.devices.values() {
        let stem = file_stem(&d.profile.mac);
        let s = &d.series;
        let starts = (0..s.len()).map(|i| s.window_start(i));
        files.insert(
            format!("plots/{stem}_uplink.tsv"),
            two_column("up_pkts", starts.clone().zip(s.windows.iter().map(|w| w.up_pkts.to_string()))),
        );
        files.insert(
            format!("plots/{stem}_downlink.tsv"),
            two_column("down_pkts", starts.clone().zip(s.windows.iter().map(|w| w.down_pkts.to_string()))),
        );
        let totals: Vec<f64> = s.totals().into_iter().map(|t| t as f64).collect();
        let smooth = rolling_mean(&totals, k).unwrap_or(totals);
        files.insert(
            format!("plots/{stem}_smoothed.tsv"),
            two_column("mean_pkts", starts.clone().zip(smooth.iter().map(|v| format!("{v:.4}")))),
        );
        files.insert(
            format!("plots/{stem}_state.tsv"),
            two_column("state", starts.zip(d.timeline.states.iter().map(|s| s.to_string()))),
        );
        if !d.track.is_empty() {
            let mut t = String::from("timestamp\tx\ty\n");
            for p in &d.track {
                let _ = writeln!(t, "{}\t{}\t{}", iso(a.grid.window_start(p.window)), fmt_f(p.estimate.x), fmt_f(p.estimate.y));
            }
            files.insert(format!("plots/{stem}_position.tsv"), t);
        }
        for r in d.routine.iter().flat_map(|r| &r.groups) {
            let mut t = String::from("second_of_day\tpresence_probability\n");
            let cell = d.routine.as_ref().map_or(3600, |r| r.cell_s);
            for (c, p) in r.probability.iter().enumerate() {
                let _ = writeln!(t, "{}\t{p:.4}", c as u64 * cell);
            }
            files.insert(format!("plots/{stem}_routine_{}.tsv", r.group.as_str()), t);
        }
    }
    files
}

/// Writes `contents` to `path` through a temporary file in the same
/// directory, so readers never see a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

pub fn emit_report(a: &Analysis, metrics: Option<&Metrics>, smoothing_windows: usize, dir: &Path) -> io::Result<Vec<String>> {
    let files = render_bundle(a, metrics, smoothing_windows);
    for (name, contents) in &files {
        write_atomic(&dir.join(name), contents.as_bytes())?;
    }
    Ok(files.into_keys().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{analyze, PipelineConfig};

    #[test]
    fn empty_bundle_has_headers() {
        let a = analyze(&[], &[], &PipelineConfig::default()).unwrap();
        let files = render_bundle(&a, None, 31);
        assert_eq!(files[DEVICES_FILE], "mac,type,manufacturer,model,source,kind,threshold,mobility,first_seen,last_seen,frames\n");
        assert_eq!(files[STATES_FILE], "device,window_start_iso,up_pkts,down_pkts,up_bytes,down_bytes,state\n");
        assert_eq!(files[EVENTS_FILE], "label,start_iso,end_iso,confidence,evidence\n");
        assert!(!files.keys().any(|k| k.starts_with("plots/")));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/x.txt");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }
}
