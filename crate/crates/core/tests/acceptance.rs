//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. Thresholds and time limits are pinned below.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use proptest::strategy::Strategy;
use proptest::test_runner::{Config as PropConfig, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use common::{arb_frame_record, config_for, mac, two_antenna_radiotap};
use wisp::ble::{
    decode_local_name, decode_service_uuids, parse_ad_structures, resolve_service_name, serialize_ad_structures,
    AdStructure,
};
use wisp::pipeline::{analyze, Analysis};
use wisp::report::render_bundle;
use wisp::rf::{trilaterate, Mobility, PathLossParams, RssiFingerprint, Sniffer, SnifferLayout, TrilaterationOptions};
use wisp::sim::{self, score_against_truth, Channel, Metrics, Predictions, Scenario, SimOutput};
use wisp::traffic::DayGroup;
use wisp::wire::radiotap::parse_header;
use wisp::wire::{classify_ds, decode_frame, parse_frame_control, parse_radiotap, read_records, write_records, Direction};
use wisp::MacAddress;

const STATE_ACCURACY_MIN: f64 = 0.95;
const ZONE_ACCURACY_MIN: f64 = 0.90;
const ACTIVITY_COVERAGE_MIN: f64 = 0.90;
const TRILAT_AGREEMENT_MIN: f64 = 0.95;
const NOISELESS_TOL_M: f64 = 1e-6;
const PATHLOSS_REL_TOL: f64 = 1e-9;
const GRID_CELL_M: f64 = 0.01;
const FUZZ_BUFFERS: usize = 100_000;
const ROUND_TRIPS: u32 = 10_000;

type Outcome = Result<String, String>;

struct Run {
    scenario: Scenario,
    out: SimOutput,
    analysis: Analysis,
    metrics: Metrics,
    cost: Duration,
}

fn run_scenario(name: &str) -> Run {
    let t = Instant::now();
    let scenario = sim::bundled(name).unwrap();
    let out = sim::simulate(&scenario).unwrap();
    let analysis = analyze(&out.frames, &out.ble, &config_for(&scenario, &out)).unwrap();
    let metrics = score_against_truth(&Predictions::from_analysis(&analysis), &out.truth).unwrap();
    Run { scenario, out, analysis, metrics, cost: t.elapsed() }
}

/// Scenario runs are shared between criteria; each criterion is charged the
/// full cost of the run it uses.
fn shared(name: &'static str) -> &'static Run {
    static RUNS: OnceLock<std::sync::Mutex<BTreeMap<&'static str, &'static Run>>> = OnceLock::new();
    let mut runs = RUNS.get_or_init(Default::default).lock().unwrap();
    runs.entry(name).or_insert_with(|| Box::leak(Box::new(run_scenario(name))))
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn ac1_ds_classification() -> Outcome {
    let table = [
        Direction::PeerOrBroadcast,
        Direction::Uplink,
        Direction::Downlink,
        Direction::ApToAp,
    ];
    let mut checked = 0;
    for b0 in 0..=255u8 {
        for b1 in 0..=255u8 {
            let got = classify_ds(&parse_frame_control([b0, b1]));
            ensure(got == table[usize::from(b1 & 3)], format!("fc {b0:#04x}{b1:02x} gave {got:?}"))?;
            checked += 1;
        }
    }
    Ok(format!("4 DS codes, {checked} frame-control words"))
}

fn radiotap_stub() -> Vec<u8> {
    vec![0, 0, 8, 0, 0, 0, 0, 0]
}

fn ac2_address_resolution() -> Outcome {
    let (sta, ap, src) = (mac("02:00:00:39:b1:b0"), mac("02:00:00:32:52:91"), mac("02:00:00:00:3a:fe"));
    let mut pkt = radiotap_stub();
    pkt.extend_from_slice(&[0x88, 0x42, 0x5c, 0x4c]);
    for a in [sta, ap, src] {
        pkt.extend_from_slice(&a.0);
    }
    pkt.extend_from_slice(&[0xd0, 0xaa]); // sequence 2733
    pkt.extend_from_slice(&[0; 2]); // QoS
    pkt.extend_from_slice(&[0; 8]); // CCMP
    pkt.extend(std::iter::repeat_n(0xab, 444));
    let r = decode_frame("s", 0, &pkt).map_err(|e| e.to_string())?.ok_or("data frame skipped")?;
    ensure(r.direction == Direction::Downlink, "QoS frame not downlink")?;
    ensure(
        (r.addrs.da, r.addrs.ra, r.addrs.ta, r.addrs.sa, r.addrs.bssid) == (sta, sta, ap, src, Some(ap)),
        format!("downlink addresses {:?}", r.addrs),
    )?;

    let prober = mac("02:00:00:62:82:d9");
    let mut pkt = radiotap_stub();
    pkt.extend_from_slice(&[0x40, 0x00, 0, 0]);
    for a in [MacAddress::BROADCAST, prober, MacAddress::BROADCAST] {
        pkt.extend_from_slice(&a.0);
    }
    pkt.extend_from_slice(&[0x80, 0xce]); // sequence 3304
    pkt.extend_from_slice(&[0, 4, 0x12, 0x57, 0xbd, 0xa2]);
    let r = decode_frame("s", 0, &pkt).map_err(|e| e.to_string())?.ok_or("probe skipped")?;
    ensure(r.is_probe_request(), "not a probe request")?;
    ensure(
        (r.addrs.sa, r.addrs.ta, r.addrs.da, r.addrs.ra, r.addrs.bssid)
            == (prober, prober, MacAddress::BROADCAST, MacAddress::BROADCAST, Some(MacAddress::BROADCAST)),
        format!("probe addresses {:?}", r.addrs),
    )?;
    ensure(r.ssid.as_deref() == Some(&[0x12, 0x57, 0xbd, 0xa2][..]), "probe ssid")?;
    Ok("downlink QoS data and broadcast probe request resolved".into())
}

fn ac3_radiotap() -> Outcome {
    let buf = two_antenna_radiotap();
    let h = parse_header(&buf).map_err(|e| e.to_string())?;
    let m = h.meta();
    ensure(h.version == 0 && h.length == 56, format!("version {} length {}", h.version, h.length))?;
    ensure(m.channel_freq_mhz == Some(2437), format!("channel {:?}", m.channel_freq_mhz))?;
    ensure(m.rssi_dbm == Some(-84.0), format!("rssi {:?}", m.rssi_dbm))?;
    ensure(m.data_rate_kbps == Some(6000), format!("rate {:?}", m.data_rate_kbps))?;
    ensure(h.tsft == Some(9_048_706_358), "tsft")?;
    ensure(h.antenna_signals == [-84, -87, -84], format!("antennas {:?}", h.antenna_signals))?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut decoded = 0usize;
    for i in 0..FUZZ_BUFFERS {
        let len = rng.random_range(0..160);
        let mut b: Vec<u8> = (0..len).map(|_| rng.random()).collect();
        // Bias half the inputs towards plausible headers to reach the field walk.
        if i % 2 == 0 && len >= 8 {
            b[0] = 0;
            let declared = rng.random_range(8..=len) as u16;
            b[2..4].copy_from_slice(&declared.to_le_bytes());
        }
        let res = catch_unwind(|| {
            let rt = parse_radiotap(&b);
            if let Ok((_, off)) = rt {
                assert!(off <= b.len());
                assert_eq!(off, usize::from(u16::from_le_bytes([b[2], b[3]])));
            }
            (rt.is_ok(), decode_frame("f", 0, &b).is_ok())
        })
        .map_err(|_| format!("panic on buffer {}", hex::encode(&b)))?;
        decoded += usize::from(res.0);
    }
    Ok(format!("two-antenna header exact; {FUZZ_BUFFERS} fuzz buffers, {decoded} parsed, no panics"))
}

fn ac4_ble() -> Outcome {
    let s = parse_ad_structures(&[0x07, 0x03, 0x01, 0x11, 0x1e, 0x11, 0x0b, 0x11]).map_err(|e| format!("{e:?}"))?;
    let (ids, _) = decode_service_uuids(&s).map_err(|e| e.to_string())?;
    ensure(ids == [0x1101, 0x111e, 0x110b], format!("uuids {ids:04x?}"))?;
    let names: Vec<_> = ids.iter().map(|&u| resolve_service_name(u)).collect();
    ensure(
        names == [Some("Serial Port"), Some("Handsfree"), Some("Audio Sink")],
        format!("names {names:?}"),
    )?;
    let mut payload = vec![18, 0x09];
    payload.extend_from_slice(b"ShellyPlusHT-08B6");
    let s = parse_ad_structures(&payload).map_err(|e| format!("{e:?}"))?;
    let name = decode_local_name(&s);
    ensure(name == Some(("ShellyPlusHT-08B6".into(), true)), format!("name {name:?}"))?;
    Ok("service UUIDs, names and local name exact".into())
}

fn ac5_round_trips() -> Outcome {
    let mut runner = TestRunner::new(PropConfig { cases: ROUND_TRIPS, failure_persistence: None, ..PropConfig::default() });
    runner
        .run(&arb_frame_record(), |r| {
            let mut buf = Vec::new();
            write_records(&mut buf, std::slice::from_ref(&r)).unwrap();
            let back = read_records(buf.as_slice()).unwrap();
            proptest::prop_assert_eq!(back, vec![r]);
            Ok(())
        })
        .map_err(|e| format!("frame record: {e}"))?;

    let ad = proptest::collection::vec(
        (1u8..=255, proptest::collection::vec(proptest::num::u8::ANY, 0..30)).prop_map(|(t, v)| AdStructure::new(t, v)),
        0..8,
    );
    let mut runner = TestRunner::new(PropConfig { cases: ROUND_TRIPS, failure_persistence: None, ..PropConfig::default() });
    runner
        .run(&ad, |list| {
            let bytes = serialize_ad_structures(&list).unwrap();
            proptest::prop_assert_eq!(parse_ad_structures(&bytes).unwrap(), list);
            Ok(())
        })
        .map_err(|e| format!("AD structures: {e}"))?;
    Ok(format!("{ROUND_TRIPS} frame records, {ROUND_TRIPS} AD lists"))
}

fn ac6_pathloss() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst = 0f64;
    for _ in 0..1000 {
        let n = rng.random_range(1.5..=6.0);
        let p0: f64 = rng.random_range(-60.0..=-20.0);
        let lo = 10f64.powf(p0 / (10.0 * n)).max(0.1);
        let hi = 10f64.powf((p0 + 120.0) / (10.0 * n)).min(200.0);
        let d = (lo.ln() + rng.random::<f64>() * (hi.ln() - lo.ln())).exp();
        let ch = Channel { n, sigma_db: 0.0, drops: false, walls: vec![] };
        let rssi = ch.sample_rssi(p0, (0.0, 0.0), (d, 0.0), &mut rng);
        let back = wisp::rf::rssi_to_distance(rssi, &PathLossParams::new(p0, n).map_err(|e| e.to_string())?);
        worst = worst.max((back - d).abs() / d);
    }
    ensure(worst < PATHLOSS_REL_TOL, format!("worst relative error {worst:e}"))?;
    Ok(format!("1000 draws, worst relative error {worst:.1e}"))
}

fn fingerprint(values: Vec<f64>) -> RssiFingerprint {
    RssiFingerprint {
        device: MacAddress::default(),
        window_start_us: 0,
        support: vec![1; values.len()],
        values: values.into_iter().map(Some).collect(),
    }
}

fn in_triangle(rng: &mut ChaCha8Rng, t: &[(f64, f64)]) -> (f64, f64) {
    let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
    if u + v > 1.0 {
        (u, v) = (1.0 - u, 1.0 - v);
    }
    (
        t[0].0 + u * (t[1].0 - t[0].0) + v * (t[2].0 - t[0].0),
        t[0].1 + u * (t[1].1 - t[0].1) + v * (t[2].1 - t[0].1),
    )
}

/// Exhaustive 1 cm grid search of the RMS range residual.
fn grid_minimizer(anchors: &[(f64, f64)], dists: &[f64], around: (f64, f64)) -> (f64, f64) {
    let margin = 2.0;
    let xs = anchors.iter().map(|a| a.0).chain([around.0]);
    let ys = anchors.iter().map(|a| a.1).chain([around.1]);
    let (x0, x1) = (xs.clone().fold(f64::INFINITY, f64::min) - margin, xs.fold(f64::NEG_INFINITY, f64::max) + margin);
    let (y0, y1) = (ys.clone().fold(f64::INFINITY, f64::min) - margin, ys.fold(f64::NEG_INFINITY, f64::max) + margin);
    let (i0, i1) = ((x0 / GRID_CELL_M).floor() as i64, (x1 / GRID_CELL_M).ceil() as i64);
    let (j0, j1) = ((y0 / GRID_CELL_M).floor() as i64, (y1 / GRID_CELL_M).ceil() as i64);
    let mut best = (f64::INFINITY, (0.0, 0.0));
    for i in i0..=i1 {
        let x = i as f64 * GRID_CELL_M;
        for j in j0..=j1 {
            let y = j as f64 * GRID_CELL_M;
            let ss: f64 = anchors.iter().zip(dists).map(|(a, d)| ((x - a.0).hypot(y - a.1) - d).powi(2)).sum();
            if ss < best.0 {
                best = (ss, (x, y));
            }
        }
    }
    best.1
}

fn ac7_trilateration() -> Outcome {
    let anchors = [(0.0, 0.0), (8.0, 0.0), (3.0, 6.0)];
    let layout = SnifferLayout::new(
        anchors.iter().enumerate().map(|(i, &(x, y))| Sniffer { id: format!("s{i}"), x, y }).collect(),
    )
    .map_err(|e| e.to_string())?;
    let params = PathLossParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0f64;
    for _ in 0..100 {
        let p = in_triangle(&mut rng, &anchors);
        let fp = fingerprint(anchors.iter().map(|a| params.rssi_at((p.0 - a.0).hypot(p.1 - a.1))).collect());
        for refine in [false, true] {
            let e = trilaterate(&fp, &layout, &params, TrilaterationOptions { refine }).map_err(|e| e.to_string())?;
            worst = worst.max((e.x - p.0).hypot(e.y - p.1));
        }
    }
    ensure(worst < NOISELESS_TOL_M, format!("noiseless error {worst:e} m"))?;

    let noise = Normal::new(0.0, 2.0).unwrap();
    let trials = 200;
    let mut agree = 0;
    for _ in 0..trials {
        let p = in_triangle(&mut rng, &anchors);
        let rssi: Vec<f64> = anchors
            .iter()
            .map(|a| params.rssi_at((p.0 - a.0).hypot(p.1 - a.1)) + noise.sample(&mut rng))
            .collect();
        let dists: Vec<f64> = rssi.iter().map(|&r| wisp::rf::rssi_to_distance(r, &params)).collect();
        let e = trilaterate(&fingerprint(rssi), &layout, &params, TrilaterationOptions::default())
            .map_err(|e| e.to_string())?;
        let g = grid_minimizer(&anchors, &dists, (e.x, e.y));
        if (e.x - g.0).abs() <= GRID_CELL_M + 1e-9 && (e.y - g.1).abs() <= GRID_CELL_M + 1e-9 {
            agree += 1;
        }
    }
    let frac = f64::from(agree) / f64::from(trials);
    ensure(frac >= TRILAT_AGREEMENT_MIN, format!("grid agreement {agree}/{trials}"))?;
    Ok(format!("noiseless worst {worst:.1e} m; noisy grid agreement {agree}/{trials}"))
}

fn ac8_stationarity(r: &Run) -> Outcome {
    let m = &r.metrics;
    let count = |truth: Mobility| -> usize { m.stationarity.iter().filter(|((t, _), _)| *t == truth).map(|(_, n)| n).sum() };
    let (fixed, carried) = (count(Mobility::Stationary), count(Mobility::Mobile));
    ensure(fixed > 0 && carried > 0, format!("{fixed} fixed, {carried} carried scored"))?;
    ensure(m.stationarity_errors() == 0, format!("{} misclassified: {:?}", m.stationarity_errors(), m.stationarity))?;
    Ok(format!("{fixed} fixed -> stationary, {carried} carried -> mobile"))
}

fn ac9_kinds(r: &Run) -> Outcome {
    let k = r.metrics.kind_accuracy;
    ensure(k.total == 10 && k.hits == 10, format!("{}/{} devices", k.hits, k.total))?;
    Ok("10/10 devices".into())
}

fn ac10_states(r: &Run) -> Outcome {
    let a = r.metrics.state_accuracy;
    let v = a.value().ok_or("no scored windows")?;
    ensure(v >= STATE_ACCURACY_MIN, format!("accuracy {v:.4}"))?;
    Ok(format!("accuracy {v:.4} ({}/{})", a.hits, a.total))
}

fn ac11_zones(r: &Run) -> Outcome {
    ensure(r.scenario.channel.sigma_db == 2.0, "scenario noise is not 2 dB")?;
    let zones: std::collections::BTreeSet<&str> =
        r.scenario.rooms.iter().filter(|z| !z.excluded).map(|z| z.label.as_str()).collect();
    ensure(zones.len() == 4, format!("{} zones", zones.len()))?;
    let a = r.metrics.zone_accuracy;
    let v = a.value().ok_or("no usable windows")?;
    ensure(v >= ZONE_ACCURACY_MIN, format!("accuracy {v:.4}"))?;
    Ok(format!("accuracy {v:.4} ({}/{})", a.hits, a.total))
}

fn ac12_schedule(r: &Run) -> Outcome {
    let w = u64::from(r.out.truth.window_s);
    let phone = r.out.truth.devices.iter().find(|d| d.carried).ok_or("no carried device")?;
    let routine = r.analysis.devices[&phone.mac].routine.as_ref().ok_or("no routine")?;
    let wd = routine.groups.iter().find(|g| g.group == DayGroup::Weekday).ok_or("no weekday group")?;
    let (s, e) = *wd
        .absences
        .iter()
        .min_by_key(|(s, _)| s.abs_diff(9 * 3600))
        .ok_or("no weekday absence")?;
    let wake = wd.wake_s.ok_or("no wake time")?;
    ensure(
        s.abs_diff(9 * 3600) <= w && e.abs_diff(16 * 3600 + 1800) <= w && wake.abs_diff(6 * 3600) <= w,
        format!("absence {s}-{e} s, wake {wake} s"),
    )?;
    Ok(format!(
        "absence {}-{}, wake {} over {} weekdays",
        wisp::time::hhmm(s),
        wisp::time::hhmm(e),
        wisp::time::hhmm(wake),
        wd.days
    ))
}

fn ac13_har(day: &Run, guests: &Run) -> Outcome {
    let cov = day.metrics.activity_coverage().ok_or("no scripted activities")?;
    ensure(cov >= ACTIVITY_COVERAGE_MIN, format!("activity coverage {cov:.4}"))?;
    let w = f64::from(guests.out.truth.window_s);
    let scores = &guests.metrics.guests;
    ensure(!scores.is_empty() && scores.len() == guests.out.truth.guests.len(), "guest count")?;
    let mut worst = 0f64;
    for g in scores {
        let a = g.arrival_error_s.ok_or(format!("guest {} not detected", g.mac))?;
        let d = g.departure_error_s.ok_or(format!("guest {} has no departure", g.mac))?;
        worst = worst.max(a).max(d);
    }
    ensure(worst <= w, format!("guest boundary error {worst} s"))?;
    Ok(format!("coverage {cov:.4}; {} guests, worst boundary error {worst:.3} s", scores.len()))
}

fn ac14_determinism() -> Outcome {
    let bundle = || {
        let r = run_scenario("flat");
        render_bundle(&r.analysis, Some(&r.metrics), config_for(&r.scenario, &r.out).smoothing_windows)
    };
    let (a, b) = (bundle(), bundle());
    ensure(a.len() == b.len(), "file sets differ")?;
    for (k, v) in &a {
        ensure(b.get(k) == Some(v), format!("{k} differs"))?;
    }
    let bytes: usize = a.values().map(String::len).sum();
    Ok(format!("{} files, {bytes} bytes identical", a.len()))
}

fn main() {
    type Check = Box<dyn Fn() -> (Outcome, Duration)>;
    let timed = |f: fn() -> Outcome| -> Check {
        Box::new(move || {
            let t = Instant::now();
            (f(), t.elapsed())
        })
    };
    let on = |name: &'static str, f: fn(&Run) -> Outcome| -> Check {
        Box::new(move || {
            let t = Instant::now();
            let r = shared(name);
            let o = f(r);
            // A cached run still counts in full against this criterion.
            (o, t.elapsed().max(r.cost))
        })
    };
    let criteria: Vec<(&str, u64, Check)> = vec![
        ("DS classification", 1, timed(ac1_ds_classification)),
        ("address resolution", 1, timed(ac2_address_resolution)),
        ("radiotap golden + fuzz", 60, timed(ac3_radiotap)),
        ("BLE decoding", 1, timed(ac4_ble)),
        ("codec round-trips", 30, timed(ac5_round_trips)),
        ("path-loss inversion", 5, timed(ac6_pathloss)),
        ("trilateration", 60, timed(ac7_trilateration)),
        ("stationarity", 30, on("flat", ac8_stationarity)),
        ("smart/manual classification", 30, on("flat", ac9_kinds)),
        ("state windows", 30, on("flat", ac10_states)),
        ("zone matching", 60, on("four_zone", ac11_zones)),
        ("weekly schedule", 30, on("weekly_routine", ac12_schedule)),
        (
            "HAR end-to-end",
            120,
            Box::new(|| {
                let t = Instant::now();
                let (day, guests) = (shared("flat"), shared("guest_visit"));
                (ac13_har(day, guests), t.elapsed().max(day.cost + guests.cost))
            }),
        ),
        ("determinism", 120, timed(ac14_determinism)),
    ];

    let mut failed = 0;
    for (i, (name, limit_s, check)) in criteria.iter().enumerate() {
        let (outcome, took) = match catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(_) => (Err("panicked".into()), Duration::ZERO),
        };
        let within = took <= Duration::from_secs(*limit_s);
        let (status, detail) = match (&outcome, within) {
            (Ok(d), true) => ("PASS", d.clone()),
            (Ok(d), false) => ("FAIL", format!("{d}; too slow")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if status == "FAIL" {
            failed += 1;
        }
        println!("AC{:02} {status} {name}: {detail} [{:.2} s / {limit_s} s]", i + 1, took.as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
