use std::collections::BTreeSet;

use proptest::prelude::*;

use wisp::har::{
    compile_rules, detect_guests, detect_sleep_wake, evaluate_rules, DeviceTrack, Grid, Resemblance, DEFAULT_RULES,
};
use wisp::identity::DeviceKind;
use wisp::time::{DAY_US, SIM_EPOCH_US, US_PER_S};
use wisp::traffic::{DeviceState, StateTimeline};
use wisp::wire::{Direction, FrameControl, FrameRecord, FrameType, RadiotapMeta, ResolvedAddresses};
use wisp::MacAddress;

const H: u64 = 3600 * US_PER_S;

fn mac(s: &str) -> MacAddress {
    s.parse().unwrap()
}

fn track(m: &str, kind: DeviceKind, label: &str, states: Vec<DeviceState>, zones: Vec<Option<String>>) -> DeviceTrack {
    DeviceTrack { mac: mac(m), kind, labels: [label.to_string()].into(), states, zones }
}

fn up(sta: MacAddress, ap: MacAddress, ts: u64) -> FrameRecord {
    FrameRecord {
        sniffer_id: "rp01".into(),
        meta: RadiotapMeta { timestamp_us: ts, ..Default::default() },
        fc: FrameControl::new(FrameType::Data, 8, 0x01),
        addrs: ResolvedAddresses { sa: sta, da: ap, ta: sta, ra: ap, bssid: Some(ap) },
        direction: Direction::Uplink,
        body_len_bytes: 200,
        ssid: None,
    }
}

/// Frames once a minute over `[from, to]`.
fn visit(sta: MacAddress, ap: MacAddress, from: u64, to: u64) -> Vec<FrameRecord> {
    (from..=to).step_by((60 * US_PER_S) as usize).map(|t| up(sta, ap, t)).collect()
}

#[test]
fn adjacent_firings_merge() {
    use DeviceState::*;
    let rules = compile_rules("rule tv\n  priority 1\n  min_duration_s 60\n  emit_label watching-tv\n  state label:tv active 1.0\n").unwrap();
    let grid = Grid { start_us: SIM_EPOCH_US, window_s: 60, n_windows: 20 };
    let mut s = vec![Idle; 20];
    s[2..8].fill(Active);
    let tv = track("20:28:bc:00:00:08", DeviceKind::ManuallyControlled, "tv", s.clone(), vec![]);
    let ev = evaluate_rules(&rules, &grid, &[tv]).unwrap();
    assert_eq!(ev.len(), 1);
    assert_eq!((ev[0].start_us, ev[0].end_us), (grid.window_start(2), grid.window_start(8)));

    s[5] = Idle;
    let tv = track("20:28:bc:00:00:08", DeviceKind::ManuallyControlled, "tv", s, vec![]);
    assert_eq!(evaluate_rules(&rules, &grid, &[tv]).unwrap().len(), 2);
}

#[test]
fn bad_fraction_is_a_rule_error() {
    let err = compile_rules("rule x\n  priority 1\n  min_duration_s 60\n  emit_label x\n  state label:tv active 1.5\n")
        .unwrap_err();
    assert_eq!(err.line, 5);
}

#[test]
fn overnight_guest() {
    let ap = mac("24:2f:d0:00:00:07");
    let home = mac("a4:45:19:00:00:0a");
    let guest = mac("7a:3f:00:00:00:01");
    let day2 = SIM_EPOCH_US + DAY_US;
    let mut frames = visit(guest, ap, day2 + 21 * H, day2 + DAY_US + 12 * H);
    frames.extend(visit(home, ap, day2, day2 + 2 * DAY_US));
    let refs: Vec<&FrameRecord> = frames.iter().collect();
    let ev = detect_guests(&refs, ap, &[home].into(), day2, day2 + 2 * DAY_US, 10).unwrap();
    assert_eq!(ev.len(), 1);
    assert_eq!(ev[0].mac, guest);
    assert_eq!(ev[0].arrival_us, day2 + 21 * H);
    assert_eq!(ev[0].departure_us, Some(day2 + DAY_US + 12 * H));
    assert_eq!(ev[0].resembles, Resemblance::Unknown);
}

#[test]
fn overlapping_guests_are_separate_events() {
    let ap = mac("24:2f:d0:00:00:07");
    let (g1, g2) = (mac("7a:3f:00:00:00:01"), mac("86:11:00:00:00:02"));
    let t0 = SIM_EPOCH_US + DAY_US;
    let mut frames = visit(g1, ap, t0 + 14 * H, t0 + 18 * H);
    frames.extend(visit(g2, ap, t0 + 16 * H, t0 + 20 * H));
    let refs: Vec<&FrameRecord> = frames.iter().collect();
    let ev = detect_guests(&refs, ap, &BTreeSet::new(), t0, t0 + DAY_US, 10).unwrap();
    let spans: Vec<_> = ev.iter().map(|g| (g.mac, g.arrival_us, g.departure_us)).collect();
    assert_eq!(spans, [(g1, t0 + 14 * H, Some(t0 + 18 * H)), (g2, t0 + 16 * H, Some(t0 + 20 * H))]);
    assert!(ev.iter().all(|g| g.resembles == Resemblance::Multimedia));
    assert!(detect_guests(&refs, ap, &BTreeSet::new(), t0, t0, 10).is_err());
}

#[test]
fn sleep_and_wake_from_manual_devices() {
    use DeviceState::*;
    // Ten-minute windows over two days; the phone is off 02:00-06:30, the
    // laptop only runs 09:00-17:00.
    let tl = |f: &dyn Fn(u64) -> DeviceState| StateTimeline {
        device: MacAddress::default(),
        window_s: 600,
        start_ts_us: SIM_EPOCH_US,
        states: (0..288u64).map(|i| f((i % 144) * 10)).collect(),
    };
    let phone = tl(&|m| if (120..390).contains(&m) { Off } else { Idle });
    let laptop = tl(&|m| if (540..1020).contains(&m) { Active } else { Off });
    let sw = detect_sleep_wake(&[&phone, &laptop], SIM_EPOCH_US).unwrap();
    assert_eq!(sw.wake_us, SIM_EPOCH_US + 6 * H + 30 * 60 * US_PER_S);
    assert_eq!(sw.sleep_us, SIM_EPOCH_US + DAY_US + 2 * H);
}

fn arb_states(n: usize) -> impl Strategy<Value = Vec<DeviceState>> {
    proptest::collection::vec(prop_oneof![Just(DeviceState::Off), Just(DeviceState::Idle), Just(DeviceState::Active)], n)
}

fn arb_zones(n: usize) -> impl Strategy<Value = Vec<Option<String>>> {
    proptest::collection::vec(
        proptest::option::of(prop_oneof![Just("kitchen".to_string()), Just("bedroom".to_string())]),
        n,
    )
}

const N: usize = 240;

fn arb_tracks() -> impl Strategy<Value = Vec<DeviceTrack>> {
    // Long runs make firings likely: each drawn state covers six windows.
    let stretch = |v: Vec<DeviceState>| v.into_iter().flat_map(|s| [s; 6]).collect::<Vec<_>>();
    (arb_states(N / 6), arb_states(N / 6), arb_states(N / 6), arb_zones(N / 6)).prop_map(move |(a, b, c, z)| {
        let zones = z.into_iter().flat_map(|x| std::iter::repeat_n(x, 6)).collect();
        vec![
            track("20:28:bc:00:00:08", DeviceKind::ManuallyControlled, "tv", stretch(a), vec![]),
            track("9c:fc:e8:00:00:06", DeviceKind::ManuallyControlled, "laptop", stretch(b), vec![]),
            track("a4:45:19:00:00:0a", DeviceKind::ManuallyControlled, "phone", stretch(c), zones),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn events_are_well_formed_and_order_free(tracks in arb_tracks(), seed in any::<u64>()) {
        let rules = compile_rules(DEFAULT_RULES).unwrap();
        let grid = Grid { start_us: SIM_EPOCH_US + 8 * H, window_s: 60, n_windows: N };
        let ev = evaluate_rules(&rules, &grid, &tracks).unwrap();
        let end = grid.window_start(N);
        for e in &ev {
            prop_assert!(e.start_us < e.end_us);
            prop_assert!(e.start_us >= grid.start_us && e.end_us <= end);
            prop_assert!(!e.evidence.is_empty());
            prop_assert!((0.0..=1.0).contains(&e.confidence));
        }
        for pair in ev.iter().filter(|e| e.rule == "watching-tv").collect::<Vec<_>>().windows(2) {
            prop_assert!(pair[0].end_us < pair[1].start_us);
        }
        let mut shuffled = rules.clone();
        let mut s = seed;
        for i in (1..shuffled.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            shuffled.swap(i, (s >> 33) as usize % (i + 1));
        }
        prop_assert_eq!(evaluate_rules(&shuffled, &grid, &tracks).unwrap(), ev);
    }

    #[test]
    fn guests_never_come_from_the_baseline(
        stations in proptest::collection::vec((0u8..6, 0u64..48, 1u64..40), 1..12),
        baseline_mask in 0u8..64,
    ) {
        let ap = mac("24:2f:d0:00:00:07");
        let station = |k: u8| MacAddress([0x7a, 0, 0, 0, 0, k]);
        let t0 = SIM_EPOCH_US;
        let mut frames = Vec::new();
        for &(k, start_h, len) in &stations {
            let from = t0 + start_h * H;
            frames.extend(visit(station(k), ap, from, from + len * 600 * US_PER_S));
        }
        let baseline: BTreeSet<MacAddress> = (0..6).filter(|k| baseline_mask & (1 << k) != 0).map(station).collect();
        let refs: Vec<&FrameRecord> = frames.iter().collect();
        let ev = detect_guests(&refs, ap, &baseline, t0, t0 + 3 * DAY_US, 10).unwrap();
        for g in &ev {
            prop_assert!(!baseline.contains(&g.mac));
            if let Some(d) = g.departure_us {
                prop_assert!(d > g.arrival_us);
            }
        }
    }
}
