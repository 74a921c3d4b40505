#![allow(dead_code)]

use proptest::prelude::*;
use wisp::har::{compile_rules, DEFAULT_RULES};
use wisp::identity::{parse_oui_db, SAMPLE_OUI};
use wisp::pipeline::PipelineConfig;
use wisp::sim::{Scenario, SimOutput};
use wisp::wire::{classify_ds, FrameControl, FrameRecord, FrameType, RadiotapMeta, ResolvedAddresses};
use wisp::MacAddress;

pub fn mac(s: &str) -> MacAddress {
    s.parse().unwrap()
}

/// 56-byte radiotap header with three present words: TSFT, Flags (FCS),
/// Rate 6 Mb/s, Channel 2437/OFDM 2 GHz, antenna signal -84, RX flags and
/// timestamp in the first; antenna signal -87 / antenna 0 and antenna signal
/// -84 / antenna 1 in the two extension namespaces.
pub fn two_antenna_radiotap() -> Vec<u8> {
    let w0: u32 = 1 | 1 << 1 | 1 << 2 | 1 << 3 | 1 << 5 | 1 << 14 | 1 << 22 | 1 << 29 | 1 << 31;
    let w1: u32 = 1 << 5 | 1 << 11 | 1 << 29 | 1 << 31;
    let w2: u32 = 1 << 5 | 1 << 11;
    let mut b = vec![0u8, 0, 56, 0];
    for w in [w0, w1, w2] {
        b.extend_from_slice(&w.to_le_bytes());
    }
    b.extend_from_slice(&9_048_706_358u64.to_le_bytes()); // 16: TSFT
    b.push(0x10); // 24: flags
    b.push(12); // 25: rate, 500 kb/s units
    b.extend_from_slice(&2437u16.to_le_bytes()); // 26: channel
    b.extend_from_slice(&0x00c0u16.to_le_bytes());
    b.push((-84i8) as u8); // 30: antenna signal
    b.push(0); // pad
    b.extend_from_slice(&0u16.to_le_bytes()); // 32: RX flags
    b.extend_from_slice(&[0; 6]); // pad to 40
    b.extend_from_slice(&[0; 12]); // 40: timestamp
    b.extend_from_slice(&[(-87i8) as u8, 0, (-84i8) as u8, 1]); // 52..56
    assert_eq!(b.len(), 56);
    b
}

pub fn arb_mac() -> impl Strategy<Value = MacAddress> {
    any::<[u8; 6]>().prop_map(MacAddress)
}

prop_compose! {
    pub fn arb_frame_record()(
        sniffer in "[a-z0-9]{1,6}",
        ts in 0u64..4_000_000_000_000_000,
        rssi in proptest::option::of(-120i32..0),
        frac in 0u32..1000,
        freq in proptest::option::of(2400u16..6000),
        rate in proptest::option::of(1u32..600_000),
        fcs in any::<bool>(),
        data in any::<bool>(),
        subtype in 0u8..16,
        flags in any::<u8>(),
        addrs in (arb_mac(), arb_mac(), arb_mac(), arb_mac(), proptest::option::of(arb_mac())),
        body in 0u32..3000,
        ssid in proptest::option::of(proptest::collection::vec(any::<u8>(), 0..33)),
    ) -> FrameRecord {
        let ftype = if data { FrameType::Data } else { FrameType::Management };
        let fc = FrameControl::new(ftype, subtype, flags);
        let carries_ssid = !data && matches!(subtype, 4 | 5 | 8);
        FrameRecord {
            sniffer_id: sniffer,
            meta: RadiotapMeta {
                timestamp_us: ts,
                rssi_dbm: rssi.map(|r| f64::from(r) + f64::from(frac) / 1000.0 - 1.0),
                channel_freq_mhz: freq,
                data_rate_kbps: rate,
                fcs_at_end: fcs,
            },
            fc,
            addrs: ResolvedAddresses { sa: addrs.0, da: addrs.1, ta: addrs.2, ra: addrs.3, bssid: addrs.4 },
            direction: classify_ds(&fc),
            body_len_bytes: body,
            ssid: if carries_ssid { ssid } else { None },
        }
    }
}

/// Pipeline settings that use everything a simulation provides.
pub fn config_for(s: &Scenario, out: &SimOutput) -> PipelineConfig {
    let t = &out.truth;
    PipelineConfig {
        bssid: s.access_point().map(|d| d.mac),
        window_s: t.window_s,
        start_us: Some(t.start_us),
        n_windows: Some(t.n_windows),
        layout: Some(out.layout.clone()),
        zones: out.zones.clone(),
        low_confidence_zones: t.excluded_zones.iter().cloned().collect(),
        rules: compile_rules(DEFAULT_RULES).unwrap(),
        oui: parse_oui_db(SAMPLE_OUI),
        ..Default::default()
    }
}
