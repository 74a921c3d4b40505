//! 802.11 MAC header decoding into [`FrameRecord`]s.

use std::fmt;

use thiserror::Error;

use super::radiotap::{self, RadiotapError, RadiotapMeta};
use crate::mac::MacAddress;

pub const SUBTYPE_PROBE_REQUEST: u8 = 4;
pub const SUBTYPE_PROBE_RESPONSE: u8 = 5;
pub const SUBTYPE_BEACON: u8 = 8;
/// Data subtypes with bit 3 set carry a QoS control field.
pub const SUBTYPE_QOS_DATA: u8 = 8;

const FLAG_TO_DS: u8 = 0x01;
const FLAG_FROM_DS: u8 = 0x02;
const FLAG_PROTECTED: u8 = 0x40;
const FLAG_ORDER: u8 = 0x80;

const MAC_HEADER_LEN: usize = 24;
const ADDR4_LEN: usize = 6;
const QOS_LEN: usize = 2;
const HT_CONTROL_LEN: usize = 4;
const CCMP_HEADER_LEN: usize = 8;
const FCS_LEN: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FrameType {
    Management,
    Control,
    Data,
    Extension,
}

impl FrameType {
    pub fn from_bits(bits: u8) -> Self {
        match bits & 0x3 {
            0 => FrameType::Management,
            1 => FrameType::Control,
            2 => FrameType::Data,
            _ => FrameType::Extension,
        }
    }

    pub fn bits(self) -> u8 {
        match self {
            FrameType::Management => 0,
            FrameType::Control => 1,
            FrameType::Data => 2,
            FrameType::Extension => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FrameType::Management => "mgmt",
            FrameType::Control => "ctrl",
            FrameType::Data => "data",
            FrameType::Extension => "ext",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mgmt" => Some(FrameType::Management),
            "ctrl" => Some(FrameType::Control),
            "data" => Some(FrameType::Data),
            "ext" => Some(FrameType::Extension),
            _ => None,
        }
    }
}

/// The two-octet frame control field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FrameControl {
    pub version: u8,
    pub ftype: FrameType,
    pub subtype: u8,
    pub to_ds: bool,
    pub from_ds: bool,
    pub raw_flags: u8,
}

impl FrameControl {
    pub fn new(ftype: FrameType, subtype: u8, raw_flags: u8) -> Self {
        parse_frame_control([(subtype & 0x0f) << 4 | ftype.bits() << 2, raw_flags])
    }

    /// `(from_ds << 1) | to_ds`
    pub fn ds_code(&self) -> u8 {
        (u8::from(self.from_ds) << 1) | u8::from(self.to_ds)
    }

    pub fn is_protected(&self) -> bool {
        self.raw_flags & FLAG_PROTECTED != 0
    }

    pub fn to_bytes(&self) -> [u8; 2] {
        [
            (self.subtype & 0x0f) << 4 | self.ftype.bits() << 2 | (self.version & 0x3),
            self.raw_flags,
        ]
    }
}

/// Shown as `0xB1B2` with B1 the type/subtype octet, e.g. `0x8842`.
impl fmt::Display for FrameControl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [b1, b2] = self.to_bytes();
        write!(f, "0x{b1:02x}{b2:02x}")
    }
}

pub fn parse_frame_control(bytes: [u8; 2]) -> FrameControl {
    let [b0, flags] = bytes;
    FrameControl {
        version: b0 & 0x3,
        ftype: FrameType::from_bits(b0 >> 2),
        subtype: b0 >> 4,
        to_ds: flags & FLAG_TO_DS != 0,
        from_ds: flags & FLAG_FROM_DS != 0,
        raw_flags: flags,
    }
}

/// Traffic direction implied by the DS flags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    /// To DS: station to access point.
    Uplink,
    /// From DS: access point to station.
    Downlink,
    /// Neither flag: peer-to-peer, broadcast, management.
    PeerOrBroadcast,
    /// Both flags: between two access points.
    ApToAp,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Uplink => "up",
            Direction::Downlink => "down",
            Direction::PeerOrBroadcast => "peer",
            Direction::ApToAp => "ap2ap",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "up" => Some(Direction::Uplink),
            "down" => Some(Direction::Downlink),
            "peer" => Some(Direction::PeerOrBroadcast),
            "ap2ap" => Some(Direction::ApToAp),
            _ => None,
        }
    }

    pub fn ds_flags(self) -> u8 {
        match self {
            Direction::PeerOrBroadcast => 0,
            Direction::Uplink => FLAG_TO_DS,
            Direction::Downlink => FLAG_FROM_DS,
            Direction::ApToAp => FLAG_TO_DS | FLAG_FROM_DS,
        }
    }
}

pub fn classify_ds(fc: &FrameControl) -> Direction {
    match fc.ds_code() {
        0 => Direction::PeerOrBroadcast,
        1 => Direction::Uplink,
        2 => Direction::Downlink,
        _ => Direction::ApToAp,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ResolvedAddresses {
    pub sa: MacAddress,
    pub da: MacAddress,
    pub ta: MacAddress,
    pub ra: MacAddress,
    pub bssid: Option<MacAddress>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("frame with both DS flags set lacks address 4")]
    MissingAddress4,
    #[error("tagged parameter overruns the frame body")]
    MalformedTags,
    #[error("frame truncated: need {need} bytes, have {have}")]
    Truncated { need: usize, have: usize },
    #[error("unsupported frame control version {0}")]
    UnsupportedVersion(u8),
    #[error(transparent)]
    Radiotap(#[from] RadiotapError),
}

/// Maps the positional address fields onto source, destination,
/// transmitter, receiver and BSSID according to the DS code.
pub fn resolve_addresses(
    fc: &FrameControl,
    addr1: MacAddress,
    addr2: MacAddress,
    addr3: MacAddress,
    addr4: Option<MacAddress>,
) -> Result<ResolvedAddresses, FrameError> {
    let (sa, da, bssid) = match fc.ds_code() {
        0 => (addr2, addr1, Some(addr3)),
        1 => (addr2, addr3, Some(addr1)),
        2 => (addr3, addr1, Some(addr2)),
        _ => (addr4.ok_or(FrameError::MissingAddress4)?, addr3, None),
    };
    Ok(ResolvedAddresses {
        sa,
        da,
        ta: addr2,
        ra: addr1,
        bssid,
    })
}

/// Positional addresses for a resolved set; inverse of [`resolve_addresses`].
fn positional_addresses(
    ds_code: u8,
    a: &ResolvedAddresses,
) -> (MacAddress, MacAddress, MacAddress, Option<MacAddress>) {
    match ds_code {
        0 => (a.da, a.sa, a.bssid.unwrap_or(MacAddress::BROADCAST), None),
        1 => (a.ra, a.ta, a.da, None),
        2 => (a.ra, a.ta, a.sa, None),
        _ => (a.ra, a.ta, a.da, Some(a.sa)),
    }
}

/// Returns the SSID element of a beacon, probe request or probe response
/// body. `Some(empty)` is the wildcard SSID.
pub fn extract_mgmt_ssid(body: &[u8], subtype: u8) -> Result<Option<Vec<u8>>, FrameError> {
    let fixed = match subtype {
        SUBTYPE_PROBE_REQUEST => 0,
        SUBTYPE_PROBE_RESPONSE | SUBTYPE_BEACON => 12,
        _ => return Ok(None),
    };
    if body.len() < fixed {
        return Err(FrameError::MalformedTags);
    }
    let tags = &body[fixed..];
    let mut pos = 0;
    while pos < tags.len() {
        if pos + 2 > tags.len() {
            return Err(FrameError::MalformedTags);
        }
        let (number, len) = (tags[pos], usize::from(tags[pos + 1]));
        let value = tags
            .get(pos + 2..pos + 2 + len)
            .ok_or(FrameError::MalformedTags)?;
        if number == 0 {
            return Ok(Some(value.to_vec()));
        }
        pos += 2 + len;
    }
    Ok(None)
}

/// One decoded management or data frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub sniffer_id: String,
    pub meta: RadiotapMeta,
    pub fc: FrameControl,
    pub addrs: ResolvedAddresses,
    pub direction: Direction,
    /// Frame body after the MAC header, QoS control and CCMP header, FCS
    /// excluded.
    pub body_len_bytes: u32,
    /// Raw SSID, only for beacons and probe requests/responses.
    pub ssid: Option<Vec<u8>>,
}

impl FrameRecord {
    pub fn ts_us(&self) -> u64 {
        self.meta.timestamp_us
    }

    pub fn ssid_lossy(&self) -> Option<String> {
        self.ssid.as_deref().map(|s| String::from_utf8_lossy(s).into_owned())
    }

    /// The non-AP endpoint of the frame: transmitter of uplink and peer
    /// frames, receiver of downlink frames.
    pub fn station(&self) -> MacAddress {
        match self.direction {
            Direction::Downlink => self.addrs.ra,
            _ => self.addrs.ta,
        }
    }

    pub fn is_probe_request(&self) -> bool {
        self.fc.ftype == FrameType::Management && self.fc.subtype == SUBTYPE_PROBE_REQUEST
    }

    /// Serializes back to a radiotap-framed 802.11 packet. Body octets are
    /// zero except for the SSID element of management frames.
    pub fn to_packet(&self) -> Vec<u8> {
        let mut out = radiotap::encode_header(&self.meta, Some(self.meta.timestamp_us));
        out.extend_from_slice(&self.fc.to_bytes());
        out.extend_from_slice(&[0, 0]);
        let (a1, a2, a3, a4) = positional_addresses(self.fc.ds_code(), &self.addrs);
        out.extend_from_slice(&a1.0);
        out.extend_from_slice(&a2.0);
        out.extend_from_slice(&a3.0);
        out.extend_from_slice(&[0, 0]);
        let is_data = self.fc.ftype == FrameType::Data;
        if is_data && self.fc.ds_code() == 3 {
            out.extend_from_slice(&a4.unwrap_or_default().0);
        }
        if is_data && self.fc.subtype & SUBTYPE_QOS_DATA != 0 {
            out.extend_from_slice(&[0; QOS_LEN]);
            if self.fc.raw_flags & FLAG_ORDER != 0 {
                out.extend_from_slice(&[0; HT_CONTROL_LEN]);
            }
        }
        if is_data && self.fc.is_protected() {
            out.extend_from_slice(&[0; CCMP_HEADER_LEN]);
        }
        let body_start = out.len();
        if let (FrameType::Management, Some(ssid)) = (self.fc.ftype, &self.ssid) {
            let fixed = if self.fc.subtype == SUBTYPE_PROBE_REQUEST { 0 } else { 12 };
            out.extend(std::iter::repeat_n(0, fixed));
            out.push(0);
            out.push(ssid.len() as u8);
            out.extend_from_slice(ssid);
        }
        let body_end = body_start + self.body_len_bytes as usize;
        out.resize(body_end.max(out.len()), 0);
        if self.meta.fcs_at_end {
            out.extend_from_slice(&[0; FCS_LEN]);
        }
        out
    }
}

/// Decodes one captured packet. Control and extension frames are out of
/// scope and yield `Ok(None)`.
pub fn decode_frame(
    sniffer_id: &str,
    capture_ts_us: u64,
    packet: &[u8],
) -> Result<Option<FrameRecord>, FrameError> {
    let (mut meta, offset) = radiotap::parse_radiotap(packet)?;
    meta.timestamp_us = capture_ts_us;
    let frame = &packet[offset..];
    if frame.len() < 2 {
        return Err(FrameError::Truncated { need: 2, have: frame.len() });
    }
    let fc = parse_frame_control([frame[0], frame[1]]);
    if fc.version != 0 {
        return Err(FrameError::UnsupportedVersion(fc.version));
    }
    if matches!(fc.ftype, FrameType::Control | FrameType::Extension) {
        return Ok(None);
    }
    let is_data = fc.ftype == FrameType::Data;
    let has_addr4 = is_data && fc.ds_code() == 3;
    let mut header_len = MAC_HEADER_LEN;
    if has_addr4 {
        header_len += ADDR4_LEN;
    }
    if is_data && fc.subtype & SUBTYPE_QOS_DATA != 0 {
        header_len += QOS_LEN;
        if fc.raw_flags & FLAG_ORDER != 0 {
            header_len += HT_CONTROL_LEN;
        }
    }
    if is_data && fc.is_protected() {
        header_len += CCMP_HEADER_LEN;
    }
    let trailer = if meta.fcs_at_end { FCS_LEN } else { 0 };
    if frame.len() < header_len + trailer {
        return Err(FrameError::Truncated {
            need: header_len + trailer,
            have: frame.len(),
        });
    }
    let addr = |at: usize| MacAddress::from_slice(&frame[at..at + 6]).unwrap();
    let addr4 = has_addr4.then(|| addr(MAC_HEADER_LEN));
    let addrs = resolve_addresses(&fc, addr(4), addr(10), addr(16), addr4)?;
    let body = &frame[header_len..frame.len() - trailer];
    let ssid = if fc.ftype == FrameType::Management {
        extract_mgmt_ssid(body, fc.subtype)?
    } else {
        None
    };
    Ok(Some(FrameRecord {
        sniffer_id: sniffer_id.to_string(),
        meta,
        fc,
        addrs,
        direction: classify_ds(&fc),
        body_len_bytes: body.len() as u32,
        ssid,
    }))
}
