//! Radiotap capture header decoding.
//!
//! Only TSFT, Flags, Rate, Channel and dBm antenna signal are interpreted;
//! every other field in the radiotap namespace is skipped by its size.
//! Vendor namespaces are skipped using their declared skip length.

use thiserror::Error;

/// Fixed preamble: version, pad, length, first present word.
pub const PREAMBLE_LEN: usize = 8;

const BIT_TSFT: u32 = 0;
const BIT_FLAGS: u32 = 1;
const BIT_RATE: u32 = 2;
const BIT_CHANNEL: u32 = 3;
const BIT_ANTENNA_SIGNAL: u32 = 5;
const BIT_TLV: u32 = 28;
const BIT_RADIOTAP_NS: u32 = 29;
const BIT_VENDOR_NS: u32 = 30;
const BIT_EXT: u32 = 31;

/// Flags field: frame includes a trailing FCS.
pub const FLAG_FCS_AT_END: u8 = 0x10;

/// (alignment, size) for radiotap namespace bits 0..=27.
const FIELDS: [(usize, usize); 28] = [
    (8, 8),  // 0 TSFT
    (1, 1),  // 1 Flags
    (1, 1),  // 2 Rate
    (2, 4),  // 3 Channel
    (1, 2),  // 4 FHSS
    (1, 1),  // 5 dBm antenna signal
    (1, 1),  // 6 dBm antenna noise
    (2, 2),  // 7 lock quality
    (2, 2),  // 8 TX attenuation
    (2, 2),  // 9 dB TX attenuation
    (1, 1),  // 10 dBm TX power
    (1, 1),  // 11 antenna
    (1, 1),  // 12 dB antenna signal
    (1, 1),  // 13 dB antenna noise
    (2, 2),  // 14 RX flags
    (2, 2),  // 15 TX flags
    (1, 1),  // 16 RTS retries
    (1, 1),  // 17 data retries
    (4, 8),  // 18 XChannel
    (1, 3),  // 19 MCS
    (4, 8),  // 20 A-MPDU status
    (2, 12), // 21 VHT
    (8, 12), // 22 timestamp
    (2, 12), // 23 HE
    (2, 12), // 24 HE-MU
    (2, 6),  // 25 HE-MU-other-user
    (1, 1),  // 26 0-length PSDU
    (2, 4),  // 27 L-SIG
];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RadiotapError {
    #[error("radiotap header truncated: declared {declared} bytes, {available} available")]
    TruncatedHeader { declared: usize, available: usize },
    #[error("unsupported radiotap version {0}")]
    UnsupportedVersion(u8),
    #[error("radiotap header length {0} is shorter than its present bitmasks")]
    BadLength(usize),
    #[error("radiotap field for bit {bit} overruns the declared header length")]
    FieldOverrun { bit: u32 },
}

/// Capture metadata carried alongside every decoded frame.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RadiotapMeta {
    /// Microseconds. From TSFT when decoding a bare header; frame decoding
    /// replaces it with the capture timestamp.
    pub timestamp_us: u64,
    /// Received power in dBm. Decoded captures carry whole dBm; simulated
    /// records may carry fractional values.
    pub rssi_dbm: Option<f64>,
    pub channel_freq_mhz: Option<u16>,
    pub data_rate_kbps: Option<u32>,
    pub fcs_at_end: bool,
}

/// Everything decoded from one radiotap header.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RadiotapHeader {
    pub version: u8,
    pub length: usize,
    pub present: Vec<u32>,
    pub tsft: Option<u64>,
    pub flags: Option<u8>,
    pub rate_500kbps: Option<u8>,
    pub channel_freq_mhz: Option<u16>,
    pub channel_flags: Option<u16>,
    /// Every dBm antenna signal value, in header order.
    pub antenna_signals: Vec<i8>,
}

impl RadiotapHeader {
    pub fn meta(&self) -> RadiotapMeta {
        let rssi = self
            .antenna_signals
            .first()
            .map(|&s| f64::from(s))
            .filter(|s| (-120.0..=0.0).contains(s));
        RadiotapMeta {
            timestamp_us: self.tsft.unwrap_or(0),
            rssi_dbm: rssi,
            channel_freq_mhz: self.channel_freq_mhz.filter(|f| (2400..=6000).contains(f)),
            data_rate_kbps: self.rate_500kbps.map(|r| u32::from(r) * 500),
            fcs_at_end: self.flags.is_some_and(|f| f & FLAG_FCS_AT_END != 0),
        }
    }
}

/// Decodes the radiotap header and returns its metadata together with the
/// offset of the 802.11 frame (the declared header length).
pub fn parse_radiotap(buf: &[u8]) -> Result<(RadiotapMeta, usize), RadiotapError> {
    let header = parse_header(buf)?;
    Ok((header.meta(), header.length))
}

#[derive(Clone, Copy)]
enum Namespace {
    Radiotap,
    Vendor { skip: usize },
}

fn align_up(offset: usize, align: usize) -> usize {
    (offset + align - 1) & !(align - 1)
}

pub fn parse_header(buf: &[u8]) -> Result<RadiotapHeader, RadiotapError> {
    if buf.len() < PREAMBLE_LEN {
        return Err(RadiotapError::TruncatedHeader {
            declared: PREAMBLE_LEN,
            available: buf.len(),
        });
    }
    let version = buf[0];
    if version != 0 {
        return Err(RadiotapError::UnsupportedVersion(version));
    }
    let length = usize::from(u16::from_le_bytes([buf[2], buf[3]]));
    if length > buf.len() {
        return Err(RadiotapError::TruncatedHeader {
            declared: length,
            available: buf.len(),
        });
    }
    if length < PREAMBLE_LEN {
        return Err(RadiotapError::BadLength(length));
    }
    let hdr = &buf[..length];

    let mut present = Vec::new();
    let mut cursor = 4;
    loop {
        if cursor + 4 > length {
            return Err(RadiotapError::BadLength(length));
        }
        let word = u32::from_le_bytes([hdr[cursor], hdr[cursor + 1], hdr[cursor + 2], hdr[cursor + 3]]);
        present.push(word);
        cursor += 4;
        if word & (1 << BIT_EXT) == 0 {
            break;
        }
    }

    let mut out = RadiotapHeader {
        version,
        length,
        present: present.clone(),
        ..Default::default()
    };

    let mut ns = Namespace::Radiotap;
    let mut vendor_skipped = false;
    'words: for &word in &present {
        match ns {
            Namespace::Radiotap => {
                for bit in 0..BIT_TLV {
                    if word & (1 << bit) == 0 {
                        continue;
                    }
                    let (align, size) = FIELDS[bit as usize];
                    cursor = align_up(cursor, align);
                    let Some(field) = hdr.get(cursor..cursor + size) else {
                        return Err(RadiotapError::FieldOverrun { bit });
                    };
                    match bit {
                        BIT_TSFT => out.tsft = Some(u64::from_le_bytes(field.try_into().unwrap())),
                        BIT_FLAGS => out.flags = Some(field[0]),
                        BIT_RATE => out.rate_500kbps = Some(field[0]),
                        BIT_CHANNEL => {
                            out.channel_freq_mhz = Some(u16::from_le_bytes([field[0], field[1]]));
                            out.channel_flags = Some(u16::from_le_bytes([field[2], field[3]]));
                        }
                        BIT_ANTENNA_SIGNAL => out.antenna_signals.push(field[0] as i8),
                        _ => {}
                    }
                    cursor += size;
                }
                if word & (1 << BIT_TLV) != 0 {
                    // TLV items run to the end of the header.
                    break 'words;
                }
            }
            Namespace::Vendor { skip } => {
                if !vendor_skipped {
                    cursor += skip;
                    if cursor > length {
                        return Err(RadiotapError::FieldOverrun { bit: BIT_VENDOR_NS });
                    }
                    vendor_skipped = true;
                }
            }
        }
        if word & (1 << BIT_VENDOR_NS) != 0 {
            cursor = align_up(cursor, 2);
            let Some(field) = hdr.get(cursor..cursor + 6) else {
                return Err(RadiotapError::FieldOverrun { bit: BIT_VENDOR_NS });
            };
            let skip = usize::from(u16::from_le_bytes([field[4], field[5]]));
            cursor += 6;
            ns = Namespace::Vendor { skip };
            vendor_skipped = false;
        } else if word & (1 << BIT_RADIOTAP_NS) != 0 {
            ns = Namespace::Radiotap;
        }
    }

    Ok(out)
}

/// Builds a radiotap header carrying TSFT, Flags, Rate, Channel and one
/// dBm antenna signal, omitting absent values.
pub fn encode_header(meta: &RadiotapMeta, tsft: Option<u64>) -> Vec<u8> {
    let mut word: u32 = 0;
    let mut data: Vec<u8> = Vec::new();
    // Data area starts at offset 8 in a single-word header.
    let base = PREAMBLE_LEN;
    let pad_to = |data: &mut Vec<u8>, align: usize| {
        while (base + data.len()) % align != 0 {
            data.push(0);
        }
    };
    if let Some(t) = tsft {
        word |= 1 << BIT_TSFT;
        pad_to(&mut data, 8);
        data.extend_from_slice(&t.to_le_bytes());
    }
    if meta.fcs_at_end {
        word |= 1 << BIT_FLAGS;
        data.push(FLAG_FCS_AT_END);
    }
    if let Some(kbps) = meta.data_rate_kbps {
        word |= 1 << BIT_RATE;
        data.push(u8::try_from(kbps / 500).unwrap_or(u8::MAX));
    }
    if let Some(freq) = meta.channel_freq_mhz {
        word |= 1 << BIT_CHANNEL;
        pad_to(&mut data, 2);
        data.extend_from_slice(&freq.to_le_bytes());
        // 2 GHz spectrum + OFDM
        data.extend_from_slice(&0x00c0u16.to_le_bytes());
    }
    if let Some(rssi) = meta.rssi_dbm {
        word |= 1 << BIT_ANTENNA_SIGNAL;
        data.push(rssi.round().clamp(-128.0, 127.0) as i8 as u8);
    }
    let length = (PREAMBLE_LEN + data.len()) as u16;
    let mut out = Vec::with_capacity(usize::from(length));
    out.push(0);
    out.push(0);
    out.extend_from_slice(&length.to_le_bytes());
    out.extend_from_slice(&word.to_le_bytes());
    out.extend_from_slice(&data);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_header() {
        let buf = [0u8, 0, 8, 0, 0, 0, 0, 0];
        let (meta, off) = parse_radiotap(&buf).unwrap();
        assert_eq!(off, 8);
        assert_eq!(meta, RadiotapMeta::default());
    }

    #[test]
    fn declared_length_past_buffer() {
        let mut buf = vec![0u8; 40];
        buf[2] = 64;
        assert_eq!(
            parse_radiotap(&buf),
            Err(RadiotapError::TruncatedHeader { declared: 64, available: 40 })
        );
    }

    #[test]
    fn version_must_be_zero() {
        let buf = [1u8, 0, 8, 0, 0, 0, 0, 0];
        assert_eq!(parse_radiotap(&buf), Err(RadiotapError::UnsupportedVersion(1)));
    }

    #[test]
    fn short_buffer() {
        assert!(matches!(
            parse_radiotap(&[0, 0, 8]),
            Err(RadiotapError::TruncatedHeader { .. })
        ));
    }

    #[test]
    fn encode_then_parse() {
        let meta = RadiotapMeta {
            timestamp_us: 77,
            rssi_dbm: Some(-61.0),
            channel_freq_mhz: Some(2447),
            data_rate_kbps: Some(54_000),
            fcs_at_end: true,
        };
        let buf = encode_header(&meta, Some(77));
        let (back, off) = parse_radiotap(&buf).unwrap();
        assert_eq!(off, buf.len());
        assert_eq!(back, meta);
    }

    #[test]
    fn vendor_namespace_is_skipped() {
        // word0: Flags + vendor NS + ext; word1 (vendor): nothing; data:
        // flags(1) pad(1) vendor hdr(6) vendor data(3)
        let mut buf = vec![0u8, 0, 0, 0];
        let w0: u32 = (1 << BIT_FLAGS) | (1 << BIT_VENDOR_NS) | (1 << BIT_EXT);
        buf.extend_from_slice(&w0.to_le_bytes());
        buf.extend_from_slice(&0u32.to_le_bytes());
        buf.push(FLAG_FCS_AT_END);
        buf.push(0);
        buf.extend_from_slice(&[0x00, 0x11, 0x22, 0x01, 3, 0]);
        buf.extend_from_slice(&[9, 9, 9]);
        let len = buf.len() as u16;
        buf[2..4].copy_from_slice(&len.to_le_bytes());
        let h = parse_header(&buf).unwrap();
        assert_eq!(h.flags, Some(FLAG_FCS_AT_END));
        assert_eq!(h.length, buf.len());
    }
}
