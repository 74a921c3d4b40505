//! Newline-delimited JSON interchange for [`FrameRecord`]s.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::frame::{
    classify_ds, Direction, FrameControl, FrameRecord, FrameType, ResolvedAddresses,
    SUBTYPE_BEACON, SUBTYPE_PROBE_REQUEST, SUBTYPE_PROBE_RESPONSE,
};
use super::radiotap::RadiotapMeta;
use crate::mac::MacAddress;

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Serialize, Deserialize)]
struct FrameLine {
    ts_us: u64,
    sniffer: String,
    ftype: String,
    subtype: u8,
    dir: String,
    sa: MacAddress,
    da: MacAddress,
    ta: MacAddress,
    ra: MacAddress,
    body_len: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bssid: Option<MacAddress>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rssi_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    freq_mhz: Option<u16>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rate_kbps: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ssid_hex: Option<String>,
    /// Raw frame control flags; written only when they carry more than the
    /// DS bits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    flags: Option<u8>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    fcs: bool,
}

impl From<&FrameRecord> for FrameLine {
    fn from(r: &FrameRecord) -> Self {
        let extra_flags = r.fc.raw_flags & !r.direction.ds_flags();
        FrameLine {
            ts_us: r.meta.timestamp_us,
            sniffer: r.sniffer_id.clone(),
            ftype: r.fc.ftype.as_str().to_string(),
            subtype: r.fc.subtype,
            dir: r.direction.as_str().to_string(),
            sa: r.addrs.sa,
            da: r.addrs.da,
            ta: r.addrs.ta,
            ra: r.addrs.ra,
            body_len: r.body_len_bytes,
            bssid: r.addrs.bssid,
            rssi_dbm: r.meta.rssi_dbm,
            freq_mhz: r.meta.channel_freq_mhz,
            rate_kbps: r.meta.data_rate_kbps,
            ssid_hex: r.ssid.as_ref().map(hex::encode),
            flags: (extra_flags != 0).then_some(r.fc.raw_flags),
            fcs: r.meta.fcs_at_end,
        }
    }
}

impl FrameLine {
    fn into_record(self) -> Result<FrameRecord, String> {
        let ftype = FrameType::parse(&self.ftype).ok_or_else(|| format!("unknown ftype {:?}", self.ftype))?;
        let direction = Direction::parse(&self.dir).ok_or_else(|| format!("unknown dir {:?}", self.dir))?;
        if self.subtype > 15 {
            return Err(format!("subtype {} out of range", self.subtype));
        }
        let raw_flags = self.flags.unwrap_or_else(|| direction.ds_flags());
        let fc = FrameControl::new(ftype, self.subtype, raw_flags);
        if classify_ds(&fc) != direction {
            return Err(format!("dir {:?} contradicts flags {raw_flags:#04x}", self.dir));
        }
        let ssid = match self.ssid_hex {
            Some(h) => {
                let carries_ssid = ftype == FrameType::Management
                    && matches!(
                        self.subtype,
                        SUBTYPE_PROBE_REQUEST | SUBTYPE_PROBE_RESPONSE | SUBTYPE_BEACON
                    );
                if !carries_ssid {
                    return Err("ssid_hex on a frame without an SSID element".into());
                }
                Some(hex::decode(&h).map_err(|e| format!("ssid_hex: {e}"))?)
            }
            None => None,
        };
        Ok(FrameRecord {
            sniffer_id: self.sniffer,
            meta: RadiotapMeta {
                timestamp_us: self.ts_us,
                rssi_dbm: self.rssi_dbm,
                channel_freq_mhz: self.freq_mhz,
                data_rate_kbps: self.rate_kbps,
                fcs_at_end: self.fcs,
            },
            fc,
            addrs: ResolvedAddresses {
                sa: self.sa,
                da: self.da,
                ta: self.ta,
                ra: self.ra,
                bssid: self.bssid,
            },
            direction,
            body_len_bytes: self.body_len,
            ssid,
        })
    }
}

pub fn write_record<W: Write>(mut w: W, record: &FrameRecord) -> io::Result<()> {
    serde_json::to_writer(&mut w, &FrameLine::from(record))?;
    w.write_all(b"\n")
}

pub fn write_records<W: Write>(mut w: W, records: &[FrameRecord]) -> io::Result<()> {
    for r in records {
        write_record(&mut w, r)?;
    }
    Ok(())
}

/// Parses one line into `T`, attaching the 1-based line number to errors.
pub(crate) fn parse_json_line<T: serde::de::DeserializeOwned>(
    line: &str,
    line_no: usize,
) -> Result<T, RecordError> {
    serde_json::from_str(line).map_err(|e| RecordError::ParseError {
        line: line_no,
        message: e.to_string(),
    })
}

/// Reads records written by [`write_records`]. Blank lines are skipped.
pub fn read_records<R: BufRead>(r: R) -> Result<Vec<FrameRecord>, RecordError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: FrameLine = parse_json_line(&line, i + 1)?;
        let record = parsed
            .into_record()
            .map_err(|message| RecordError::ParseError { line: i + 1, message })?;
        out.push(record);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_round_trip() {
        let mut buf = Vec::new();
        write_records(&mut buf, &[]).unwrap();
        assert!(buf.is_empty());
        assert!(read_records(&buf[..]).unwrap().is_empty());
    }

    #[test]
    fn missing_ts_reports_line() {
        let text = "\n{\"sniffer\":\"a\",\"ftype\":\"data\",\"subtype\":0,\"dir\":\"up\",\
            \"sa\":\"00:00:00:00:00:01\",\"da\":\"00:00:00:00:00:02\",\
            \"ta\":\"00:00:00:00:00:01\",\"ra\":\"00:00:00:00:00:02\",\"body_len\":1}\n";
        match read_records(text.as_bytes()) {
            Err(RecordError::ParseError { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("ts_us"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_keys_ignored_and_dir_checked() {
        let base = "\"ts_us\":5,\"sniffer\":\"a\",\"ftype\":\"data\",\"subtype\":8,\
            \"sa\":\"00:00:00:00:00:01\",\"da\":\"00:00:00:00:00:02\",\
            \"ta\":\"00:00:00:00:00:01\",\"ra\":\"00:00:00:00:00:02\",\"body_len\":1";
        let ok = format!("{{{base},\"dir\":\"up\",\"colour\":\"blue\"}}");
        let recs = read_records(ok.as_bytes()).unwrap();
        assert_eq!(recs[0].direction, Direction::Uplink);
        assert!(recs[0].fc.to_ds);
        let bad = format!("{{{base},\"dir\":\"up\",\"flags\":2}}");
        assert!(read_records(bad.as_bytes()).is_err());
    }
}
