use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};

use super::ad::{
    decode_local_name, decode_manufacturer, decode_service_uuids, parse_ad_structures,
    serialize_ad_structures, AdError, AdStructure, ManufacturerData, Uuid128,
};
use crate::mac::MacAddress;
use crate::wire::records::{parse_json_line, RecordError};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DecodedAdvertisement {
    pub local_name: Option<String>,
    pub name_complete: bool,
    pub service_uuids16: Vec<u16>,
    pub service_uuids128: Vec<Uuid128>,
    pub manufacturer: Option<ManufacturerData>,
}

impl DecodedAdvertisement {
    pub fn from_structures(structures: &[AdStructure]) -> Result<Self, AdError> {
        let (name, complete) = match decode_local_name(structures) {
            Some((n, c)) => (Some(n), c),
            None => (None, false),
        };
        let (service_uuids16, service_uuids128) = decode_service_uuids(structures)?;
        Ok(DecodedAdvertisement {
            local_name: name,
            name_complete: complete,
            service_uuids16,
            service_uuids128,
            manufacturer: decode_manufacturer(structures)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BleAdvRecord {
    pub timestamp_us: u64,
    pub sniffer_id: String,
    pub advertiser: MacAddress,
    pub rssi_dbm: Option<f64>,
    pub structures: Vec<AdStructure>,
    pub decoded: DecodedAdvertisement,
}

impl BleAdvRecord {
    pub fn new(
        timestamp_us: u64,
        sniffer_id: impl Into<String>,
        advertiser: MacAddress,
        rssi_dbm: Option<f64>,
        structures: Vec<AdStructure>,
    ) -> Result<Self, AdError> {
        let decoded = DecodedAdvertisement::from_structures(&structures)?;
        Ok(BleAdvRecord {
            timestamp_us,
            sniffer_id: sniffer_id.into(),
            advertiser,
            rssi_dbm,
            structures,
            decoded,
        })
    }

    pub fn from_payload(
        timestamp_us: u64,
        sniffer_id: impl Into<String>,
        advertiser: MacAddress,
        rssi_dbm: Option<f64>,
        payload: &[u8],
    ) -> Result<Self, AdError> {
        let structures = parse_ad_structures(payload).map_err(|p| p.error)?;
        Self::new(timestamp_us, sniffer_id, advertiser, rssi_dbm, structures)
    }
}

#[derive(Serialize, Deserialize)]
struct BleLine {
    ts_us: u64,
    sniffer: String,
    addr: MacAddress,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rssi_dbm: Option<f64>,
    adv_hex: String,
}

pub fn write_ble_records<W: Write>(mut w: W, records: &[BleAdvRecord]) -> io::Result<()> {
    for r in records {
        let payload = serialize_ad_structures(&r.structures)
            .map_err(|e| io::Error::new(io::ErrorKind::InvalidInput, e))?;
        let line = BleLine {
            ts_us: r.timestamp_us,
            sniffer: r.sniffer_id.clone(),
            addr: r.advertiser,
            rssi_dbm: r.rssi_dbm,
            adv_hex: hex::encode(payload),
        };
        serde_json::to_writer(&mut w, &line)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_ble_records<R: BufRead>(r: R) -> Result<Vec<BleAdvRecord>, RecordError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: BleLine = parse_json_line(&line, i + 1)?;
        let err = |message: String| RecordError::ParseError { line: i + 1, message };
        let payload = hex::decode(&parsed.adv_hex).map_err(|e| err(format!("adv_hex: {e}")))?;
        let record = BleAdvRecord::from_payload(
            parsed.ts_us,
            parsed.sniffer,
            parsed.addr,
            parsed.rssi_dbm,
            &payload,
        )
        .map_err(|e| err(e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}
