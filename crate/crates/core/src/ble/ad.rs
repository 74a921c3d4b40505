//! GAP advertising-data structures.

use thiserror::Error;

pub const AD_UUID16_INCOMPLETE: u8 = 0x02;
pub const AD_UUID16_COMPLETE: u8 = 0x03;
pub const AD_UUID32_INCOMPLETE: u8 = 0x04;
pub const AD_UUID32_COMPLETE: u8 = 0x05;
pub const AD_UUID128_INCOMPLETE: u8 = 0x06;
pub const AD_UUID128_COMPLETE: u8 = 0x07;
pub const AD_SHORT_NAME: u8 = 0x08;
pub const AD_COMPLETE_NAME: u8 = 0x09;
pub const AD_MANUFACTURER: u8 = 0xff;

/// Bluetooth base UUID `00000000-0000-1000-8000-00805f9b34fb` in
/// little-endian byte order.
const BASE_UUID_LE: [u8; 16] = [
    0xfb, 0x34, 0x9b, 0x5f, 0x80, 0x00, 0x00, 0x80, 0x00, 0x10, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00,
];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AdStructure {
    pub ad_type: u8,
    pub value: Vec<u8>,
}

impl AdStructure {
    pub fn new(ad_type: u8, value: impl Into<Vec<u8>>) -> Self {
        AdStructure {
            ad_type,
            value: value.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AdError {
    #[error("AD structure at offset {offset} declares {declared} bytes, {available} remain")]
    MalformedAd {
        offset: usize,
        declared: usize,
        available: usize,
    },
    #[error("service UUID list of type {ad_type:#04x} has {len} bytes")]
    MalformedUuidList { ad_type: u8, len: usize },
    #[error("manufacturer data has {0} bytes, need at least 2")]
    MalformedManufacturer(usize),
    #[error("AD structure value of {0} bytes does not fit a length octet")]
    TooLong(usize),
}

/// Structures parsed before a fault, together with the fault.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{error}")]
pub struct PartialAd {
    pub structures: Vec<AdStructure>,
    pub error: AdError,
}

/// Splits a payload into length-type-value structures. A zero length octet
/// ends parsing.
pub fn parse_ad_structures(payload: &[u8]) -> Result<Vec<AdStructure>, PartialAd> {
    let mut structures = Vec::new();
    let mut pos = 0;
    while pos < payload.len() {
        let len = usize::from(payload[pos]);
        if len == 0 {
            break;
        }
        let available = payload.len() - pos - 1;
        if len > available {
            return Err(PartialAd {
                structures,
                error: AdError::MalformedAd {
                    offset: pos,
                    declared: len,
                    available,
                },
            });
        }
        structures.push(AdStructure::new(
            payload[pos + 1],
            &payload[pos + 2..pos + 1 + len],
        ));
        pos += 1 + len;
    }
    Ok(structures)
}

pub fn serialize_ad_structures(structures: &[AdStructure]) -> Result<Vec<u8>, AdError> {
    let mut out = Vec::new();
    for s in structures {
        let len = u8::try_from(s.value.len() + 1).map_err(|_| AdError::TooLong(s.value.len()))?;
        out.push(len);
        out.push(s.ad_type);
        out.extend_from_slice(&s.value);
    }
    Ok(out)
}

/// Returns the local name and whether it is the complete form. The complete
/// name wins when both are present.
pub fn decode_local_name(structures: &[AdStructure]) -> Option<(String, bool)> {
    let find = |t| structures.iter().find(|s| s.ad_type == t);
    find(AD_COMPLETE_NAME)
        .map(|s| (s, true))
        .or_else(|| find(AD_SHORT_NAME).map(|s| (s, false)))
        .map(|(s, complete)| (String::from_utf8_lossy(&s.value).into_owned(), complete))
}

pub type Uuid128 = [u8; 16];

/// 16-bit ids and 128-bit ids (little-endian byte order, as on the wire).
/// 32-bit ids are widened onto the base UUID and reported as 128-bit.
pub fn decode_service_uuids(structures: &[AdStructure]) -> Result<(Vec<u16>, Vec<Uuid128>), AdError> {
    let mut ids16 = Vec::new();
    let mut ids128 = Vec::new();
    for s in structures {
        let width = match s.ad_type {
            AD_UUID16_INCOMPLETE | AD_UUID16_COMPLETE => 2,
            AD_UUID32_INCOMPLETE | AD_UUID32_COMPLETE => 4,
            AD_UUID128_INCOMPLETE | AD_UUID128_COMPLETE => 16,
            _ => continue,
        };
        if s.value.len() % width != 0 {
            return Err(AdError::MalformedUuidList {
                ad_type: s.ad_type,
                len: s.value.len(),
            });
        }
        for chunk in s.value.chunks_exact(width) {
            match width {
                2 => ids16.push(u16::from_le_bytes([chunk[0], chunk[1]])),
                4 => {
                    let mut full = BASE_UUID_LE;
                    full[12..16].copy_from_slice(chunk);
                    ids128.push(full);
                }
                _ => ids128.push(chunk.try_into().unwrap()),
            }
        }
    }
    Ok((ids16, ids128))
}

pub fn encode_uuid16_list(ids: &[u16]) -> AdStructure {
    AdStructure::new(
        AD_UUID16_COMPLETE,
        ids.iter().flat_map(|id| id.to_le_bytes()).collect::<Vec<_>>(),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManufacturerData {
    pub company_id: u16,
    pub payload: Vec<u8>,
}

pub fn decode_manufacturer(structures: &[AdStructure]) -> Result<Option<ManufacturerData>, AdError> {
    let Some(s) = structures.iter().find(|s| s.ad_type == AD_MANUFACTURER) else {
        return Ok(None);
    };
    if s.value.len() < 2 {
        return Err(AdError::MalformedManufacturer(s.value.len()));
    }
    Ok(Some(ManufacturerData {
        company_id: u16::from_le_bytes([s.value[0], s.value[1]]),
        payload: s.value[2..].to_vec(),
    }))
}

/// Canonical text form of a little-endian 128-bit UUID.
pub fn format_uuid128(id: &Uuid128) -> String {
    let mut be = *id;
    be.reverse();
    let h = hex::encode(be);
    format!("{}-{}-{}-{}-{}", &h[0..8], &h[8..12], &h[12..16], &h[16..20], &h[20..32])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uuid_list_fixture() {
        let s = parse_ad_structures(&[0x07, 0x03, 0x01, 0x11, 0x1e, 0x11, 0x0b, 0x11]).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].ad_type, 0x03);
        assert_eq!(s[0].value.len(), 6);
        let (ids, long) = decode_service_uuids(&s).unwrap();
        assert_eq!(ids, vec![0x1101, 0x111e, 0x110b]);
        assert!(long.is_empty());
    }

    #[test]
    fn truncated_structure_keeps_prefix() {
        assert!(parse_ad_structures(&[]).unwrap().is_empty());
        let err = parse_ad_structures(&[0x02, 0x01, 0x06, 0x05, 0x09, 0x41, 0x42]).unwrap_err();
        assert_eq!(err.structures, vec![AdStructure::new(0x01, [0x06])]);
        assert!(matches!(err.error, AdError::MalformedAd { declared: 5, available: 3, .. }));
    }

    #[test]
    fn zero_length_terminates() {
        let s = parse_ad_structures(&[0x02, 0x01, 0x06, 0x00, 0xff, 0xff]).unwrap();
        assert_eq!(s.len(), 1);
    }

    #[test]
    fn names() {
        let full = AdStructure::new(AD_COMPLETE_NAME, &b"ShellyPlusHT-08B6"[..]);
        let short = AdStructure::new(AD_SHORT_NAME, &b"Shelly"[..]);
        assert_eq!(
            decode_local_name(&[short.clone(), full.clone()]),
            Some(("ShellyPlusHT-08B6".to_string(), true))
        );
        assert_eq!(decode_local_name(&[short]), Some(("Shelly".to_string(), false)));
        assert_eq!(decode_local_name(&[]), None);
        let bad = AdStructure::new(AD_COMPLETE_NAME, vec![0x41, 0xff]);
        assert_eq!(decode_local_name(&[bad]).unwrap().0, "A\u{fffd}");
    }

    #[test]
    fn uuid_errors_and_widths() {
        let odd = AdStructure::new(AD_UUID16_COMPLETE, vec![1, 2, 3]);
        assert!(matches!(decode_service_uuids(&[odd]), Err(AdError::MalformedUuidList { .. })));
        let empty = AdStructure::new(AD_UUID16_COMPLETE, vec![]);
        assert_eq!(decode_service_uuids(&[empty]).unwrap(), (vec![], vec![]));
        let long = AdStructure::new(AD_UUID128_COMPLETE, vec![0; 15]);
        assert!(decode_service_uuids(&[long]).is_err());
        let u32s = AdStructure::new(AD_UUID32_COMPLETE, vec![0x0d, 0x18, 0, 0]);
        let (_, wide) = decode_service_uuids(&[u32s]).unwrap();
        assert_eq!(format_uuid128(&wide[0]), "0000180d-0000-1000-8000-00805f9b34fb");
    }

    #[test]
    fn manufacturer() {
        let s = AdStructure::new(AD_MANUFACTURER, vec![0x4c, 0x00, 0x10, 0x05]);
        assert_eq!(
            decode_manufacturer(&[s]).unwrap(),
            Some(ManufacturerData { company_id: 0x004c, payload: vec![0x10, 0x05] })
        );
        let short = AdStructure::new(AD_MANUFACTURER, vec![0x4c]);
        assert_eq!(decode_manufacturer(&[short]), Err(AdError::MalformedManufacturer(1)));
        assert_eq!(decode_manufacturer(&[]), Ok(None));
    }
}
