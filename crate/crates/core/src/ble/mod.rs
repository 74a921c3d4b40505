//! BLE advertisement payloads.

pub mod ad;
pub mod record;
pub mod uuids;

pub use ad::{
    decode_local_name, decode_manufacturer, decode_service_uuids, parse_ad_structures,
    serialize_ad_structures, AdError, AdStructure, ManufacturerData, PartialAd,
};
pub use record::{read_ble_records, write_ble_records, BleAdvRecord, DecodedAdvertisement};
pub use uuids::resolve_service_name;
