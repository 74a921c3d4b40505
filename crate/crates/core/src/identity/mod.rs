//! Device inventory: vendors, network membership, probed SSIDs and BLE names.

pub mod geo;
pub mod oui;
pub mod probes;
pub mod profiles;

pub use geo::{GeoClient, GeoError, GeoHit, LiveConfig};
pub use oui::{lookup_vendor, parse_oui_db, OuiDatabase, VendorLookup};
pub use probes::{probe_inventory, ProbeInventory, ProbeStat};
pub use profiles::{
    access_points, build_profiles, filter_network, DeviceKind, DeviceProfile, ProfileOptions,
    LABEL_ACCESS_POINT,
};

/// IEEE registry excerpt covering the vendors used by the bundled scenarios.
pub const SAMPLE_OUI: &str = include_str!("../../data/oui_sample.txt");
