use std::collections::BTreeMap;

use crate::mac::MacAddress;

/// Vendor names keyed by OUI, loaded from the IEEE `oui.txt` registry.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OuiDatabase {
    entries: BTreeMap<[u8; 3], String>,
    /// `(hex)` lines that could not be parsed.
    pub malformed: usize,
}

/// Registry lines look like `D8-F1-5B   (hex)\t\tEspressif Inc.`; every
/// other line is ignored. Later duplicates win.
pub fn parse_oui_db(text: &str) -> OuiDatabase {
    let mut db = OuiDatabase::default();
    for line in text.lines() {
        let Some((prefix, vendor)) = line.split_once("(hex)") else {
            continue;
        };
        match parse_prefix(prefix.trim()) {
            Some(oui) if !vendor.trim().is_empty() => {
                db.entries.insert(oui, vendor.trim().to_string());
            }
            _ => db.malformed += 1,
        }
    }
    db
}

fn parse_prefix(s: &str) -> Option<[u8; 3]> {
    let digits: String = s.chars().filter(|c| !matches!(c, '-' | ':')).collect();
    if digits.len() != 6 {
        return None;
    }
    hex::decode(digits).ok()?.try_into().ok()
}

impl OuiDatabase {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn insert(&mut self, oui: [u8; 3], vendor: impl Into<String>) {
        self.entries.insert(oui, vendor.into());
    }

    pub fn get(&self, oui: [u8; 3]) -> Option<&str> {
        self.entries.get(&oui).map(String::as_str)
    }

    /// Accepts `d8:f1:5b`, `D8-F1-5B` or `d8f15b`.
    pub fn get_str(&self, oui: &str) -> Option<&str> {
        self.get(parse_prefix(oui)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VendorLookup<'a> {
    pub vendor: Option<&'a str>,
    pub randomized: bool,
}

/// Locally administered addresses are treated as randomized and never
/// attributed to a vendor.
pub fn lookup_vendor<'a>(db: &'a OuiDatabase, mac: &MacAddress) -> VendorLookup<'a> {
    if mac.is_locally_administered() {
        return VendorLookup {
            vendor: None,
            randomized: true,
        };
    }
    VendorLookup {
        vendor: db.get(mac.oui()),
        randomized: false,
    }
}
