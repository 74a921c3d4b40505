use std::collections::HashMap;
use std::sync::OnceLock;

const TABLE: &str = include_str!("../../data/uuid16.tsv");

fn table() -> &'static HashMap<u16, &'static str> {
    static MAP: OnceLock<HashMap<u16, &'static str>> = OnceLock::new();
    MAP.get_or_init(|| parse_table(TABLE))
}

/// Parses `uuid16_hex<TAB>name` lines; `#` comments and malformed lines
/// are skipped.
pub fn parse_table(text: &str) -> HashMap<u16, &str> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .filter_map(|l| {
            let (id, name) = l.split_once('\t')?;
            let id = u16::from_str_radix(id.trim().trim_start_matches("0x"), 16).ok()?;
            Some((id, name.trim()))
        })
        .collect()
}

/// Human-readable name of a 16-bit service UUID from the bundled table.
pub fn resolve_service_name(uuid16: u16) -> Option<&'static str> {
    table().get(&uuid16).copied()
}
