//! 802.11 capture decoding: pcap, radiotap, MAC headers and the frame-record
//! interchange format.

pub mod channel;
pub mod frame;
pub mod pcap;
pub mod radiotap;
pub mod records;

pub use channel::{channel_freq, freq_channel, InvalidChannel};
pub use frame::{
    classify_ds, decode_frame, extract_mgmt_ssid, parse_frame_control, resolve_addresses,
    Direction, FrameControl, FrameError, FrameRecord, FrameType, ResolvedAddresses,
};
pub use pcap::{read_pcap, Packet, PcapError, PcapReader, PcapWriter};
pub use radiotap::{parse_radiotap, RadiotapError, RadiotapMeta};
pub use records::{read_records, write_records, RecordError};

/// Decodes every packet of a pcap stream into frame records. Undecodable
/// packets are counted and skipped; a truncated capture keeps the records
/// read before the fault.
pub fn decode_pcap<R: std::io::Read>(
    sniffer_id: &str,
    reader: R,
) -> (Vec<FrameRecord>, usize, Option<PcapError>) {
    let (packets, err) = read_pcap(reader);
    let mut records = Vec::new();
    let mut skipped = 0;
    for p in &packets {
        match decode_frame(sniffer_id, p.ts_us, &p.data) {
            Ok(Some(r)) => records.push(r),
            Ok(None) => {}
            Err(_) => skipped += 1,
        }
    }
    (records, skipped, err)
}
