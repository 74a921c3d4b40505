//! Classic libpcap files carrying radiotap link-layer packets.

use std::io::{self, Read, Write};

use thiserror::Error;

pub const LINKTYPE_RADIOTAP: u32 = 127;

const MAGIC_MICROS: u32 = 0xa1b2_c3d4;
const MAGIC_NANOS: u32 = 0xa1b2_3c4d;
const GLOBAL_HEADER_LEN: usize = 24;
const RECORD_HEADER_LEN: usize = 16;
/// Largest record we are willing to allocate for.
const MAX_RECORD_LEN: u32 = 1 << 20;

#[derive(Debug, Error)]
pub enum PcapError {
    #[error("not a pcap file (magic {0:#010x})")]
    FormatError(u32),
    #[error("unsupported link type {0}, expected radiotap (127)")]
    UnsupportedLinkType(u32),
    #[error("capture truncated after {packets} packets")]
    TruncatedCapture { packets: usize },
    #[error("packet record claims {0} bytes")]
    OversizedRecord(u32),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Packet {
    pub ts_us: u64,
    pub data: Vec<u8>,
}

/// Streaming packet iterator over a pcap byte stream.
pub struct PcapReader<R> {
    inner: R,
    swapped: bool,
    nanos: bool,
    yielded: usize,
    done: bool,
}

/// Fills `buf` completely, returning how many bytes were read before EOF.
fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

impl<R: Read> PcapReader<R> {
    pub fn new(mut inner: R) -> Result<Self, PcapError> {
        let mut header = [0u8; GLOBAL_HEADER_LEN];
        let got = read_full(&mut inner, &mut header)?;
        let magic_le = u32::from_le_bytes(header[0..4].try_into().unwrap());
        if got < 4 {
            return Err(PcapError::FormatError(magic_le));
        }
        let (swapped, nanos) = match magic_le {
            MAGIC_MICROS => (false, false),
            MAGIC_NANOS => (false, true),
            m if m.swap_bytes() == MAGIC_MICROS => (true, false),
            m if m.swap_bytes() == MAGIC_NANOS => (true, true),
            m => return Err(PcapError::FormatError(m)),
        };
        if got < GLOBAL_HEADER_LEN {
            return Err(PcapError::TruncatedCapture { packets: 0 });
        }
        let linktype = read_u32(&header[20..24], swapped);
        if linktype != LINKTYPE_RADIOTAP {
            return Err(PcapError::UnsupportedLinkType(linktype));
        }
        Ok(PcapReader {
            inner,
            swapped,
            nanos,
            yielded: 0,
            done: false,
        })
    }

    fn next_packet(&mut self) -> Result<Option<Packet>, PcapError> {
        let mut rec = [0u8; RECORD_HEADER_LEN];
        match read_full(&mut self.inner, &mut rec)? {
            0 => return Ok(None),
            RECORD_HEADER_LEN => {}
            _ => return Err(PcapError::TruncatedCapture { packets: self.yielded }),
        }
        let secs = u64::from(read_u32(&rec[0..4], self.swapped));
        let frac = u64::from(read_u32(&rec[4..8], self.swapped));
        let incl = read_u32(&rec[8..12], self.swapped);
        if incl > MAX_RECORD_LEN {
            return Err(PcapError::OversizedRecord(incl));
        }
        let mut data = vec![0u8; incl as usize];
        if read_full(&mut self.inner, &mut data)? < data.len() {
            return Err(PcapError::TruncatedCapture { packets: self.yielded });
        }
        let sub_us = if self.nanos { frac / 1000 } else { frac };
        self.yielded += 1;
        Ok(Some(Packet {
            ts_us: secs * 1_000_000 + sub_us,
            data,
        }))
    }
}

impl<R: Read> Iterator for PcapReader<R> {
    type Item = Result<Packet, PcapError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        let item = self.next_packet().transpose();
        if !matches!(item, Some(Ok(_))) {
            self.done = true;
        }
        item
    }
}

fn read_u32(bytes: &[u8], swapped: bool) -> u32 {
    let raw: [u8; 4] = bytes.try_into().unwrap();
    if swapped {
        u32::from_be_bytes(raw)
    } else {
        u32::from_le_bytes(raw)
    }
}

/// Reads every packet. On a truncated or otherwise broken record, the
/// packets read so far are returned together with the error.
pub fn read_pcap<R: Read>(reader: R) -> (Vec<Packet>, Option<PcapError>) {
    let iter = match PcapReader::new(reader) {
        Ok(it) => it,
        Err(e) => return (Vec::new(), Some(e)),
    };
    let mut packets = Vec::new();
    for item in iter {
        match item {
            Ok(p) => packets.push(p),
            Err(e) => return (packets, Some(e)),
        }
    }
    (packets, None)
}

/// Writes microsecond-resolution little-endian pcap with link type 127.
pub struct PcapWriter<W: Write> {
    inner: W,
}

impl<W: Write> PcapWriter<W> {
    pub fn new(mut inner: W) -> io::Result<Self> {
        let mut h = Vec::with_capacity(GLOBAL_HEADER_LEN);
        h.extend_from_slice(&MAGIC_MICROS.to_le_bytes());
        h.extend_from_slice(&2u16.to_le_bytes());
        h.extend_from_slice(&4u16.to_le_bytes());
        h.extend_from_slice(&0i32.to_le_bytes());
        h.extend_from_slice(&0u32.to_le_bytes());
        h.extend_from_slice(&65535u32.to_le_bytes());
        h.extend_from_slice(&LINKTYPE_RADIOTAP.to_le_bytes());
        inner.write_all(&h)?;
        Ok(PcapWriter { inner })
    }

    pub fn write_packet(&mut self, ts_us: u64, data: &[u8]) -> io::Result<()> {
        let secs = u32::try_from(ts_us / 1_000_000)
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "timestamp beyond 2106"))?;
        let len = data.len() as u32;
        self.inner.write_all(&secs.to_le_bytes())?;
        self.inner.write_all(&((ts_us % 1_000_000) as u32).to_le_bytes())?;
        self.inner.write_all(&len.to_le_bytes())?;
        self.inner.write_all(&len.to_le_bytes())?;
        self.inner.write_all(data)
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}
