use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::event::{Event, EventStream, Polarity, SensorGeometry};

pub const MAGIC: &[u8; 4] = b"EVAF";
pub const VERSION: u16 = 1;
const HEADER_LEN: u64 = 4 + 2 + 2 + 2 + 8;
const RECORD_LEN: u64 = 14;

/// Little-endian layout: magic, u16 version, u16 width, u16 height,
/// u64 count, then 14-byte records of u64 t, u16 x, u16 y, i8 p, i8 pad.
pub fn write_events_binary_to<W: Write>(mut out: W, stream: &EventStream) -> Result<()> {
    let dim = |v: u32, what: &str| {
        u16::try_from(v).map_err(|_| {
            Error::precondition(format!("sensor {what} {v} does not fit the binary format"))
        })
    };
    let io = |e| Error::io("<binary stream>", e);
    out.write_all(MAGIC).map_err(io)?;
    out.write_all(&VERSION.to_le_bytes()).map_err(io)?;
    out.write_all(&dim(stream.sensor.width, "width")?.to_le_bytes())
        .map_err(io)?;
    out.write_all(&dim(stream.sensor.height, "height")?.to_le_bytes())
        .map_err(io)?;
    out.write_all(&(stream.len() as u64).to_le_bytes())
        .map_err(io)?;
    let mut rec = [0u8; RECORD_LEN as usize];
    for e in &stream.events {
        rec[0..8].copy_from_slice(&e.t.to_le_bytes());
        rec[8..10].copy_from_slice(&e.x.to_le_bytes());
        rec[10..12].copy_from_slice(&e.y.to_le_bytes());
        rec[12] = e.polarity.sign() as u8;
        rec[13] = 0;
        out.write_all(&rec).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn write_events_binary(path: impl AsRef<Path>, stream: &EventStream) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_events_binary_to(BufWriter::new(file), stream).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn read_events_binary_from<R: Read>(mut input: R) -> Result<EventStream> {
    let mut bytes = Vec::new();
    input
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io("<binary stream>", e))?;
    parse(&bytes)
}

pub fn read_events_binary(path: impl AsRef<Path>) -> Result<EventStream> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_events_binary_from(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

fn parse(bytes: &[u8]) -> Result<EventStream> {
    let actual = bytes.len() as u64;
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if actual < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            actual,
        });
    }
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let version = u16_at(4);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let sensor = SensorGeometry::new(u16_at(6) as u32, u16_at(8) as u32)?;
    let count = u64::from_le_bytes(bytes[10..18].try_into().expect("8 bytes"));
    let expected = count
        .checked_mul(RECORD_LEN)
        .and_then(|b| b.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::Parse(format!("event count {count} overflows")))?;
    if actual < expected {
        return Err(Error::Truncated { expected, actual });
    }
    if actual > expected {
        return Err(Error::Parse(format!(
            "{} trailing bytes after {count} records",
            actual - expected
        )));
    }
    let events = bytes[HEADER_LEN as usize..]
        .chunks_exact(RECORD_LEN as usize)
        .enumerate()
        .map(|(i, r)| {
            let polarity = Polarity::from_sign(r[12] as i8 as i64).ok_or_else(|| {
                Error::Parse(format!("invalid polarity {} in record {i}", r[12] as i8))
            })?;
            Ok(Event::new(
                u64::from_le_bytes(r[0..8].try_into().expect("8 bytes")),
                u16::from_le_bytes([r[8], r[9]]),
                u16::from_le_bytes([r[10], r[11]]),
                polarity,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EventStream::new(sensor, events))
}
