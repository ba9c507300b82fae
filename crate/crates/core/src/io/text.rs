use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::event::{Event, EventStream, Polarity, SensorGeometry};

pub const TEXT_HEADER: &str = "t_us,x,y,p";
const SENSOR_PREFIX: &str = "# sensor ";

/// Writes `# sensor W H`, the header, then one `t_us,x,y,p` row per event
/// with `p` as `1` or `-1`.
pub fn write_events_text_to<W: Write>(mut out: W, stream: &EventStream) -> std::io::Result<()> {
    writeln!(
        out,
        "{SENSOR_PREFIX}{} {}",
        stream.sensor.width, stream.sensor.height
    )?;
    writeln!(out, "{TEXT_HEADER}")?;
    for e in &stream.events {
        writeln!(out, "{},{},{},{}", e.t, e.x, e.y, e.polarity.sign())?;
    }
    out.flush()
}

pub fn write_events_text(path: impl AsRef<Path>, stream: &EventStream) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_events_text_to(BufWriter::new(file), stream).map_err(|e| Error::io(path, e))
}

fn parse_field<T: std::str::FromStr>(field: Option<&str>, name: &str, line: usize) -> Result<T> {
    let field = field.ok_or_else(|| Error::Parse(format!("missing {name}, line {line}")))?;
    field
        .trim()
        .parse()
        .map_err(|_| Error::Parse(format!("invalid {name} '{}', line {line}", field.trim())))
}

/// Parses the text format. Without a `# sensor` line the geometry is the
/// smallest one containing every event. Blank lines and other `#` comments
/// are skipped.
pub fn read_events_text_from<R: BufRead>(input: R) -> Result<EventStream> {
    let mut sensor = None;
    let mut header_seen = false;
    let mut events = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| Error::Parse(format!("read failed at line {n}: {e}")))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(SENSOR_PREFIX) {
            let mut it = rest.split_whitespace();
            let w: u32 = parse_field(it.next(), "sensor width", n)?;
            let h: u32 = parse_field(it.next(), "sensor height", n)?;
            sensor = Some(SensorGeometry::new(w, h)?);
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        if !header_seen {
            let cols: Vec<&str> = line.split(',').map(str::trim).collect();
            if cols != TEXT_HEADER.split(',').collect::<Vec<_>>() {
                return Err(Error::Parse(format!(
                    "expected header '{TEXT_HEADER}', line {n}"
                )));
            }
            header_seen = true;
            continue;
        }
        let mut it = line.split(',');
        let t: u64 = parse_field(it.next(), "timestamp", n)?;
        let x: u16 = parse_field(it.next(), "x", n)?;
        let y: u16 = parse_field(it.next(), "y", n)?;
        let p = it.next().map(str::trim).unwrap_or("");
        let polarity = match p {
            "1" | "+1" => Polarity::Positive,
            "-1" => Polarity::Negative,
            _ => return Err(Error::Parse(format!("invalid polarity, line {n}"))),
        };
        if it.next().is_some() {
            return Err(Error::Parse(format!("too many fields, line {n}")));
        }
        events.push(Event::new(t, x, y, polarity));
    }
    if !header_seen {
        return Err(Error::Parse(format!("missing header '{TEXT_HEADER}'")));
    }
    let sensor = match sensor {
        Some(s) => s,
        None => {
            let w = events.iter().map(|e| e.x as u32 + 1).max().unwrap_or(1);
            let h = events.iter().map(|e| e.y as u32 + 1).max().unwrap_or(1);
            SensorGeometry::new(w, h)?
        }
    };
    Ok(EventStream::new(sensor, events))
}

pub fn read_events_text(path: impl AsRef<Path>) -> Result<EventStream> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_events_text_from(BufReader::new(file)).map_err(|e| match e {
        Error::Parse(msg) => Error::Parse(format!("{}: {msg}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<EventStream> {
        read_events_text_from(s.as_bytes())
    }

    #[test]
    fn round_trip() {
        let s = EventStream::new(
            SensorGeometry::new(346, 260).unwrap(),
            vec![
                Event::new(0, 0, 0, Polarity::Positive),
                Event::new(17, 345, 259, Polarity::Negative),
            ],
        );
        let mut buf = Vec::new();
        write_events_text_to(&mut buf, &s).unwrap();
        assert_eq!(
            String::from_utf8(buf.clone()).unwrap(),
            "# sensor 346 260\nt_us,x,y,p\n0,0,0,1\n17,345,259,-1\n"
        );
        assert_eq!(parse(std::str::from_utf8(&buf).unwrap()).unwrap(), s);
    }

    #[test]
    fn rejects_zero_polarity_with_line() {
        let err = parse("t_us,x,y,p\n1,1,1,1\n100,5,5,0\n").unwrap_err();
        assert_eq!(err.to_string(), "invalid polarity, line 3");
        assert!(parse("t_us,x,y,p\n100,5,5,2\n").is_err());
    }

    #[test]
    fn malformed_rows() {
        assert!(parse("t_us,x,y,p\n1,2\n")
            .unwrap_err()
            .to_string()
            .contains("line 2"));
        assert!(parse("t_us,x,y,p\n-1,2,3,1\n")
            .unwrap_err()
            .to_string()
            .contains("timestamp"));
        assert!(parse("t,x,y,p\n").is_err());
        assert!(parse("").is_err());
        assert!(parse("t_us,x,y,p\n1,2,3,1,9\n").is_err());
    }

    #[test]
    fn infers_geometry_and_accepts_plus_one() {
        let s = parse("t_us,x,y,p\n5,9,3,+1\n").unwrap();
        assert_eq!(s.sensor, SensorGeometry::new(10, 4).unwrap());
        assert_eq!(s.events[0].polarity, Polarity::Positive);
    }
}
