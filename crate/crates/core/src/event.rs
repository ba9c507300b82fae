//! Event stream data model, validation and ROI filtering.
//!
//! Timestamps are integer microseconds since the stream epoch. Streams are
//! sorted by timestamp; equal timestamps are allowed and keep their order.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    Positive,
    Negative,
}

impl Polarity {
    pub fn sign(self) -> i8 {
        match self {
            Polarity::Positive => 1,
            Polarity::Negative => -1,
        }
    }

    /// Only +1 and -1 are accepted.
    pub fn from_sign(p: i64) -> Option<Self> {
        match p {
            1 => Some(Polarity::Positive),
            -1 => Some(Polarity::Negative),
            _ => None,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::Positive => Polarity::Negative,
            Polarity::Negative => Polarity::Positive,
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Polarity::Positive => f.write_str("positive"),
            Polarity::Negative => f.write_str("negative"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub polarity: Polarity,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, polarity: Polarity) -> Self {
        Self { t, x, y, polarity }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SensorGeometry {
    pub width: u32,
    pub height: u32,
}

impl SensorGeometry {
    /// DAVIS346 resolution.
    pub const DAVIS346: SensorGeometry = SensorGeometry {
        width: 346,
        height: 260,
    };

    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::precondition(format!(
                "sensor geometry must be at least 1x1, got {width}x{height}"
            )));
        }
        Ok(Self { width, height })
    }

    pub fn full_roi(&self) -> Roi {
        Roi {
            x0: 0,
            y0: 0,
            w: self.width,
            h: self.height,
        }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }
}

/// Rectangular region of interest; `(x0, y0)` inclusive, extent `w` x `h`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Roi {
    pub x0: u32,
    pub y0: u32,
    pub w: u32,
    pub h: u32,
}

impl Roi {
    pub fn new(x0: u32, y0: u32, w: u32, h: u32) -> Self {
        Self { x0, y0, w, h }
    }

    pub fn check(&self, sensor: &SensorGeometry) -> Result<()> {
        let fits = self.w >= 1
            && self.h >= 1
            && self.x0 as u64 + self.w as u64 <= sensor.width as u64
            && self.y0 as u64 + self.h as u64 <= sensor.height as u64;
        if fits {
            Ok(())
        } else {
            Err(Error::RoiOutsideSensor {
                roi: self.to_string(),
                width: sensor.width,
                height: sensor.height,
            })
        }
    }

    #[inline]
    pub fn contains(&self, x: u16, y: u16) -> bool {
        let (x, y) = (x as u32, y as u32);
        x >= self.x0 && x - self.x0 < self.w && y >= self.y0 && y - self.y0 < self.h
    }

    pub fn area(&self) -> usize {
        self.w as usize * self.h as usize
    }
}

impl fmt::Display for Roi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.x0, self.y0, self.w, self.h)
    }
}

impl std::str::FromStr for Roi {
    type Err = Error;

    /// Parses `x0,y0,w,h`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<_> = s.split(',').map(|p| p.trim().parse::<u32>()).collect();
        match parts.as_slice() {
            [Ok(x0), Ok(y0), Ok(w), Ok(h)] => Ok(Roi::new(*x0, *y0, *w, *h)),
            _ => Err(Error::Parse(format!(
                "invalid roi '{s}', expected x0,y0,w,h"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    NonMonotonicTimestamp,
    XOutOfBounds,
    YOutOfBounds,
}

/// One broken stream invariant, located at the first offending event.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub index: usize,
    pub kind: ViolationKind,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rule = match self.kind {
            ViolationKind::NonMonotonicTimestamp => "non-monotonic timestamp",
            ViolationKind::XOutOfBounds => "x out of bounds",
            ViolationKind::YOutOfBounds => "y out of bounds",
        };
        write!(f, "{rule} at index {}", self.index)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventStream {
    pub sensor: SensorGeometry,
    pub events: Vec<Event>,
}

impl EventStream {
    pub fn new(sensor: SensorGeometry, events: Vec<Event>) -> Self {
        Self { sensor, events }
    }

    pub fn empty(sensor: SensorGeometry) -> Self {
        Self::new(sensor, Vec::new())
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Returns every broken invariant, one entry per rule, each naming the
    /// first offending event. Empty means the stream is valid.
    pub fn validate(&self) -> Vec<Violation> {
        let mut first = [None::<usize>; 3];
        for (i, ev) in self.events.iter().enumerate() {
            if first[0].is_none() && i > 0 && ev.t < self.events[i - 1].t {
                first[0] = Some(i);
            }
            if first[1].is_none() && ev.x as u32 >= self.sensor.width {
                first[1] = Some(i);
            }
            if first[2].is_none() && ev.y as u32 >= self.sensor.height {
                first[2] = Some(i);
            }
            if first.iter().all(Option::is_some) {
                break;
            }
        }
        let kinds = [
            ViolationKind::NonMonotonicTimestamp,
            ViolationKind::XOutOfBounds,
            ViolationKind::YOutOfBounds,
        ];
        let mut out: Vec<Violation> = first
            .iter()
            .zip(kinds)
            .filter_map(|(idx, kind)| idx.map(|index| Violation { index, kind }))
            .collect();
        out.sort_by_key(|v| v.index);
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }

    pub fn filter_roi(&self, roi: &Roi) -> Result<EventStream> {
        roi.check(&self.sensor)?;
        let events = self
            .events
            .iter()
            .filter(|e| roi.contains(e.x, e.y))
            .copied()
            .collect();
        Ok(EventStream::new(self.sensor, events))
    }

    pub fn count(&self, polarity: Polarity) -> usize {
        self.events
            .iter()
            .filter(|e| e.polarity == polarity)
            .count()
    }

    /// Time span `[first.t, last.t]`, or `None` when empty.
    pub fn time_span(&self) -> Option<(u64, u64)> {
        Some((self.events.first()?.t, self.events.last()?.t))
    }

    /// Re-sorts by timestamp, keeping the relative order of equal timestamps.
    pub fn sort_by_time(&mut self) {
        self.events.sort_by_key(|e| e.t);
    }
}
