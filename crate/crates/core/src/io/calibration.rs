use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const HEADER: &str = "t_us,position_um";

/// Stage position samples keyed by event time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    samples: Vec<(f64, f64)>,
}

impl Calibration {
    /// Needs at least two samples, strictly increasing times and positions
    /// that are monotone in one direction.
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::precondition(format!(
                "calibration needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if samples
            .iter()
            .any(|(t, p)| !t.is_finite() || !p.is_finite())
        {
            return Err(Error::precondition("calibration samples must be finite"));
        }
        if let Some(i) = samples.windows(2).position(|w| w[1].0 <= w[0].0) {
            return Err(Error::precondition(format!(
                "calibration times must increase strictly (sample {})",
                i + 1
            )));
        }
        let rising = samples.windows(2).all(|w| w[1].1 >= w[0].1);
        let falling = samples.windows(2).all(|w| w[1].1 <= w[0].1);
        if !rising && !falling {
            return Err(Error::precondition(
                "calibration positions must be monotone",
            ));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn window(&self) -> (f64, f64) {
        (self.samples[0].0, self.samples[self.samples.len() - 1].0)
    }

    /// Piecewise-linear position at `t_us`; extrapolation is refused.
    pub fn time_to_position(&self, t_us: f64) -> Result<f64> {
        let (first, last) = self.window();
        if !(t_us >= first && t_us <= last) {
            return Err(Error::OutsideCalibration { t_us, first, last });
        }
        let i = self.samples.partition_point(|(t, _)| *t <= t_us);
        if i == self.samples.len() {
            return Ok(self.samples[i - 1].1);
        }
        let (t0, p0) = self.samples[i - 1];
        if t0 == t_us {
            return Ok(p0);
        }
        let (t1, p1) = self.samples[i];
        Ok(p0 + (p1 - p0) * (t_us - t0) / (t1 - t0))
    }
}

pub fn read_calibration(path: impl AsRef<Path>) -> Result<Calibration> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut samples = Vec::new();
    let mut header_seen = false;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let n = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !header_seen {
            if line.replace(' ', "") != HEADER {
                return Err(Error::Parse(format!(
                    "{}: expected header '{HEADER}', line {n}",
                    path.display()
                )));
            }
            header_seen = true;
            continue;
        }
        let bad = || {
            Error::Parse(format!(
                "{}: malformed calibration row, line {n}",
                path.display()
            ))
        };
        let (t, p) = line.split_once(',').ok_or_else(bad)?;
        let t: f64 = t.trim().parse().map_err(|_| bad())?;
        let p: f64 = p.trim().parse().map_err(|_| bad())?;
        samples.push((t, p));
    }
    Calibration::new(samples)
}

pub fn write_calibration(path: impl AsRef<Path>, cal: &Calibration) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "{HEADER}")?;
        for (t, p) in &cal.samples {
            writeln!(out, "{t},{p}")?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| Error::io(path, e))
}
