//! Noise injectors: dark events, periodic readout bursts, strobe lighting.
//!
//! Every random draw comes from a ChaCha stream selected by (seed, purpose,
//! index), so results do not depend on iteration order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Event, EventStream, Polarity};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApsSpikes {
    pub period_s: f64,
    pub amplitude_events: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strobe {
    pub freq_hz: f64,
    /// Peak-to-peak log-intensity swing of the square wave.
    pub log_depth: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Per-pixel Poisson rate of random-polarity events.
    pub dark_rate_hz: f64,
    pub aps: Option<ApsSpikes>,
    pub strobe: Option<Strobe>,
}

impl NoiseConfig {
    pub fn is_silent(&self) -> bool {
        self.dark_rate_hz == 0.0
            && self.aps.is_none_or(|a| a.amplitude_events == 0)
            && self.strobe.is_none_or(|s| s.log_depth == 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dark_rate_hz >= 0.0) {
            return Err(Error::precondition("dark_rate_hz must be >= 0"));
        }
        if let Some(a) = self.aps {
            if !(a.period_s > 0.0) {
                return Err(Error::precondition("aps period_s must be > 0"));
            }
        }
        if let Some(s) = self.strobe {
            if !(s.freq_hz > 0.0 && s.log_depth >= 0.0) {
                return Err(Error::precondition(
                    "strobe needs freq_hz > 0 and log_depth >= 0",
                ));
            }
        }
        Ok(())
    }
}

const PURPOSE_DARK: u64 = 1;
const PURPOSE_APS: u64 = 2;
const PURPOSE_STROBE: u64 = 3;
const STROBE_WARMUP_CYCLES: usize = 8;

fn stream_rng(seed: u64, purpose: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ purpose.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(index);
    rng
}

fn coin(rng: &mut ChaCha8Rng) -> Polarity {
    if rng.gen_bool(0.5) {
        Polarity::Positive
    } else {
        Polarity::Negative
    }
}

/// Adds noise events over `[t_start, t_end)` on every sensor pixel and
/// returns the merged, time-sorted stream. Strobe events pass through the
/// same per-polarity thresholds as scene events.
pub fn inject_noise(
    stream: &EventStream,
    noise: &NoiseConfig,
    c_pos: f64,
    c_neg: f64,
    window: (u64, u64),
    seed: u64,
) -> Result<EventStream> {
    noise.validate()?;
    if noise.is_silent() {
        return Ok(stream.clone());
    }
    let (t_start, t_end) = window;
    if t_end <= t_start {
        return Err(Error::precondition(format!(
            "empty noise window [{t_start}, {t_end})"
        )));
    }
    let sensor = stream.sensor;
    let width = sensor.width as usize;
    let npix = sensor.pixel_count();
    let span_us = t_end - t_start;
    let mut added = Vec::new();

    if noise.dark_rate_hz > 0.0 {
        let mean = noise.dark_rate_hz * span_us as f64 * 1e-6;
        let poisson = Poisson::new(mean).map_err(|e| Error::precondition(e.to_string()))?;
        for p in 0..npix {
            let mut rng = stream_rng(seed, PURPOSE_DARK, p as u64);
            let count = poisson.sample(&mut rng) as u64;
            let (x, y) = ((p % width) as u16, (p / width) as u16);
            for _ in 0..count {
                let t = t_start + rng.gen_range(0..span_us);
                added.push(Event::new(t, x, y, coin(&mut rng)));
            }
        }
    }

    if let Some(aps) = noise.aps.filter(|a| a.amplitude_events > 0) {
        let period_us = aps.period_s * 1e6;
        let mut m = 0u64;
        loop {
            let t = t_start + (m as f64 * period_us).round() as u64;
            if t >= t_end {
                break;
            }
            let mut rng = stream_rng(seed, PURPOSE_APS, m);
            for _ in 0..aps.amplitude_events {
                let p = rng.gen_range(0..npix);
                added.push(Event::new(
                    t,
                    (p % width) as u16,
                    (p / width) as u16,
                    coin(&mut rng),
                ));
            }
            m += 1;
        }
    }

    if let Some(strobe) = noise.strobe.filter(|s| s.log_depth > 0.0) {
        let half_period_us = 0.5e6 / strobe.freq_hz;
        // Each pixel starts at a random point between its two thresholds and
        // then sees a few silent cycles, so recording starts in steady state
        // with the lamp off.
        let mut state: Vec<f64> = (0..npix)
            .map(|p| {
                let mut rng = stream_rng(seed, PURPOSE_STROBE, p as u64);
                let mut s = rng.gen_range(-c_neg..c_pos);
                for _ in 0..STROBE_WARMUP_CYCLES {
                    s += strobe.log_depth;
                    while s >= c_pos {
                        s -= c_pos;
                    }
                    s -= strobe.log_depth;
                    while s <= -c_neg {
                        s += c_neg;
                    }
                }
                s
            })
            .collect();
        let mut i = 1u64;
        loop {
            let t = t_start + (i as f64 * half_period_us).round() as u64;
            if t >= t_end {
                break;
            }
            let rising = i % 2 == 1;
            for (p, delta) in state.iter_mut().enumerate() {
                let (x, y) = ((p % width) as u16, (p / width) as u16);
                if rising {
                    *delta += strobe.log_depth;
                    while *delta >= c_pos {
                        *delta -= c_pos;
                        added.push(Event::new(t, x, y, Polarity::Positive));
                    }
                } else {
                    *delta -= strobe.log_depth;
                    while *delta <= -c_neg {
                        *delta += c_neg;
                        added.push(Event::new(t, x, y, Polarity::Negative));
                    }
                }
            }
            i += 1;
        }
    }

    let mut events = Vec::with_capacity(stream.len() + added.len());
    events.extend_from_slice(&stream.events);
    events.extend(added);
    let mut out = EventStream::new(sensor, events);
    out.sort_by_time();
    Ok(out)
}
