use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear light intensity on the sensor plane, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    width: usize,
    height: usize,
    intensity: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pattern {
    /// Vertical dark/bright edge through the middle.
    Step,
    /// Vertical bars, 8 px period.
    Bars,
    /// Checkerboard of 4 px cells with per-cell brightness jitter, a stand-in
    /// for printed text.
    TextLike,
    Uniform,
}

impl std::str::FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "step" => Ok(Pattern::Step),
            "bars" => Ok(Pattern::Bars),
            "text-like" | "checker" | "checkerboard" => Ok(Pattern::TextLike),
            "uniform" => Ok(Pattern::Uniform),
            _ => Err(Error::Parse(format!(
                "unknown pattern '{s}', expected step|bars|text-like|uniform"
            ))),
        }
    }
}

pub const MIN_SIDE: usize = 8;

impl Scene {
    pub fn new(width: usize, height: usize, intensity: Vec<f64>) -> Result<Self> {
        if width < MIN_SIDE || height < MIN_SIDE {
            return Err(Error::precondition(format!(
                "scene must be at least {MIN_SIDE}x{MIN_SIDE}, got {width}x{height}"
            )));
        }
        if intensity.len() != width * height {
            return Err(Error::precondition(format!(
                "scene has {} samples, expected {}",
                intensity.len(),
                width * height
            )));
        }
        if let Some(i) = intensity.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::LogUndefined {
                x: i % width,
                y: i / width,
                value: intensity[i],
            });
        }
        Ok(Self {
            width,
            height,
            intensity,
        })
    }

    /// Synthetic pattern with intensities in `[dark, bright]`.
    pub fn pattern(
        pattern: Pattern,
        width: usize,
        height: usize,
        dark: f64,
        bright: f64,
    ) -> Result<Self> {
        let jitter = |cx: usize, cy: usize| {
            // Fixed per-cell pseudo-random brightness in [0.5, 1].
            let h = (cx as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
                ^ (cy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
            0.5 + 0.5 * ((h >> 11) as f64 / (1u64 << 53) as f64)
        };
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let v = match pattern {
                    Pattern::Step => {
                        if x < width / 2 {
                            dark
                        } else {
                            bright
                        }
                    }
                    Pattern::Bars => {
                        if (x / 4) % 2 == 0 {
                            dark
                        } else {
                            bright
                        }
                    }
                    Pattern::TextLike => {
                        let (cx, cy) = (x / 4, y / 4);
                        if (cx + cy) % 2 == 0 {
                            dark
                        } else {
                            dark + (bright - dark) * jitter(cx, cy)
                        }
                    }
                    Pattern::Uniform => bright,
                };
                data.push(v);
            }
        }
        Self::new(width, height, data)
    }

    /// A handful of random axis-aligned rectangles over a random background.
    pub fn random_rectangles(width: usize, height: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let background = rng.gen_range(0.1..0.5);
        let mut data = vec![background; width * height];
        let count = rng.gen_range(2..6);
        for _ in 0..count {
            let w = rng.gen_range(2..=width / 2);
            let h = rng.gen_range(2..=height / 2);
            let x0 = rng.gen_range(0..width - w);
            let y0 = rng.gen_range(0..height - h);
            let level = rng.gen_range(0.05..1.0);
            for y in y0..y0 + h {
                data[y * width + x0..y * width + x0 + w].fill(level);
            }
        }
        Self::new(width, height, data)
    }

    /// Binary PGM (`P5`), 8- or 16-bit. Gray level `g` maps to
    /// `dark + (1 - dark) * g / maxval`, so `dark > 0` keeps black pixels
    /// loggable.
    pub fn from_pgm(path: impl AsRef<Path>, dark: f64) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_pgm_bytes(&bytes, dark)
    }

    pub fn from_pgm_bytes(bytes: &[u8], dark: f64) -> Result<Self> {
        let mut pos = 0;
        let mut token = || -> Result<String> {
            loop {
                while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                    pos += 1;
                }
                if pos < bytes.len() && bytes[pos] == b'#' {
                    while pos < bytes.len() && bytes[pos] != b'\n' {
                        pos += 1;
                    }
                    continue;
                }
                break;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(Error::Parse("truncated PGM header".into()));
            }
            Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
        };
        if token()? != "P5" {
            return Err(Error::Parse("not a binary PGM (expected P5)".into()));
        }
        let mut num = |what: &str| -> Result<usize> {
            token()?
                .parse()
                .map_err(|_| Error::Parse(format!("bad PGM {what}")))
        };
        let width = num("width")?;
        let height = num("height")?;
        let maxval = num("maxval")?;
        if maxval == 0 || maxval > 65535 {
            return Err(Error::Parse(format!("PGM maxval {maxval} out of range")));
        }
        // Exactly one whitespace byte separates the header from the raster.
        let data = bytes.get(pos + 1..).unwrap_or(&[]);
        let bps = if maxval < 256 { 1 } else { 2 };
        let need = width * height * bps;
        if data.len() < need {
            return Err(Error::Truncated {
                expected: need as u64,
                actual: data.len() as u64,
            });
        }
        let scale = (1.0 - dark) / maxval as f64;
        let intensity = (0..width * height)
            .map(|i| {
                let g = if bps == 1 {
                    data[i] as f64
                } else {
                    u16::from_be_bytes([data[2 * i], data[2 * i + 1]]) as f64
                };
                dark + g * scale
            })
            .collect();
        Self::new(width, height, intensity)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn intensity(&self) -> &[f64] {
        &self.intensity
    }

    /// True when every pixel has the same intensity.
    pub fn is_uniform(&self) -> bool {
        self.intensity.iter().all(|v| *v == self.intensity[0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive() {
        let mut data = vec![1.0; 64];
        data[9] = 0.0;
        assert!(matches!(
            Scene::new(8, 8, data),
            Err(Error::LogUndefined { x: 1, y: 1, .. })
        ));
    }

    #[test]
    fn rejects_tiny() {
        assert!(Scene::new(4, 8, vec![1.0; 32]).is_err());
    }

    #[test]
    fn step_pattern() {
        let s = Scene::pattern(Pattern::Step, 16, 8, 0.1, 1.0).unwrap();
        assert_eq!(s.intensity()[7], 0.1);
        assert_eq!(s.intensity()[8], 1.0);
        assert!(Scene::pattern(Pattern::Uniform, 8, 8, 0.1, 1.0)
            .unwrap()
            .is_uniform());
    }

    #[test]
    fn pgm_8_and_16_bit() {
        let mut p8 = b"P5\n# comment\n8 8\n255\n".to_vec();
        p8.extend((0..64).map(|i| (i * 4) as u8));
        let s = Scene::from_pgm_bytes(&p8, 0.01).unwrap();
        assert_eq!(s.intensity()[0], 0.01);
        assert!((s.intensity()[63] - (0.01 + 0.99 * 252.0 / 255.0)).abs() < 1e-12);

        let mut p16 = b"P5 8 8 65535\n".to_vec();
        for i in 0..64u16 {
            p16.extend((i * 1000).to_be_bytes());
        }
        let s = Scene::from_pgm_bytes(&p16, 0.5).unwrap();
        assert!((s.intensity()[1] - (0.5 + 0.5 * 1000.0 / 65535.0)).abs() < 1e-12);
    }

    #[test]
    fn pgm_errors() {
        assert!(Scene::from_pgm_bytes(b"P2 8 8 255\n", 0.1).is_err());
        assert!(matches!(
            Scene::from_pgm_bytes(b"P5 8 8 255\n\x00\x01", 0.1),
            Err(Error::Truncated { .. })
        ));
        let mut zero = b"P5 8 8 255\n".to_vec();
        zero.extend([0u8; 64]);
        assert!(matches!(
            Scene::from_pgm_bytes(&zero, 0.0),
            Err(Error::LogUndefined { .. })
        ));
    }
}
