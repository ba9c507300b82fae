use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Thin-lens camera model. All lengths in micrometres.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpticsConfig {
    pub focal_length_um: f64,
    pub object_distance_um: f64,
    /// Exit-pupil diameter.
    pub aperture_um: f64,
    pub pixel_pitch_um: f64,
    /// In-focus image distance, `1 / (1/f - 1/u)`.
    pub image_distance_um: f64,
}

impl OpticsConfig {
    pub fn from_lens(
        focal_length_um: f64,
        object_distance_um: f64,
        aperture_um: f64,
        pixel_pitch_um: f64,
    ) -> Result<Self> {
        let cfg = Self {
            focal_length_um,
            object_distance_um,
            aperture_um,
            pixel_pitch_um,
            image_distance_um: thin_lens_image_distance(focal_length_um, object_distance_um),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// 35 mm F1.4 lens focused at 1 m on an 18.5 um pixel sensor.
    pub fn lens_35mm_f1_4() -> Self {
        Self::from_lens(35_000.0, 1_000_000.0, 35_000.0 / 1.4, 18.5).expect("valid preset")
    }

    pub fn validate(&self) -> Result<()> {
        let f = self.focal_length_um;
        let u = self.object_distance_um;
        if !(f > 0.0 && u > f) {
            return Err(Error::precondition(format!(
                "optics need object distance > focal length > 0 (f = {f}, u = {u})"
            )));
        }
        if !(self.aperture_um > 0.0 && self.pixel_pitch_um > 0.0) {
            return Err(Error::precondition(
                "aperture and pixel pitch must be positive",
            ));
        }
        let v0 = thin_lens_image_distance(f, u);
        if (self.image_distance_um - v0).abs() > 1e-6 * v0 {
            return Err(Error::precondition(format!(
                "image distance {} does not satisfy the thin-lens equation (expected {v0})",
                self.image_distance_um
            )));
        }
        Ok(())
    }

    /// Gaussian PSF width in pixels for a defocus `dv`.
    pub fn psf_sigma_px(&self, dv_um: f64) -> f64 {
        blur_radius(dv_um, self.image_distance_um, self.aperture_um) / self.pixel_pitch_um
    }
}

pub fn thin_lens_image_distance(focal_length_um: f64, object_distance_um: f64) -> f64 {
    1.0 / (1.0 / focal_length_um - 1.0 / object_distance_um)
}

/// Blur-circle radius `|dv| D / (2 v0)`.
pub fn blur_radius(dv_um: f64, v0_um: f64, aperture_um: f64) -> f64 {
    dv_um.abs() * aperture_um / (2.0 * v0_um)
}

/// Gaussian integrated over each pixel's footprint, so a sharp edge blurs
/// to the exact normal CDF profile.
fn kernel(sigma: f64) -> Vec<f64> {
    let radius = (4.0 * sigma).ceil() as usize;
    let cdf = |x: f64| 0.5 * (1.0 + libm::erf(x / (sigma * std::f64::consts::SQRT_2)));
    let mut k: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let x = i as f64 - radius as f64;
            cdf(x + 0.5) - cdf(x - 0.5)
        })
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Convolves a row-major image with a unit-sum Gaussian of width `sigma`
/// pixels, truncated at `ceil(4 sigma)` with replicated edges. `sigma = 0`
/// returns the input unchanged.
pub fn gaussian_blur(image: &[f64], width: usize, height: usize, sigma: f64) -> Vec<f64> {
    assert_eq!(image.len(), width * height, "image size mismatch");
    if !(sigma > 0.0) {
        return image.to_vec();
    }
    let k = kernel(sigma);
    let r = (k.len() / 2) as isize;
    let clamp = |i: isize, n: usize| i.clamp(0, n as isize - 1) as usize;

    let mut tmp = vec![0.0; image.len()];
    for y in 0..height {
        let row = &image[y * width..(y + 1) * width];
        for x in 0..width {
            let mut s = 0.0;
            for (t, w) in k.iter().enumerate() {
                s += w * row[clamp(x as isize + t as isize - r, width)];
            }
            tmp[y * width + x] = s;
        }
    }
    let mut out = vec![0.0; image.len()];
    for y in 0..height {
        for x in 0..width {
            let mut s = 0.0;
            for (t, w) in k.iter().enumerate() {
                s += w * tmp[clamp(y as isize + t as isize - r, height) * width + x];
            }
            out[y * width + x] = s;
        }
    }
    out
}
