//! Focus-sweep simulator: a scene is blurred by a thin-lens Gaussian PSF at
//! each defocus step, mapped to log intensity, and turned into events with a
//! per-pixel threshold quantizer.

pub mod noise;
pub mod optics;
pub mod scene;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Event, EventStream, Polarity, Roi, SensorGeometry};
pub use noise::{inject_noise, ApsSpikes, NoiseConfig, Strobe};
pub use optics::{blur_radius, gaussian_blur, thin_lens_image_distance, OpticsConfig};
pub use scene::{Pattern, Scene};

/// Linear sweep of the image plane through focus.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub dv_start_um: f64,
    pub dv_end_um: f64,
    /// Image-plane speed in µm/s.
    pub speed_um_s: f64,
    /// Number of blur-stack frames, including both ends.
    pub steps: usize,
    pub t_start_us: u64,
}

impl SweepConfig {
    /// Sweep from `-half_range_um` to `+half_range_um` starting at t = 0.
    pub fn symmetric(half_range_um: f64, speed_um_s: f64, steps: usize) -> Self {
        Self {
            dv_start_um: -half_range_um,
            dv_end_um: half_range_um,
            speed_um_s,
            steps,
            t_start_us: 0,
        }
    }

    /// Either direction is allowed; `dv_start > dv_end` sweeps backwards.
    pub fn validate(&self) -> Result<()> {
        if !(self.dv_start_um.is_finite() && self.dv_end_um.is_finite())
            || self.dv_start_um == self.dv_end_um
        {
            return Err(Error::precondition(format!(
                "sweep needs distinct finite ends, got [{}, {}]",
                self.dv_start_um, self.dv_end_um
            )));
        }
        if !(self.speed_um_s > 0.0 && self.speed_um_s.is_finite()) {
            return Err(Error::precondition(format!(
                "sweep speed must be > 0, got {}",
                self.speed_um_s
            )));
        }
        if self.steps < 3 {
            return Err(Error::precondition(format!(
                "sweep needs at least 3 steps, got {}",
                self.steps
            )));
        }
        Ok(())
    }

    /// Defocus at frame `j`. The grid is computed so that a sweep symmetric
    /// about zero gives exactly negated values at mirrored frames.
    pub fn dv(&self, j: usize) -> f64 {
        let last = (self.steps - 1) as f64;
        let j = j as f64;
        ((last - j) * self.dv_start_um + j * self.dv_end_um) / last
    }

    /// Exact time of frame `j` in µs.
    pub fn time_us(&self, j: usize) -> f64 {
        self.time_at_dv(self.dv(j))
    }

    fn time_at_dv(&self, dv: f64) -> f64 {
        self.t_start_us as f64 + (dv - self.dv_start_um).abs() / self.speed_um_s * 1e6
    }

    pub fn duration_us(&self) -> f64 {
        (self.dv_end_um - self.dv_start_um).abs() / self.speed_um_s * 1e6
    }

    /// Time at which the image plane crosses focus. `None` when the sweep
    /// does not pass through zero defocus.
    pub fn ground_truth_time_us(&self) -> Option<f64> {
        let (lo, hi) = if self.dv_start_um < self.dv_end_um {
            (self.dv_start_um, self.dv_end_um)
        } else {
            (self.dv_end_um, self.dv_start_um)
        };
        (lo <= 0.0 && 0.0 <= hi).then(|| self.time_at_dv(0.0))
    }

    /// Defocus at time `t_us`, clamped to the sweep ends.
    pub fn position_at(&self, t_us: f64) -> f64 {
        let travel = ((t_us - self.t_start_us as f64) * 1e-6 * self.speed_um_s)
            .clamp(0.0, (self.dv_end_um - self.dv_start_um).abs());
        self.dv_start_um + travel * (self.dv_end_um - self.dv_start_um).signum()
    }

    /// `(t_us, position_um)` samples every `every_us` over the sweep, ending
    /// exactly at the last frame.
    pub fn calibration_samples(&self, every_us: f64) -> Vec<(f64, f64)> {
        let t0 = self.t_start_us as f64;
        let t1 = t0 + self.duration_us();
        let mut out = Vec::new();
        let mut i = 0u64;
        loop {
            let t = t0 + i as f64 * every_us;
            if t >= t1 {
                break;
            }
            out.push((t, self.position_at(t)));
            i += 1;
        }
        out.push((t1, self.dv_end_um));
        out
    }
}

/// What happens to the reference level after a pixel fires.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResidualMode {
    /// Reference advances by the emitted multiples of the threshold, so
    /// sub-threshold change carries into later frames.
    #[default]
    Carry,
    /// Reference jumps to the current level whenever the pixel fires.
    Snap,
}

impl std::str::FromStr for ResidualMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "carry" => Ok(Self::Carry),
            "snap" => Ok(Self::Snap),
            _ => Err(Error::Parse(format!(
                "unknown residual mode '{s}', expected carry|snap"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventGenConfig {
    pub c_pos: f64,
    pub c_neg: f64,
    pub residual: ResidualMode,
    pub noise: NoiseConfig,
    pub seed: u64,
}

impl Default for EventGenConfig {
    fn default() -> Self {
        Self {
            c_pos: 0.2,
            c_neg: 0.2,
            residual: ResidualMode::Carry,
            noise: NoiseConfig::default(),
            seed: 0,
        }
    }
}

impl EventGenConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_pos > 0.0
            && self.c_neg > 0.0
            && self.c_pos.is_finite()
            && self.c_neg.is_finite())
        {
            return Err(Error::precondition(format!(
                "thresholds must be positive, got c_pos = {}, c_neg = {}",
                self.c_pos, self.c_neg
            )));
        }
        self.noise.validate()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Simulation {
    pub stream: EventStream,
    /// `None` when the sweep never reaches zero defocus.
    pub ground_truth_time_us: Option<f64>,
}

/// Log of the scene blurred for defocus `dv`.
pub fn log_frame(scene: &Scene, optics: &OpticsConfig, dv: f64) -> Vec<f64> {
    let sigma = optics.psf_sigma_px(dv);
    gaussian_blur(scene.intensity(), scene.width(), scene.height(), sigma)
        .into_iter()
        .map(f64::ln)
        .collect()
}

/// Computes log frames for `range` in parallel, returned in frame order.
fn log_frames(
    schedule: &[(usize, &Scene)],
    optics: &OpticsConfig,
    sweep: &SweepConfig,
    range: std::ops::Range<usize>,
) -> Vec<Vec<f64>> {
    let threads = std::thread::available_parallelism()
        .map_or(1, |n| n.get())
        .min(range.len())
        .max(1);
    let mut frames: Vec<Vec<f64>> = vec![Vec::new(); range.len()];
    let chunk = range.len().div_ceil(threads);
    std::thread::scope(|s| {
        for (c, slots) in frames.chunks_mut(chunk).enumerate() {
            let first = range.start + c * chunk;
            s.spawn(move || {
                for (i, slot) in slots.iter_mut().enumerate() {
                    let j = first + i;
                    *slot = log_frame(scene_at(schedule, j), optics, sweep.dv(j));
                }
            });
        }
    });
    frames
}

fn scene_at<'a>(schedule: &[(usize, &'a Scene)], step: usize) -> &'a Scene {
    let i = schedule.partition_point(|(first, _)| *first <= step);
    schedule[i - 1].1
}

/// Runs a focus sweep over `scene` and returns the events of pixels inside
/// `roi` plus any configured noise.
///
/// Events of one frame share that frame's timestamp (rounded to whole µs)
/// and are emitted in row-major pixel order.
pub fn simulate_sweep(
    scene: &Scene,
    optics: &OpticsConfig,
    sweep: &SweepConfig,
    gen: &EventGenConfig,
    roi: &Roi,
) -> Result<Simulation> {
    simulate_schedule(&[(0, scene)], optics, sweep, gen, roi)
}

/// Like [`simulate_sweep`], but the scene content changes during the sweep:
/// `schedule` lists `(first_step, scene)` pairs starting at step 0, for
/// example a display whose digits jump. All scenes share one size.
pub fn simulate_schedule(
    schedule: &[(usize, &Scene)],
    optics: &OpticsConfig,
    sweep: &SweepConfig,
    gen: &EventGenConfig,
    roi: &Roi,
) -> Result<Simulation> {
    optics.validate()?;
    sweep.validate()?;
    gen.validate()?;
    let Some(&(first_step, first)) = schedule.first() else {
        return Err(Error::precondition("scene schedule is empty"));
    };
    if first_step != 0 {
        return Err(Error::precondition("scene schedule must start at step 0"));
    }
    if schedule.windows(2).any(|p| p[1].0 <= p[0].0) {
        return Err(Error::precondition(
            "scene schedule steps must increase strictly",
        ));
    }
    let (w, h) = (first.width(), first.height());
    if schedule
        .iter()
        .any(|(_, s)| s.width() != w || s.height() != h)
    {
        return Err(Error::precondition(
            "all scheduled scenes must have the same size",
        ));
    }
    if w > u16::MAX as usize + 1 || h > u16::MAX as usize + 1 {
        return Err(Error::precondition(format!(
            "scene {w}x{h} exceeds the 16-bit address range"
        )));
    }
    let sensor = SensorGeometry::new(w as u32, h as u32)?;
    roi.check(&sensor)?;

    let pixels: Vec<usize> = (roi.y0 as usize..(roi.y0 + roi.h) as usize)
        .flat_map(|y| (roi.x0 as usize..(roi.x0 + roi.w) as usize).map(move |x| y * w + x))
        .collect();

    let mut events = Vec::new();
    let mut reference: Vec<f64> = Vec::new();
    const BATCH: usize = 64;
    let mut start = 0;
    while start < sweep.steps {
        let end = (start + BATCH).min(sweep.steps);
        for (offset, frame) in log_frames(schedule, optics, sweep, start..end)
            .into_iter()
            .enumerate()
        {
            let j = start + offset;
            if j == 0 {
                reference = pixels.iter().map(|&p| frame[p]).collect();
                continue;
            }
            let t = sweep.time_us(j).round() as u64;
            for (old, &p) in reference.iter_mut().zip(&pixels) {
                let level = frame[p];
                let delta = level - *old;
                let (count, polarity, c) = if delta > 0.0 {
                    ((delta / gen.c_pos).floor(), Polarity::Positive, gen.c_pos)
                } else {
                    ((-delta / gen.c_neg).floor(), Polarity::Negative, gen.c_neg)
                };
                if count < 1.0 {
                    continue;
                }
                match gen.residual {
                    ResidualMode::Carry => *old += polarity.sign() as f64 * count * c,
                    ResidualMode::Snap => *old = level,
                }
                let (x, y) = ((p % w) as u16, (p / w) as u16);
                events.extend(std::iter::repeat_n(
                    Event::new(t, x, y, polarity),
                    count as usize,
                ));
            }
        }
        start = end;
    }

    let clean = EventStream::new(sensor, events);
    let window = (
        sweep.t_start_us,
        sweep.time_us(sweep.steps - 1).round() as u64 + 1,
    );
    let stream = inject_noise(&clean, &gen.noise, gen.c_pos, gen.c_neg, window, gen.seed)?;
    Ok(Simulation {
        stream,
        ground_truth_time_us: sweep.ground_truth_time_us(),
    })
}
