use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use evfocus::io::{write_calibration, write_events, Calibration};
use evfocus::sim::{
    simulate_sweep, ApsSpikes, EventGenConfig, NoiseConfig, OpticsConfig, ResidualMode, Scene,
    Strobe, SweepConfig,
};
use evfocus::{Polarity, Roi};

use crate::config::{resolve_seed, usage, Settings};
use crate::truth::{default_path, sweep_window, SceneEcho, Truth};

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Output event file; `.evaf` or `.bin` writes binary, anything else text
    #[arg(long)]
    pub out: PathBuf,
    /// Ground-truth sidecar path [default: <out>.truth.json]
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Also write a position calibration CSV sampled every millisecond
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Flat key = value file supplying any of the options below
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// step, bars, text-like, uniform or random [default: step]
    #[arg(long)]
    pub pattern: Option<String>,
    /// Binary PGM scene; overrides --pattern
    #[arg(long)]
    pub image: Option<PathBuf>,
    /// Scene width in pixels [default: 96]
    #[arg(long)]
    pub width: Option<usize>,
    /// Scene height in pixels [default: 16]
    #[arg(long)]
    pub height: Option<usize>,
    /// Darkest scene intensity [default: 0.1]
    #[arg(long)]
    pub dark: Option<f64>,
    /// Brightest scene intensity [default: 1.0]
    #[arg(long)]
    pub bright: Option<f64>,
    /// Region of interest as x,y,w,h [default: whole scene]
    #[arg(long)]
    pub roi: Option<String>,

    /// Focal length in mm [default: 35]
    #[arg(long)]
    pub focal_mm: Option<f64>,
    /// f-number [default: 1.4]
    #[arg(long)]
    pub f_number: Option<f64>,
    /// Object distance in mm [default: 1000]
    #[arg(long)]
    pub object_mm: Option<f64>,
    /// Pixel pitch in µm [default: 18.5]
    #[arg(long)]
    pub pixel_pitch_um: Option<f64>,

    /// Sweep from -h to +h µm of defocus [default: 300]
    #[arg(long)]
    pub half_range_um: Option<f64>,
    /// Explicit sweep start; overrides --half-range-um together with --dv-end-um
    #[arg(long, allow_hyphen_values = true)]
    pub dv_start_um: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub dv_end_um: Option<f64>,
    /// Image-plane speed in µm/s [default: 10000]
    #[arg(long)]
    pub speed_um_s: Option<f64>,
    /// Number of blur-stack frames [default: 601]
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub t_start_us: Option<u64>,

    /// Positive log-intensity threshold [default: 0.2]
    #[arg(long)]
    pub c_pos: Option<f64>,
    /// Negative log-intensity threshold [default: 0.2]
    #[arg(long)]
    pub c_neg: Option<f64>,
    /// carry or snap [default: carry]
    #[arg(long)]
    pub residual: Option<String>,
    /// Per-pixel dark event rate in Hz [default: 0]
    #[arg(long)]
    pub dark_rate_hz: Option<f64>,
    /// Period of frame-readout bursts in seconds
    #[arg(long)]
    pub aps_period_s: Option<f64>,
    /// Events per readout burst [default: 0]
    #[arg(long)]
    pub aps_events: Option<u32>,
    /// Strobe frequency in Hz
    #[arg(long)]
    pub strobe_hz: Option<f64>,
    /// Strobe peak-to-peak log-intensity depth [default: 0]
    #[arg(long)]
    pub strobe_depth: Option<f64>,
    /// Noise seed [default: $EVFOCUS_SEED or 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn parse_roi(raw: &str) -> Result<Roi> {
    let parts: Vec<u32> = raw
        .split(',')
        .map(|p| p.trim().parse::<u32>())
        .collect::<Result<_, _>>()
        .map_err(|e| usage(format!("--roi: expected x,y,w,h, got '{raw}': {e}")))?;
    match parts[..] {
        [x, y, w, h] if w > 0 && h > 0 => Ok(Roi::new(x, y, w, h)),
        _ => Err(usage(format!(
            "--roi: expected x,y,w,h with w, h > 0, got '{raw}'"
        ))),
    }
}

fn build_scene(a: &SimulateArgs, s: &Settings) -> Result<(Scene, SceneEcho)> {
    let dark = s.or("dark", a.dark, 0.1)?;
    let bright = s.or("bright", a.bright, 1.0)?;
    if !(dark > 0.0 && bright > 0.0) {
        return Err(usage("--dark and --bright must be positive"));
    }
    let width = s.or("width", a.width, 96)?;
    let height = s.or("height", a.height, 16)?;
    let pattern: String = s.or("pattern", a.pattern.clone(), "step".to_string())?;
    let image: Option<PathBuf> = s.get("image", a.image.clone())?;
    let seed = resolve_seed(s, a.seed)?;

    let scene = if let Some(path) = &image {
        Scene::from_pgm(path, dark)?
    } else if pattern == "random" {
        Scene::random_rectangles(width, height, seed)
            .map_err(|e| usage(format!("--width/--height: {e}")))?
    } else {
        let p = pattern
            .parse()
            .map_err(|e| usage(format!("--pattern: {e}")))?;
        Scene::pattern(p, width, height, dark, bright).map_err(|e| usage(format!("scene: {e}")))?
    };
    let echo = SceneEcho {
        source: if image.is_some() {
            "pgm".into()
        } else {
            pattern
        },
        image,
        width: scene.width(),
        height: scene.height(),
        dark,
        bright,
    };
    Ok((scene, echo))
}

fn build_optics(a: &SimulateArgs, s: &Settings) -> Result<OpticsConfig> {
    let focal_mm = s.or("focal-mm", a.focal_mm, 35.0)?;
    let f_number = s.or("f-number", a.f_number, 1.4)?;
    let object_mm = s.or("object-mm", a.object_mm, 1000.0)?;
    let pitch = s.or("pixel-pitch-um", a.pixel_pitch_um, 18.5)?;
    if !(f_number > 0.0) {
        return Err(usage("--f-number must be positive"));
    }
    OpticsConfig::from_lens(
        focal_mm * 1e3,
        object_mm * 1e3,
        focal_mm * 1e3 / f_number,
        pitch,
    )
    .map_err(|e| usage(format!("--focal-mm/--object-mm/--pixel-pitch-um: {e}")))
}

fn build_sweep(a: &SimulateArgs, s: &Settings) -> Result<SweepConfig> {
    let half = s.or("half-range-um", a.half_range_um, 300.0)?;
    let start = s.get("dv-start-um", a.dv_start_um)?;
    let end = s.get("dv-end-um", a.dv_end_um)?;
    let (dv_start_um, dv_end_um) = match (start, end) {
        (Some(x), Some(y)) => (x, y),
        (None, None) => (-half, half),
        _ => {
            return Err(usage(
                "--dv-start-um and --dv-end-um must be given together",
            ))
        }
    };
    let sweep = SweepConfig {
        dv_start_um,
        dv_end_um,
        speed_um_s: s.or("speed-um-s", a.speed_um_s, 10_000.0)?,
        steps: s.or("steps", a.steps, 601)?,
        t_start_us: s.or("t-start-us", a.t_start_us, 0)?,
    };
    sweep.validate().map_err(|e| {
        usage(format!(
            "--dv-start-um/--dv-end-um/--speed-um-s/--steps: {e}"
        ))
    })?;
    Ok(sweep)
}

fn build_gen(a: &SimulateArgs, s: &Settings) -> Result<EventGenConfig> {
    let residual: ResidualMode = s
        .or("residual", a.residual.clone(), "carry".to_string())?
        .parse()
        .map_err(|e| usage(format!("--residual: {e}")))?;
    let aps_events = s.or("aps-events", a.aps_events, 0)?;
    let aps = match s.get("aps-period-s", a.aps_period_s)? {
        Some(period_s) => Some(ApsSpikes {
            period_s,
            amplitude_events: aps_events,
        }),
        None if aps_events > 0 => return Err(usage("--aps-events needs --aps-period-s")),
        None => None,
    };
    let depth = s.or("strobe-depth", a.strobe_depth, 0.0)?;
    let strobe = match s.get("strobe-hz", a.strobe_hz)? {
        Some(freq_hz) => Some(Strobe {
            freq_hz,
            log_depth: depth,
        }),
        None if depth > 0.0 => return Err(usage("--strobe-depth needs --strobe-hz")),
        None => None,
    };
    let gen = EventGenConfig {
        c_pos: s.or("c-pos", a.c_pos, 0.2)?,
        c_neg: s.or("c-neg", a.c_neg, 0.2)?,
        residual,
        noise: NoiseConfig {
            dark_rate_hz: s.or("dark-rate-hz", a.dark_rate_hz, 0.0)?,
            aps,
            strobe,
        },
        seed: resolve_seed(s, a.seed)?,
    };
    gen.validate()
        .map_err(|e| usage(format!("--c-pos/--c-neg/noise options: {e}")))?;
    Ok(gen)
}

pub fn run(a: &SimulateArgs) -> Result<()> {
    let s = Settings::load(a.config.as_deref())?;
    let (scene, scene_echo) = build_scene(a, &s)?;
    let optics = build_optics(a, &s)?;
    let sweep = build_sweep(a, &s)?;
    let gen = build_gen(a, &s)?;
    let roi = match s.get::<String>("roi", a.roi.clone())? {
        Some(raw) => parse_roi(&raw)?,
        None => Roi::new(0, 0, scene.width() as u32, scene.height() as u32),
    };
    s.finish()?;

    let sim = simulate_sweep(&scene, &optics, &sweep, &gen, &roi)?;
    if sim.stream.is_empty() {
        eprintln!("warning: the simulation produced no events (is the scene uniform?)");
    }
    write_events(&a.out, &sim.stream)?;

    let truth = Truth {
        ground_truth_time_us: sim.ground_truth_time_us,
        events: sim.stream.len(),
        positive: sim.stream.count(Polarity::Positive),
        negative: sim.stream.count(Polarity::Negative),
        seed: gen.seed,
        scene: scene_echo,
        optics,
        sweep,
        event_gen: gen,
        window_us: sweep_window(&sweep),
    };
    let truth_path = a.truth.clone().unwrap_or_else(|| default_path(&a.out));
    truth.write(&truth_path)?;

    if let Some(path) = &a.calibration {
        let cal = Calibration::new(sweep.calibration_samples(1000.0))?;
        write_calibration(path, &cal).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
