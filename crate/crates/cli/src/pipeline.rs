//! Options shared by `bin`, `focus` and `bench`: loading events, choosing
//! the binning window and running one focus method.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::Args;
use evfocus::egs::{DEFAULT_TOL_BINS, DEFAULT_WINDOW_S};
use evfocus::epr::DEFAULT_DT_US;
use evfocus::io::read_events;
use evfocus::pbf::{ablate_no_mse, DEFAULT_K};
use evfocus::{
    bin_events, egs_focus, er_sequence, DenoiseSpec, EprSequence, EventStream, FocusResult, Method,
    NormalizationMode, PbfConfig, WaveletFilterPair,
};

use crate::config::{usage, Settings};
use crate::simulate::parse_roi;
use crate::truth::Truth;

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Event file, text or binary
    pub events: PathBuf,
    /// Flat key = value file supplying any of the options below
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Ground-truth sidecar from `simulate`; also sets the default window
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Bin width in µs [default: 1000]
    #[arg(long)]
    pub dt_us: Option<u64>,
    /// Window start in µs [default: sweep start, else first event]
    #[arg(long)]
    pub t_start_us: Option<u64>,
    /// Window end (exclusive) in µs [default: sweep end, else last event + 1]
    #[arg(long)]
    pub t_end_us: Option<u64>,
    /// Region of interest as x,y,w,h [default: whole sensor]
    #[arg(long)]
    pub roi: Option<String>,
}

#[derive(Args, Debug)]
pub struct MethodArgs {
    /// pbf, egs, pbf-nofilter or pbf-nomse [default: pbf]
    #[arg(long)]
    pub method: Option<String>,
    /// Investigation factor of the symmetry scan [default: 0.5]
    #[arg(long)]
    pub k: Option<f64>,
    /// unit-sum, unit-max or none [default: unit-sum]
    #[arg(long)]
    pub norm: Option<String>,
    /// Wavelet decomposition depth [default: 6]
    #[arg(long)]
    pub levels: Option<usize>,
    /// dmey or sym4 [default: dmey]
    #[arg(long)]
    pub wavelet: Option<String>,
    /// Normalize raw counts before filtering
    #[arg(long)]
    pub normalize_first: bool,
    /// Event-rate smoothing window in seconds [default: 0.055]
    #[arg(long)]
    pub window_s: Option<f64>,
    /// Golden-section stopping bracket in bins [default: 1]
    #[arg(long)]
    pub tol_bins: Option<usize>,
}

pub struct Loaded {
    pub stream: EventStream,
    pub truth: Option<Truth>,
    pub dt_us: u64,
    pub window: (u64, u64),
    pub roi: evfocus::Roi,
}

impl Loaded {
    pub fn bin(&self) -> Result<EprSequence> {
        Ok(bin_events(
            &self.stream,
            &self.roi,
            self.dt_us,
            self.window.0,
            self.window.1,
        )?)
    }
}

pub fn load(a: &InputArgs, s: &Settings) -> Result<Loaded> {
    let stream = read_events(&a.events)?;
    let truth_path: Option<PathBuf> = s.get("truth", a.truth.clone())?;
    let truth = truth_path.as_deref().map(Truth::read).transpose()?;
    let dt_us = s.or("dt-us", a.dt_us, DEFAULT_DT_US)?;
    if dt_us == 0 {
        return Err(usage("--dt-us must be at least 1"));
    }
    let roi = match s.get::<String>("roi", a.roi.clone())? {
        Some(raw) => parse_roi(&raw)?,
        None => stream.sensor.full_roi(),
    };
    let default_window = match (&truth, stream.time_span()) {
        (Some(t), _) => Some(t.window_us),
        (None, Some((t0, t1))) => Some((t0, t1 + 1)),
        (None, None) => None,
    };
    let t0 = s
        .get("t-start-us", a.t_start_us)?
        .or(default_window.map(|w| w.0));
    let t1 = s
        .get("t-end-us", a.t_end_us)?
        .or(default_window.map(|w| w.1));
    let (Some(t0), Some(t1)) = (t0, t1) else {
        return Err(usage(format!(
            "{} holds no events; pass --t-start-us and --t-end-us",
            a.events.display()
        )));
    };
    if t1 <= t0 {
        return Err(usage(format!(
            "--t-end-us ({t1}) must exceed --t-start-us ({t0})"
        )));
    }
    Ok(Loaded {
        stream,
        truth,
        dt_us,
        window: (t0, t1),
        roi,
    })
}

#[derive(Clone, Debug)]
pub struct MethodConfig {
    pub method: Method,
    pub pbf: PbfConfig,
    pub window_s: f64,
    pub tol_bins: usize,
}

pub fn method_config(a: &MethodArgs, s: &Settings) -> Result<MethodConfig> {
    let method: Method = s
        .or("method", a.method.clone(), "pbf".to_string())?
        .parse()
        .map_err(|e| usage(format!("--method: {e}")))?;
    let k = s.or("k", a.k, DEFAULT_K)?;
    if !(k > 0.0 && k < 1.0) {
        return Err(usage(format!("--k must lie in (0, 1), got {k}")));
    }
    let norm: NormalizationMode = s
        .or("norm", a.norm.clone(), "unit-sum".to_string())?
        .parse()
        .map_err(|e| usage(format!("--norm: {e}")))?;
    let levels = s.or("levels", a.levels, 6)?;
    let wavelet: String = s.or("wavelet", a.wavelet.clone(), "dmey".to_string())?;
    let filter =
        WaveletFilterPair::builtin(&wavelet).map_err(|e| usage(format!("--wavelet: {e}")))?;
    let denoise = DenoiseSpec::new(filter, levels).map_err(|e| usage(format!("--levels: {e}")))?;
    let normalize_first = s.or("normalize-first", a.normalize_first.then_some(true), false)?;
    let window_s = s.or("window-s", a.window_s, DEFAULT_WINDOW_S)?;
    if !(window_s > 0.0) {
        return Err(usage(format!(
            "--window-s must be positive, got {window_s}"
        )));
    }
    let tol_bins = s.or("tol-bins", a.tol_bins, DEFAULT_TOL_BINS)?;
    if tol_bins == 0 {
        return Err(usage("--tol-bins must be at least 1"));
    }
    Ok(MethodConfig {
        method,
        pbf: PbfConfig {
            denoise: (method != Method::PbfNofilter).then_some(denoise),
            norm,
            k,
            normalize_first,
        },
        window_s,
        tol_bins,
    })
}

pub fn run_method(cfg: &MethodConfig, seq: &EprSequence) -> Result<FocusResult> {
    let result = match cfg.method {
        Method::Pbf | Method::PbfNofilter => cfg.pbf.run(seq),
        Method::PbfNomse => {
            let spec = cfg
                .pbf
                .denoise
                .as_ref()
                .expect("filtered method has a wavelet spec");
            ablate_no_mse(seq, spec)
        }
        Method::Egs => egs_focus(&er_sequence(seq), cfg.window_s, cfg.tol_bins),
    };
    Ok(result?)
}

pub fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}
