use std::hint::black_box;
use std::time::Instant;

use anyhow::Result;
use clap::Args;
use serde::Serialize;

use crate::config::{usage, Settings};
use crate::pipeline::{load, method_config, run_method, write_output, InputArgs, MethodArgs};

/// Below this many repetitions the median is flagged as low confidence.
pub const MIN_REPS: usize = 10;

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    /// Timed repetitions per measurement [default: 10]
    #[arg(long)]
    pub reps: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Timing {
    median_ms: f64,
    min_ms: f64,
    max_ms: f64,
}

#[derive(Debug, Serialize)]
struct BenchReport {
    method: String,
    bins: usize,
    events: usize,
    reps: usize,
    low_confidence: bool,
    /// Focus evaluation from an already binned sequence.
    core: Timing,
    /// Binning plus focus evaluation.
    with_binning: Timing,
}

fn time<T>(reps: usize, mut f: impl FnMut() -> Result<T>) -> Result<Timing> {
    let mut ms = Vec::with_capacity(reps);
    for _ in 0..reps {
        let start = Instant::now();
        black_box(f()?);
        ms.push(start.elapsed().as_secs_f64() * 1e3);
    }
    ms.sort_by(f64::total_cmp);
    let median = if reps % 2 == 1 {
        ms[reps / 2]
    } else {
        (ms[reps / 2 - 1] + ms[reps / 2]) / 2.0
    };
    Ok(Timing {
        median_ms: median,
        min_ms: ms[0],
        max_ms: ms[reps - 1],
    })
}

pub fn run(a: &BenchArgs) -> Result<()> {
    let s = Settings::load(a.input.config.as_deref())?;
    let loaded = load(&a.input, &s)?;
    let cfg = method_config(&a.method, &s)?;
    let reps = s.or("reps", a.reps, MIN_REPS)?;
    s.finish()?;
    if reps == 0 {
        return Err(usage("--reps must be at least 1"));
    }
    let seq = loaded.bin()?;
    // One untimed run surfaces pipeline errors before timing starts.
    run_method(&cfg, &seq)?;
    let core = time(reps, || run_method(&cfg, black_box(&seq)))?;
    let with_binning = time(reps, || run_method(&cfg, &loaded.bin()?))?;
    let low_confidence = reps < MIN_REPS;
    if low_confidence {
        eprintln!("warning: {reps} repetition(s) is below {MIN_REPS}; timings are low confidence");
    }
    let report = BenchReport {
        method: cfg.method.to_string(),
        bins: seq.len(),
        events: loaded.stream.len(),
        reps,
        low_confidence,
        core,
        with_binning,
    };
    write_output(None, &(serde_json::to_string_pretty(&report)? + "\n"))
}
