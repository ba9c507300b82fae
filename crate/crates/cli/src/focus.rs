use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::Args;
use evfocus::io::{read_calibration, FocusReport};
use evfocus::{er_sequence, FocusResult};

use crate::config::Settings;
use crate::pipeline::{
    load, method_config, run_method, write_output, InputArgs, Loaded, MethodArgs,
};

#[derive(Args, Debug)]
pub struct BinArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Output CSV [default: stdout]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Writes `bin,t_start_us,per,ner` rows.
pub fn run_bin(a: &BinArgs) -> Result<()> {
    let s = Settings::load(a.input.config.as_deref())?;
    let loaded = load(&a.input, &s)?;
    s.finish()?;
    let seq = loaded.bin()?;
    let mut csv = String::from("bin,t_start_us,per,ner\n");
    for i in 0..seq.len() {
        writeln!(
            csv,
            "{i},{},{},{}",
            seq.bin_start(i),
            seq.per[i],
            seq.ner[i]
        )?;
    }
    write_output(a.out.as_deref(), &csv)
}

#[derive(Args, Debug)]
pub struct FocusArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[command(flatten)]
    pub method: MethodArgs,
    /// `t_us,position_um` CSV mapping time to lens position
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    /// Run name stored in the report [default: event file stem]
    #[arg(long)]
    pub name: Option<String>,
    /// Write the report here instead of stdout
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the scored curve as CSV: the symmetry error per shift for the
    /// symmetry methods, the event rate per bin otherwise
    #[arg(long)]
    pub dump_curves: Option<PathBuf>,
}

fn curve_csv(result: &FocusResult, loaded: &Loaded) -> Result<String> {
    let mut csv = String::new();
    match &result.diagnostics.curve {
        Some(curve) => {
            csv.push_str("a,focus_bin,mse\n");
            for (a, v) in curve.iter() {
                writeln!(csv, "{a},{},{v:e}", (a as f64 - 1.0) / 2.0)?;
            }
        }
        None => {
            csv.push_str("bin,t_start_us,er\n");
            let seq = loaded.bin()?;
            for (i, v) in er_sequence(&seq).er.iter().enumerate() {
                writeln!(csv, "{i},{},{v}", seq.bin_start(i))?;
            }
        }
    }
    Ok(csv)
}

pub fn run_focus(a: &FocusArgs) -> Result<()> {
    let s = Settings::load(a.input.config.as_deref())?;
    let loaded = load(&a.input, &s)?;
    let cfg = method_config(&a.method, &s)?;
    let cal_path: Option<PathBuf> = s.get("calibration", a.calibration.clone())?;
    let name: Option<String> = s.get("name", a.name.clone())?;
    s.finish()?;
    let calibration = cal_path.as_deref().map(read_calibration).transpose()?;

    let start = Instant::now();
    let seq = loaded.bin()?;
    let result = run_method(&cfg, &seq)?;
    let runtime_ms = start.elapsed().as_secs_f64() * 1e3;

    if let Some(path) = &a.dump_curves {
        write_output(Some(path), &curve_csv(&result, &loaded)?)?;
    }

    let mut report = FocusReport::from_result(&result, runtime_ms)?;
    report.diagnostics.curve = None;
    report.name = name.or_else(|| {
        a.input
            .events
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
    });
    let gt = loaded.truth.as_ref().and_then(|t| t.ground_truth_time_us);
    match (&calibration, &loaded.truth) {
        (Some(cal), _) => {
            let pos = cal.time_to_position(result.focus_time_us)?;
            report.position_um = Some(pos);
            if let Some(gt) = gt {
                report.error_um = Some(pos - cal.time_to_position(gt)?);
            }
        }
        (None, Some(truth)) => {
            let pos = truth.sweep.position_at(result.focus_time_us);
            report.position_um = Some(pos);
            if let Some(gt) = gt {
                report.error_um = Some(pos - truth.sweep.position_at(gt));
            }
        }
        (None, None) => {}
    }
    write_output(a.out.as_deref(), &(report.to_json()? + "\n"))
}
