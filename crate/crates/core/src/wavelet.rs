//! Multilevel 1-D discrete wavelet transform with symmetric (half-point)
//! boundary extension, and the approximation-only reconstruction used to
//! denoise EPR sequences.
//!
//! Conventions follow the common toolbox layout: a level produces
//! `floor((n + L - 1) / 2)` coefficients per band, and the inverse yields
//! `2m - L + 2` samples which are trimmed back to the original length.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Embedded filter banks. See `data/wavelets.txt` for provenance of each bank.
const BUILTIN_BANKS: &str = include_str!("../data/wavelets.txt");

const PR_TOLERANCE: f64 = 1e-10;

/// Analysis and synthesis filter taps of a two-channel orthogonal filter bank.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletFilterPair {
    name: String,
    lo_d: Vec<f64>,
    hi_d: Vec<f64>,
    lo_r: Vec<f64>,
    hi_r: Vec<f64>,
}

impl WaveletFilterPair {
    /// Builds a filter bank and checks perfect reconstruction on impulses.
    pub fn new(
        name: impl Into<String>,
        lo_d: Vec<f64>,
        hi_d: Vec<f64>,
        lo_r: Vec<f64>,
        hi_r: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        let len = lo_d.len();
        if len < 2 || hi_d.len() != len || lo_r.len() != len || hi_r.len() != len {
            return Err(Error::InvalidFilter {
                name,
                reason: format!(
                    "tap counts differ or are < 2 ({}, {}, {}, {})",
                    lo_d.len(),
                    hi_d.len(),
                    lo_r.len(),
                    hi_r.len()
                ),
            });
        }
        let bank = Self {
            name,
            lo_d,
            hi_d,
            lo_r,
            hi_r,
        };
        let err = bank.impulse_reconstruction_error();
        if !(err <= PR_TOLERANCE) {
            return Err(Error::InvalidFilter {
                name: bank.name,
                reason: format!("perfect reconstruction error {err:.3e} exceeds {PR_TOLERANCE:e}"),
            });
        }
        Ok(bank)
    }

    pub fn builtin(name: &str) -> Result<Self> {
        builtin_banks()
            .iter()
            .find(|b| b.name == name)
            .cloned()
            .ok_or_else(|| Error::UnknownWavelet(name.to_string()))
    }

    /// The 62-tap discrete Meyer bank.
    pub fn dmey() -> Self {
        Self::builtin("dmey").expect("embedded dmey bank")
    }

    /// The 8-tap symlet used for short sequences.
    pub fn sym4() -> Self {
        Self::builtin("sym4").expect("embedded sym4 bank")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.lo_d.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo_d.is_empty()
    }

    pub fn lo_d(&self) -> &[f64] {
        &self.lo_d
    }

    pub fn hi_d(&self) -> &[f64] {
        &self.hi_d
    }

    pub fn lo_r(&self) -> &[f64] {
        &self.lo_r
    }

    pub fn hi_r(&self) -> &[f64] {
        &self.hi_r
    }

    fn impulse_reconstruction_error(&self) -> f64 {
        let n = 2 * self.len() + 1;
        let mut worst = 0.0f64;
        for pos in [0, 1, n / 2, n - 2, n - 1] {
            let mut x = vec![0.0; n];
            x[pos] = 1.0;
            let (a, d) = dwt_single(&x, self);
            let y = idwt_single(&a, &d, self);
            let e = x
                .iter()
                .zip(&y)
                .map(|(u, v)| (u - v).abs())
                .fold(0.0, f64::max);
            worst = worst.max(e);
        }
        worst
    }
}

fn builtin_banks() -> &'static [WaveletFilterPair] {
    static BANKS: OnceLock<Vec<WaveletFilterPair>> = OnceLock::new();
    BANKS.get_or_init(|| parse_filter_banks(BUILTIN_BANKS).expect("embedded wavelet data is valid"))
}

/// Parses the filter-bank text format: `#` comments, blank-line separated
/// blocks of `name <id>`, `taps <n>`, then `lo_d`, `hi_d`, `lo_r`, `hi_r`
/// lines of whitespace-separated decimals.
pub fn parse_filter_banks(text: &str) -> Result<Vec<WaveletFilterPair>> {
    let mut banks = Vec::new();
    let mut name: Option<String> = None;
    let mut taps: Option<usize> = None;
    let mut arrays: [Option<Vec<f64>>; 4] = Default::default();

    let mut finish = |name: &mut Option<String>,
                      taps: &mut Option<usize>,
                      arrays: &mut [Option<Vec<f64>>; 4]|
     -> Result<()> {
        let Some(n) = name.take() else {
            return Ok(());
        };
        let [lo_d, hi_d, lo_r, hi_r] = std::mem::take(arrays);
        let missing = || Error::Parse(format!("wavelet '{n}' is missing a filter array"));
        let bank = WaveletFilterPair::new(
            n.clone(),
            lo_d.ok_or_else(missing)?,
            hi_d.ok_or_else(missing)?,
            lo_r.ok_or_else(missing)?,
            hi_r.ok_or_else(missing)?,
        )?;
        if let Some(t) = taps.take() {
            if t != bank.len() {
                return Err(Error::Parse(format!(
                    "wavelet '{n}' declares {t} taps but has {}",
                    bank.len()
                )));
            }
        }
        banks.push(bank);
        Ok(())
    };

    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        match key {
            "name" => {
                finish(&mut name, &mut taps, &mut arrays)?;
                name = Some(rest.trim().to_string());
            }
            "taps" => {
                taps =
                    Some(rest.trim().parse().map_err(|_| {
                        Error::Parse(format!("bad tap count on line {}", lineno + 1))
                    })?);
            }
            "lo_d" | "hi_d" | "lo_r" | "hi_r" => {
                let values = rest
                    .split_whitespace()
                    .map(str::parse::<f64>)
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|e| Error::Parse(format!("line {}: {e}", lineno + 1)))?;
                let slot = ["lo_d", "hi_d", "lo_r", "hi_r"]
                    .iter()
                    .position(|k| *k == key)
                    .unwrap();
                arrays[slot] = Some(values);
            }
            other => {
                return Err(Error::Parse(format!(
                    "unknown key '{other}' on line {}",
                    lineno + 1
                )))
            }
        }
    }
    finish(&mut name, &mut taps, &mut arrays)?;
    Ok(banks)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum Keep {
    #[default]
    ApproximationOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenoiseSpec {
    pub filter: WaveletFilterPair,
    pub levels: usize,
    pub keep: Keep,
}

impl DenoiseSpec {
    pub fn new(filter: WaveletFilterPair, levels: usize) -> Result<Self> {
        if levels == 0 {
            return Err(Error::precondition("wavelet levels must be >= 1"));
        }
        Ok(Self {
            filter,
            levels,
            keep: Keep::ApproximationOnly,
        })
    }
}

impl Default for DenoiseSpec {
    /// dmey, 6 levels, approximation only.
    fn default() -> Self {
        Self {
            filter: WaveletFilterPair::dmey(),
            levels: 6,
            keep: Keep::ApproximationOnly,
        }
    }
}

/// Coefficients of a multilevel decomposition.
#[derive(Clone, Debug, PartialEq)]
pub struct Pyramid {
    /// Approximation at the deepest level.
    pub approx: Vec<f64>,
    /// Detail bands, deepest first (`cD_L, ..., cD_1`).
    pub details: Vec<Vec<f64>>,
    pub signal_len: usize,
    pub requested_levels: usize,
}

impl Pyramid {
    pub fn levels(&self) -> usize {
        self.details.len()
    }

    pub fn clamped(&self) -> bool {
        self.levels() < self.requested_levels
    }
}

/// Output of [`lowpass_reconstruct`].
#[derive(Clone, Debug, PartialEq)]
pub struct Lowpass {
    pub signal: Vec<f64>,
    pub levels: usize,
    pub clamped: bool,
}

/// Deepest useful level, `floor(log2(n / (filter_len - 1)))`, never below 1.
pub fn max_levels(n: usize, filter_len: usize) -> usize {
    let span = filter_len.saturating_sub(1).max(1);
    let mut level = 0;
    while span << (level + 1) <= n {
        level += 1;
    }
    level.max(1)
}

#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let r = i.rem_euclid(period) as usize;
    if r < n {
        r
    } else {
        2 * n - 1 - r
    }
}

fn dwt_single(x: &[f64], bank: &WaveletFilterPair) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let taps = bank.len();
    let m = (n + taps - 1) / 2;
    let mut approx = Vec::with_capacity(m);
    let mut detail = Vec::with_capacity(m);
    for k in 0..m {
        let base = 2 * k as isize + 1;
        let (mut a, mut d) = (0.0, 0.0);
        // Interior samples need no reflection.
        if base - (taps as isize - 1) >= 0 && (base as usize) < n {
            for j in 0..taps {
                let v = x[base as usize - j];
                a += bank.lo_d[j] * v;
                d += bank.hi_d[j] * v;
            }
        } else {
            for j in 0..taps {
                let v = x[reflect(base - j as isize, n)];
                a += bank.lo_d[j] * v;
                d += bank.hi_d[j] * v;
            }
        }
        approx.push(a);
        detail.push(d);
    }
    (approx, detail)
}

fn idwt_single(approx: &[f64], detail: &[f64], bank: &WaveletFilterPair) -> Vec<f64> {
    debug_assert_eq!(approx.len(), detail.len());
    let m = approx.len();
    let taps = bank.len();
    let out_len = (2 * m + 2).saturating_sub(taps);
    let mut y = vec![0.0; out_len];
    for (i, yi) in y.iter_mut().enumerate() {
        // Coefficient k contributes tap j = i + taps - 2 - 2k when 0 <= j < taps.
        let shifted = i + taps - 2;
        let k_hi = (shifted / 2).min(m - 1);
        let k_lo = (shifted + 1).saturating_sub(taps).div_ceil(2);
        let mut s = 0.0;
        for k in k_lo..=k_hi {
            let j = shifted - 2 * k;
            s += approx[k] * bank.lo_r[j] + detail[k] * bank.hi_r[j];
        }
        *yi = s;
    }
    y
}

fn effective_levels(n: usize, spec: &DenoiseSpec) -> Result<usize> {
    if n < 2 {
        return Err(Error::precondition(format!(
            "wavelet transform needs at least 2 samples, got {n}"
        )));
    }
    Ok(spec.levels.min(max_levels(n, spec.filter.len())))
}

/// Multilevel decomposition; the depth is clamped to [`max_levels`].
pub fn dwt_multilevel(signal: &[f64], spec: &DenoiseSpec) -> Result<Pyramid> {
    let levels = effective_levels(signal.len(), spec)?;
    let mut approx = signal.to_vec();
    let mut details = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (a, d) = dwt_single(&approx, &spec.filter);
        details.push(d);
        approx = a;
    }
    details.reverse();
    Ok(Pyramid {
        approx,
        details,
        signal_len: signal.len(),
        requested_levels: spec.levels,
    })
}

/// Inverse of [`dwt_multilevel`], trimmed to the original signal length.
pub fn waverec(pyramid: &Pyramid, bank: &WaveletFilterPair) -> Vec<f64> {
    let mut a = pyramid.approx.clone();
    for d in &pyramid.details {
        if a.len() == d.len() + 1 {
            a.pop();
        }
        a = idwt_single(&a, d, bank);
    }
    a.truncate(pyramid.signal_len);
    a
}

/// Reconstruction from the deepest approximation band alone.
pub fn lowpass_reconstruct(signal: &[f64], spec: &DenoiseSpec) -> Result<Lowpass> {
    let mut pyramid = dwt_multilevel(signal, spec)?;
    for d in &mut pyramid.details {
        d.iter_mut().for_each(|v| *v = 0.0);
    }
    let levels = pyramid.levels();
    let clamped = pyramid.clamped();
    Ok(Lowpass {
        signal: waverec(&pyramid, &spec.filter),
        levels,
        clamped,
    })
}
