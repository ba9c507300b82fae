//! Polarity-based focus evaluation.
//!
//! During a focus sweep the positive and negative event-rate curves are
//! mirror images of each other about the in-focus instant. The positive
//! channel is reversed and slid across the negative one; the shift `a` whose
//! overlap has the smallest mean squared difference is twice the symmetry
//! center.
//!
//! Index convention: the overlap for shift `a` pairs `ner[j]` with
//! `per[a - 1 - j]`, so a perfect mirror about bin `c` (`ner[j] = per[2c - j]`)
//! scores zero at `a = 2c + 1` and the reported focus bin is `(a - 1) / 2`.

use serde::{Deserialize, Serialize};

use crate::epr::{normalize, EprSequence, NormalizationMode};
use crate::error::{Error, Result};
use crate::wavelet::{lowpass_reconstruct, DenoiseSpec};

/// Default investigation factor.
pub const DEFAULT_K: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pbf,
    Egs,
    PbfNofilter,
    PbfNomse,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Pbf => "pbf",
            Method::Egs => "egs",
            Method::PbfNofilter => "pbf-nofilter",
            Method::PbfNomse => "pbf-nomse",
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pbf" => Ok(Method::Pbf),
            "egs" => Ok(Method::Egs),
            "pbf-nofilter" => Ok(Method::PbfNofilter),
            "pbf-nomse" => Ok(Method::PbfNomse),
            _ => Err(Error::Parse(format!(
                "unknown method '{s}', expected pbf|egs|pbf-nofilter|pbf-nomse"
            ))),
        }
    }
}

/// Symmetry error as a function of the shift `a` (in bins).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MseCurve {
    pub a_min: usize,
    pub a_max: usize,
    pub values: Vec<f64>,
    pub k: f64,
}

impl MseCurve {
    pub fn get(&self, a: usize) -> Option<f64> {
        a.checked_sub(self.a_min)
            .and_then(|i| self.values.get(i))
            .copied()
    }

    /// `(a, value)` of the minimum; ties go to the smallest `a`.
    pub fn argmin(&self) -> (usize, f64) {
        let mut best = (self.a_min, self.values[0]);
        for (i, &v) in self.values.iter().enumerate().skip(1) {
            if v < best.1 {
                best = (self.a_min + i, v);
            }
        }
        best
    }

    pub fn is_flat(&self) -> bool {
        let (lo, hi) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        hi - lo <= 1e-12 * hi.abs()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .map(move |(i, &v)| (self.a_min + i, v))
    }
}

fn snap_product(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 {
        r
    } else {
        x
    }
}

/// Scan range `[ceil(k n), floor((2 - k) n)]`, limited to shifts that overlap.
pub fn shift_range(n: usize, k: f64) -> (usize, usize) {
    let nf = n as f64;
    let lo = snap_product(k * nf).ceil() as usize;
    let hi = snap_product((2.0 - k) * nf).floor() as usize;
    (lo.max(1), hi.min(2 * n - 1))
}

/// Mean squared difference between `ner` and reversed `per` for every shift in
/// the investigation range.
pub fn mse_curve(per: &[f64], ner: &[f64], k: f64) -> Result<MseCurve> {
    let n = per.len();
    if n < 2 || ner.len() != n {
        return Err(Error::precondition(format!(
            "mse_curve needs two sequences of equal length >= 2 (got {} and {})",
            per.len(),
            ner.len()
        )));
    }
    if !(k > 0.0 && k < 1.0) {
        return Err(Error::precondition(format!(
            "investigation factor k must lie in (0, 1), got {k}"
        )));
    }
    let (a_min, a_max) = shift_range(n, k);
    let values = (a_min..=a_max)
        .map(|a| {
            let lo = a.saturating_sub(n);
            let hi = a.min(n);
            let sum = ner[lo..hi]
                .iter()
                .zip(per[a - hi..a - lo].iter().rev())
                .fold(0.0, |acc, (x, y)| {
                    let d = x - y;
                    acc + d * d
                });
            sum / (hi - lo) as f64
        })
        .collect();
    Ok(MseCurve {
        a_min,
        a_max,
        values,
        k,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    /// The wavelet depth was reduced to fit the sequence.
    pub clamped_levels: bool,
    pub wavelet_levels: Option<usize>,
    pub degenerate_channel: bool,
    /// Every evaluated point scored the same; the argmin is a tie-break.
    pub flat_curve: bool,
    pub mse_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub curve: Option<MseCurve>,
    /// Final golden-section bracket, in bins.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bracket: Option<(f64, f64)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub global_argmax: Option<usize>,
    pub unimodality_violation: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocusResult {
    pub method: Method,
    pub a_star: Option<usize>,
    /// Bin-index coordinate of the focus; may be a half-integer.
    pub focus_bin: f64,
    /// Bin-center time of `focus_bin`, in microseconds.
    pub focus_time_us: f64,
    pub position_um: Option<f64>,
    pub diagnostics: Diagnostics,
}

impl FocusResult {
    pub(crate) fn at_bin(
        method: Method,
        seq: &EprSequence,
        focus_bin: f64,
        diagnostics: Diagnostics,
    ) -> Self {
        Self {
            method,
            a_star: None,
            focus_bin,
            focus_time_us: seq.bin_center_time(focus_bin),
            position_um: None,
            diagnostics,
        }
    }
}

/// Pipeline settings. `denoise: None` skips wavelet filtering.
#[derive(Clone, Debug, PartialEq)]
pub struct PbfConfig {
    pub denoise: Option<DenoiseSpec>,
    pub norm: NormalizationMode,
    pub k: f64,
    /// Normalize the raw counts before filtering instead of after.
    pub normalize_first: bool,
}

impl Default for PbfConfig {
    fn default() -> Self {
        Self {
            denoise: Some(DenoiseSpec::default()),
            norm: NormalizationMode::UnitSum,
            k: DEFAULT_K,
            normalize_first: false,
        }
    }
}

struct Prepared {
    per: Vec<f64>,
    ner: Vec<f64>,
    levels: Option<usize>,
    clamped: bool,
}

fn denoise_channels(seq: &EprSequence, denoise: Option<&DenoiseSpec>) -> Result<Prepared> {
    match denoise {
        None => Ok(Prepared {
            per: seq.per.clone(),
            ner: seq.ner.clone(),
            levels: None,
            clamped: false,
        }),
        Some(spec) => {
            let p = lowpass_reconstruct(&seq.per, spec)?;
            let n = lowpass_reconstruct(&seq.ner, spec)?;
            Ok(Prepared {
                clamped: p.clamped || n.clamped,
                levels: Some(p.levels),
                per: p.signal,
                ner: n.signal,
            })
        }
    }
}

impl PbfConfig {
    pub fn run(&self, seq: &EprSequence) -> Result<FocusResult> {
        check_channels(seq)?;
        let method = if self.denoise.is_some() {
            Method::Pbf
        } else {
            Method::PbfNofilter
        };
        let (per, ner, levels, clamped) = if self.normalize_first {
            let normed = normalize(seq, self.norm)?;
            let p = denoise_channels(&normed, self.denoise.as_ref())?;
            (p.per, p.ner, p.levels, p.clamped)
        } else {
            let p = denoise_channels(seq, self.denoise.as_ref())?;
            // Filtered channels can dip slightly below zero; built directly
            // to skip the raw-count nonnegativity check.
            let filtered = EprSequence {
                per: p.per,
                ner: p.ner,
                ..seq.clone()
            };
            let normed = normalize(&filtered, self.norm)?;
            (normed.per, normed.ner, p.levels, p.clamped)
        };

        let curve = mse_curve(&per, &ner, self.k)?;
        let (a_star, mse_min) = curve.argmin();
        let focus_bin = (a_star as f64 - 1.0) / 2.0;
        let diagnostics = Diagnostics {
            clamped_levels: clamped,
            wavelet_levels: levels,
            flat_curve: curve.is_flat(),
            mse_min: Some(mse_min),
            curve: Some(curve),
            ..Default::default()
        };
        let mut result = FocusResult::at_bin(method, seq, focus_bin, diagnostics);
        result.a_star = Some(a_star);
        Ok(result)
    }
}

fn check_channels(seq: &EprSequence) -> Result<()> {
    use crate::event::Polarity;
    for pol in [Polarity::Positive, Polarity::Negative] {
        if !seq.channel(pol).iter().any(|v| *v > 0.0) {
            return Err(Error::DegenerateChannel(pol));
        }
    }
    Ok(())
}

/// Full pipeline: denoise, normalize, symmetry scan, argmin.
pub fn pbf_focus(
    seq: &EprSequence,
    spec: &DenoiseSpec,
    norm: NormalizationMode,
    k: f64,
) -> Result<FocusResult> {
    PbfConfig {
        denoise: Some(spec.clone()),
        norm,
        k,
        normalize_first: false,
    }
    .run(seq)
}

/// [`pbf_focus`] without wavelet filtering.
pub fn ablate_no_filter(seq: &EprSequence, norm: NormalizationMode, k: f64) -> Result<FocusResult> {
    PbfConfig {
        denoise: None,
        norm,
        k,
        normalize_first: false,
    }
    .run(seq)
}

/// Filtered event-rate maximum in place of the symmetry scan.
pub fn ablate_no_mse(seq: &EprSequence, spec: &DenoiseSpec) -> Result<FocusResult> {
    check_channels(seq)?;
    let p = denoise_channels(seq, Some(spec))?;
    let er: Vec<f64> = p.per.iter().zip(&p.ner).map(|(a, b)| a + b).collect();
    let (idx, max) = argmax_first(&er);
    let min = er.iter().copied().fold(f64::INFINITY, f64::min);
    let diagnostics = Diagnostics {
        clamped_levels: p.clamped,
        wavelet_levels: p.levels,
        flat_curve: max - min <= 1e-9 * max.abs(),
        global_argmax: Some(idx),
        ..Default::default()
    };
    Ok(FocusResult::at_bin(
        Method::PbfNomse,
        seq,
        idx as f64,
        diagnostics,
    ))
}

/// Index and value of the maximum; ties go to the smallest index.
pub(crate) fn argmax_first(values: &[f64]) -> (usize, f64) {
    let mut best = (0, values[0]);
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > best.1 {
            best = (i, v);
        }
    }
    best
}
