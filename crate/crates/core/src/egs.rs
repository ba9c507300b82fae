//! Event-rate baseline: the focus is taken to be the instant with the highest
//! (smoothed) total event rate, located by golden-section search.

use serde::{Deserialize, Serialize};

use crate::epr::EprSequence;
use crate::error::{Error, Result};
use crate::pbf::{argmax_first, Diagnostics, FocusResult, Method};

/// Default smoothing window in seconds.
pub const DEFAULT_WINDOW_S: f64 = 0.055;
pub const DEFAULT_TOL_BINS: usize = 1;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErSequence {
    pub t0: u64,
    pub dt: u64,
    pub er: Vec<f64>,
}

/// Elementwise `per + ner` of raw (unnormalized) counts.
pub fn er_sequence(seq: &EprSequence) -> ErSequence {
    ErSequence {
        t0: seq.t0,
        dt: seq.dt,
        er: seq.per.iter().zip(&seq.ner).map(|(p, n)| p + n).collect(),
    }
}

/// Centered moving average over `width` bins, evaluated on demand from
/// prefix sums. Windows are truncated at the sequence ends.
struct MovingAverage {
    prefix: Vec<f64>,
    width: usize,
    /// Values of evaluated indices; the search counts distinct evaluations.
    seen: std::collections::HashMap<usize, f64>,
}

impl MovingAverage {
    fn new(values: &[f64], width: usize) -> Self {
        let mut prefix = Vec::with_capacity(values.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for v in values {
            acc += v;
            prefix.push(acc);
        }
        Self {
            prefix,
            width,
            seen: std::collections::HashMap::new(),
        }
    }

    fn len(&self) -> usize {
        self.prefix.len() - 1
    }

    fn peek(&self, i: usize) -> f64 {
        let start = i as isize - (self.width / 2) as isize;
        let lo = start.max(0) as usize;
        let hi = ((start + self.width as isize) as usize).min(self.len());
        (self.prefix[hi] - self.prefix[lo]) / (hi - lo) as f64
    }

    fn eval(&mut self, i: usize) -> f64 {
        if let Some(v) = self.seen.get(&i) {
            return *v;
        }
        let v = self.peek(i);
        self.seen.insert(i, v);
        v
    }

    fn evaluations(&self) -> usize {
        self.seen.len()
    }
}

/// Below this bracket width the two probes can round to the same bin, so
/// the remaining bins are compared directly.
const SCAN_WIDTH: f64 = 4.5;

/// Golden-section maximization of the smoothed event rate.
///
/// `window_s` is converted to `round(window_s / dt)` bins (at least one). The
/// search assumes unimodality; a full argmax scan is run afterwards only to
/// flag when that assumption failed.
pub fn egs_focus(er: &ErSequence, window_s: f64, tol_bins: usize) -> Result<FocusResult> {
    let n = er.er.len();
    if n < 3 {
        return Err(Error::precondition(format!(
            "event-rate search needs at least 3 bins, got {n}"
        )));
    }
    if !(window_s > 0.0) {
        return Err(Error::precondition(format!(
            "smoothing window must be positive, got {window_s}"
        )));
    }
    if tol_bins == 0 {
        return Err(Error::precondition("tol_bins must be >= 1"));
    }
    let width = ((window_s * 1e6 / er.dt as f64).round() as usize).max(1);
    if width > n {
        return Err(Error::precondition(format!(
            "smoothing window of {width} bins is wider than the {n}-bin sequence"
        )));
    }

    let mut smooth = MovingAverage::new(&er.er, width);
    let scan: Vec<f64> = (0..n).map(|i| smooth.peek(i)).collect();
    let (global_argmax, max) = argmax_first(&scan);
    let min = scan.iter().copied().fold(f64::INFINITY, f64::min);

    let at = |bin: f64, diagnostics: Diagnostics| FocusResult {
        method: Method::Egs,
        a_star: None,
        focus_bin: bin,
        focus_time_us: er.t0 as f64 + (bin + 0.5) * er.dt as f64,
        position_um: None,
        diagnostics,
    };

    if max - min <= 1e-12 * max.abs() {
        let center = ((n - 1) as f64 / 2.0).round();
        return Ok(at(
            center,
            Diagnostics {
                flat_curve: true,
                unimodality_violation: true,
                global_argmax: Some(global_argmax),
                evaluations: Some(0),
                bracket: Some((0.0, (n - 1) as f64)),
                ..Default::default()
            },
        ));
    }

    let (mut lo, mut hi) = (0.0f64, (n - 1) as f64);
    let stop = (tol_bins as f64).max(SCAN_WIDTH);
    let mut c = hi - (hi - lo) * INV_PHI;
    let mut d = lo + (hi - lo) * INV_PHI;
    let mut fc = smooth.eval(c.round() as usize);
    let mut fd = smooth.eval(d.round() as usize);
    while hi - lo > stop {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - (hi - lo) * INV_PHI;
            fc = smooth.eval(c.round() as usize);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + (hi - lo) * INV_PHI;
            fd = smooth.eval(d.round() as usize);
        }
    }
    let center = if (tol_bins as f64) < SCAN_WIDTH {
        let (first, last) = (lo.floor() as usize, (hi.ceil() as usize).min(n - 1));
        let mut best = (first, smooth.eval(first));
        for i in first + 1..=last {
            let v = smooth.eval(i);
            if v > best.1 {
                best = (i, v);
            }
        }
        best.0 as f64
    } else {
        ((lo + hi) / 2.0).round()
    };
    let diagnostics = Diagnostics {
        bracket: Some((lo, hi)),
        evaluations: Some(smooth.evaluations()),
        global_argmax: Some(global_argmax),
        unimodality_violation: (center - global_argmax as f64).abs() > tol_bins as f64,
        ..Default::default()
    };
    Ok(at(center, diagnostics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seq(er: Vec<f64>) -> ErSequence {
        ErSequence {
            t0: 0,
            dt: 1000,
            er,
        }
    }

    fn triangle(n: usize, peak: usize) -> Vec<f64> {
        (0..n)
            .map(|i| 100.0 - (i as f64 - peak as f64).abs())
            .collect()
    }

    #[test]
    fn er_is_elementwise_sum() {
        let s = EprSequence::new(0, 1000, vec![1.0, 2.0], vec![3.0, 0.0]).unwrap();
        assert_eq!(er_sequence(&s).er, vec![4.0, 2.0]);
        let z = EprSequence::new(0, 1000, vec![0.0; 3], vec![0.0; 3]).unwrap();
        assert_eq!(er_sequence(&z).er, vec![0.0; 3]);
    }

    #[test]
    fn unimodal_triangle() {
        let r = egs_focus(&seq(triangle(120, 50)), 0.005, 1).unwrap();
        assert!((r.focus_bin - 50.0).abs() <= 1.0, "{}", r.focus_bin);
        assert!(!r.diagnostics.unimodality_violation);
    }

    #[test]
    fn bimodal_follows_taller_spurious_peak() {
        // Symmetric true bump at 100, taller burst at 240. This is the
        // expected failure of the baseline: the search commits to the burst.
        let n = 400;
        let er: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64;
                50.0 * (-(x - 100.0).powi(2) / 800.0).exp()
                    + 400.0 * (-(x - 240.0).powi(2) / 800.0).exp()
            })
            .collect();
        let r = egs_focus(&seq(er), 0.011, 1).unwrap();
        assert!((r.focus_bin - 240.0).abs() <= 1.0, "{}", r.focus_bin);
        assert!((r.focus_bin - 100.0).abs() > 100.0);
        assert_eq!(r.diagnostics.global_argmax, Some(240));
        assert!(!r.diagnostics.unimodality_violation);
    }

    #[test]
    fn flat_returns_center_with_flag() {
        let r = egs_focus(&seq(vec![2.0; 101]), 0.01, 1).unwrap();
        assert_eq!(r.focus_bin, 50.0);
        assert!(r.diagnostics.unimodality_violation);
        assert!(r.diagnostics.flat_curve);
    }

    #[test]
    fn preconditions() {
        assert!(egs_focus(&seq(vec![1.0, 2.0]), 0.001, 1).is_err());
        assert!(egs_focus(&seq(vec![1.0; 10]), 0.0, 1).is_err());
        assert!(egs_focus(&seq(vec![1.0; 10]), 0.001, 0).is_err());
        assert!(egs_focus(&seq(vec![1.0; 10]), 0.055, 1).is_err());
    }

    #[test]
    fn unimodality_violation_flagged_when_search_misses() {
        // Tall peak near the left edge, golden section walks right on a
        // broad secondary hill.
        let n = 1000;
        let er: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64;
                let spike = if (20..23).contains(&i) { 1000.0 } else { 0.0 };
                spike + 10.0 * (-(x - 700.0).powi(2) / 20000.0).exp()
            })
            .collect();
        let r = egs_focus(&seq(er), 0.001, 1).unwrap();
        assert!(r.diagnostics.unimodality_violation);
        assert_eq!(r.diagnostics.global_argmax, Some(22));
    }

    /// Direct O(n w) centered moving average with truncated windows.
    fn smooth_brute(v: &[f64], w: usize) -> Vec<f64> {
        (0..v.len())
            .map(|i| {
                let lo = i.saturating_sub(w / 2);
                let hi = (i + w - w / 2).min(v.len());
                v[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            })
            .collect()
    }

    proptest! {
        #[test]
        fn agrees_with_argmax_on_unimodal(n in 20usize..5000, frac in 0.05f64..0.95, w in 1u64..30) {
            let peak = ((n - 1) as f64 * frac) as usize;
            let raw = triangle(n, peak);
            let window = (w.min(n as u64) as f64) * 1e-3;
            let smoothed = smooth_brute(&raw, w.min(n as u64) as usize);
            let best = smoothed.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let r = egs_focus(&seq(raw), window, 1).unwrap();
            let got = smoothed[r.focus_bin as usize];
            prop_assert!(best - got <= 1e-9 * best.abs(), "bin {} scores {} < {}", r.focus_bin, got, best);
            let evals = r.diagnostics.evaluations.unwrap() as f64;
            let bound = (n as f64).ln() / (1.0 / INV_PHI).ln() + 3.0;
            prop_assert!(evals <= bound, "{} evaluations for n = {}", evals, n);
        }

        #[test]
        fn scale_invariant(n in 20usize..2000, frac in 0.05f64..0.95, c in 0.01f64..100.0) {
            let peak = ((n - 1) as f64 * frac) as usize;
            let base = triangle(n, peak);
            let scaled: Vec<f64> = base.iter().map(|v| v * c).collect();
            let a = egs_focus(&seq(base), 0.003, 1).unwrap();
            let b = egs_focus(&seq(scaled), 0.003, 1).unwrap();
            prop_assert_eq!(a.focus_bin, b.focus_bin);
        }
    }
}
