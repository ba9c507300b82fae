//! Event polarity rate (EPR) sequences: per-bin positive and negative event
//! counts over an ROI.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{EventStream, Polarity, Roi};

/// Default bin width, 1 ms.
pub const DEFAULT_DT_US: u64 = 1000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EprSequence {
    pub t0: u64,
    pub dt: u64,
    pub per: Vec<f64>,
    pub ner: Vec<f64>,
    /// The last bin is shorter than `dt` (its count is not rescaled).
    pub partial_last_bin: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormalizationMode {
    None,
    #[default]
    UnitSum,
    UnitMax,
}

impl std::str::FromStr for NormalizationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "unit-sum" | "sum" => Ok(Self::UnitSum),
            "unit-max" | "max" => Ok(Self::UnitMax),
            _ => Err(Error::Parse(format!(
                "unknown normalization '{s}', expected none|unit-sum|unit-max"
            ))),
        }
    }
}

impl EprSequence {
    pub fn new(t0: u64, dt: u64, per: Vec<f64>, ner: Vec<f64>) -> Result<Self> {
        if dt == 0 {
            return Err(Error::precondition("bin width dt must be at least 1 us"));
        }
        if per.is_empty() || per.len() != ner.len() {
            return Err(Error::precondition(format!(
                "per/ner must be non-empty and equally long (got {} and {})",
                per.len(),
                ner.len()
            )));
        }
        if per.iter().chain(&ner).any(|v| !(*v >= 0.0)) {
            return Err(Error::precondition("EPR entries must be nonnegative"));
        }
        Ok(Self {
            t0,
            dt,
            per,
            ner,
            partial_last_bin: false,
        })
    }

    pub fn len(&self) -> usize {
        self.per.len()
    }

    pub fn is_empty(&self) -> bool {
        self.per.is_empty()
    }

    /// Start time of bin `i`.
    pub fn bin_start(&self, i: usize) -> u64 {
        self.t0 + i as u64 * self.dt
    }

    /// Time of a (possibly fractional) bin index using the bin-center convention.
    pub fn bin_center_time(&self, bin: f64) -> f64 {
        self.t0 as f64 + (bin + 0.5) * self.dt as f64
    }

    pub fn channel(&self, polarity: Polarity) -> &[f64] {
        match polarity {
            Polarity::Positive => &self.per,
            Polarity::Negative => &self.ner,
        }
    }

    /// Time-reverses the sequence and swaps the polarity channels, which is
    /// what reversing the sweep direction does physically.
    pub fn mirrored(&self) -> Self {
        Self {
            t0: self.t0,
            dt: self.dt,
            per: self.ner.iter().rev().copied().collect(),
            ner: self.per.iter().rev().copied().collect(),
            partial_last_bin: self.partial_last_bin,
        }
    }

    pub fn scale_channel(&self, polarity: Polarity, c: f64) -> Self {
        let mut out = self.clone();
        let ch = match polarity {
            Polarity::Positive => &mut out.per,
            Polarity::Negative => &mut out.ner,
        };
        ch.iter_mut().for_each(|v| *v *= c);
        out
    }
}

/// Counts in-ROI events per bin over `[t_start, t_end)`.
///
/// Bin `i` covers `[t_start + i*dt, t_start + (i+1)*dt)`; the number of bins is
/// `ceil((t_end - t_start) / dt)` and a short final bin is kept as is.
pub fn bin_events(
    stream: &EventStream,
    roi: &Roi,
    dt: u64,
    t_start: u64,
    t_end: u64,
) -> Result<EprSequence> {
    if t_end <= t_start {
        return Err(Error::precondition(format!(
            "empty time window [{t_start}, {t_end})"
        )));
    }
    if dt == 0 {
        return Err(Error::precondition("bin width dt must be at least 1 us"));
    }
    roi.check(&stream.sensor)?;

    let span = t_end - t_start;
    let n = span.div_ceil(dt) as usize;
    let mut per = vec![0.0; n];
    let mut ner = vec![0.0; n];

    // Streams are time-sorted, so skip straight to the window.
    let first = stream.events.partition_point(|e| e.t < t_start);
    for ev in stream.events[first..].iter().take_while(|e| e.t < t_end) {
        if !roi.contains(ev.x, ev.y) {
            continue;
        }
        let bin = ((ev.t - t_start) / dt) as usize;
        match ev.polarity {
            Polarity::Positive => per[bin] += 1.0,
            Polarity::Negative => ner[bin] += 1.0,
        }
    }

    Ok(EprSequence {
        t0: t_start,
        dt,
        per,
        ner,
        partial_last_bin: !span.is_multiple_of(dt),
    })
}

/// Bins over the stream's own extent `[first.t, last.t + 1)`.
pub fn bin_stream(stream: &EventStream, roi: &Roi, dt: u64) -> Result<EprSequence> {
    let (t0, t1) = stream
        .time_span()
        .ok_or_else(|| Error::precondition("cannot infer a time window from an empty stream"))?;
    bin_events(stream, roi, dt, t0, t1 + 1)
}

fn normalize_channel(
    values: &[f64],
    mode: NormalizationMode,
    polarity: Polarity,
) -> Result<Vec<f64>> {
    let scale = match mode {
        NormalizationMode::None => return Ok(values.to_vec()),
        NormalizationMode::UnitSum => values.iter().sum::<f64>(),
        NormalizationMode::UnitMax => values.iter().copied().fold(0.0, f64::max),
    };
    if !(scale > 0.0) {
        return Err(Error::DegenerateChannel(polarity));
    }
    Ok(values.iter().map(|v| v / scale).collect())
}

/// Rescales each polarity channel independently.
pub fn normalize(seq: &EprSequence, mode: NormalizationMode) -> Result<EprSequence> {
    Ok(EprSequence {
        per: normalize_channel(&seq.per, mode, Polarity::Positive)?,
        ner: normalize_channel(&seq.ner, mode, Polarity::Negative)?,
        ..seq.clone()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{Event, SensorGeometry};
    use proptest::prelude::*;

    fn sensor() -> SensorGeometry {
        SensorGeometry::new(16, 16).unwrap()
    }

    #[test]
    fn counting_example() {
        let s = EventStream::new(
            sensor(),
            vec![
                Event::new(500, 1, 1, Polarity::Positive),
                Event::new(1500, 1, 1, Polarity::Positive),
                Event::new(1500, 2, 1, Polarity::Negative),
            ],
        );
        let seq = bin_events(&s, &s.sensor.full_roi(), 1000, 0, 2000).unwrap();
        assert_eq!(seq.per, vec![1.0, 1.0]);
        assert_eq!(seq.ner, vec![0.0, 1.0]);
        assert!(!seq.partial_last_bin);
    }

    #[test]
    fn empty_stream_gives_zero_bins() {
        let s = EventStream::empty(sensor());
        let seq = bin_events(&s, &s.sensor.full_roi(), 1000, 0, 3000).unwrap();
        assert_eq!(seq.per, vec![0.0; 3]);
        assert_eq!(seq.ner, vec![0.0; 3]);
    }

    #[test]
    fn partial_final_bin_is_flagged_not_rescaled() {
        let s = EventStream::new(sensor(), vec![Event::new(2100, 0, 0, Polarity::Positive)]);
        let seq = bin_events(&s, &s.sensor.full_roi(), 1000, 0, 2500).unwrap();
        assert_eq!(seq.len(), 3);
        assert!(seq.partial_last_bin);
        assert_eq!(seq.per[2], 1.0);
    }

    #[test]
    fn window_edges_are_half_open() {
        let s = EventStream::new(
            sensor(),
            vec![
                Event::new(99, 0, 0, Polarity::Positive),
                Event::new(100, 0, 0, Polarity::Positive),
                Event::new(199, 0, 0, Polarity::Negative),
                Event::new(200, 0, 0, Polarity::Negative),
            ],
        );
        let seq = bin_events(&s, &s.sensor.full_roi(), 50, 100, 200).unwrap();
        assert_eq!(seq.per, vec![1.0, 0.0]);
        assert_eq!(seq.ner, vec![0.0, 1.0]);
    }

    #[test]
    fn empty_window_is_rejected() {
        let s = EventStream::empty(sensor());
        assert!(matches!(
            bin_events(&s, &s.sensor.full_roi(), 1000, 5, 5),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn invalid_roi_propagates() {
        let s = EventStream::empty(sensor());
        assert!(matches!(
            bin_events(&s, &Roi::new(10, 10, 10, 10), 1000, 0, 10),
            Err(Error::RoiOutsideSensor { .. })
        ));
    }

    #[test]
    fn unit_sum_example() {
        let seq = EprSequence::new(0, 1000, vec![2.0, 2.0], vec![1.0, 3.0]).unwrap();
        let out = normalize(&seq, NormalizationMode::UnitSum).unwrap();
        assert_eq!(out.per, vec![0.5, 0.5]);
        assert_eq!(out.ner, vec![0.25, 0.75]);
    }

    #[test]
    fn unit_max_example() {
        let seq = EprSequence::new(0, 1000, vec![2.0, 4.0], vec![1.0, 0.5]).unwrap();
        let out = normalize(&seq, NormalizationMode::UnitMax).unwrap();
        assert_eq!(out.per, vec![0.5, 1.0]);
        assert_eq!(out.ner, vec![1.0, 0.5]);
    }

    #[test]
    fn none_is_identity() {
        let seq = EprSequence::new(7, 10, vec![2.0, 0.0, 9.0], vec![1.0, 3.0, 0.0]).unwrap();
        assert_eq!(normalize(&seq, NormalizationMode::None).unwrap(), seq);
    }

    #[test]
    fn proportional_channels_normalize_equal() {
        let ner = vec![1.0, 4.0, 2.5, 0.0, 7.0];
        let per: Vec<f64> = ner.iter().map(|v| v * 4.0).collect();
        let out = normalize(
            &EprSequence::new(0, 1, per, ner).unwrap(),
            NormalizationMode::UnitSum,
        )
        .unwrap();
        assert_eq!(out.per, out.ner);
    }

    #[test]
    fn all_zero_channel_is_degenerate() {
        let seq = EprSequence::new(0, 1000, vec![0.0, 0.0], vec![1.0, 3.0]).unwrap();
        for mode in [NormalizationMode::UnitSum, NormalizationMode::UnitMax] {
            assert!(matches!(
                normalize(&seq, mode),
                Err(Error::DegenerateChannel(Polarity::Positive))
            ));
        }
    }

    fn arb_stream() -> impl Strategy<Value = EventStream> {
        prop::collection::vec((0u64..20_000, 0u16..16, 0u16..16, any::<bool>()), 0..400).prop_map(
            |raw| {
                let mut events: Vec<Event> = raw
                    .into_iter()
                    .map(|(t, x, y, p)| {
                        let pol = if p {
                            Polarity::Positive
                        } else {
                            Polarity::Negative
                        };
                        Event::new(t, x, y, pol)
                    })
                    .collect();
                events.sort_by_key(|e| e.t);
                EventStream::new(SensorGeometry::new(16, 16).unwrap(), events)
            },
        )
    }

    proptest! {
        #[test]
        fn conservation(s in arb_stream(), x0 in 0u32..8, y0 in 0u32..8, t0 in 0u64..5000, len in 1u64..15_000) {
            let roi = Roi::new(x0, y0, 8, 8);
            let seq = bin_events(&s, &roi, 700, t0, t0 + len).unwrap();
            let expected = s.events.iter()
                .filter(|e| e.t >= t0 && e.t < t0 + len && roi.contains(e.x, e.y))
                .count() as f64;
            let total: f64 = seq.per.iter().chain(&seq.ner).sum();
            prop_assert_eq!(total, expected);
        }

        #[test]
        fn bin_width_refinement(s in arb_stream(), pairs in 1u64..20) {
            let roi = s.sensor.full_roi();
            let fine = bin_events(&s, &roi, 500, 0, pairs * 1000).unwrap();
            let coarse = bin_events(&s, &roi, 1000, 0, pairs * 1000).unwrap();
            for i in 0..coarse.len() {
                prop_assert_eq!(coarse.per[i], fine.per[2 * i] + fine.per[2 * i + 1]);
                prop_assert_eq!(coarse.ner[i], fine.ner[2 * i] + fine.ner[2 * i + 1]);
            }
        }

        #[test]
        fn unit_sum_cancels_channel_scale(
            per in prop::collection::vec(0.0f64..50.0, 4..64),
            c in 0.01f64..100.0,
        ) {
            let mut per = per;
            per[0] += 1.0;
            let ner: Vec<f64> = per.iter().rev().map(|v| v + 0.5).collect();
            let seq = EprSequence::new(0, 1000, per, ner).unwrap();
            let a = normalize(&seq, NormalizationMode::UnitSum).unwrap();
            let b = normalize(&seq.scale_channel(Polarity::Positive, c), NormalizationMode::UnitSum).unwrap();
            for (x, y) in a.per.iter().zip(&b.per) {
                prop_assert!((x - y).abs() <= 1e-12 * x.abs().max(1e-300));
            }
            prop_assert_eq!(a.ner, b.ner);
        }
    }
}
