//! Autofocus for event cameras from the symmetry of the positive and
//! negative event-rate sequences recorded during a focus sweep.
//!
//! The pipeline is: [`event`] streams are binned into per-polarity rate
//! sequences ([`epr`]), low-pass filtered ([`wavelet`]), and the centre of
//! symmetry is found by a mirrored MSE scan ([`pbf`]). [`egs`] implements
//! the event-rate peak baseline, [`sim`] a focus-sweep simulator and [`io`]
//! the file formats and reports.

// `!(x > 0.0)` also rejects NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod egs;
pub mod epr;
pub mod error;
pub mod event;
pub mod io;
pub mod pbf;
pub mod sim;
pub mod wavelet;

pub use egs::{egs_focus, er_sequence, ErSequence};
pub use epr::{bin_events, bin_stream, normalize, EprSequence, NormalizationMode};
pub use error::{Error, Result};
pub use event::{Event, EventStream, Polarity, Roi, SensorGeometry};
pub use pbf::{mse_curve, pbf_focus, FocusResult, Method, MseCurve, PbfConfig};
pub use wavelet::{DenoiseSpec, WaveletFilterPair};
