//! Ground-truth sidecar written next to simulated event files.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use evfocus::sim::{EventGenConfig, OpticsConfig, SweepConfig};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SceneEcho {
    /// Pattern name, or `pgm` for an image file.
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub image: Option<PathBuf>,
    pub width: usize,
    pub height: usize,
    pub dark: f64,
    pub bright: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Truth {
    /// `null` when the sweep never crosses focus.
    pub ground_truth_time_us: Option<f64>,
    pub events: usize,
    pub positive: usize,
    pub negative: usize,
    pub seed: u64,
    pub scene: SceneEcho,
    pub optics: OpticsConfig,
    pub sweep: SweepConfig,
    pub event_gen: EventGenConfig,
    /// Binning window covering the whole sweep, `[t0, t1)` in µs.
    pub window_us: (u64, u64),
}

impl Truth {
    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text)
            .with_context(|| format!("parsing ground truth {}", path.display()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}

/// `run.evaf` -> `run.truth.json`.
pub fn default_path(events: &Path) -> PathBuf {
    events.with_extension("truth.json")
}

/// `[t_start, t_start + duration)` rounded to whole microseconds.
pub fn sweep_window(sweep: &SweepConfig) -> (u64, u64) {
    let t0 = sweep.t_start_us;
    (t0, t0 + sweep.duration_us().round() as u64)
}
