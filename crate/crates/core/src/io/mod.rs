//! Event file formats, stage calibration and JSON reports.

mod binary;
mod calibration;
mod report;
mod text;

pub use binary::{
    read_events_binary, read_events_binary_from, write_events_binary, write_events_binary_to,
    MAGIC, VERSION,
};
pub use calibration::{read_calibration, write_calibration, Calibration};
pub use report::{
    evaluate, read_report, read_reports_dir, render_table, write_report, EvalRow, EvalSummary,
    FocusReport,
};
pub use text::{
    read_events_text, read_events_text_from, write_events_text, write_events_text_to, TEXT_HEADER,
};

use std::path::Path;

use crate::error::Result;
use crate::event::EventStream;

/// Reads either format, choosing by the `EVAF` magic bytes.
pub fn read_events(path: impl AsRef<Path>) -> Result<EventStream> {
    let path = path.as_ref();
    let mut head = [0u8; 4];
    let is_binary = {
        use std::io::Read;
        let mut f = std::fs::File::open(path).map_err(|e| crate::Error::io(path, e))?;
        f.read(&mut head).map_err(|e| crate::Error::io(path, e))? == 4 && &head == MAGIC
    };
    if is_binary {
        read_events_binary(path)
    } else {
        read_events_text(path)
    }
}

/// Writes binary when the extension is `.evaf` or `.bin`, text otherwise.
pub fn write_events(path: impl AsRef<Path>, stream: &EventStream) -> Result<()> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("evaf") | Some("bin") => write_events_binary(path, stream),
        _ => write_events_text(path, stream),
    }
}
