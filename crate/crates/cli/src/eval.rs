use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use evfocus::io::{evaluate, read_reports_dir, render_table};

use crate::pipeline::write_output;

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Directory of focus reports (*.json)
    pub dir: PathBuf,
    /// Print an aligned text table instead of JSON
    #[arg(long)]
    pub table: bool,
}

pub fn run(a: &EvalArgs) -> Result<()> {
    let reports = read_reports_dir(&a.dir)?;
    let summary = evaluate(&reports)?;
    let text = if a.table {
        render_table(&reports)?
    } else {
        serde_json::to_string_pretty(&summary)? + "\n"
    };
    write_output(None, &text)
}
