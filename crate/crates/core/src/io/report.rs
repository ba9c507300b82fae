use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pbf::{Diagnostics, FocusResult};

/// One focus run, as written to JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FocusReport {
    pub method: String,
    /// Run or fixture identifier used to group rows in tables.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub focus_time_us: f64,
    pub focus_bin: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a_star: Option<usize>,
    #[serde(default)]
    pub position_um: Option<f64>,
    /// Signed focus error; requires ground truth.
    #[serde(default)]
    pub error_um: Option<f64>,
    pub runtime_ms: f64,
    #[serde(default)]
    pub diagnostics: Diagnostics,
}

impl FocusReport {
    pub fn from_result(result: &FocusResult, runtime_ms: f64) -> Result<Self> {
        if !(runtime_ms >= 0.0) {
            return Err(Error::precondition(format!(
                "runtime must be >= 0, got {runtime_ms}"
            )));
        }
        Ok(Self {
            method: result.method.to_string(),
            name: None,
            focus_time_us: result.focus_time_us,
            focus_bin: result.focus_bin,
            a_star: result.a_star,
            position_um: result.position_um,
            error_um: None,
            runtime_ms,
            diagnostics: result.diagnostics.clone(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: Self = serde_json::from_str(text)?;
        if !(r.runtime_ms >= 0.0) {
            return Err(Error::Parse(format!(
                "report runtime_ms must be >= 0, got {}",
                r.runtime_ms
            )));
        }
        Ok(r)
    }
}

pub fn write_report(path: impl AsRef<Path>, report: &FocusReport) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, report.to_json()? + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_report(path: impl AsRef<Path>) -> Result<FocusReport> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    FocusReport::from_json(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

/// Every `*.json` report in `dir`, sorted by file name. Reports without a
/// name take the file stem.
pub fn read_reports_dir(dir: impl AsRef<Path>) -> Result<Vec<FocusReport>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::precondition(format!(
            "no *.json reports in {}",
            dir.display()
        )));
    }
    paths
        .iter()
        .map(|p| {
            let mut r = read_report(p)?;
            if r.name.is_none() {
                r.name = p.file_stem().map(|s| s.to_string_lossy().into_owned());
            }
            Ok(r)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub method: String,
    pub count: usize,
    pub mae_um: f64,
    pub rmse_um: f64,
    pub mean_runtime_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub per_method: Vec<EvalRow>,
    pub overall: EvalRow,
}

fn row(method: &str, reports: &[&FocusReport]) -> EvalRow {
    let n = reports.len() as f64;
    let errs = reports
        .iter()
        .map(|r| r.error_um.expect("checked by evaluate"));
    EvalRow {
        method: method.to_string(),
        count: reports.len(),
        mae_um: errs.clone().map(f64::abs).sum::<f64>() / n,
        rmse_um: (errs.map(|e| e * e).sum::<f64>() / n).sqrt(),
        mean_runtime_ms: reports.iter().map(|r| r.runtime_ms).sum::<f64>() / n,
    }
}

/// MAE and RMSE of `error_um` per method and over all reports.
pub fn evaluate(reports: &[FocusReport]) -> Result<EvalSummary> {
    if reports.is_empty() {
        return Err(Error::precondition("no reports to evaluate"));
    }
    if let Some(r) = reports.iter().find(|r| r.error_um.is_none()) {
        return Err(Error::precondition(format!(
            "report '{}' ({}) has no error_um; focus it with ground truth",
            r.name.as_deref().unwrap_or("?"),
            r.method
        )));
    }
    let mut groups: BTreeMap<&str, Vec<&FocusReport>> = BTreeMap::new();
    for r in reports {
        groups.entry(r.method.as_str()).or_default().push(r);
    }
    let per_method = groups.iter().map(|(m, rs)| row(m, rs)).collect();
    let all: Vec<&FocusReport> = reports.iter().collect();
    Ok(EvalSummary {
        per_method,
        overall: row("all", &all),
    })
}

/// Aligned text table: one row per run name with each method's signed error,
/// then MAE, RMSE and mean runtime rows.
pub fn render_table(reports: &[FocusReport]) -> Result<String> {
    let summary = evaluate(reports)?;
    let methods: Vec<&str> = summary
        .per_method
        .iter()
        .map(|r| r.method.as_str())
        .collect();
    let mut names: Vec<&str> = Vec::new();
    let mut cells: BTreeMap<(&str, &str), f64> = BTreeMap::new();
    for r in reports {
        let name = r.name.as_deref().unwrap_or("-");
        if !names.contains(&name) {
            names.push(name);
        }
        cells.insert((name, r.method.as_str()), r.error_um.unwrap_or(f64::NAN));
    }

    let mut rows: Vec<Vec<String>> = Vec::new();
    let mut header = vec!["run".to_string()];
    header.extend(methods.iter().map(|m| format!("{m} error/um")));
    rows.push(header);
    for name in &names {
        let mut line = vec![name.to_string()];
        for m in &methods {
            line.push(
                cells
                    .get(&(*name, *m))
                    .map_or("-".into(), |e| format!("{e:.2}")),
            );
        }
        rows.push(line);
    }
    for (label, f) in [
        ("MAE", (|r: &EvalRow| r.mae_um) as fn(&EvalRow) -> f64),
        ("RMSE", |r: &EvalRow| r.rmse_um),
        ("time/ms", |r: &EvalRow| r.mean_runtime_ms),
    ] {
        let mut line = vec![label.to_string()];
        line.extend(summary.per_method.iter().map(|r| format!("{:.3}", f(r))));
        rows.push(line);
    }

    let widths: Vec<usize> = (0..rows[0].len())
        .map(|c| rows.iter().map(|r| r[c].len()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for (i, r) in rows.iter().enumerate() {
        let cols: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, s)| {
                if c == 0 {
                    format!("{s:<w$}", w = widths[c])
                } else {
                    format!("{s:>w$}", w = widths[c])
                }
            })
            .collect();
        out.push_str(cols.join("  ").trim_end());
        out.push('\n');
        if i == 0 || i == names.len() {
            let total = widths.iter().sum::<usize>() + 2 * (widths.len() - 1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rep(name: &str, method: &str, err: f64) -> FocusReport {
        FocusReport {
            method: method.into(),
            name: Some(name.into()),
            focus_time_us: 1234.5,
            focus_bin: 1.0,
            a_star: Some(3),
            position_um: Some(err),
            error_um: Some(err),
            runtime_ms: 2.0,
            diagnostics: Diagnostics::default(),
        }
    }

    #[test]
    fn mae_rmse_arithmetic() {
        let s = evaluate(&[rep("a", "pbf", 3.0), rep("b", "pbf", -4.0)]).unwrap();
        assert!((s.overall.mae_um - 3.5).abs() < 1e-12);
        assert!((s.overall.rmse_um - 3.5355).abs() < 1e-3);
        let one = evaluate(&[rep("a", "egs", -7.25)]).unwrap();
        assert_eq!(one.overall.mae_um, 7.25);
        assert_eq!(one.overall.rmse_um, 7.25);
    }

    #[test]
    fn grouped_per_method() {
        let s = evaluate(&[
            rep("a", "pbf", 1.0),
            rep("a", "egs", 10.0),
            rep("b", "egs", -20.0),
        ])
        .unwrap();
        assert_eq!(s.per_method.len(), 2);
        assert_eq!(s.per_method[0].method, "egs");
        assert_eq!(s.per_method[0].mae_um, 15.0);
        assert_eq!(s.overall.count, 3);
    }

    #[test]
    fn missing_error_and_empty() {
        let mut r = rep("a", "pbf", 1.0);
        r.error_um = None;
        assert!(evaluate(&[r]).is_err());
        assert!(evaluate(&[]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut r = rep("x", "pbf", 0.1 + 0.2);
        r.diagnostics.mse_min = Some(1.0 / 3.0);
        r.diagnostics.wavelet_levels = Some(6);
        let back = FocusReport::from_json(&r.to_json().unwrap()).unwrap();
        assert_eq!(back, r);
        assert!(FocusReport::from_json("{").is_err());
    }

    #[test]
    fn table_shape() {
        let reports: Vec<FocusReport> = (0..16)
            .flat_map(|i| {
                [
                    rep(&format!("f{i:02}"), "pbf", i as f64),
                    rep(&format!("f{i:02}"), "egs", -(i as f64)),
                ]
            })
            .collect();
        let t = render_table(&reports).unwrap();
        let lines: Vec<&str> = t.lines().filter(|l| !l.starts_with('-')).collect();
        assert_eq!(lines.len(), 1 + 16 + 3);
        assert!(lines[17].starts_with("MAE"));
        assert!(lines[19].starts_with("time/ms"));
        let widths: Vec<usize> = t.lines().map(str::len).collect();
        assert!(widths.iter().all(|w| *w <= widths[1]));
    }

    #[test]
    fn reads_directory() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = rep("ignored", "pbf", 2.0);
        r.name = None;
        write_report(dir.path().join("run7.json"), &r).unwrap();
        std::fs::write(dir.path().join("notes.txt"), "x").unwrap();
        let rs = read_reports_dir(dir.path()).unwrap();
        assert_eq!(rs.len(), 1);
        assert_eq!(rs[0].name.as_deref(), Some("run7"));
        let empty = tempfile::tempdir().unwrap();
        assert!(read_reports_dir(empty.path()).is_err());
    }
}
