use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn evfocus(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evfocus"))
        .current_dir(dir)
        .env_remove("EVFOCUS_SEED")
        .args(args)
        .output()
        .expect("spawn evfocus")
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = evfocus(dir, args);
    assert!(
        out.status.success(),
        "evfocus {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_is_deterministic_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "simulate",
            "--pattern",
            "step",
            "--seed",
            "7",
            "--dark-rate-hz",
            "50",
            "--out",
            "a.evt",
        ],
    );
    ok(
        d,
        &[
            "simulate",
            "--pattern",
            "step",
            "--seed",
            "7",
            "--dark-rate-hz",
            "50",
            "--out",
            "b.evt",
        ],
    );
    assert_eq!(
        std::fs::read(d.join("a.evt")).unwrap(),
        std::fs::read(d.join("b.evt")).unwrap()
    );
    ok(
        d,
        &[
            "simulate",
            "--pattern",
            "step",
            "--seed",
            "8",
            "--dark-rate-hz",
            "50",
            "--out",
            "c.evt",
        ],
    );
    assert_ne!(
        std::fs::read(d.join("a.evt")).unwrap(),
        std::fs::read(d.join("c.evt")).unwrap()
    );
}

#[test]
fn sidecar_records_the_analytic_focus_time() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--out", "s.evt"]);
    let truth = read_json(&d.join("s.truth.json"));
    // The default sweep crosses zero defocus after 300 µm at 10 mm/s.
    assert_eq!(truth["ground_truth_time_us"].as_f64(), Some(30_000.0));
    let events = truth["events"].as_u64().unwrap();
    assert!(events > 0);
    assert_eq!(
        truth["positive"].as_u64().unwrap() + truth["negative"].as_u64().unwrap(),
        events
    );
}

#[test]
fn uniform_scene_warns_and_writes_no_events() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let out = ok(d, &["simulate", "--pattern", "uniform", "--out", "u.evt"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("no events"));
    assert_eq!(
        read_json(&d.join("u.truth.json"))["events"].as_u64(),
        Some(0)
    );
}

#[test]
fn missing_input_exits_two_and_names_the_path() {
    let dir = TempDir::new().unwrap();
    let out = evfocus(dir.path(), &["focus", "nowhere.evt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.evt"));
}

#[test]
fn bad_flag_values_exit_two() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--out", "s.evt"]);
    for args in [
        &["focus", "s.evt", "--k", "1.5"][..],
        &["focus", "s.evt", "--method", "autofocus"],
        &["focus", "s.evt", "--roi", "0,0,0,4"],
        &["simulate", "--out", "x.evt", "--pattern", "plaid"],
    ] {
        let out = evfocus(d, args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn degenerate_recording_exits_one() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("pos.txt"),
        "# sensor 4 4\nt_us,x,y,p\n10,0,0,1\n2000,1,0,1\n",
    )
    .unwrap();
    let out = evfocus(d, &["focus", "pos.txt"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn pbf_lands_on_the_truth_and_egs_reports() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(
        d,
        &["simulate", "--out", "s.evt", "--calibration", "cal.csv"],
    );
    let pbf = json(&ok(d, &["focus", "s.evt", "--truth", "s.truth.json"]));
    assert_eq!(pbf["method"], "pbf");
    assert_eq!(pbf["name"], "s");
    assert!(pbf["error_um"].as_f64().unwrap().abs() <= 10.0, "{pbf}");
    assert!(pbf["diagnostics"].get("curve").is_none());

    let via_cal = json(&ok(
        d,
        &[
            "focus",
            "s.evt",
            "--truth",
            "s.truth.json",
            "--calibration",
            "cal.csv",
        ],
    ));
    let diff = via_cal["position_um"].as_f64().unwrap() - pbf["position_um"].as_f64().unwrap();
    assert!(diff.abs() < 1e-6);

    let egs = json(&ok(
        d,
        &[
            "focus",
            "s.evt",
            "--truth",
            "s.truth.json",
            "--method",
            "egs",
        ],
    ));
    assert_eq!(egs["method"], "egs");
    assert!(egs["focus_time_us"].is_number());
    assert!(egs["error_um"].is_number());
}

#[test]
fn dump_curves_writes_the_scored_curve() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--out", "s.evt"]);
    ok(
        d,
        &[
            "focus",
            "s.evt",
            "--truth",
            "s.truth.json",
            "--dump-curves",
            "pbf.csv",
        ],
    );
    let csv = std::fs::read_to_string(d.join("pbf.csv")).unwrap();
    assert!(csv.starts_with("a,focus_bin,mse\n"));
    assert!(csv.lines().count() > 2);
    ok(
        d,
        &[
            "focus",
            "s.evt",
            "--truth",
            "s.truth.json",
            "--method",
            "egs",
            "--dump-curves",
            "er.csv",
        ],
    );
    let csv = std::fs::read_to_string(d.join("er.csv")).unwrap();
    assert!(csv.starts_with("bin,t_start_us,er\n"));
    // Default window: 60 bins of 1 ms.
    assert_eq!(csv.lines().count(), 61);
}

#[test]
fn bin_rows_sum_to_the_event_count() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--out", "s.evt"]);
    let truth = read_json(&d.join("s.truth.json"));
    let out = ok(d, &["bin", "s.evt", "--truth", "s.truth.json"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("bin,t_start_us,per,ner"));
    let (mut p, mut n) = (0, 0);
    for line in lines {
        let cols: Vec<u64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        p += cols[2];
        n += cols[3];
    }
    // The window is half-open, so events stamped at the sweep end are not binned.
    let end = truth["window_us"][1].as_u64().unwrap();
    let (mut want_p, mut want_n) = (0, 0);
    for line in std::fs::read_to_string(d.join("s.evt"))
        .unwrap()
        .lines()
        .skip(2)
    {
        let cols: Vec<i64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        if (cols[0] as u64) < end {
            if cols[3] > 0 {
                want_p += 1
            } else {
                want_n += 1
            }
        }
    }
    assert!(want_p > 0 && want_n > 0);
    assert_eq!((p, n), (want_p, want_n));
}

#[test]
fn bench_flags_few_repetitions() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    ok(d, &["simulate", "--out", "s.evt"]);
    let out = ok(
        d,
        &["bench", "s.evt", "--truth", "s.truth.json", "--reps", "2"],
    );
    assert!(String::from_utf8_lossy(&out.stderr).contains("low confidence"));
    let report = json(&out);
    assert_eq!(report["low_confidence"], true);
    assert_eq!(report["bins"], 60);
    let core = &report["core"];
    assert!(core["min_ms"].as_f64() <= core["median_ms"].as_f64());
    assert!(core["median_ms"].as_f64() <= core["max_ms"].as_f64());

    let out = ok(d, &["bench", "s.evt", "--truth", "s.truth.json"]);
    assert_eq!(json(&out)["low_confidence"], false);
}

fn write_report(dir: &Path, name: &str, method: &str, error_um: f64) {
    let report = serde_json::json!({
        "method": method,
        "name": name,
        "focus_time_us": 1000.0,
        "focus_bin": 1.0,
        "error_um": error_um,
        "runtime_ms": 1.0,
        "diagnostics": {
            "clamped_levels": false,
            "degenerate_channel": false,
            "flat_curve": false,
            "unimodality_violation": false
        }
    });
    std::fs::write(dir.join(format!("{name}.json")), report.to_string()).unwrap();
}

#[test]
fn eval_summarizes_errors() {
    let dir = TempDir::new().unwrap();
    let reports = dir.path().join("reports");
    std::fs::create_dir(&reports).unwrap();
    write_report(&reports, "a", "pbf", 3.0);
    write_report(&reports, "b", "pbf", -4.0);

    let summary = json(&ok(dir.path(), &["eval", "reports"]));
    let text = summary.to_string();
    let overall = &summary["overall"];
    assert_eq!(overall["count"], 2, "{text}");
    assert!(
        (overall["mae_um"].as_f64().unwrap() - 3.5).abs() < 1e-12,
        "{text}"
    );
    assert!(
        (overall["rmse_um"].as_f64().unwrap() - 12.5f64.sqrt()).abs() < 1e-12,
        "{text}"
    );

    let table = String::from_utf8(ok(dir.path(), &["eval", "reports", "--table"]).stdout).unwrap();
    assert!(table.contains("pbf"));
    assert!(table.lines().count() >= 2);
}

#[test]
fn eval_of_an_empty_directory_fails() {
    let dir = TempDir::new().unwrap();
    std::fs::create_dir(dir.path().join("empty")).unwrap();
    let out = evfocus(dir.path(), &["eval", "empty"]);
    assert!(!out.status.success());
}

#[test]
fn config_file_supplies_options_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    std::fs::write(
        d.join("sim.conf"),
        "# narrower sweep\nhalf_range_um = 200\nseed = 3\n",
    )
    .unwrap();
    ok(d, &["simulate", "--config", "sim.conf", "--out", "a.evt"]);
    let truth = read_json(&d.join("a.truth.json"));
    assert_eq!(truth["ground_truth_time_us"].as_f64(), Some(20_000.0));
    assert_eq!(truth["seed"], 3);

    ok(
        d,
        &[
            "simulate", "--config", "sim.conf", "--seed", "9", "--out", "b.evt",
        ],
    );
    assert_eq!(read_json(&d.join("b.truth.json"))["seed"], 9);

    std::fs::write(d.join("bad.conf"), "no_such_option = 1\n").unwrap();
    let out = evfocus(d, &["simulate", "--config", "bad.conf", "--out", "c.evt"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no-such-option"));
}

#[test]
fn seed_falls_back_to_the_environment() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let out = Command::new(env!("CARGO_BIN_EXE_evfocus"))
        .current_dir(d)
        .env("EVFOCUS_SEED", "41")
        .args(["simulate", "--out", "s.evt"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(read_json(&d.join("s.truth.json"))["seed"], 41);
}
