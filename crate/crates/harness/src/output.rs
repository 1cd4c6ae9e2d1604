//! Report, trajectory and front files.
//!
//! Text and CSV floats use 17 significant digits. JSON numbers use the
//! shortest representation that parses back to the same value.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use mgd_core::descent::{IterateRecord, RunResult};
use mgd_core::direction::CriticalCase;
use mgd_core::metrics::{GridMask, ScanSpec};
use serde::Serialize;

use crate::config::OutputFormat;
use crate::error::{HarnessError, HarnessResult};
use crate::experiment::{front_points, ExperimentReport, Timings, VariantRuns};

pub const REPORT_JSON: &str = "report.json";
pub const REPORT_TEXT: &str = "report.txt";
pub const TIMINGS_JSON: &str = "timings.json";

/// `v` with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        v.to_string()
    }
}

fn case_name(c: CriticalCase) -> &'static str {
    match c {
        CriticalCase::NotCritical => "not-critical",
        CriticalCase::CriticalPerpendicular => "critical-perpendicular",
        CriticalCase::CriticalZeroOnly => "critical-zero-only",
        CriticalCase::CriticalNonNull => "critical-non-null",
    }
}

fn create_dir(dir: &Path) -> HarnessResult<()> {
    fs::create_dir_all(dir).map_err(HarnessError::io(dir))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> HarnessResult<()> {
    let file = fs::File::create(path).map_err(HarnessError::io(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(HarnessError::json(path))?;
    w.write_all(b"\n").map_err(HarnessError::io(path))?;
    w.flush().map_err(HarnessError::io(path))
}

fn write_text(path: &Path, text: &str) -> HarnessResult<()> {
    fs::write(path, text).map_err(HarnessError::io(path))
}

/// Writes `report.json`, `report.txt` and, if given, `timings.json`.
pub fn write_report(dir: &Path, report: &ExperimentReport, timings: Option<&Timings>) -> HarnessResult<Vec<PathBuf>> {
    create_dir(dir)?;
    let json = dir.join(REPORT_JSON);
    write_json(&json, report)?;
    let text = dir.join(REPORT_TEXT);
    write_text(&text, &render_report(report))?;
    let mut paths = vec![json, text];
    if let Some(t) = timings {
        let p = dir.join(TIMINGS_JSON);
        write_json(&p, t)?;
        paths.push(p);
    }
    Ok(paths)
}

pub fn read_report(path: &Path) -> HarnessResult<ExperimentReport> {
    let text = fs::read_to_string(path).map_err(HarnessError::io(path))?;
    serde_json::from_str(&text).map_err(HarnessError::json(path))
}

pub fn render_report(report: &ExperimentReport) -> String {
    let c = &report.config;
    let mut s = String::new();
    let kv: [(&str, String); 15] = [
        ("problem", c.problem.clone()),
        ("n", c.n.to_string()),
        ("m", c.m.to_string()),
        ("n_starts", c.n_starts.to_string()),
        ("seed", c.seed.to_string()),
        ("generator", c.generator.clone()),
        ("shared_starts", c.shared_starts.to_string()),
        ("c1", fmt_f64(c.c1)),
        ("alpha", fmt_f64(c.alpha)),
        ("eta0", fmt_f64(c.eta0)),
        ("theta", c.theta.to_string()),
        ("eta_hat", fmt_f64(c.eta_hat)),
        ("epsilon", fmt_f64(c.epsilon)),
        ("max_iters", c.max_iters.to_string()),
        ("strict_semantics", c.strict_semantics.to_string()),
    ];
    for (k, v) in kv {
        let _ = writeln!(s, "{k} = {v}");
    }
    let _ = writeln!(s);
    let _ = writeln!(
        s,
        "{:<16} {:>24} {:>12} {:>9} {:>8} {:>24} {:>24}  terminations",
        "variant", "pareto_ratio", "contributing", "completed", "failures", "mean_steps", "mean_fallback_steps"
    );
    for v in &report.variants {
        let terms: Vec<String> = v.terminations.iter().map(|(k, n)| format!("{k}={n}")).collect();
        let _ = writeln!(
            s,
            "{:<16} {:>24} {:>12} {:>9} {:>8} {:>24} {:>24}  {}",
            v.label,
            v.pareto_ratio.map_or_else(|| "n/a".to_string(), fmt_f64),
            v.contributing,
            v.completed,
            v.failures,
            fmt_f64(v.mean_steps),
            fmt_f64(v.mean_fallback_steps),
            terms.join(" ")
        );
    }
    s
}

#[derive(Serialize)]
struct TraceRow<'a> {
    k: usize,
    x: &'a [f64],
    f: &'a [f64],
    eta: Option<f64>,
    beta_star: Option<f64>,
    armijo_satisfied: Option<bool>,
    critical_case: Option<&'static str>,
}

impl<'a> From<&'a IterateRecord> for TraceRow<'a> {
    fn from(r: &'a IterateRecord) -> Self {
        TraceRow {
            k: r.k,
            x: &r.x,
            f: &r.f,
            eta: r.step.as_ref().map(|s| s.eta),
            beta_star: r.step.as_ref().map(|s| s.beta_star),
            armijo_satisfied: r.step.as_ref().map(|s| s.armijo_satisfied),
            critical_case: r.step.as_ref().map(|s| case_name(s.case)),
        }
    }
}

/// One trajectory file: columns `k, x1…, f1…, eta, beta_star,
/// armijo_satisfied, critical_case`. The last iterate of a run that used its
/// whole budget leaves the step columns empty.
pub fn write_trajectory(path: &Path, run: &RunResult, format: OutputFormat) -> HarnessResult<()> {
    match format {
        OutputFormat::Json => {
            let rows: Vec<TraceRow> = run.trace.iter().map(TraceRow::from).collect();
            write_json(path, &rows)
        }
        OutputFormat::Csv => {
            let (n, m) = run.trace.first().map_or((0, 0), |r| (r.x.len(), r.f.len()));
            let mut w = csv::Writer::from_path(path).map_err(HarnessError::csv(path))?;
            let mut header = vec!["k".to_string()];
            header.extend((1..=n).map(|i| format!("x{i}")));
            header.extend((1..=m).map(|i| format!("f{i}")));
            header.extend(["eta", "beta_star", "armijo_satisfied", "critical_case"].map(String::from));
            w.write_record(&header).map_err(HarnessError::csv(path))?;
            for rec in &run.trace {
                let mut row = vec![rec.k.to_string()];
                row.extend(rec.x.iter().chain(&rec.f).map(|v| fmt_f64(*v)));
                match &rec.step {
                    Some(s) => row.extend([
                        fmt_f64(s.eta),
                        fmt_f64(s.beta_star),
                        s.armijo_satisfied.to_string(),
                        case_name(s.case).to_string(),
                    ]),
                    None => row.extend(std::iter::repeat_n(String::new(), 4)),
                }
                w.write_record(&row).map_err(HarnessError::csv(path))?;
            }
            w.flush().map_err(HarnessError::io(path))
        }
    }
}

/// Writes the front file `fronts_<label>` and, if asked, one trajectory per
/// completed run under `traces/<label>/`.
pub fn write_variant_files(
    dir: &Path,
    vr: &VariantRuns,
    format: OutputFormat,
    trajectories: bool,
) -> HarnessResult<Vec<PathBuf>> {
    create_dir(dir)?;
    let label = vr.variant.label();
    let mut paths = Vec::new();
    if trajectories {
        let tdir = dir.join("traces").join(&label);
        create_dir(&tdir)?;
        for (j, run) in vr.runs.iter().enumerate() {
            if let Ok(run) = run {
                if run.trace.is_empty() {
                    continue;
                }
                let p = tdir.join(format!("run_{j:05}.{}", format.extension()));
                write_trajectory(&p, run, format)?;
                paths.push(p);
            }
        }
    }
    let front = front_points(vr);
    let p = dir.join(format!("fronts_{label}.{}", format.extension()));
    match format {
        OutputFormat::Json => write_json(&p, &front)?,
        OutputFormat::Csv => {
            let (n, m) = front.first().map_or((0, 0), |q| (q.x.len(), q.f.len()));
            let mut w = csv::Writer::from_path(&p).map_err(HarnessError::csv(&p))?;
            let mut header = vec!["run".to_string()];
            header.extend((1..=n).map(|i| format!("x{i}")));
            header.extend((1..=m).map(|i| format!("f{i}")));
            w.write_record(&header).map_err(HarnessError::csv(&p))?;
            for q in &front {
                let mut row = vec![q.run.to_string()];
                row.extend(q.x.iter().chain(&q.f).map(|v| fmt_f64(*v)));
                w.write_record(&row).map_err(HarnessError::csv(&p))?;
            }
            w.flush().map_err(HarnessError::io(&p))?;
        }
    }
    paths.push(p);
    Ok(paths)
}

/// Writes the report plus every variant's front and trajectory files.
/// With no runs, only the report files are written.
pub fn emit_traces(
    report: &ExperimentReport,
    runs: &[VariantRuns],
    dir: &Path,
    format: OutputFormat,
) -> HarnessResult<Vec<PathBuf>> {
    let mut paths = Vec::new();
    for vr in runs {
        paths.extend(write_variant_files(dir, vr, format, true)?);
    }
    paths.extend(write_report(dir, report, None)?);
    Ok(paths)
}

#[derive(Serialize)]
struct ScanFile<'a> {
    problem: &'a str,
    /// 1-based objective indices.
    pair: (usize, usize),
    tol: f64,
    resolution: usize,
    dim: usize,
    lower: &'a [f64],
    upper: &'a [f64],
    marked: usize,
    /// One string of `0`/`1` per grid row; coordinate 0 varies along it.
    rows: Vec<String>,
}

/// Writes a scan mask; CSV has one line of comma-separated `0`/`1` per grid
/// row.
pub fn write_scan(path: &Path, problem: &str, spec: &ScanSpec, mask: &GridMask, format: OutputFormat) -> HarnessResult<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(parent)?;
    }
    let bits = |row: &[bool]| -> Vec<&'static str> { row.iter().map(|b| if *b { "1" } else { "0" }).collect() };
    match format {
        OutputFormat::Json => {
            let file = ScanFile {
                problem,
                pair: (spec.pair.0 + 1, spec.pair.1 + 1),
                tol: spec.tol,
                resolution: mask.resolution,
                dim: mask.dim,
                lower: &spec.bounds.lower,
                upper: &spec.bounds.upper,
                marked: mask.count(),
                rows: (0..mask.num_rows()).map(|r| bits(mask.row(r)).concat()).collect(),
            };
            write_json(path, &file)
        }
        OutputFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(HarnessError::csv(path))?;
            for r in 0..mask.num_rows() {
                w.write_record(bits(mask.row(r))).map_err(HarnessError::csv(path))?;
            }
            w.flush().map_err(HarnessError::io(path))
        }
    }
}
