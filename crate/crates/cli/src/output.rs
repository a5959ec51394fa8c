//! Result files: receiver CSV, convergence JSON/CSV, run summary and spacing
//! report.

use crate::run::{ForwardResult, SpacingReport};
use crate::CliError;
use edgefem::postproc::ConvergenceRecord;
use serde::Serialize;
use std::fmt::Write as _;
use std::path::Path;

pub const RECEIVER_HEADER: &str = "x,y,z,re_ex,im_ex,re_ey,im_ey,re_ez,im_ez";

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    std::fs::write(path, contents).map_err(io)
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Receiver table with 15 significant digits per value.
pub fn receiver_csv(result: &ForwardResult) -> String {
    let mut s = String::from(RECEIVER_HEADER);
    s.push('\n');
    for (r, e) in result.receivers.iter().zip(&result.fields) {
        let p = r.position;
        let values = [p.x, p.y, p.z, e.x.re, e.x.im, e.y.re, e.y.im, e.z.re, e.z.im];
        let row: Vec<String> = values.iter().map(|v| format!("{v:.14e}")).collect();
        writeln!(s, "{}", row.join(",")).unwrap();
    }
    s
}

#[derive(Serialize)]
struct ForwardSummary<'a> {
    plan: &'a str,
    elements: usize,
    dof: usize,
    receivers: usize,
    iterations: usize,
    residual: f64,
    converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    assembly_time: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solve_time: Option<f64>,
}

/// Writes `receivers.csv` and `summary.json`. A non-converged solve still
/// writes both; the summary flags it.
pub fn write_forward(dir: &Path, result: &ForwardResult, timings: bool) -> Result<(), CliError> {
    write_file(&dir.join("receivers.csv"), &receiver_csv(result))?;
    let summary = ForwardSummary {
        plan: &result.plan,
        elements: result.num_tets,
        dof: result.dof,
        receivers: result.receivers.len(),
        iterations: result.report.iterations,
        residual: result.report.residual,
        converged: result.report.converged,
        assembly_time: timings.then_some(result.assembly_time),
        solve_time: timings.then_some(result.report.wall_time),
    };
    write_file(&dir.join("summary.json"), &to_json(&summary))
}

/// Flat table of all plans and levels.
pub fn convergence_csv(records: &[ConvergenceRecord]) -> String {
    let mut s = String::from("plan,divisions,h,dof,error,iterations,residual,converged\n");
    for r in records {
        for l in &r.levels {
            writeln!(
                s,
                "{},{},{:.14e},{},{:.14e},{},{:.14e},{}",
                r.plan, l.divisions, l.h, l.dof, l.error, l.iterations, l.residual, l.converged
            )
            .unwrap();
        }
    }
    s
}

/// Writes `convergence.json` and `convergence.csv`.
pub fn write_convergence(dir: &Path, records: &[ConvergenceRecord], timings: bool) -> Result<(), CliError> {
    let mut records = records.to_vec();
    if !timings {
        for l in records.iter_mut().flat_map(|r| r.levels.iter_mut()) {
            l.wall_time = None;
        }
    }
    write_file(&dir.join("convergence.json"), &to_json(&records))?;
    write_file(&dir.join("convergence.csv"), &convergence_csv(&records))
}

/// Writes `spacing.json`.
pub fn write_spacing(dir: &Path, report: &SpacingReport) -> Result<(), CliError> {
    write_file(&dir.join("spacing.json"), &to_json(report))
}
