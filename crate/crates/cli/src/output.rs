//! Serialized forms: matrices as nested `[re, im]` arrays, floats in CSV as
//! shortest round-trip decimal text.

use std::io::Write;
use std::path::Path;

use qsde_core::convergence::{ConvergenceReport, Verdict};
use qsde_core::elimination::EliminationResult;
use qsde_core::model::ValidationReport;
use qsde_core::operator::{CMatrix, C64};
use serde::Serialize;

use crate::error::CliResult;

pub type MatrixDoc = Vec<Vec<[f64; 2]>>;

pub fn matrix_doc(m: &CMatrix) -> MatrixDoc {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| [m[(r, c)].re, m[(r, c)].im]).collect()).collect()
}

#[derive(Serialize)]
pub struct LimitDocument {
    pub fixture: String,
    pub slow_dims: Vec<usize>,
    pub channels: usize,
    #[serde(rename = "K")]
    pub k: MatrixDoc,
    #[serde(rename = "L")]
    pub l: Vec<MatrixDoc>,
    #[serde(rename = "M")]
    pub m: Vec<MatrixDoc>,
    #[serde(rename = "N")]
    pub n: Vec<Vec<MatrixDoc>>,
    pub compression: MatrixDoc,
}

impl LimitDocument {
    pub fn new(fixture: &str, res: &EliminationResult) -> Self {
        let lim = &res.limit;
        Self {
            fixture: fixture.to_string(),
            slow_dims: lim.space().factor_dims().to_vec(),
            channels: lim.channels(),
            k: matrix_doc(lim.k_op.matrix()),
            l: lim.l_ops.iter().map(|x| matrix_doc(x.matrix())).collect(),
            m: lim.m_ops.iter().map(|x| matrix_doc(x.matrix())).collect(),
            n: lim.n_ops.iter().map(|row| row.iter().map(|x| matrix_doc(x.matrix())).collect()).collect(),
            compression: matrix_doc(&res.compression),
        }
    }
}

/// `re+imi` with both parts in round-trip form.
pub fn complex_text(z: C64) -> String {
    let sign = if z.im.is_sign_negative() { "-" } else { "+" };
    format!("{:?}{sign}{:?}i", z.re, z.im.abs())
}

pub fn amplitudes_text(zs: &[C64]) -> String {
    zs.iter().map(|z| complex_text(*z)).collect::<Vec<_>>().join(";")
}

pub fn float_text(x: f64) -> String {
    format!("{x:?}")
}

pub const CSV_HEADER: [&str; 8] = ["fixture", "kind", "k", "t_max", "grid_points", "alpha", "beta", "value"];

pub fn write_report_csv(report: &ConvergenceReport, out: impl Write) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| crate::error::CliError::usage(e.to_string());
    w.write_record(CSV_HEADER).map_err(io)?;
    let t_max = report.t_max.map(float_text).unwrap_or_default();
    let grid = report.grid_points.map(|g| g.to_string()).unwrap_or_default();
    let alpha = amplitudes_text(&report.alpha);
    let beta = amplitudes_text(&report.beta);
    for (k, v) in report.schedule.iter().zip(&report.values) {
        w.write_record([
            report.fixture.as_str(),
            report.kind.as_str(),
            &float_text(*k),
            &t_max,
            &grid,
            &alpha,
            &beta,
            &float_text(*v),
        ])
        .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn verdict_text(v: Verdict) -> &'static str {
    match v {
        Verdict::Converging => "converging",
        Verdict::NotConverging => "not-converging",
        Verdict::CutoffSuspect => "cutoff-suspect",
        Verdict::GridSuspect => "grid-suspect",
    }
}

pub fn summary_line(report: &ConvergenceReport) -> String {
    let rate = report.fitted_rate.map(|r| format!("{r:.6}")).unwrap_or_else(|| "n/a".to_string());
    format!(
        "{} {}: fitted_rate={rate} decay_ok={} verdict={}",
        report.fixture,
        report.kind.as_str(),
        report.decay_ok,
        verdict_text(report.verdict)
    )
}

pub fn validation_text(fixture: &str, report: &ValidationReport) -> String {
    let mut s = format!("{fixture}: {}\n", if report.overall { "all checks pass" } else { "validation failed" });
    for c in &report.checks {
        s.push_str(&format!(
            "  {:<4} {:<18} violation {:.3e}  threshold {:.3e}",
            if c.passed { "ok" } else { "FAIL" },
            c.name,
            c.max_violation,
            c.tolerance
        ));
        if let Some(d) = &c.detail {
            s.push_str(&format!("  ({d})"));
        }
        s.push('\n');
    }
    s
}

pub fn write_json(value: &impl Serialize, path: Option<&Path>) -> CliResult<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| crate::error::CliError::usage(e.to_string()))?;
    text.push('\n');
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}
