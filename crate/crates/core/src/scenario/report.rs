use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::{Error, Result};

/// Fixed CSV column order. Changing it requires bumping the schema suffix
/// of the engine version.
pub const HEADER: &str = "engine_version,scenario_id,inequality_id,provenance,grid,n,k,alpha,beta,ell,a,b,c,\
tolerance,parameter,statistic,worst_residual,worst_index,worst_radius,masked_points,near_boundary,pass,note";

pub const PROFILE_HEADER: &str = "scenario_id,inequality_id,parameter,radius,value,ratio";

/// `worst_residual` of rows whose check could not run.
pub const ERROR_RESIDUAL: f64 = -1.0;

/// One flat output record.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub engine_version: String,
    pub scenario_id: String,
    pub inequality_id: String,
    pub provenance: String,
    pub grid: String,
    pub n: usize,
    pub k: u32,
    pub alpha: f64,
    pub beta: f64,
    pub ell: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub tolerance: f64,
    /// Swept or per-row parameter such as `ε`.
    pub parameter: Option<f64>,
    pub statistic: f64,
    pub worst_residual: f64,
    pub worst_index: usize,
    pub worst_radius: f64,
    pub masked_points: usize,
    pub near_boundary: bool,
    pub pass: bool,
    pub note: String,
}

/// One radius of a profile table.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileRecord {
    pub scenario_id: String,
    pub inequality_id: String,
    pub parameter: Option<f64>,
    pub radius: f64,
    pub value: f64,
    pub ratio: f64,
}

/// 17 significant digits.
pub fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn escape(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

impl ReportRow {
    pub fn to_csv(&self) -> String {
        [
            escape(&self.engine_version),
            escape(&self.scenario_id),
            escape(&self.inequality_id),
            escape(&self.provenance),
            escape(&self.grid),
            self.n.to_string(),
            self.k.to_string(),
            fmt_float(self.alpha),
            fmt_float(self.beta),
            fmt_opt(self.ell),
            fmt_float(self.a),
            fmt_float(self.b),
            fmt_float(self.c),
            fmt_float(self.tolerance),
            fmt_opt(self.parameter),
            fmt_float(self.statistic),
            fmt_float(self.worst_residual),
            self.worst_index.to_string(),
            fmt_float(self.worst_radius),
            self.masked_points.to_string(),
            self.near_boundary.to_string(),
            self.pass.to_string(),
            escape(&self.note),
        ]
        .join(",")
    }
}

impl ProfileRecord {
    pub fn to_csv(&self) -> String {
        [
            escape(&self.scenario_id),
            escape(&self.inequality_id),
            fmt_opt(self.parameter),
            fmt_float(self.radius),
            fmt_float(self.value),
            fmt_float(self.ratio),
        ]
        .join(",")
    }
}

/// Sorts by `(scenario id, inequality id)`, keeping input order on ties.
pub fn sort_rows(rows: &mut [ReportRow]) {
    rows.sort_by(|a, b| (&a.scenario_id, &a.inequality_id).cmp(&(&b.scenario_id, &b.inequality_id)));
}

/// CSV text with header; rows are emitted in sorted order.
pub fn report_csv(rows: &[ReportRow]) -> String {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut out = String::from(HEADER);
    out.push('\n');
    for r in &sorted {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

pub fn profile_csv(records: &[ProfileRecord]) -> String {
    let mut out = String::from(PROFILE_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.to_csv());
        out.push('\n');
    }
    out
}

/// Human-readable pass/fail table.
pub fn summary_text(rows: &[ReportRow]) -> String {
    let mut sorted = rows.to_vec();
    sort_rows(&mut sorted);
    let mut out = String::new();
    let width = sorted.iter().map(|r| r.inequality_id.len()).max().unwrap_or(10).max(10);
    let mut current = None;
    for r in &sorted {
        if current != Some(&r.scenario_id) {
            let _ = writeln!(out, "scenario {} ({}, {}, grid {})", r.scenario_id, r.engine_version, r.provenance, r.grid);
            let _ = writeln!(out, "  {:<width$}  {:>24}  {:>24}  result", "check", "statistic", "worst residual");
            current = Some(&r.scenario_id);
        }
        let _ = writeln!(
            out,
            "  {:<width$}  {:>24}  {:>24}  {}{}",
            r.inequality_id,
            fmt_float(r.statistic),
            fmt_float(r.worst_residual),
            if r.pass { "PASS" } else { "FAIL" },
            if r.note.is_empty() { String::new() } else { format!("  [{}]", r.note) },
        );
    }
    let passed = sorted.iter().filter(|r| r.pass).count();
    let _ = writeln!(
        out,
        "overall: {} ({passed} of {} checks passed)",
        if passed == sorted.len() { "PASS" } else { "FAIL" },
        sorted.len()
    );
    out
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path
        .parent()
        .ok_or_else(|| Error::Io(format!("{} has no parent directory", path.display())))?;
    fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::Io(format!("{} has no file name", path.display())))?
        .to_string_lossy();
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents).map_err(|e| Error::Io(format!("{}: {e}", tmp.display())))?;
    fs::rename(&tmp, path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(scenario: &str, id: &str) -> ReportRow {
        ReportRow {
            engine_version: "0+s1".into(),
            scenario_id: scenario.into(),
            inequality_id: id.into(),
            provenance: "analytic".into(),
            grid: "8x8[-1.000000;0.000000]".into(),
            n: 1,
            k: 1,
            alpha: 0.5,
            beta: 0.5,
            ell: None,
            a: 2.0,
            b: 2.0,
            c: 0.0,
            tolerance: 1e-6,
            parameter: None,
            statistic: 1.0,
            worst_residual: 0.0,
            worst_index: 0,
            worst_radius: 0.5,
            masked_points: 0,
            near_boundary: true,
            pass: true,
            note: "x, \"y\"".into(),
        }
    }

    #[test]
    fn empty_report_is_header_only() {
        assert_eq!(report_csv(&[]), format!("{HEADER}\n"));
    }

    #[test]
    fn rows_are_sorted_and_escaped() {
        let csv = report_csv(&[row("b", "x"), row("a", "z"), row("a", "y")]);
        let ids: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
        assert_eq!(ids, ["y", "z", "x"]);
        assert!(csv.contains("\"x, \"\"y\"\"\""));
        assert_eq!(fmt_float(0.1), "1.0000000000000001e-1");
    }
}
