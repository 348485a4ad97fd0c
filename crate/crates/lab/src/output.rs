//! CSV, JSON and coordinate-format writers. Floats are written in shortest
//! round-trip scientific notation so reruns are byte-identical.

use std::collections::BTreeMap;
use std::path::Path;

use oscsq_core::experiments::{LyapunovLeg, StudyReport};
use oscsq_core::SparseOperator;
use serde::Serialize;

use crate::LabError;

pub fn num(v: f64) -> String {
    format!("{v:e}")
}

fn create(path: &Path) -> Result<csv::Writer<std::fs::File>, LabError> {
    let file = std::fs::File::create(path).map_err(|e| LabError::io(path, e))?;
    Ok(csv::Writer::from_writer(file))
}

/// `<dir>/<report.name>.csv` with columns `epsilon`, metrics, `verdict`.
pub fn write_report_csv(dir: &Path, report: &StudyReport) -> Result<(), LabError> {
    let mut w = create(&dir.join(format!("{}.csv", report.name)))?;
    let mut header = vec!["epsilon".to_string()];
    header.extend(report.columns.iter().cloned());
    header.push("verdict".into());
    w.write_record(&header)?;
    for row in &report.rows {
        let mut rec = vec![num(row.epsilon)];
        rec.extend(row.values.iter().map(|v| num(*v)));
        rec.push(row.verdict.clone());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| LabError::io(dir, e))?;
    Ok(())
}

/// Every trajectory of every leg: `epsilon, ic, t, V, min, max, h1`.
pub fn write_trajectories_csv(path: &Path, legs: &[LyapunovLeg]) -> Result<(), LabError> {
    let mut w = create(path)?;
    w.write_record(["epsilon", "ic", "t", "V", "min", "max", "h1"])?;
    for leg in legs {
        for (i, t) in leg.trajectories.iter().enumerate() {
            for n in 0..t.times.len() {
                w.write_record(&[
                    num(leg.epsilon),
                    i.to_string(),
                    num(t.times[n]),
                    num(t.lyapunov[n]),
                    num(t.min[n]),
                    num(t.max[n]),
                    num(t.h1[n]),
                ])?;
            }
        }
    }
    w.flush().map_err(|e| LabError::io(path, e))?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerdictSummary {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReportSummary {
    pub name: String,
    pub passed: bool,
    pub verdicts: Vec<VerdictSummary>,
    pub metadata: BTreeMap<String, String>,
}

impl ReportSummary {
    /// One line for the terminal: pass, or the names of the failed verdicts.
    pub fn line(&self) -> String {
        let failed: Vec<&str> = self.verdicts.iter().filter(|v| !v.passed).map(|v| v.name.as_str()).collect();
        if failed.is_empty() {
            format!("[PASS] {} ({} verdicts)", self.name, self.verdicts.len())
        } else {
            format!("[FAIL] {}: {}", self.name, failed.join("; "))
        }
    }
}

impl From<&StudyReport> for ReportSummary {
    fn from(r: &StudyReport) -> Self {
        ReportSummary {
            name: r.name.clone(),
            passed: r.passed(),
            verdicts: r
                .verdicts
                .iter()
                .map(|v| VerdictSummary { name: v.name.clone(), passed: v.passed, detail: v.detail.clone() })
                .collect(),
            metadata: r.metadata.iter().cloned().collect(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), LabError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| LabError::io(path, e))
}

/// Writes `row col value` lines, preceded by a `# n nnz` header.
pub fn write_coordinate(path: &Path, a: &SparseOperator) -> Result<(), LabError> {
    let mut text = format!("# {} {}\n", a.dim(), a.nnz());
    a.write_coordinate(&mut text).expect("writing to a String");
    std::fs::write(path, text).map_err(|e| LabError::io(path, e))
}
