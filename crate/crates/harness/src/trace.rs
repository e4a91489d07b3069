//! Run traces and their CSV / JSON files.

use std::io::{Read, Write};
use std::path::Path;

use grpadmm::{MetricsRow, RunStatus, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// Exact CSV header, in column order.
pub const CSV_COLUMNS: [&str; 9] = [
    "k",
    "tau",
    "sigma",
    "objective",
    "rel_gap",
    "fes_gap",
    "ergodic_objective",
    "psnr",
    "time_ms",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TraceStatus {
    Completed,
    AbortedNonfinite { k: usize, tau: f64 },
    /// The run returned an error (for example an inner solve failure).
    Failed { message: String },
}

impl TraceStatus {
    pub fn is_completed(&self) -> bool {
        matches!(self, TraceStatus::Completed)
    }

    pub fn label(&self) -> String {
        match self {
            TraceStatus::Completed => "completed".into(),
            TraceStatus::AbortedNonfinite { k, tau } => format!("aborted-nonfinite (k={k}, tau={tau:e})"),
            TraceStatus::Failed { message } => format!("failed: {message}"),
        }
    }
}

impl From<RunStatus> for TraceStatus {
    fn from(s: RunStatus) -> Self {
        match s {
            RunStatus::Completed => TraceStatus::Completed,
            RunStatus::AbortedNonfinite { k, tau } => TraceStatus::AbortedNonfinite { k, tau },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub name: String,
    pub config: SolverConfig,
    pub rows: Vec<MetricsRow>,
    pub status: TraceStatus,
}

impl RunTrace {
    pub fn last(&self) -> Option<&MetricsRow> {
        self.rows.last()
    }

    /// Smallest finite objective over the recorded rows.
    pub fn best_objective(&self) -> Option<f64> {
        self.rows
            .iter()
            .map(|r| r.objective)
            .filter(|v| v.is_finite())
            .min_by(f64::total_cmp)
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[MetricsRow], out: W) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record([
            r.k.to_string(),
            r.tau.to_string(),
            r.sigma.to_string(),
            r.objective.to_string(),
            fmt_opt(r.rel_gap),
            r.fes_gap.to_string(),
            r.ergodic_objective.to_string(),
            fmt_opt(r.psnr),
            r.time_ms.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<R: Read>(input: R) -> Result<Vec<MetricsRow>, HarnessError> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let mut index = [0usize; 9];
    for (slot, col) in index.iter_mut().zip(CSV_COLUMNS) {
        *slot = header
            .iter()
            .position(|h| h == col)
            .ok_or_else(|| HarnessError::MissingColumn(col.to_string()))?;
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let field = |i: usize| rec.get(index[i]).unwrap_or("");
        let num = |i: usize| -> Result<f64, HarnessError> {
            field(i)
                .parse::<f64>()
                .map_err(|_| HarnessError::BadField(CSV_COLUMNS[i].into(), field(i).into()))
        };
        let opt = |i: usize| -> Result<Option<f64>, HarnessError> {
            if field(i).is_empty() {
                Ok(None)
            } else {
                num(i).map(Some)
            }
        };
        rows.push(MetricsRow {
            k: field(0)
                .parse()
                .map_err(|_| HarnessError::BadField("k".into(), field(0).into()))?,
            tau: num(1)?,
            sigma: num(2)?,
            objective: num(3)?,
            rel_gap: opt(4)?,
            fes_gap: num(5)?,
            ergodic_objective: num(6)?,
            psnr: opt(7)?,
            time_ms: num(8)?,
        });
    }
    Ok(rows)
}

pub fn save_csv(rows: &[MetricsRow], path: &Path) -> Result<(), HarnessError> {
    let file = std::fs::File::create(path)?;
    write_csv(rows, std::io::BufWriter::new(file))
}

pub fn load_csv(path: &Path) -> Result<Vec<MetricsRow>, HarnessError> {
    read_csv(std::io::BufReader::new(std::fs::File::open(path)?))
}

/// Final iterate dump, flat row-major with an optional 2-D shape header.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterateDump {
    pub shape: Vec<usize>,
    pub x: Vec<f64>,
}
