//! Multi-algorithm comparison on one problem with a pooled optimum.

use std::collections::BTreeMap;
use std::path::Path;

use grpadmm::{run, RunOptions, RunReport, SolverConfig, SplitProblem};
use serde::{Deserialize, Serialize};

use crate::trace::{save_csv, IterateDump, RunTrace, TraceStatus};
use crate::HarnessError;

/// A labelled solver configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedConfig {
    pub name: String,
    pub config: SolverConfig,
}

impl NamedConfig {
    pub fn new(name: impl Into<String>, config: SolverConfig) -> Self {
        Self {
            name: name.into(),
            config,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ComparisonRun {
    pub trace: RunTrace,
    /// Present unless the run returned an error.
    pub report: Option<RunReport>,
}

#[derive(Debug, Clone)]
pub struct ComparisonReport {
    /// Smallest objective seen over all rows of all runs.
    pub phi_star: f64,
    /// `true` when `phi_star == 0` and `rel_gap` holds the absolute gap.
    pub rel_gap_is_absolute: bool,
    pub runs: Vec<ComparisonRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub final_rel_gap: Option<f64>,
    pub final_fes_gap: Option<f64>,
    pub final_psnr: Option<f64>,
    pub status: TraceStatus,
    pub params: SolverConfig,
}

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub phi_star: Option<f64>,
    pub rel_gap_is_absolute: bool,
    pub runs: BTreeMap<String, RunSummary>,
}

/// Fills `rel_gap = |objective - phi_star| / |phi_star|` into every row (or
/// the absolute gap when `phi_star` is zero).
pub fn backfill_rel_gap(trace: &mut RunTrace, phi_star: f64) {
    for row in &mut trace.rows {
        let gap = (row.objective - phi_star).abs();
        row.rel_gap = Some(if phi_star == 0.0 { gap } else { gap / phi_star.abs() });
    }
}

/// Runs every configuration (concurrently, each with its own state), pools
/// the optimum and back-fills `rel_gap`.
pub fn compare(problem: &SplitProblem, configs: &[NamedConfig], options: &RunOptions) -> ComparisonReport {
    let results: Vec<(RunTrace, Option<RunReport>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|nc| {
                scope.spawn(move || match run(problem, &nc.config, options, |_, _| {}) {
                    Ok(report) => (
                        RunTrace {
                            name: nc.name.clone(),
                            config: nc.config,
                            rows: report.rows.clone(),
                            status: report.status.clone().into(),
                        },
                        Some(report),
                    ),
                    Err(e) => (
                        RunTrace {
                            name: nc.name.clone(),
                            config: nc.config,
                            rows: Vec::new(),
                            status: TraceStatus::Failed { message: e.to_string() },
                        },
                        None,
                    ),
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
    });

    let phi_star = results
        .iter()
        .filter_map(|(t, _)| t.best_objective())
        .min_by(f64::total_cmp)
        .unwrap_or(f64::NAN);
    let runs = results
        .into_iter()
        .map(|(mut trace, report)| {
            if phi_star.is_finite() {
                backfill_rel_gap(&mut trace, phi_star);
            }
            ComparisonRun { trace, report }
        })
        .collect();
    ComparisonReport {
        phi_star,
        rel_gap_is_absolute: phi_star == 0.0,
        runs,
    }
}

fn finite(v: Option<f64>) -> Option<f64> {
    v.filter(|x| x.is_finite())
}

impl ComparisonReport {
    pub fn run(&self, name: &str) -> Option<&ComparisonRun> {
        self.runs.iter().find(|r| r.trace.name == name)
    }

    pub fn all_completed(&self) -> bool {
        self.runs.iter().all(|r| r.trace.status.is_completed())
    }

    pub fn summary(&self) -> Summary {
        let runs = self
            .runs
            .iter()
            .map(|r| {
                let last = r.trace.last();
                (
                    r.trace.name.clone(),
                    RunSummary {
                        final_rel_gap: finite(last.and_then(|l| l.rel_gap)),
                        final_fes_gap: finite(last.map(|l| l.fes_gap)),
                        final_psnr: finite(last.and_then(|l| l.psnr)),
                        status: r.trace.status.clone(),
                        params: r.trace.config,
                    },
                )
            })
            .collect();
        Summary {
            phi_star: finite(Some(self.phi_star)),
            rel_gap_is_absolute: self.rel_gap_is_absolute,
            runs,
        }
    }

    /// Writes `<name>.csv` and `<name>.final.json` per run plus `summary.json`.
    /// `shape` is the 2-D layout of `x` (image or transport plan), if any.
    pub fn write_dir(&self, dir: &Path, shape: Option<(usize, usize)>) -> Result<(), HarnessError> {
        std::fs::create_dir_all(dir)?;
        for r in &self.runs {
            save_csv(&r.trace.rows, &dir.join(format!("{}.csv", r.trace.name)))?;
            if let Some(report) = &r.report {
                let dump = IterateDump {
                    shape: shape.map(|(a, b)| vec![a, b]).unwrap_or_else(|| vec![report.state.x.len()]),
                    x: report.state.x.clone(),
                };
                std::fs::write(dir.join(format!("{}.final.json", r.trace.name)), serde_json::to_vec(&dump)?)?;
            }
        }
        std::fs::write(dir.join("summary.json"), serde_json::to_vec_pretty(&self.summary())?)?;
        Ok(())
    }
}
