use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use grpadmm::problems::{ProblemFile, ProblemKind, ProblemSpec};
use grpadmm::{run, Algorithm, RunOptions, SolverConfig};
use grpadmm_harness::compare::compare;
use grpadmm_harness::config::{build_config, default_cadence, iterate_shape, parse_param, preset_suite, problem_spec};
use grpadmm_harness::presets::{default_iters, estimate_norm};
use grpadmm_harness::trace::{save_csv, IterateDump, TraceStatus};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "grpadmm", version, about = "Golden-ratio proximal ADMM experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ProblemArgs {
    /// lasso, rof, deblur or uot
    #[arg(long)]
    problem: ProblemKind,
    /// paper, desk, or RxC
    #[arg(long, default_value = "desk")]
    size: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also save the generated instance as JSON.
    #[arg(long)]
    dump_problem: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one algorithm and write its trace.
    Run {
        #[command(flatten)]
        problem: ProblemArgs,
        /// grp-fixed, alg1, alg2 or padmm
        #[arg(long)]
        algo: Algorithm,
        #[arg(long)]
        iters: Option<usize>,
        /// Parameter preset; only `paper` exists.
        #[arg(long, default_value = "paper")]
        preset: String,
        /// Override a preset parameter, e.g. `--param beta=5`.
        #[arg(long = "param", value_parser = parse_param)]
        params: Vec<(String, f64)>,
        /// CSV trace path; `<stem>.summary.json` and `<stem>.final.json` go beside it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        cadence: Option<usize>,
    },
    /// Run all four presets and write traces plus `summary.json`.
    Compare {
        #[command(flatten)]
        problem: ProblemArgs,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        cadence: Option<usize>,
    },
    /// Print the estimated operator norm of A.
    Norm {
        #[command(flatten)]
        problem: ProblemArgs,
    },
}

#[derive(Serialize)]
struct RunSummaryFile<'a> {
    spec: &'a ProblemSpec,
    config: &'a SolverConfig,
    status: &'a TraceStatus,
    final_objective: Option<f64>,
    final_fes_gap: Option<f64>,
    final_psnr: Option<f64>,
}

fn load(args: &ProblemArgs) -> Result<(ProblemSpec, grpadmm::SplitProblem)> {
    let spec = problem_spec(args.problem, &args.size, args.seed)?;
    let problem = spec.build()?;
    if let Some(path) = &args.dump_problem {
        ProblemFile {
            spec: spec.clone(),
            problem: problem.clone(),
        }
        .save(path)
        .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok((spec, problem))
}

fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

fn finite(v: Option<f64>) -> Option<f64> {
    v.filter(|x| x.is_finite())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// `Ok(false)` means a run aborted.
fn real_main() -> Result<bool> {
    match Cli::parse().command {
        Command::Run {
            problem: args,
            algo,
            iters,
            preset,
            params,
            out,
            cadence,
        } => {
            if preset != "paper" {
                bail!("unknown preset `{preset}`");
            }
            let (spec, problem) = load(&args)?;
            let config = build_config(spec.kind(), algo, &problem, &params)?;
            let options = RunOptions::new(iters.unwrap_or_else(|| default_iters(spec.kind())))
                .with_cadence(cadence.unwrap_or_else(|| default_cadence(&problem)));
            let (rows, status, x) = match run(&problem, &config, &options, |_, _| {}) {
                Ok(r) => (r.rows, TraceStatus::from(r.status), Some(r.state.x)),
                Err(e) => (Vec::new(), TraceStatus::Failed { message: e.to_string() }, None),
            };
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)?;
            }
            save_csv(&rows, &out)?;
            let last = rows.last();
            let summary = RunSummaryFile {
                spec: &spec,
                config: &config,
                status: &status,
                final_objective: finite(last.map(|r| r.objective)),
                final_fes_gap: finite(last.map(|r| r.fes_gap)),
                final_psnr: finite(last.and_then(|r| r.psnr)),
            };
            std::fs::write(sibling(&out, "summary.json"), serde_json::to_vec_pretty(&summary)?)?;
            if let Some(x) = x {
                let dump = IterateDump {
                    shape: iterate_shape(&spec).map(|(a, b)| vec![a, b]).unwrap_or_else(|| vec![x.len()]),
                    x,
                };
                std::fs::write(sibling(&out, "final.json"), serde_json::to_vec(&dump)?)?;
            }
            println!("{algo}: {}", status.label());
            if let Some(r) = last {
                println!("k={} objective={:.10e} fes_gap={:.3e}", r.k, r.objective, r.fes_gap);
            }
            if let TraceStatus::Failed { message } = &status {
                bail!("{message}");
            }
            Ok(status.is_completed())
        }
        Command::Compare {
            problem: args,
            iters,
            out,
            cadence,
        } => {
            let (spec, problem) = load(&args)?;
            let configs = preset_suite(spec.kind(), &problem)?;
            let options = RunOptions::new(iters.unwrap_or_else(|| default_iters(spec.kind())))
                .with_cadence(cadence.unwrap_or_else(|| default_cadence(&problem)));
            let report = compare(&problem, &configs, &options);
            report.write_dir(&out, iterate_shape(&spec))?;
            println!("phi_star={:.12e}", report.phi_star);
            for (name, s) in &report.summary().runs {
                println!(
                    "{name:>9}: {} rel_gap={} fes_gap={}",
                    s.status.label(),
                    s.final_rel_gap.map_or("-".into(), |v| format!("{v:.3e}")),
                    s.final_fes_gap.map_or("-".into(), |v| format!("{v:.3e}")),
                );
            }
            Ok(report.all_completed())
        }
        Command::Norm { problem: args } => {
            let (_, problem) = load(&args)?;
            println!("{}", estimate_norm(&problem.a)?);
            Ok(true)
        }
    }
}
