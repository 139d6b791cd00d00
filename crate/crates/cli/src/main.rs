//! `wdopt`: run experiments, check bounds on traces and plot them.

mod plot;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use wdopt::analysis::kkt_residual;
use wdopt::harness::{
    check_bound, objective_spec_from_header, parse_objective_spec, run_experiment, scenario_counterexample,
    scenario_names, scenario_synthetic_comparison, sweep, BoundKind, ExperimentConfig, SweepGrid, Trace,
};
use wdopt::harness::scenarios::{COUNTEREXAMPLE, SYNTHETIC_COMPARISON};
use wdopt::NormKind;

/// Default directory for written traces when no output path is given.
const OUT_DIR_ENV: &str = "WDOPT_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "wdopt", version, about = "Weight-decay optimizer experiments and bound checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config and write its trace.
    Run {
        config: PathBuf,
        /// Trace path; overrides `run.output` in the config.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Directory used when neither `--out` nor `run.output` is set.
        #[arg(long, env = OUT_DIR_ENV)]
        out_dir: Option<PathBuf>,
    },
    /// Run a canned scenario.
    Scenario {
        #[arg(required_unless_present = "list")]
        name: Option<String>,
        /// Seed for scenarios with random targets and start points.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Print the scenario names and exit.
        #[arg(long)]
        list: bool,
        #[arg(long, env = OUT_DIR_ENV)]
        out_dir: Option<PathBuf>,
    },
    /// Evaluate a bound on every row of a trace.
    Check {
        trace: PathBuf,
        /// One of unit-update, ball-shrinkage, amortized, iterate-norm, fw-rate.
        #[arg(long)]
        bound: BoundKind,
        /// Print only the summary line.
        #[arg(long)]
        quiet: bool,
    },
    /// KKT residuals of the final iterate of a trace.
    Kkt {
        trace: PathBuf,
        /// Objective as an inline TOML table; defaults to the one in the trace header.
        #[arg(long)]
        objective: Option<String>,
        /// Weight decay; defaults to the header's `lambda`.
        #[arg(long)]
        lambda: Option<f64>,
        /// Norm; defaults to the header's `norm`.
        #[arg(long)]
        norm: Option<NormKind>,
        /// Exit with status 2 when either residual exceeds this value.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Run a config over a grid of parameter values.
    Sweep {
        config: PathBuf,
        /// Axes such as `optimizer.lambda=0.1,1;schedule.eta=0.01,0.001`.
        #[arg(long)]
        grid: String,
        /// Maximum number of concurrent runs.
        #[arg(long, default_value_t = 1)]
        parallel: usize,
        #[arg(long, env = OUT_DIR_ENV)]
        out_dir: Option<PathBuf>,
    },
    /// Draw trace columns as an SVG line chart, plus a CSV of the plotted points.
    Plot {
        #[arg(required = true)]
        traces: Vec<PathBuf>,
        /// Comma-separated column names.
        #[arg(long, value_delimiter = ',')]
        columns: Vec<String>,
        #[arg(long)]
        out: PathBuf,
        /// Column used for the horizontal axis.
        #[arg(long, default_value = "t")]
        x: String,
        /// Logarithmic vertical axis.
        #[arg(long)]
        logy: bool,
    },
}

fn main() -> ExitCode {
    run_cli(std::env::args_os())
}

fn run_cli(args: impl IntoIterator<Item = OsString>) -> ExitCode {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { config, out, out_dir } => cmd_run(&config, out, out_dir),
        Command::Scenario {
            name,
            seed,
            list,
            out_dir,
        } => {
            if list {
                for n in scenario_names() {
                    println!("{n}");
                }
                return Ok(ExitCode::SUCCESS);
            }
            cmd_scenario(name.as_deref().unwrap_or_default(), seed, out_dir)
        }
        Command::Check { trace, bound, quiet } => cmd_check(&trace, bound, quiet),
        Command::Kkt {
            trace,
            objective,
            lambda,
            norm,
            tol,
        } => cmd_kkt(&trace, objective.as_deref(), lambda, norm, tol),
        Command::Sweep {
            config,
            grid,
            parallel,
            out_dir,
        } => cmd_sweep(&config, &grid, parallel, out_dir),
        Command::Plot {
            traces,
            columns,
            out,
            x,
            logy,
        } => cmd_plot(&traces, &columns, &out, &x, logy),
    }
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.unwrap_or_else(|| PathBuf::from("."))
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("trace")
        .to_string()
}

fn summary(trace: &Trace) -> String {
    let loss = trace
        .column("loss")
        .and_then(|c| c.last().copied())
        .map_or("-".to_string(), |l| format!("{l:.6e}"));
    format!("{} rows, final loss {loss}", trace.len())
}

fn cmd_run(config: &Path, out: Option<PathBuf>, dir: Option<PathBuf>) -> Result<ExitCode> {
    let mut cfg = ExperimentConfig::load(config)?;
    if let Some(out) = out {
        cfg.run.output = Some(out);
    } else if cfg.run.output.is_none() {
        cfg.run.output = Some(out_dir(dir).join(format!("{}.csv", stem(config))));
    }
    let trace = run_experiment(&cfg)?;
    let path = cfg.run.output.as_deref().expect("output set above");
    println!("{}: {}", path.display(), summary(&trace));
    Ok(ExitCode::SUCCESS)
}

fn cmd_scenario(name: &str, seed: u64, dir: Option<PathBuf>) -> Result<ExitCode> {
    let dir = out_dir(dir);
    let traces: Vec<(String, Trace)> = match name {
        SYNTHETIC_COMPARISON => scenario_synthetic_comparison(seed)?
            .into_iter()
            .map(|r| (format!("{SYNTHETIC_COMPARISON}-seed{seed}-{}", r.name), r.trace))
            .collect(),
        COUNTEREXAMPLE => vec![(COUNTEREXAMPLE.to_string(), scenario_counterexample()?)],
        other => bail!(
            "unknown scenario `{other}`; available: {}",
            scenario_names().join(", ")
        ),
    };
    for (file, trace) in traces {
        let path = dir.join(format!("{file}.csv"));
        trace.save(&path)?;
        println!("{}: {}", path.display(), summary(&trace));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_check(path: &Path, bound: BoundKind, quiet: bool) -> Result<ExitCode> {
    let trace = Trace::load(path)?;
    let objective = if bound == BoundKind::FwRate {
        Some(
            objective_spec_from_header(&trace)
                .and_then(|spec| spec.build())
                .context("fw-rate needs the objective recorded in the trace header")?,
        )
    } else {
        None
    };
    let report = check_bound(&trace, bound, objective.as_deref())?;
    if !quiet {
        println!("t,bound,measured,margin,coord");
        for r in &report.rows {
            let coord = r.coord.map_or(String::new(), |c| c.to_string());
            println!("{},{:e},{:e},{:e},{coord}", r.t, r.bound, r.measured, r.margin());
        }
    }
    match report.first_violation() {
        None => {
            println!(
                "{bound}: holds on {} rows, min margin {:e}",
                report.rows.len(),
                report.min_margin()
            );
            Ok(ExitCode::SUCCESS)
        }
        Some(r) => {
            println!(
                "{bound}: violated at t = {}{}: measured {:e} > bound {:e} (margin {:e})",
                r.t,
                r.coord.map_or(String::new(), |c| format!(", coordinate {c}")),
                r.measured,
                r.bound,
                r.margin()
            );
            Ok(ExitCode::from(2))
        }
    }
}

fn cmd_kkt(
    path: &Path,
    objective: Option<&str>,
    lambda: Option<f64>,
    norm: Option<NormKind>,
    tol: Option<f64>,
) -> Result<ExitCode> {
    let trace = Trace::load(path)?;
    let spec = match objective {
        Some(text) => parse_objective_spec(text)?,
        None => objective_spec_from_header(&trace).context("pass --objective")?,
    };
    let obj = spec.build()?;
    let lambda = match lambda {
        Some(l) => l,
        None => trace.header_f64("lambda").context("pass --lambda")?,
    };
    let norm = match norm {
        Some(k) => k,
        None => trace
            .header_value("norm")
            .context("pass --norm")?
            .trim()
            .parse()
            .map_err(anyhow::Error::msg)?,
    };
    let x = trace.header_vector("x_final")?;
    let report = kkt_residual(obj.as_ref(), &x, lambda, norm)?;
    println!("norm={norm} lambda={lambda}");
    println!("feasibility_gap={:e}", report.feasibility_gap);
    println!("alignment_residual={:e}", report.alignment_residual);
    match tol {
        Some(tol) if !report.is_kkt(tol) => {
            println!("not a KKT point within {tol:e}");
            Ok(ExitCode::from(2))
        }
        _ => Ok(ExitCode::SUCCESS),
    }
}

fn cmd_sweep(config: &Path, grid: &str, parallel: usize, dir: Option<PathBuf>) -> Result<ExitCode> {
    let mut base = ExperimentConfig::load(config)?;
    if base.run.output.is_none() {
        base.run.output = Some(out_dir(dir).join(format!("{}.csv", stem(config))));
    }
    let grid = SweepGrid::parse(grid)?;
    let points = sweep(&base, &grid, parallel)?;
    for p in &points {
        let path = p.config.run.output.as_deref().map_or("-".into(), |o| o.display().to_string());
        println!("{path}: {} ({})", p.label, summary(&p.trace));
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_plot(paths: &[PathBuf], columns: &[String], out: &Path, x: &str, logy: bool) -> Result<ExitCode> {
    let columns: Vec<&str> = columns.iter().map(|c| c.trim()).filter(|c| !c.is_empty()).collect();
    if columns.is_empty() {
        bail!("--columns needs at least one column name");
    }
    let mut series = Vec::new();
    for path in paths {
        let trace = Trace::load(path)?;
        let mut needed = vec![x.to_string()];
        needed.extend(columns.iter().map(|c| c.to_string()));
        trace
            .require_columns(&needed)
            .with_context(|| path.display().to_string())?;
        let xs = trace.column(x).expect("checked");
        let tag = plot::trace_tag(path, &trace);
        for c in &columns {
            series.push(plot::Series {
                label: format!("{tag}: {c}"),
                points: xs.iter().copied().zip(trace.column(c).expect("checked")).collect(),
            });
        }
    }
    let chart = plot::Chart {
        series,
        x_label: x.to_string(),
        logy,
    };
    let csv_path = out.with_extension("csv");
    plot::write(&chart, out, &csv_path)?;
    println!("{} and {}", out.display(), csv_path.display());
    Ok(ExitCode::SUCCESS)
}
