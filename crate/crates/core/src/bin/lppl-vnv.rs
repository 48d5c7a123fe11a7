//! Command-line front end for the toolkit.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lppl_vnv::abcde::simulate_batch;
use lppl_vnv::config::ExperimentConfig;
use lppl_vnv::error::{Error, Result};
use lppl_vnv::estimators::{fit_phase_transition, fit_subordinated};
use lppl_vnv::pipeline::{
    compare_algorithms, emit_plot_data, load_report, render_text, run_experiment,
};
use lppl_vnv::timeseries::{TimeSeries, WindowLabel, WindowSpec};

#[derive(Parser)]
#[command(
    name = "lppl-vnv",
    version,
    about = "Simulation-based verification of LPPL critical-time estimators",
    propagate_version = true
)]
struct Cli {
    /// Path to an experiment config (TOML); defaults apply when omitted.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Scale preset providing the config baseline: `desk` or `full`.
    #[arg(long, global = true, value_name = "NAME")]
    scale: Option<String>,

    /// Override one config key by dotted path, e.g. `abcde.epsilon=4.94`.
    /// Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    /// Emit machine-readable JSON on stdout instead of plain text.
    #[arg(long, global = true)]
    json: bool,

    /// Cap the worker-thread pool (default: one per CPU).
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a seeded batch and write one r-series CSV per run plus a
    /// JSON manifest.
    Simulate,
    /// Fit one algorithm to a window of a series CSV and write the result as
    /// JSON.
    Fit(FitArgs),
    /// Run the full experiment: simulate, segment, window, fit, aggregate,
    /// test.
    Vnv,
    /// Run both fitting algorithms on identical windows and report
    /// per-class error ratios.
    Compare,
    /// Emit the attractor, recurrence and intermittency plot datasets.
    PlotData(PlotDataArgs),
    /// Render a persisted report as an aligned text table.
    Report(ReportArgs),
}

#[derive(Args)]
struct FitArgs {
    /// Input series CSV (`time,value` with a header row).
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
    /// Fitting algorithm.
    #[arg(long, value_enum, default_value = "subordinated")]
    algorithm: AlgorithmArg,
    /// First sample index of the fit window.
    #[arg(long, default_value_t = 0)]
    start: usize,
    /// Last sample index of the fit window (default: final sample).
    #[arg(long)]
    end: Option<usize>,
    /// Output path for the fit JSON (default: `<input stem>_fit.json`).
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum AlgorithmArg {
    Subordinated,
    PhaseTransition,
}

#[derive(Args)]
struct PlotDataArgs {
    /// Output directory (default: `<output.dir>/<fingerprint>/plots`).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// A persisted `report.json`.
    #[arg(long, value_name = "FILE")]
    input: PathBuf,
}

fn parse_overrides(pairs: &[String]) -> Result<Vec<(String, String)>> {
    pairs
        .iter()
        .map(|pair| {
            pair.split_once('=')
                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                .ok_or_else(|| Error::Config(format!("override `{pair}` is not KEY=VALUE")))
        })
        .collect()
}

fn emit_path(json: bool, kind: &str, path: &Path) {
    if json {
        println!(
            "{}",
            serde_json::json!({ "artifact": kind, "path": path.to_string_lossy() })
        );
    } else {
        println!("{}", path.display());
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    }

    let overrides = parse_overrides(&cli.set)?;
    let cfg = ExperimentConfig::load(cli.scale.as_deref(), cli.config.as_deref(), &overrides)?;

    match cli.command {
        Command::Simulate => {
            let dir = PathBuf::from(&cfg.output.dir).join(cfg.fingerprint());
            std::fs::create_dir_all(dir.join("series"))?;
            std::fs::write(dir.join("config.json"), cfg.canonical_json() + "\n")?;
            let batch = cfg.abcde.batch_config(cfg.batch.runs, cfg.batch.seed)?;
            let result = simulate_batch(&batch)?;
            let mut runs = Vec::new();
            for run in &result.runs {
                let series = match run.series.as_ref() {
                    Some(s) => {
                        let rel = format!("series/run_{:05}.csv", run.id);
                        s.write_csv_file(dir.join(&rel))?;
                        Some(rel)
                    }
                    None => None,
                };
                runs.push(serde_json::json!({
                    "id": run.id,
                    "status": run.status,
                    "series": series,
                }));
            }
            let manifest = serde_json::json!({
                "preset": cfg.abcde.preset,
                "alpha": cfg.abcde.alpha,
                "seed": cfg.batch.seed,
                "dt": cfg.abcde.dt,
                "substeps": cfg.abcde.substeps,
                "horizon": cfg.abcde.horizon,
                "jitter": cfg.abcde.jitter,
                "failed": result.failed,
                "runs": runs,
            });
            let path = dir.join("manifest.json");
            std::fs::write(&path, serde_json::to_string_pretty(&manifest).unwrap() + "\n")?;
            log::info!("{} of {} runs failed", result.failed, batch.runs);
            emit_path(cli.json, "manifest", &path);
        }
        Command::Fit(args) => {
            let ts = TimeSeries::read_csv_file(&args.input)?;
            let end = args.end.unwrap_or(ts.len() - 1);
            if end >= ts.len() {
                return Err(Error::InvalidInput(format!(
                    "window end {end} outside series of {} samples",
                    ts.len()
                )));
            }
            let window = WindowSpec::new(args.start, end, WindowLabel::Subsample(0))?;
            let fit = match args.algorithm {
                AlgorithmArg::Subordinated => fit_subordinated(&ts, &window, &cfg.search)?,
                AlgorithmArg::PhaseTransition => fit_phase_transition(&ts, &window, &cfg.search)?,
            };
            let out = args.output.unwrap_or_else(|| {
                let stem = args
                    .input
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| "series".into());
                args.input.with_file_name(format!("{stem}_fit.json"))
            });
            std::fs::write(&out, serde_json::to_string_pretty(&fit).unwrap() + "\n")?;
            if cli.json {
                println!("{}", serde_json::to_string(&fit).unwrap());
            } else {
                println!("{}", out.display());
            }
        }
        Command::Vnv => {
            let out = run_experiment(&cfg)?;
            let path = out.dir.join("report.csv");
            if cli.json {
                println!("{}", serde_json::to_string(&out.report).unwrap());
            } else {
                print!("{}", render_text(&out.report));
                println!("{}", path.display());
            }
        }
        Command::Compare => {
            let mut cfg = cfg;
            cfg.fit = lppl_vnv::config::FitSelection::Both;
            let (summary, dir) = compare_algorithms(&cfg)?;
            if cli.json {
                println!("{}", serde_json::to_string(&summary).unwrap());
            } else {
                for (class, c) in &summary.classes {
                    println!(
                        "{class}: subordinated mae {:.6}  phase-transition mae {:.6}  ratio {:.2}",
                        c.mae_subordinated, c.mae_phase_transition, c.ratio
                    );
                }
                println!("{}", dir.join("comparison.json").display());
            }
        }
        Command::PlotData(args) => {
            let paths = emit_plot_data(&cfg, args.out.as_deref())?;
            if cli.json {
                let listed: Vec<String> = paths
                    .iter()
                    .map(|p| p.to_string_lossy().into_owned())
                    .collect();
                println!("{}", serde_json::json!({ "files": listed }));
            } else {
                let dir = paths
                    .last()
                    .and_then(|p| p.parent())
                    .map(Path::to_path_buf)
                    .unwrap_or_default();
                println!("{}", dir.display());
            }
        }
        Command::Report(args) => {
            let report = load_report(&args.input)?;
            if cli.json {
                println!("{}", serde_json::to_string(&report).unwrap());
            } else {
                print!("{}", render_text(&report));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
