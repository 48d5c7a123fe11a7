//! End-to-end orchestration: simulate, segment, window, fit, aggregate,
//! test. Every intermediate artifact persists under a content-addressed
//! directory named by the config fingerprint, so identical configs rerun
//! into identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::abcde::run_trajectory;
use crate::config::{ExperimentConfig, FitSelection, SourceKind};
use crate::error::{Error, Result};
use crate::estimators::{
    fit_phase_transition, fit_subordinated, median_estimate, Algorithm, FitResult, MedianParams,
};
use crate::stats::{
    holm_bonferroni, mean_absolute_error, t_test, ErrorSample, HolmMode, HypothesisTestRow,
};
use crate::synthetic;
use crate::timeseries::{
    analysis_window, segment_drawdowns, subsample_windows, DrawdownEvent, TimeSeries,
    WindowFraction, WindowSpec,
};

/// Why a simulation was excluded from the aggregate statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SkipReason {
    BlowUp { step: usize },
    DegenerateSeries { detail: String },
    NotEnoughDrawdowns { found: usize },
    NoWindow { fraction: WindowFraction },
    WindowTooShort { fraction: WindowFraction, len: usize, min: usize },
    SubsampleInfeasible { fraction: WindowFraction },
    FitFailures {
        fraction: WindowFraction,
        algorithm: Algorithm,
        failed: usize,
        total: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum SimStatus {
    Ok,
    Skipped { reason: SkipReason },
}

/// Median estimate and forecast error for one (window class, algorithm)
/// cell of a simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRecord {
    pub median: MedianParams,
    /// |median tc - true tc| in time units.
    pub tc_error: f64,
    pub subsamples: usize,
    pub converged: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationRecord {
    pub run_id: u64,
    /// Relative path of the saved r-series, when the run produced one.
    pub series_file: Option<String>,
    pub status: SimStatus,
    pub events: Vec<DrawdownEvent>,
    pub tc: Option<f64>,
    pub peak_value: Option<f64>,
    pub windows: BTreeMap<WindowFraction, WindowSpec>,
    pub estimates: BTreeMap<WindowFraction, BTreeMap<Algorithm, EstimateRecord>>,
}

/// The three-row hypothesis table plus its provenance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub rows: Vec<HypothesisTestRow>,
    pub mae: BTreeMap<WindowFraction, f64>,
    pub n: usize,
    pub algorithm: Algorithm,
    pub paired: bool,
    pub holm_mode: HolmMode,
    pub config_fingerprint: String,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub report: ReportTable,
    pub records: Vec<SimulationRecord>,
    pub dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassComparison {
    pub mae_subordinated: f64,
    pub mae_phase_transition: f64,
    /// phase-transition MAE over subordinated MAE.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonSummary {
    pub classes: BTreeMap<WindowFraction, ClassComparison>,
    pub n: usize,
    pub config_fingerprint: String,
}

fn percent_label(f: WindowFraction) -> &'static str {
    match f {
        WindowFraction::Half => "50%",
        WindowFraction::Third => "33%",
        WindowFraction::Quarter => "25%",
    }
}

/// The three pairwise hypotheses in published order.
pub const HYPOTHESIS_PAIRS: [(WindowFraction, WindowFraction); 3] = [
    (WindowFraction::Half, WindowFraction::Third),
    (WindowFraction::Half, WindowFraction::Quarter),
    (WindowFraction::Quarter, WindowFraction::Third),
];

fn hypothesis_label(a: WindowFraction, b: WindowFraction) -> String {
    format!(
        "|tc_hat - tc|_{} = |tc_hat - tc|_{}",
        percent_label(a),
        percent_label(b)
    )
}

fn selected_algorithms(sel: FitSelection) -> Vec<Algorithm> {
    match sel {
        FitSelection::Subordinated => vec![Algorithm::Subordinated],
        FitSelection::PhaseTransition => vec![Algorithm::PhaseTransition],
        FitSelection::Both => vec![Algorithm::Subordinated, Algorithm::PhaseTransition],
    }
}

fn report_algorithm(sel: FitSelection) -> Algorithm {
    match sel {
        FitSelection::PhaseTransition => Algorithm::PhaseTransition,
        _ => Algorithm::Subordinated,
    }
}

fn series_for_run(cfg: &ExperimentConfig, id: usize) -> Result<std::result::Result<TimeSeries, SkipReason>> {
    match cfg.source.kind {
        SourceKind::Abcde => {
            let batch = cfg.abcde.batch_config(cfg.batch.runs, cfg.batch.seed)?;
            match run_trajectory(&batch, id) {
                Ok(states) => {
                    let r: Vec<f64> = states.iter().map(|s| s.r).collect();
                    Ok(Ok(TimeSeries::new(0.0, batch.dt, r)?))
                }
                Err(Error::BlowUp { step, .. }) => Ok(Err(SkipReason::BlowUp { step })),
                Err(e) => Err(e),
            }
        }
        SourceKind::SyntheticLppl => {
            let (ts, _) = synthetic::series(&cfg.source.synthetic, cfg.batch.seed, id as u64)?;
            Ok(Ok(ts))
        }
    }
}

fn process_run(cfg: &ExperimentConfig, id: usize, dir: &Path) -> Result<SimulationRecord> {
    let mut record = SimulationRecord {
        run_id: id as u64,
        series_file: None,
        status: SimStatus::Ok,
        events: Vec::new(),
        tc: None,
        peak_value: None,
        windows: BTreeMap::new(),
        estimates: BTreeMap::new(),
    };
    let skip = |mut record: SimulationRecord, reason: SkipReason| {
        record.status = SimStatus::Skipped { reason };
        Ok(record)
    };

    let ts = match series_for_run(cfg, id)? {
        Ok(ts) => ts,
        Err(reason) => return skip(record, reason),
    };
    let rel = format!("series/run_{id:05}.csv");
    ts.write_csv_file(dir.join(&rel))?;
    record.series_file = Some(rel);

    let events = match segment_drawdowns(&ts, cfg.drawdown.threshold) {
        Ok(e) => e,
        Err(Error::DegenerateData(detail)) => {
            return skip(record, SkipReason::DegenerateSeries { detail })
        }
        Err(e) => return Err(e),
    };
    record.events = events.clone();
    if events.len() < 2 {
        let found = events.len();
        return skip(record, SkipReason::NotEnoughDrawdowns { found });
    }
    let last = events.last().expect("nonempty");
    let tc = ts.time(last.peak_index);
    record.tc = Some(tc);
    record.peak_value = Some(last.peak_value);

    let algorithms = selected_algorithms(cfg.fit);
    for fraction in WindowFraction::ALL {
        let window = match analysis_window(&ts, &events, fraction, cfg.windows.min_len) {
            Ok(w) => w,
            Err(Error::NoWindow { .. }) => return skip(record, SkipReason::NoWindow { fraction }),
            Err(Error::WindowTooShort { len, min }) => {
                return skip(record, SkipReason::WindowTooShort { fraction, len, min })
            }
            Err(e) => return Err(e),
        };
        record.windows.insert(fraction, window);

        let subs = match subsample_windows(
            &window,
            cfg.windows.subsample_count,
            cfg.windows.subsample_min_len,
        ) {
            Ok(s) => s,
            Err(Error::WindowTooShort { .. }) | Err(Error::InvalidInput(_)) => {
                return skip(record, SkipReason::SubsampleInfeasible { fraction })
            }
            Err(e) => return Err(e),
        };

        for &algorithm in &algorithms {
            let fits: Vec<Result<FitResult>> = subs
                .iter()
                .map(|w| match algorithm {
                    Algorithm::Subordinated => fit_subordinated(&ts, w, &cfg.search),
                    Algorithm::PhaseTransition => fit_phase_transition(&ts, w, &cfg.search),
                })
                .collect();
            let total = fits.len();
            let converged: Vec<FitResult> = fits
                .into_iter()
                .filter_map(|f| f.ok().filter(|f| f.converged))
                .collect();
            let failed = total - converged.len();
            if 2 * failed > total {
                return skip(
                    record,
                    SkipReason::FitFailures {
                        fraction,
                        algorithm,
                        failed,
                        total,
                    },
                );
            }
            let median = median_estimate(&converged)?;
            let tc_error = (median.tc() - tc).abs();
            record
                .estimates
                .entry(fraction)
                .or_default()
                .insert(
                    algorithm,
                    EstimateRecord {
                        median,
                        tc_error,
                        subsamples: total,
                        converged: converged.len(),
                    },
                );
        }
    }
    Ok(record)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(serde_json::to_string_pretty(value).expect("serializable").as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

#[derive(Serialize)]
struct Manifest<'a> {
    source: SourceKind,
    preset: &'a str,
    alpha: f64,
    seed: u64,
    dt: f64,
    substeps: u32,
    horizon: f64,
    jitter: f64,
    runs: Vec<ManifestRun>,
}

#[derive(Serialize)]
struct ManifestRun {
    id: u64,
    status: SimStatus,
    series: Option<String>,
}

/// Simulate, fit and record every run, persisting series and records as they
/// complete. Records come back in run-id order regardless of scheduling.
pub fn run_records(cfg: &ExperimentConfig) -> Result<(PathBuf, Vec<SimulationRecord>)> {
    cfg.validate()?;
    let dir = PathBuf::from(&cfg.output.dir).join(cfg.fingerprint());
    fs::create_dir_all(dir.join("series"))?;
    fs::create_dir_all(dir.join("records"))?;
    fs::write(dir.join("config.json"), cfg.canonical_json() + "\n")?;

    let records: Vec<SimulationRecord> = (0..cfg.batch.runs)
        .into_par_iter()
        .map(|id| {
            let record = process_run(cfg, id, &dir)?;
            write_json(&dir.join(format!("records/run_{id:05}.json")), &record)?;
            Ok(record)
        })
        .collect::<Result<Vec<_>>>()?;

    let manifest = Manifest {
        source: cfg.source.kind,
        preset: &cfg.abcde.preset,
        alpha: cfg.abcde.alpha,
        seed: cfg.batch.seed,
        dt: cfg.abcde.dt,
        substeps: cfg.abcde.substeps,
        horizon: cfg.abcde.horizon,
        jitter: cfg.abcde.jitter,
        runs: records
            .iter()
            .map(|r| ManifestRun {
                id: r.run_id,
                status: r.status.clone(),
                series: r.series_file.clone(),
            })
            .collect(),
    };
    write_json(&dir.join("manifest.json"), &manifest)?;
    log::info!(
        "{} of {} runs usable ({})",
        records.iter().filter(|r| r.status == SimStatus::Ok).count(),
        records.len(),
        dir.display()
    );
    Ok((dir, records))
}

/// Error samples per window class for one algorithm, restricted to
/// simulations that succeeded for all three classes so N stays equal across
/// tests.
fn error_samples(
    records: &[SimulationRecord],
    algorithm: Algorithm,
) -> Result<BTreeMap<WindowFraction, ErrorSample>> {
    let mut samples: BTreeMap<WindowFraction, ErrorSample> = WindowFraction::ALL
        .into_iter()
        .map(|f| (f, ErrorSample::new(f)))
        .collect();
    for record in records {
        if record.status != SimStatus::Ok {
            continue;
        }
        for fraction in WindowFraction::ALL {
            let est = record
                .estimates
                .get(&fraction)
                .and_then(|m| m.get(&algorithm))
                .ok_or_else(|| {
                    Error::ExperimentFailed(format!(
                        "run {} is marked ok but lacks a {fraction}/{algorithm} estimate",
                        record.run_id
                    ))
                })?;
            samples
                .get_mut(&fraction)
                .expect("all classes present")
                .insert(record.run_id, est.tc_error)?;
        }
    }
    Ok(samples)
}

fn build_report(
    cfg: &ExperimentConfig,
    records: &[SimulationRecord],
    algorithm: Algorithm,
) -> Result<ReportTable> {
    let samples = error_samples(records, algorithm)?;
    let n = samples[&WindowFraction::Half].len();
    if n < 2 {
        return Err(Error::ExperimentFailed(format!(
            "only {n} usable simulations; at least 2 required"
        )));
    }

    let mut p_raw = Vec::with_capacity(3);
    for (a, b) in HYPOTHESIS_PAIRS {
        let r = t_test(&samples[&a], &samples[&b], cfg.test.paired)?;
        p_raw.push(r.p_value);
    }
    let corrected = holm_bonferroni(&p_raw, cfg.test.holm)?;
    let rows = HYPOTHESIS_PAIRS
        .iter()
        .zip(p_raw.iter().zip(corrected.iter()))
        .map(|(&(a, b), (&p, &pc))| HypothesisTestRow {
            label: hypothesis_label(a, b),
            p_raw: p,
            p_corrected: pc,
            n,
        })
        .collect();

    let mut mae = BTreeMap::new();
    for (f, s) in &samples {
        mae.insert(*f, mean_absolute_error(s)?);
    }

    Ok(ReportTable {
        rows,
        mae,
        n,
        algorithm,
        paired: cfg.test.paired,
        holm_mode: cfg.test.holm,
        config_fingerprint: cfg.fingerprint(),
    })
}

/// The full six-step methodology; returns the hypothesis table and persists
/// every artifact under the fingerprint directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let (dir, records) = run_records(cfg)?;
    let report = build_report(cfg, &records, report_algorithm(cfg.fit))?;
    write_json(&dir.join("report.json"), &report)?;
    fs::write(dir.join("report.csv"), report_csv(&report))?;
    fs::write(dir.join("report.txt"), render_text(&report))?;
    Ok(ExperimentOutput {
        report,
        records,
        dir,
    })
}

/// Run both fitters on identical windows and report the per-class ratio of
/// aggregate absolute forecast errors.
pub fn compare_algorithms(cfg: &ExperimentConfig) -> Result<(ComparisonSummary, PathBuf)> {
    if cfg.fit != FitSelection::Both {
        return Err(Error::Config(
            "algorithm comparison requires fit = \"both\"".into(),
        ));
    }
    let (dir, records) = run_records(cfg)?;
    let sub = error_samples(&records, Algorithm::Subordinated)?;
    let pt = error_samples(&records, Algorithm::PhaseTransition)?;
    let n = sub[&WindowFraction::Half].len();
    if n < 2 {
        return Err(Error::ExperimentFailed(format!(
            "only {n} usable simulations; at least 2 required"
        )));
    }
    let mut classes = BTreeMap::new();
    for f in WindowFraction::ALL {
        let mae_subordinated = mean_absolute_error(&sub[&f])?;
        let mae_phase_transition = mean_absolute_error(&pt[&f])?;
        classes.insert(
            f,
            ClassComparison {
                mae_subordinated,
                mae_phase_transition,
                ratio: mae_phase_transition / mae_subordinated,
            },
        );
    }
    let summary = ComparisonSummary {
        classes,
        n,
        config_fingerprint: cfg.fingerprint(),
    };
    write_json(&dir.join("comparison.json"), &summary)?;
    Ok((summary, dir))
}

/// Aligned text rendering of the hypothesis table (Hypothesis, P-value,
/// P-value*, N). Corrected values above 1 print as `>1`.
pub fn render_text(report: &ReportTable) -> String {
    let mut rows: Vec<[String; 4]> = vec![[
        "Hypothesis".into(),
        "P-value".into(),
        "P-value*".into(),
        "N".into(),
    ]];
    for row in &report.rows {
        rows.push([
            row.label.clone(),
            format!("{:.2}", row.p_raw),
            row.corrected_cell(report.holm_mode),
            row.n.to_string(),
        ]);
    }
    let width = |col: usize| rows.iter().map(|r| r[col].len()).max().unwrap_or(0);
    let widths = [width(0), width(1), width(2), width(3)];
    let mut out = String::new();
    for row in &rows {
        let line = format!(
            "{:w0$}  {:>w1$}  {:>w2$}  {:>w3$}",
            row[0],
            row[1],
            row[2],
            row[3],
            w0 = widths[0],
            w1 = widths[1],
            w2 = widths[2],
            w3 = widths[3],
        );
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}

/// CSV serialization of the report rows.
pub fn report_csv(report: &ReportTable) -> String {
    let mut out = String::from("hypothesis,p_raw,p_corrected,n\n");
    for row in &report.rows {
        let corrected = if report.holm_mode == HolmMode::PaperNaive && row.p_corrected > 1.0 {
            ">1".to_string()
        } else {
            format!("{}", row.p_corrected)
        };
        out.push_str(&format!(
            "{},{},{},{}\n",
            row.label, row.p_raw, corrected, row.n
        ));
    }
    out
}

/// Parse a persisted report back from its JSON form.
pub fn load_report(path: &Path) -> Result<ReportTable> {
    let text = fs::read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| Error::InvalidInput(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct PlotSidecar {
    files: BTreeMap<String, PlotFileDoc>,
}

#[derive(Serialize)]
struct PlotFileDoc {
    columns: Vec<String>,
    description: String,
}

/// Emit the three plot datasets: the Lorenz-subsystem projection, the
/// recurrent-point projection, and r trajectories for three seeded runs.
pub fn emit_plot_data(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let dir = match out {
        Some(p) => p.to_path_buf(),
        None => PathBuf::from(&cfg.output.dir)
            .join(cfg.fingerprint())
            .join("plots"),
    };
    fs::create_dir_all(&dir)?;
    let batch = cfg.abcde.batch_config(cfg.batch.runs.max(3), cfg.batch.seed)?;

    let trajs: Vec<_> = (0..3)
        .map(|id| run_trajectory(&batch, id))
        .collect::<Result<Vec<_>>>()?;

    let mut paths = Vec::new();
    let mut files = BTreeMap::new();

    let xz = dir.join("attractor_xz.csv");
    {
        let mut s = String::from("x,z\n");
        for state in &trajs[0] {
            s.push_str(&format!("{},{}\n", state.x, state.z));
        }
        fs::write(&xz, s)?;
    }
    files.insert(
        "attractor_xz.csv".to_string(),
        PlotFileDoc {
            columns: vec!["x".into(), "z".into()],
            description: "Lorenz-subsystem projection of run 0".into(),
        },
    );
    paths.push(xz);

    let xyz = dir.join("recurrence_x_yz.csv");
    {
        let mut s = String::from("x,y_minus_z\n");
        for state in &trajs[0] {
            s.push_str(&format!("{},{}\n", state.x, state.y - state.z));
        }
        fs::write(&xyz, s)?;
    }
    files.insert(
        "recurrence_x_yz.csv".to_string(),
        PlotFileDoc {
            columns: vec!["x".into(), "y_minus_z".into()],
            description: "Projection onto the (x, y-z) axes of run 0".into(),
        },
    );
    paths.push(xyz);

    let rcsv = dir.join("intermittency_r.csv");
    {
        let mut s = String::from("time,r_run0,r_run1,r_run2\n");
        for (i, state) in trajs[0].iter().enumerate() {
            let t = i as f64 * batch.dt;
            s.push_str(&format!(
                "{},{},{},{}\n",
                t, state.r, trajs[1][i].r, trajs[2][i].r
            ));
        }
        fs::write(&rcsv, s)?;
    }
    files.insert(
        "intermittency_r.csv".to_string(),
        PlotFileDoc {
            columns: vec![
                "time".into(),
                "r_run0".into(),
                "r_run1".into(),
                "r_run2".into(),
            ],
            description: "r against time for three seeded runs".into(),
        },
    );
    paths.push(rcsv);

    let sidecar = dir.join("plots.json");
    write_json(&sidecar, &PlotSidecar { files })?;
    paths.push(sidecar);
    Ok(paths)
}
