//! Dev scan over coupling strengths and presets: blow-up rates, drawdown
//! counts and r-statistics per run. Not part of the shipped surface.

use lppl_vnv::abcde::{simulate_batch, AbcdeParams, BatchConfig};
use lppl_vnv::timeseries::{analysis_window, segment_drawdowns, WindowFraction};

fn main() {
    let horizon: f64 = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(300.0);
    let alphas: Vec<f64> = std::env::args()
        .skip(2)
        .filter_map(|s| s.parse().ok())
        .collect();
    let alphas = if alphas.is_empty() {
        vec![0.05, 0.07, 0.08, 0.09, 0.10, 0.12, 0.15, 0.2, 1.0]
    } else {
        alphas
    };
    for (name, base) in [
        ("lorenz-standard", AbcdeParams::lorenz_standard()),
        ("paper-verbatim", AbcdeParams::paper_verbatim()),
    ] {
        for &alpha in &alphas {
            let cfg = BatchConfig {
                params: AbcdeParams { alpha, ..base },
                horizon,
                runs: 10,
                seed: 7,
                ..BatchConfig::default()
            };
            let batch = simulate_batch(&cfg).unwrap();
            let mut dd_counts = Vec::new();
            let mut with_two = 0;
            let mut lnr_end = Vec::new();
            let mut lnr_max: f64 = f64::NEG_INFINITY;
            let mut lnr_min: f64 = f64::INFINITY;
            let mut x_flips = 0usize;
            let mut window_lens = Vec::new();
            let mut windows_ok = 0usize;
            for run in &batch.runs {
                if let Some(series) = &run.series {
                    let events = segment_drawdowns(series, 0.15).unwrap_or_default();
                    let n = events.len();
                    dd_counts.push(n);
                    if n >= 2 {
                        with_two += 1;
                        let mut lens = Vec::new();
                        for f in WindowFraction::ALL {
                            match analysis_window(series, &events, f, 50) {
                                Ok(w) => lens.push(w.len() as i64),
                                Err(_) => lens.push(-1),
                            }
                        }
                        if lens.iter().all(|&l| l > 0) {
                            windows_ok += 1;
                        }
                        window_lens.push(lens);
                    }
                    let v = series.values();
                    lnr_end.push(v[v.len() - 1].max(1e-320).ln());
                    for &r in v {
                        if r > 0.0 {
                            lnr_max = lnr_max.max(r.ln());
                            lnr_min = lnr_min.min(r.ln());
                        }
                    }
                    let mut flips = 0;
                    let mut last = v[0];
                    for &r in v {
                        if (r > last * 2.0) || (r < last * 0.5) {
                            flips += 1;
                            last = r;
                        }
                    }
                    x_flips += flips;
                }
            }
            let mean_lnr_end = if lnr_end.is_empty() {
                f64::NAN
            } else {
                lnr_end.iter().sum::<f64>() / lnr_end.len() as f64
            };
            println!(
                "{name:16} alpha={alpha:<5} blowups={}/10 runs_with_2dd={with_two} windows_ok={windows_ok} dd={:?} mean_ln_r_end={mean_lnr_end:8.2} ln_r_range=[{lnr_min:8.2},{lnr_max:8.2}] octave_moves={x_flips}\n    window_lens={window_lens:?}",
                batch.failed, dd_counts
            );
        }
    }
}
