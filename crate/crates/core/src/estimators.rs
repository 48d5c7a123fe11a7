//! The two competing critical-time estimation algorithms plus subsample
//! median aggregation.
//!
//! The subordinated fitter profiles the critical time over a sample-spaced
//! grid beyond the window end; at each candidate the exponent and
//! log-frequency are found by multistart bounded simplex search with the four
//! linear parameters solved exactly underneath. The phase-transition fitter
//! first removes a fitted exponential trend and then fits the log-divergent
//! reduction to the residuals, profiling the critical time on the same grid
//! with the overall amplitude solved linearly.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lppl::{
    exp_trend_eval, solve_linear_params, ExpTrendParams, LogDivergentParams, LpplParams, TAU,
};
use crate::optim::{minimize_bounded, SimplexOptions, SimplexResult};
use crate::timeseries::{TimeSeries, WindowSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Subordinated,
    PhaseTransition,
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Algorithm::Subordinated => write!(f, "subordinated"),
            Algorithm::PhaseTransition => write!(f, "phase-transition"),
        }
    }
}

/// Search-space bounds and optimizer budget for both fitters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    pub m_bounds: (f64, f64),
    pub omega_bounds: (f64, f64),
    /// Critical-time grid spacing, in samples.
    pub tc_step_samples: f64,
    /// Grid extent beyond the window end, as a fraction of window length.
    pub tc_max_offset_frac: f64,
    /// Start lattice resolution over the exponent axis.
    pub multistart_m: usize,
    /// Start lattice resolution over the log-frequency axis.
    pub multistart_omega: usize,
    pub ftol: f64,
    pub xtol: f64,
    pub max_evals: u64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            m_bounds: (0.05, 0.95),
            omega_bounds: (2.0, 25.0),
            tc_step_samples: 1.0,
            tc_max_offset_frac: 0.5,
            multistart_m: 3,
            multistart_omega: 3,
            ftol: 1e-10,
            xtol: 1e-8,
            max_evals: 2000,
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        if !(self.m_bounds.0 < self.m_bounds.1)
            || !(self.omega_bounds.0 < self.omega_bounds.1)
            || !(self.tc_step_samples > 0.0)
            || !(self.tc_max_offset_frac > 0.0)
            || self.multistart_m == 0
            || self.multistart_omega == 0
        {
            return Err(Error::Config("degenerate search configuration".into()));
        }
        Ok(())
    }

    fn simplex_options(&self) -> SimplexOptions {
        SimplexOptions {
            ftol: self.ftol,
            xtol: self.xtol,
            max_evals: self.max_evals,
        }
    }
}

/// Fitted parameters of either algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum FitParams {
    Lppl(LpplParams),
    Detrended {
        trend: ExpTrendParams,
        log_divergent: LogDivergentParams,
    },
}

impl FitParams {
    /// The forecast critical time, whichever model produced it.
    pub fn tc(&self) -> f64 {
        match self {
            FitParams::Lppl(p) => p.tc,
            FitParams::Detrended { log_divergent, .. } => log_divergent.tc,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub algorithm: Algorithm,
    pub params: FitParams,
    pub sse: f64,
    pub window: WindowSpec,
    pub converged: bool,
    pub evaluations: u64,
}

fn tc_candidates(ts: &TimeSeries, window: &WindowSpec, cfg: &SearchConfig) -> Result<Vec<f64>> {
    let dt = ts.dt();
    let t_end = ts.time(window.end_index);
    let span = window.len() as f64 * dt;
    let max_offset = cfg.tc_max_offset_frac * span;
    let step = cfg.tc_step_samples * dt;
    let mut out = Vec::new();
    let mut k = 0usize;
    loop {
        let offset = dt + k as f64 * step;
        if offset > max_offset {
            break;
        }
        out.push(t_end + offset);
        k += 1;
    }
    if out.is_empty() {
        return Err(Error::FitFailed(format!(
            "window of {} samples leaves no room for a critical-time grid",
            window.len()
        )));
    }
    Ok(out)
}

struct CandidateFit {
    sse: f64,
    x: Vec<f64>,
    converged: bool,
    evaluations: u64,
}

/// Multistart bounded simplex search over a box, deterministic lattice
/// starts, best result by (objective, start index).
fn multistart_minimize<F>(
    objective: F,
    lo: &[f64],
    hi: &[f64],
    starts: &[Vec<f64>],
    opts: &SimplexOptions,
) -> CandidateFit
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut best: Option<(usize, SimplexResult)> = None;
    let mut evaluations = 0u64;
    for (idx, start) in starts.iter().enumerate() {
        let res = minimize_bounded(&objective, start, lo, hi, opts);
        evaluations += res.evaluations;
        let better = match &best {
            None => true,
            Some((_, b)) => res.fx < b.fx,
        };
        if better {
            best = Some((idx, res));
        }
    }
    let (_, b) = best.expect("at least one start");
    CandidateFit {
        sse: b.fx,
        x: b.x,
        converged: b.converged,
        evaluations,
    }
}

fn lattice_starts(cfg: &SearchConfig) -> Vec<Vec<f64>> {
    let (m_lo, m_hi) = cfg.m_bounds;
    let (w_lo, w_hi) = cfg.omega_bounds;
    let mut starts = Vec::with_capacity(cfg.multistart_m * cfg.multistart_omega);
    for i in 0..cfg.multistart_m {
        for j in 0..cfg.multistart_omega {
            let m = m_lo + (i as f64 + 0.5) * (m_hi - m_lo) / cfg.multistart_m as f64;
            let w = w_lo + (j as f64 + 0.5) * (w_hi - w_lo) / cfg.multistart_omega as f64;
            starts.push(vec![m, w]);
        }
    }
    starts
}

/// Three-tier subordinated fit: profile the critical time on the grid, the
/// exponent and log-frequency by inner simplex search, and the linear
/// parameters by exact least squares innermost.
pub fn fit_subordinated(
    ts: &TimeSeries,
    window: &WindowSpec,
    cfg: &SearchConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    let candidates = tc_candidates(ts, window, cfg)?;
    let starts = lattice_starts(cfg);
    let opts = cfg.simplex_options();
    let (m_lo, m_hi) = cfg.m_bounds;
    let (w_lo, w_hi) = cfg.omega_bounds;

    let fits: Vec<CandidateFit> = candidates
        .par_iter()
        .map(|&tc| {
            let objective = |x: &[f64]| {
                solve_linear_params(ts, window, tc, x[0], x[1])
                    .map(|s| s.sse)
                    .unwrap_or(f64::INFINITY)
            };
            multistart_minimize(objective, &[m_lo, w_lo], &[m_hi, w_hi], &starts, &opts)
        })
        .collect();

    let mut evaluations: u64 = fits.iter().map(|f| f.evaluations).sum();
    let best_idx = (0..fits.len())
        .filter(|&i| fits[i].sse.is_finite())
        .min_by(|&i, &j| fits[i].sse.total_cmp(&fits[j].sse).then(i.cmp(&j)))
        .ok_or_else(|| {
            Error::FitFailed("every critical-time candidate was infeasible".into())
        })?;
    let best = &fits[best_idx];
    let tc = candidates[best_idx];

    // Polish (m, omega) at the winning candidate with tightened tolerances;
    // starting from the winner, the simplex can only improve on it.
    let polish_opts = SimplexOptions {
        ftol: (cfg.ftol * 1e-5).max(1e-16),
        xtol: (cfg.xtol * 1e-4).max(1e-13),
        max_evals: cfg.max_evals,
    };
    let polish = minimize_bounded(
        |x: &[f64]| {
            solve_linear_params(ts, window, tc, x[0], x[1])
                .map(|s| s.sse)
                .unwrap_or(f64::INFINITY)
        },
        &best.x,
        &[m_lo, w_lo],
        &[m_hi, w_hi],
        &polish_opts,
    );
    evaluations += polish.evaluations;
    let (m, omega) = if polish.fx <= best.sse {
        (polish.x[0], polish.x[1])
    } else {
        (best.x[0], best.x[1])
    };
    let solved = solve_linear_params(ts, window, tc, m, omega)?;

    Ok(FitResult {
        algorithm: Algorithm::Subordinated,
        params: FitParams::Lppl(LpplParams {
            a: solved.a,
            b: solved.b,
            c: solved.c,
            m,
            omega,
            psi: solved.psi,
            tc,
        }),
        sse: solved.sse,
        window: *window,
        converged: best.converged,
        evaluations,
    })
}

/// Profiled nonlinear least squares for the exponential trend, with the
/// level and amplitude solved linearly at each decay rate. Constant data
/// falls back to `(mean, 0, 0)`.
pub fn fit_exp_trend(ts: &TimeSeries, window: &WindowSpec) -> Result<ExpTrendParams> {
    let n = window.end_index - window.start_index + 1;
    if n < 4 || window.end_index >= ts.len() {
        return Err(Error::InvalidInput(format!(
            "trend fit needs a window of at least 4 samples inside the series, got {n}"
        )));
    }
    let t_start = ts.time(window.start_index);
    let tau: Vec<f64> = (window.start_index..=window.end_index)
        .map(|i| ts.time(i) - t_start)
        .collect();
    let y: Vec<f64> = ts.values()[window.start_index..=window.end_index].to_vec();
    let y_mean = y.iter().sum::<f64>() / n as f64;
    let y_var: f64 = y.iter().map(|v| (v - y_mean).powi(2)).sum();
    let y_scale: f64 = y.iter().map(|v| v * v).sum::<f64>().max(1.0);
    if y_var <= 1e-24 * y_scale {
        return Ok(ExpTrendParams {
            a: y_mean,
            b: 0.0,
            m: 0.0,
        });
    }

    let span = tau[n - 1];
    let t_abs_max = ts.time(window.start_index).abs().max(ts.time(window.end_index).abs());
    let m_cap = (20.0 / span).min(550.0 / t_abs_max.max(1.0));

    // Profiled SSE at fixed decay rate, amplitude and level solved linearly
    // against the centered regressor.
    let profile = |m: f64| -> (f64, f64, f64) {
        let g: Vec<f64> = tau.iter().map(|&t| (-m * t).exp()).collect();
        let g_mean = g.iter().sum::<f64>() / n as f64;
        let mut cov = 0.0;
        let mut var = 0.0;
        for k in 0..n {
            cov += (g[k] - g_mean) * (y[k] - y_mean);
            var += (g[k] - g_mean).powi(2);
        }
        if var <= 1e-28 * n as f64 {
            return (y_var, y_mean, 0.0);
        }
        let b = cov / var;
        let a = y_mean - b * g_mean;
        let sse = (0..n).map(|k| (y[k] - a - b * g[k]).powi(2)).sum::<f64>();
        (sse, a, b)
    };

    // Coarse grid, then golden-section refinement inside the best bracket.
    let grid_n = 64usize;
    let grid_m = |k: usize| -m_cap + 2.0 * m_cap * k as f64 / grid_n as f64;
    let mut best_k = 0usize;
    let mut best_sse = f64::INFINITY;
    for k in 0..=grid_n {
        let (sse, _, _) = profile(grid_m(k));
        if sse < best_sse {
            best_sse = sse;
            best_k = k;
        }
    }
    let mut lo = grid_m(best_k.saturating_sub(1));
    let mut hi = grid_m((best_k + 1).min(grid_n));
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - phi * (hi - lo);
    let mut d = lo + phi * (hi - lo);
    let mut fc = profile(c).0;
    let mut fd = profile(d).0;
    for _ in 0..90 {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - phi * (hi - lo);
            fc = profile(c).0;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + phi * (hi - lo);
            fd = profile(d).0;
        }
        if hi - lo < 1e-14 * m_cap.max(1e-12) {
            break;
        }
    }
    let m_tau = 0.5 * (lo + hi);
    let (m, a, b_tau) = {
        let (_, a, b) = profile(m_tau);
        (m_tau, a, b)
    };

    // Convert the window-local amplitude back to absolute time.
    let b = b_tau * (m * t_start).exp();
    Ok(ExpTrendParams { a, b, m })
}

/// Two-step phase-transition fit: exponential detrend, then the
/// log-divergent reduction on the residuals with the critical time profiled
/// on the same grid as the subordinated fitter.
pub fn fit_phase_transition(
    ts: &TimeSeries,
    window: &WindowSpec,
    cfg: &SearchConfig,
) -> Result<FitResult> {
    cfg.validate()?;
    let trend = fit_exp_trend(ts, window)?;
    let times: Vec<f64> = (window.start_index..=window.end_index)
        .map(|i| ts.time(i))
        .collect();
    let res: Vec<f64> = (window.start_index..=window.end_index)
        .map(|i| ts.values()[i] - exp_trend_eval(&trend, ts.time(i)))
        .collect();
    let res_norm: f64 = res.iter().map(|v| v * v).sum();
    let y_scale: f64 = ts.values()[window.start_index..=window.end_index]
        .iter()
        .map(|v| v * v)
        .sum::<f64>()
        .max(1.0);

    let candidates = tc_candidates(ts, window, cfg)?;
    if res_norm <= 1e-24 * y_scale {
        // Nothing left to fit: report a zero-amplitude oscillation.
        return Ok(FitResult {
            algorithm: Algorithm::PhaseTransition,
            params: FitParams::Detrended {
                trend,
                log_divergent: LogDivergentParams {
                    b: 0.0,
                    d: 0.0,
                    omega: 0.5 * (cfg.omega_bounds.0 + cfg.omega_bounds.1),
                    psi: 0.0,
                    tc: candidates[0],
                },
            },
            sse: res_norm,
            window: *window,
            converged: true,
            evaluations: 0,
        });
    }

    let (w_lo, w_hi) = cfg.omega_bounds;
    let d_bound = 1.5;
    // Start lattice over (omega, psi), mid-amplitude oscillation.
    let mut starts = Vec::with_capacity(cfg.multistart_m * cfg.multistart_omega);
    for i in 0..cfg.multistart_omega {
        for j in 0..cfg.multistart_m {
            let w = w_lo + (i as f64 + 0.5) * (w_hi - w_lo) / cfg.multistart_omega as f64;
            let psi = (j as f64 + 0.5) * TAU / cfg.multistart_m as f64;
            starts.push(vec![w, psi, 0.5]);
        }
    }
    let opts = cfg.simplex_options();

    struct PtCandidate {
        sse: f64,
        omega: f64,
        psi: f64,
        d: f64,
        b: f64,
        converged: bool,
        evaluations: u64,
    }

    let fits: Vec<PtCandidate> = candidates
        .par_iter()
        .map(|&tc| {
            let lu: Vec<f64> = times.iter().map(|&t| (tc - t).ln()).collect();
            // B multiplies the whole expression; solve it in closed form.
            let solve_b = |omega: f64, psi: f64, d: f64| -> (f64, f64) {
                let mut hh = 0.0;
                let mut hr = 0.0;
                for (k, &l) in lu.iter().enumerate() {
                    let h = l * (1.0 + d * (omega * l + psi).cos());
                    hh += h * h;
                    hr += h * res[k];
                }
                if hh <= 1e-30 {
                    return (0.0, res_norm);
                }
                let b = hr / hh;
                let mut sse = 0.0;
                for (k, &l) in lu.iter().enumerate() {
                    let h = l * (1.0 + d * (omega * l + psi).cos());
                    let e = res[k] - b * h;
                    sse += e * e;
                }
                (b, sse)
            };
            let objective = |x: &[f64]| solve_b(x[0], x[1], x[2]).1;
            let fit = multistart_minimize(
                objective,
                &[w_lo, 0.0, -d_bound],
                &[w_hi, TAU, d_bound],
                &starts,
                &opts,
            );
            let (b, sse) = solve_b(fit.x[0], fit.x[1], fit.x[2]);
            PtCandidate {
                sse,
                omega: fit.x[0],
                psi: fit.x[1],
                d: fit.x[2],
                b,
                converged: fit.converged,
                evaluations: fit.evaluations,
            }
        })
        .collect();

    let evaluations: u64 = fits.iter().map(|f| f.evaluations).sum();
    let best_idx = (0..fits.len())
        .filter(|&i| fits[i].sse.is_finite())
        .min_by(|&i, &j| fits[i].sse.total_cmp(&fits[j].sse).then(i.cmp(&j)))
        .ok_or_else(|| {
            Error::FitFailed("every critical-time candidate was infeasible".into())
        })?;
    let best = &fits[best_idx];
    let mut psi = best.psi % TAU;
    if psi < 0.0 {
        psi += TAU;
    }

    Ok(FitResult {
        algorithm: Algorithm::PhaseTransition,
        params: FitParams::Detrended {
            trend,
            log_divergent: LogDivergentParams {
                b: best.b,
                d: best.d,
                omega: best.omega,
                psi,
                tc: candidates[best_idx],
            },
        },
        sse: best.sse,
        window: *window,
        converged: best.converged,
        evaluations,
    })
}

/// Componentwise median over the converged fits of one algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum MedianParams {
    Lppl(LpplParams),
    Detrended {
        trend: ExpTrendParams,
        log_divergent: LogDivergentParams,
    },
}

impl MedianParams {
    pub fn tc(&self) -> f64 {
        match self {
            MedianParams::Lppl(p) => p.tc,
            MedianParams::Detrended { log_divergent, .. } => log_divergent.tc,
        }
    }
}

fn median(values: &mut Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn normalize_psi(psi: f64) -> f64 {
    let mut p = psi % TAU;
    if p < 0.0 {
        p += TAU;
    }
    p
}

/// Median of each parameter independently over converged fits only. All fits
/// must come from the same algorithm; phase medians are taken on values
/// normalized to `[0, 2*pi)`.
pub fn median_estimate(fits: &[FitResult]) -> Result<MedianParams> {
    let converged: Vec<&FitResult> = fits.iter().filter(|f| f.converged).collect();
    if converged.is_empty() {
        return Err(Error::NoEstimate);
    }
    let algorithm = converged[0].algorithm;
    if converged.iter().any(|f| f.algorithm != algorithm) {
        return Err(Error::InvalidInput(
            "median aggregation requires fits from a single algorithm".into(),
        ));
    }

    let col = |get: &dyn Fn(&FitResult) -> f64| -> f64 {
        let mut v: Vec<f64> = converged.iter().map(|f| get(f)).collect();
        median(&mut v)
    };

    match algorithm {
        Algorithm::Subordinated => {
            let pick = |get: fn(&LpplParams) -> f64| {
                col(&move |f: &FitResult| match &f.params {
                    FitParams::Lppl(p) => get(p),
                    _ => unreachable!("algorithm checked above"),
                })
            };
            Ok(MedianParams::Lppl(LpplParams {
                a: pick(|p| p.a),
                b: pick(|p| p.b),
                c: pick(|p| p.c),
                m: pick(|p| p.m),
                omega: pick(|p| p.omega),
                psi: col(&|f: &FitResult| match &f.params {
                    FitParams::Lppl(p) => normalize_psi(p.psi),
                    _ => unreachable!(),
                }),
                tc: pick(|p| p.tc),
            }))
        }
        Algorithm::PhaseTransition => {
            let trend = |get: fn(&ExpTrendParams) -> f64| {
                col(&move |f: &FitResult| match &f.params {
                    FitParams::Detrended { trend, .. } => get(trend),
                    _ => unreachable!(),
                })
            };
            let ld = |get: fn(&LogDivergentParams) -> f64| {
                col(&move |f: &FitResult| match &f.params {
                    FitParams::Detrended { log_divergent, .. } => get(log_divergent),
                    _ => unreachable!(),
                })
            };
            Ok(MedianParams::Detrended {
                trend: ExpTrendParams {
                    a: trend(|p| p.a),
                    b: trend(|p| p.b),
                    m: trend(|p| p.m),
                },
                log_divergent: LogDivergentParams {
                    b: ld(|p| p.b),
                    d: ld(|p| p.d),
                    omega: ld(|p| p.omega),
                    psi: col(&|f: &FitResult| match &f.params {
                        FitParams::Detrended { log_divergent, .. } => {
                            normalize_psi(log_divergent.psi)
                        }
                        _ => unreachable!(),
                    }),
                    tc: ld(|p| p.tc),
                },
            })
        }
    }
}
