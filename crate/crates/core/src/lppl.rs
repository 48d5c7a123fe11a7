//! The log-periodic power law model family and the linear-parameter solve
//! the fitters build on.
//!
//! Four forms are provided: the full LPPL, its power-law reduction, an
//! exponential trend, and the log-divergent reduction used on detrended
//! residuals. Conditional on the nonlinear parameters `(tc, m, omega)`, the
//! remaining LPPL parameters enter linearly once the phased cosine is
//! rewritten as a cosine/sine pair, so they are recovered exactly by ordinary
//! least squares.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{TimeSeries, WindowSpec};

pub const TAU: f64 = 2.0 * std::f64::consts::PI;

/// The seven LPPL parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpplParams {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub m: f64,
    pub omega: f64,
    pub psi: f64,
    pub tc: f64,
}

/// Exponential trend `A + B exp(-m t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpTrendParams {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub m: f64,
}

/// Log-divergent reduction `B ln(tc-t) [1 + D cos(omega ln(tc-t) + psi)]`,
/// evaluated with the pre-critical argument `tc - t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogDivergentParams {
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "D")]
    pub d: f64,
    pub omega: f64,
    pub psi: f64,
    pub tc: f64,
}

fn require_pre_critical(tc: f64, t: f64) -> Result<f64> {
    let u = tc - t;
    if !(u > 0.0) {
        return Err(Error::InvalidInput(format!(
            "model is only defined before the critical time (t={t}, tc={tc})"
        )));
    }
    Ok(u)
}

/// `A + B (tc-t)^m + C (tc-t)^m cos(omega ln(tc-t) - psi)` for `t < tc`.
pub fn lppl_eval(p: &LpplParams, t: f64) -> Result<f64> {
    let u = require_pre_critical(p.tc, t)?;
    let pm = u.powf(p.m);
    Ok(p.a + p.b * pm + p.c * pm * (p.omega * u.ln() - p.psi).cos())
}

/// `A + B (tc-t)^m` for `t < tc`.
pub fn power_law_eval(a: f64, b: f64, m: f64, tc: f64, t: f64) -> Result<f64> {
    let u = require_pre_critical(tc, t)?;
    Ok(a + b * u.powf(m))
}

/// `A + B exp(-m t)`; defined everywhere.
pub fn exp_trend_eval(p: &ExpTrendParams, t: f64) -> f64 {
    p.a + p.b * (-p.m * t).exp()
}

/// `B ln(tc-t) [1 + D cos(omega ln(tc-t) + psi)]` for `t < tc`.
pub fn log_divergent_eval(p: &LogDivergentParams, t: f64) -> Result<f64> {
    let u = require_pre_critical(p.tc, t)?;
    let lu = u.ln();
    Ok(p.b * lu * (1.0 + p.d * (p.omega * lu + p.psi).cos()))
}

/// Outcome of the conditional linear solve: the four linear parameters plus
/// the residual sum of squares, which is the global minimum over
/// `(A, B, C, psi)` for the given `(tc, m, omega)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolve {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub psi: f64,
    pub sse: f64,
}

/// Relative tolerance on the triangular factor's diagonal below which the
/// design is treated as rank deficient.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Solve the four-parameter conditional least-squares problem on a window.
///
/// `C cos(omega ln(tc-t) - psi)` is rewritten as
/// `C1 cos(omega ln(tc-t)) + C2 sin(omega ln(tc-t))`, the resulting
/// four-column problem is solved by Householder QR, and `(C, psi)` are read
/// back as `(hypot(C1, C2), atan2(C2, C1))` with `psi` normalized to
/// `[0, 2*pi)`.
pub fn solve_linear_params(
    ts: &TimeSeries,
    window: &WindowSpec,
    tc: f64,
    m: f64,
    omega: f64,
) -> Result<LinearSolve> {
    let n = window.end_index - window.start_index + 1;
    if window.end_index >= ts.len() {
        return Err(Error::InvalidInput(format!(
            "window end {} outside series of {} samples",
            window.end_index,
            ts.len()
        )));
    }
    if n < 5 {
        return Err(Error::InvalidInput(format!(
            "linear solve needs a window of at least 5 samples, got {n}"
        )));
    }

    let mut ones = vec![1.0; n];
    let mut pow = vec![0.0; n];
    let mut cosc = vec![0.0; n];
    let mut sinc = vec![0.0; n];
    let mut y = vec![0.0; n];
    for (k, i) in (window.start_index..=window.end_index).enumerate() {
        let u = require_pre_critical(tc, ts.time(i))?;
        let lu = u.ln();
        let pm = (m * lu).exp();
        let phase = omega * lu;
        pow[k] = pm;
        cosc[k] = pm * phase.cos();
        sinc[k] = pm * phase.sin();
        y[k] = ts.values()[i];
    }

    let beta = lstsq(
        &mut [&mut ones, &mut pow, &mut cosc, &mut sinc],
        &mut y.clone(),
        RANK_TOLERANCE,
    )?;
    let (a, b, c1, c2) = (beta[0], beta[1], beta[2], beta[3]);

    // Residuals against the untouched basis, rebuilt because `lstsq` works
    // in place.
    let mut sse = 0.0;
    for i in window.start_index..=window.end_index {
        let u = tc - ts.time(i);
        let lu = u.ln();
        let pm = (m * lu).exp();
        let phase = omega * lu;
        let fit = a + b * pm + c1 * pm * phase.cos() + c2 * pm * phase.sin();
        let r = ts.values()[i] - fit;
        sse += r * r;
    }

    let c = c1.hypot(c2);
    let mut psi = c2.atan2(c1);
    if psi < 0.0 {
        psi += TAU;
    }
    Ok(LinearSolve { a, b, c, psi, sse })
}

/// Residual sum of squares of the full LPPL on a window.
pub fn sse(ts: &TimeSeries, window: &WindowSpec, p: &LpplParams) -> Result<f64> {
    let mut acc = 0.0;
    for i in window.start_index..=window.end_index {
        let r = ts.values()[i] - lppl_eval(p, ts.time(i))?;
        acc += r * r;
    }
    Ok(acc)
}

/// In-place Householder QR least squares for a thin column-major system.
/// Returns the coefficient vector, or `DegenerateDesign` when the triangular
/// factor's diagonal collapses below `rank_tol` relative to its largest
/// entry.
pub(crate) fn lstsq(cols: &mut [&mut Vec<f64>], y: &mut [f64], rank_tol: f64) -> Result<Vec<f64>> {
    let p = cols.len();
    let n = y.len();
    debug_assert!(cols.iter().all(|c| c.len() == n));
    debug_assert!(n >= p);

    for k in 0..p {
        // Householder reflector for column k below the diagonal.
        let norm = cols[k][k..].iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue; // leaves a zero diagonal entry for the rank check
        }
        let alpha = if cols[k][k] >= 0.0 { -norm } else { norm };
        let mut v = cols[k][k..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for col in cols[k..].iter_mut() {
                reflect(&v, &mut col[k..], vnorm2);
            }
            reflect(&v, &mut y[k..], vnorm2);
        }
        cols[k][k] = alpha;
    }

    let rmax = (0..p).map(|k| cols[k][k].abs()).fold(0.0, f64::max);
    if rmax == 0.0 || (0..p).any(|k| cols[k][k].abs() < rank_tol * rmax) {
        return Err(Error::DegenerateDesign);
    }

    // Back substitution on the triangular factor.
    let mut beta = vec![0.0; p];
    for k in (0..p).rev() {
        let mut s = y[k];
        for j in k + 1..p {
            s -= cols[j][k] * beta[j];
        }
        beta[k] = s / cols[k][k];
    }
    Ok(beta)
}

fn reflect(v: &[f64], target: &mut [f64], vnorm2: f64) {
    let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
    let scale = 2.0 * dot / vnorm2;
    for (t, vi) in target.iter_mut().zip(v.iter()) {
        *t -= scale * vi;
    }
}
