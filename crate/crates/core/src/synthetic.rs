//! Synthetic series with the critical time known by construction.
//!
//! Each series opens with a small recovered drawdown whose recovery sample is
//! the first point of a noiseless LPPL rise; the rise ends in a peak placed
//! exactly on the sample grid, followed by an unrecovered crash opening at
//! that peak. Segmentation therefore finds exactly two drawdowns, the
//! analysis window starts on the curve itself, and the critical event
//! coincides with the LPPL critical time, so end-to-end forecast errors are
//! measurable without a simulator in the loop.
//!
//! The exponent range is kept low so that even the quarter-peak window ends
//! close enough to the critical time for a search grid capped at half the
//! window length to reach it.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::lppl::{lppl_eval, LpplParams, TAU};
use crate::timeseries::TimeSeries;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    /// Sample spacing of the generated series.
    pub dt: f64,
    /// LPPL rise length in samples (jittered +-10% per run).
    pub span: usize,
    /// Series level at the critical sample.
    pub level: f64,
    pub m_range: (f64, f64),
    pub omega_range: (f64, f64),
    /// Oscillation amplitude relative to the power-law amplitude. The rise
    /// starts near 0.02 * level, so even small relative oscillations swing
    /// hard against the early values; keep this well below the drawdown
    /// threshold.
    pub c_rel: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            dt: 1.0,
            span: 450,
            level: 1.0,
            m_range: (0.12, 0.17),
            omega_range: (5.0, 12.0),
            c_rel: 0.001,
        }
    }
}

fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn derived_seed(seed: u64, run: u64) -> u64 {
    let mut z = seed ^ run.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The LPPL parameters drawn for one run, with `tc` left at zero until the
/// series geometry pins it to the grid.
pub fn run_params(cfg: &SyntheticConfig, seed: u64, run: u64) -> (LpplParams, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(seed, run));
    let mut uniform = |lo: f64, hi: f64| lo + (hi - lo) * unit_f64(&mut rng);

    let m = uniform(cfg.m_range.0, cfg.m_range.1);
    let omega = uniform(cfg.omega_range.0, cfg.omega_range.1);
    let psi = uniform(0.0, TAU);
    let span = ((cfg.span as f64) * uniform(0.9, 1.1)).round().max(40.0) as usize;

    let a = cfg.level;
    let v_start = 0.02 * a;
    let u_start = span as f64 * cfg.dt;
    let b = (v_start - a) / u_start.powf(m);
    let c = cfg.c_rel * b.abs();

    (
        LpplParams {
            a,
            b,
            c,
            m,
            omega,
            psi,
            tc: 0.0,
        },
        span,
    )
}

/// Generate one synthetic run. Returns the series and the true critical time
/// (the grid time of the peak sample).
pub fn series(cfg: &SyntheticConfig, seed: u64, run: u64) -> Result<(TimeSeries, f64)> {
    let (proto, span) = run_params(cfg, seed, run);
    let a = proto.a;
    let dt = cfg.dt;
    let mut values = Vec::new();

    // Early recovered drawdown, all of it far below every analysis level:
    // ramp to a local peak, 25% drop, partial recovery that stays below the
    // peak. The first sample to exceed the peak is the first curve sample,
    // so the analysis window opens exactly on the curve.
    let p0 = 0.018 * a;
    for k in 0..8 {
        values.push(0.005 * a + (p0 - 0.005 * a) * k as f64 / 7.0);
    }
    for k in 1..=4 {
        values.push(p0 - (p0 - 0.0135 * a) * k as f64 / 4.0);
    }
    values.push(0.015 * a);
    values.push(0.017 * a);

    // LPPL rise into a peak exactly on the grid.
    let peak_index = values.len() + span;
    let tc = peak_index as f64 * dt;
    let params = LpplParams { tc, ..proto };
    for i in values.len()..peak_index {
        values.push(lppl_eval(&params, i as f64 * dt)?);
    }
    values.push(a); // the limiting value at the critical sample

    // Unrecovered crash.
    for k in 1..=6 {
        values.push(a - (a - 0.25 * a) * k as f64 / 6.0);
    }

    Ok((TimeSeries::new(0.0, dt, values)?, tc))
}
