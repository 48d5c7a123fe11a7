//! The five-variable chaotic system that generates ground-truth critical
//! events: a Lorenz subsystem driving a dissipative `(b1, b2)` pair, also
//! integrated in hyperbolic polar form `(r, theta)` where intermittency in
//! `r` is visible directly.
//!
//! The `(r, theta)` form is the primary simulation form; the original
//! `(b1, b2)` form is kept as a cross-check oracle. Integration is classical
//! fixed-step fourth-order Runge-Kutta, bit-for-bit deterministic for fixed
//! inputs.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::TimeSeries;

/// Hyperbolics overflow guard: a run whose |theta| reaches this is treated as
/// blown up.
pub const THETA_GUARD: f64 = 300.0;

/// Default magnitude bound on state components before a run is declared
/// blown up.
pub const DEFAULT_STATE_BOUND: f64 = 1e12;

/// Control parameters of the system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbcdeParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub a1: f64,
    pub a2: f64,
    pub alpha: f64,
    pub epsilon: f64,
}

impl AbcdeParams {
    /// Control values exactly as published: note `rho` and `beta` look
    /// swapped relative to the canonical Lorenz attractor, which this preset
    /// preserves verbatim. The Lorenz subsystem settles onto a fixed point
    /// here rather than a strange attractor.
    pub fn paper_verbatim() -> Self {
        Self {
            sigma: 10.0,
            rho: 2.667,
            beta: 28.0,
            a1: 0.1,
            a2: 0.2,
            alpha: 1.0,
            epsilon: 4.94,
        }
    }

    /// Same dissipative parameters with `rho`/`beta` assigned the canonical
    /// Lorenz values, which reproduces the familiar strange attractor.
    pub fn lorenz_standard() -> Self {
        Self {
            rho: 28.0,
            beta: 2.667,
            ..Self::paper_verbatim()
        }
    }

    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "paper-verbatim" => Ok(Self::paper_verbatim()),
            "lorenz-standard" => Ok(Self::lorenz_standard()),
            other => Err(Error::Config(format!(
                "unknown preset `{other}` (expected `paper-verbatim` or `lorenz-standard`)"
            ))),
        }
    }
}

/// State in hyperbolic polar form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbcdeState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub r: f64,
    pub theta: f64,
}

impl AbcdeState {
    pub fn new(x: f64, y: f64, z: f64, r: f64, theta: f64) -> Self {
        Self { x, y, z, r, theta }
    }

    /// The published reference initial state.
    pub fn reference_initial() -> Self {
        Self::new(0.0, 1.0, 2.0, 1.0, 5.03999)
    }

    pub fn to_b(self) -> AbcdeStateB {
        AbcdeStateB {
            x: self.x,
            y: self.y,
            z: self.z,
            b1: self.r * self.theta.cosh(),
            b2: self.r * self.theta.sinh(),
        }
    }

    fn to_array(self) -> [f64; 5] {
        [self.x, self.y, self.z, self.r, self.theta]
    }

    fn from_array(a: [f64; 5]) -> Self {
        Self::new(a[0], a[1], a[2], a[3], a[4])
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

/// State in the original coordinates of the dissipative pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AbcdeStateB {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub b1: f64,
    pub b2: f64,
}

impl AbcdeStateB {
    fn to_array(self) -> [f64; 5] {
        [self.x, self.y, self.z, self.b1, self.b2]
    }

    fn from_array(a: [f64; 5]) -> Self {
        Self {
            x: a[0],
            y: a[1],
            z: a[2],
            b1: a[3],
            b2: a[4],
        }
    }
}

fn rtheta_rhs(s: &[f64; 5], p: &AbcdeParams) -> Result<[f64; 5]> {
    let [x, y, z, r, theta] = *s;
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericOverflow);
    }
    if theta.abs() >= THETA_GUARD {
        return Err(Error::NumericOverflow);
    }
    let sh = theta.sinh();
    let ch = theta.cosh();
    Ok([
        p.sigma * (-x + y),
        -y + (p.rho - z) * x,
        -p.beta * z + x * y,
        p.epsilon * r * (-p.a1 + (p.a2 - p.a1) * sh * sh),
        -p.epsilon * (p.a2 - p.a1) * sh * ch + p.alpha * x,
    ])
}

fn b_rhs(s: &[f64; 5], p: &AbcdeParams) -> Result<[f64; 5]> {
    let [x, y, z, b1, b2] = *s;
    if s.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericOverflow);
    }
    Ok([
        p.sigma * (-x + y),
        -y + (p.rho - z) * x,
        -p.beta * z + x * y,
        -p.epsilon * p.a1 * b1 + p.alpha * x * b2,
        -p.epsilon * p.a2 * b2 + p.alpha * x * b1,
    ])
}

/// Time derivative in `(r, theta)` form.
pub fn derivatives_rtheta(s: &AbcdeState, p: &AbcdeParams) -> Result<AbcdeState> {
    rtheta_rhs(&s.to_array(), p).map(AbcdeState::from_array)
}

/// Time derivative in the original `(b1, b2)` form.
pub fn derivatives_b(s: &AbcdeStateB, p: &AbcdeParams) -> Result<AbcdeStateB> {
    b_rhs(&s.to_array(), p).map(AbcdeStateB::from_array)
}

fn rk4_step<F>(f: &F, s: &[f64; 5], h: f64) -> Result<[f64; 5]>
where
    F: Fn(&[f64; 5]) -> Result<[f64; 5]>,
{
    let k1 = f(s)?;
    let mut s2 = *s;
    for i in 0..5 {
        s2[i] = s[i] + 0.5 * h * k1[i];
    }
    let k2 = f(&s2)?;
    for i in 0..5 {
        s2[i] = s[i] + 0.5 * h * k2[i];
    }
    let k3 = f(&s2)?;
    for i in 0..5 {
        s2[i] = s[i] + h * k3[i];
    }
    let k4 = f(&s2)?;
    let mut out = *s;
    for i in 0..5 {
        out[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(out)
}

fn integrate_raw<F>(f: F, s0: [f64; 5], dt: f64, n: usize, bound: f64) -> Result<Vec<[f64; 5]>>
where
    F: Fn(&[f64; 5]) -> Result<[f64; 5]>,
{
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidInput(format!("step must be > 0, got {dt}")));
    }
    if n < 1 {
        return Err(Error::InvalidInput("need at least one step".into()));
    }
    if s0.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite initial state".into()));
    }
    let mut out = Vec::with_capacity(n + 1);
    out.push(s0);
    let mut s = s0;
    for step in 1..=n {
        s = rk4_step(&f, &s, dt).map_err(|_| Error::BlowUp { step, bound })?;
        if s.iter().any(|v| !v.is_finite() || v.abs() > bound) {
            return Err(Error::BlowUp { step, bound });
        }
        out.push(s);
    }
    Ok(out)
}

/// Fixed-step RK4 trajectory in `(r, theta)` form; returns `n + 1` states
/// including the initial one. Errors with the offending step index when any
/// component leaves `[-bound, bound]` or the hyperbolics guard trips.
pub fn integrate_with_bound(
    s0: &AbcdeState,
    p: &AbcdeParams,
    dt: f64,
    n: usize,
    bound: f64,
) -> Result<Vec<AbcdeState>> {
    let p = *p;
    integrate_raw(move |s| rtheta_rhs(s, &p), s0.to_array(), dt, n, bound)
        .map(|v| v.into_iter().map(AbcdeState::from_array).collect())
}

/// [`integrate_with_bound`] at the default magnitude bound.
pub fn integrate(s0: &AbcdeState, p: &AbcdeParams, dt: f64, n: usize) -> Result<Vec<AbcdeState>> {
    integrate_with_bound(s0, p, dt, n, DEFAULT_STATE_BOUND)
}

/// RK4 trajectory in the original coordinates; cross-check path only.
pub fn integrate_b(
    s0: &AbcdeStateB,
    p: &AbcdeParams,
    dt: f64,
    n: usize,
) -> Result<Vec<AbcdeStateB>> {
    let p = *p;
    integrate_raw(
        move |s| b_rhs(s, &p),
        s0.to_array(),
        dt,
        n,
        DEFAULT_STATE_BOUND,
    )
    .map(|v| v.into_iter().map(AbcdeStateB::from_array).collect())
}

/// Batch simulation configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub params: AbcdeParams,
    pub initial: AbcdeState,
    /// Sample spacing of the saved series (time units).
    pub dt: f64,
    /// Integrator steps per saved sample; the internal step is
    /// `dt / substeps`. The reference initial state starts in a stiff
    /// transient that a bare `dt = 0.005` step cannot survive.
    pub substeps: u32,
    /// Total simulated time (time units).
    pub horizon: f64,
    pub runs: usize,
    pub seed: u64,
    /// Uniform jitter amplitude applied to the initial `(y, z, theta)`;
    /// never to `r`, so peak statistics stay comparable across runs.
    pub jitter: f64,
    pub state_bound: f64,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            params: AbcdeParams::lorenz_standard(),
            initial: AbcdeState::reference_initial(),
            dt: 0.005,
            substeps: 20,
            horizon: 2000.0,
            runs: 1,
            seed: 0,
            jitter: 1e-3,
            state_bound: DEFAULT_STATE_BOUND,
        }
    }
}

/// Per-run outcome inside a batch.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    BlowUp { step: usize },
}

#[derive(Debug, Clone)]
pub struct BatchRun {
    pub id: usize,
    pub series: Option<TimeSeries>,
    pub status: RunStatus,
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    pub runs: Vec<BatchRun>,
    pub failed: usize,
}

fn derived_seed(seed: u64, run: u64) -> u64 {
    let mut z = seed ^ run.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Initial state for one run: base state plus seeded uniform jitter on
/// `(y, z, theta)`.
pub fn jittered_initial(cfg: &BatchConfig, run: usize) -> AbcdeState {
    let mut rng = ChaCha8Rng::seed_from_u64(derived_seed(cfg.seed, run as u64));
    let mut draw = || cfg.jitter * (2.0 * unit_f64(&mut rng) - 1.0);
    AbcdeState {
        x: cfg.initial.x,
        y: cfg.initial.y + draw(),
        z: cfg.initial.z + draw(),
        r: cfg.initial.r,
        theta: cfg.initial.theta + draw(),
    }
}

fn sample_count(cfg: &BatchConfig) -> usize {
    (cfg.horizon / cfg.dt).round() as usize
}

/// Full-state trajectory for one run of a batch, sampled every `cfg.dt` while
/// integrating at `cfg.dt / cfg.substeps`.
pub fn run_trajectory(cfg: &BatchConfig, run: usize) -> Result<Vec<AbcdeState>> {
    if cfg.substeps == 0 {
        return Err(Error::Config("substeps must be >= 1".into()));
    }
    let samples = sample_count(cfg);
    if samples < 2 {
        return Err(Error::Config(format!(
            "horizon {} too short for dt {}",
            cfg.horizon, cfg.dt
        )));
    }
    let s0 = jittered_initial(cfg, run);
    let h = cfg.dt / cfg.substeps as f64;
    let p = cfg.params;
    let bound = cfg.state_bound;

    let mut out = Vec::with_capacity(samples + 1);
    out.push(s0);
    let mut s = s0.to_array();
    let f = |s: &[f64; 5]| rtheta_rhs(s, &p);
    for sample in 1..=samples {
        for sub in 0..cfg.substeps {
            let step = (sample - 1) * cfg.substeps as usize + sub as usize + 1;
            s = rk4_step(&f, &s, h).map_err(|_| Error::BlowUp { step, bound })?;
            if s.iter().any(|v| !v.is_finite() || v.abs() > bound) {
                return Err(Error::BlowUp { step, bound });
            }
        }
        out.push(AbcdeState::from_array(s));
    }
    Ok(out)
}

/// Simulate `cfg.runs` trajectories and return the `r` component of each as a
/// series. Failed runs are recorded and skipped, never silently dropped.
/// Output is fully determined by the seed, independent of scheduling.
pub fn simulate_batch(cfg: &BatchConfig) -> Result<BatchResult> {
    if cfg.runs == 0 {
        return Err(Error::Config("batch needs at least one run".into()));
    }
    let runs: Vec<BatchRun> = (0..cfg.runs)
        .into_par_iter()
        .map(|id| match run_trajectory(cfg, id) {
            Ok(states) => {
                let r: Vec<f64> = states.iter().map(|s| s.r).collect();
                debug_assert!(r.iter().all(|&v| v >= 0.0), "r must stay nonnegative");
                match TimeSeries::new(0.0, cfg.dt, r) {
                    Ok(series) => BatchRun {
                        id,
                        series: Some(series),
                        status: RunStatus::Ok,
                    },
                    Err(_) => BatchRun {
                        id,
                        series: None,
                        status: RunStatus::BlowUp { step: 0 },
                    },
                }
            }
            Err(Error::BlowUp { step, .. }) => BatchRun {
                id,
                series: None,
                status: RunStatus::BlowUp { step },
            },
            Err(e) => {
                // Config errors are the same for every run; surface eagerly.
                panic!("batch configuration rejected mid-run: {e}");
            }
        })
        .collect();
    let failed = runs.iter().filter(|r| r.series.is_none()).count();
    Ok(BatchResult { runs, failed })
}
