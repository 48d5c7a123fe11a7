//! C ABI for the LPPL verification toolkit.
//!
//! Conventions: series are opaque handles created and freed by this library;
//! every fallible call returns an [`LvStatus`] and writes results through out
//! pointers; arrays returned by the library are freed with their matching
//! `lv_*_free` function. All pointers must be non-null unless documented
//! otherwise.

use std::ffi::{c_char, CStr};

use lppl_vnv::error::Error;
use lppl_vnv::estimators::{
    fit_phase_transition, fit_subordinated, Algorithm, FitParams, SearchConfig,
};
use lppl_vnv::lppl::{lppl_eval, LpplParams};
use lppl_vnv::stats::{holm_bonferroni, t_test, ErrorSample, HolmMode};
use lppl_vnv::timeseries::{
    critical_event, segment_drawdowns, TimeSeries, WindowFraction, WindowLabel, WindowSpec,
};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LvStatus {
    Ok = 0,
    InvalidInput = 1,
    DegenerateData = 2,
    NotEnoughEvents = 3,
    NoWindow = 4,
    WindowTooShort = 5,
    NumericOverflow = 6,
    BlowUp = 7,
    DegenerateDesign = 8,
    FitFailed = 9,
    NoEstimate = 10,
    DegenerateTest = 11,
    InvalidPairing = 12,
    ExperimentFailed = 13,
    ConfigError = 14,
    IoError = 15,
    NullPointer = 16,
    BadEncoding = 17,
}

fn status_of(e: &Error) -> LvStatus {
    match e {
        Error::InvalidInput(_) => LvStatus::InvalidInput,
        Error::DegenerateData(_) => LvStatus::DegenerateData,
        Error::NotEnoughEvents { .. } => LvStatus::NotEnoughEvents,
        Error::NoWindow { .. } => LvStatus::NoWindow,
        Error::WindowTooShort { .. } => LvStatus::WindowTooShort,
        Error::NumericOverflow => LvStatus::NumericOverflow,
        Error::BlowUp { .. } => LvStatus::BlowUp,
        Error::DegenerateDesign => LvStatus::DegenerateDesign,
        Error::FitFailed(_) => LvStatus::FitFailed,
        Error::NoEstimate => LvStatus::NoEstimate,
        Error::DegenerateTest(_) => LvStatus::DegenerateTest,
        Error::InvalidPairing => LvStatus::InvalidPairing,
        Error::ExperimentFailed(_) => LvStatus::ExperimentFailed,
        Error::Config(_) => LvStatus::ConfigError,
        Error::Io(_) => LvStatus::IoError,
    }
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn lv_status_message(status: LvStatus) -> *const c_char {
    let msg: &'static [u8] = match status {
        LvStatus::Ok => b"ok\0",
        LvStatus::InvalidInput => b"invalid input\0",
        LvStatus::DegenerateData => b"degenerate data\0",
        LvStatus::NotEnoughEvents => b"not enough drawdown events\0",
        LvStatus::NoWindow => b"no window before the critical event\0",
        LvStatus::WindowTooShort => b"window too short\0",
        LvStatus::NumericOverflow => b"numeric overflow\0",
        LvStatus::BlowUp => b"state blow-up\0",
        LvStatus::DegenerateDesign => b"rank-deficient design\0",
        LvStatus::FitFailed => b"fit failed\0",
        LvStatus::NoEstimate => b"no converged fits\0",
        LvStatus::DegenerateTest => b"degenerate test\0",
        LvStatus::InvalidPairing => b"mismatched simulation ids\0",
        LvStatus::ExperimentFailed => b"experiment failed\0",
        LvStatus::ConfigError => b"configuration error\0",
        LvStatus::IoError => b"i/o error\0",
        LvStatus::NullPointer => b"null pointer argument\0",
        LvStatus::BadEncoding => b"string is not valid UTF-8\0",
    };
    msg.as_ptr() as *const c_char
}

/// Opaque uniformly sampled series handle.
pub struct LvSeries {
    inner: TimeSeries,
}

/// Build a series from a value buffer. On success writes a new handle that
/// must be released with [`lv_series_free`].
///
/// # Safety
/// `values` must point to `len` readable doubles and `out` must be a valid
/// destination for one pointer.
#[no_mangle]
pub unsafe extern "C" fn lv_series_new(
    t0: f64,
    dt: f64,
    values: *const f64,
    len: usize,
    out: *mut *mut LvSeries,
) -> LvStatus {
    if values.is_null() || out.is_null() {
        return LvStatus::NullPointer;
    }
    let slice = std::slice::from_raw_parts(values, len);
    match TimeSeries::new(t0, dt, slice.to_vec()) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(LvSeries { inner }));
            LvStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Read a `time,value` CSV into a new series handle.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn lv_series_read_csv(
    path: *const c_char,
    out: *mut *mut LvSeries,
) -> LvStatus {
    if path.is_null() || out.is_null() {
        return LvStatus::NullPointer;
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(p) => p,
        Err(_) => return LvStatus::BadEncoding,
    };
    match TimeSeries::read_csv_file(path) {
        Ok(inner) => {
            *out = Box::into_raw(Box::new(LvSeries { inner }));
            LvStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Write a series as `time,value` CSV.
///
/// # Safety
/// `series` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn lv_series_write_csv(
    series: *const LvSeries,
    path: *const c_char,
) -> LvStatus {
    if series.is_null() || path.is_null() {
        return LvStatus::NullPointer;
    }
    let path = match CStr::from_ptr(path).to_str() {
        Ok(p) => p,
        Err(_) => return LvStatus::BadEncoding,
    };
    match (*series).inner.write_csv_file(path) {
        Ok(()) => LvStatus::Ok,
        Err(e) => status_of(&e),
    }
}

/// Release a series handle. Accepts NULL.
///
/// # Safety
/// `series` must have been returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn lv_series_free(series: *mut LvSeries) {
    if !series.is_null() {
        drop(Box::from_raw(series));
    }
}

/// Number of samples.
///
/// # Safety
/// `series` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn lv_series_len(series: *const LvSeries) -> usize {
    if series.is_null() {
        return 0;
    }
    (*series).inner.len()
}

/// Sample value at an index; writes NaN-free data only for valid indices.
///
/// # Safety
/// `series` must be a live handle and `out` a valid destination.
#[no_mangle]
pub unsafe extern "C" fn lv_series_value(
    series: *const LvSeries,
    index: usize,
    out: *mut f64,
) -> LvStatus {
    if series.is_null() || out.is_null() {
        return LvStatus::NullPointer;
    }
    let s = &(*series).inner;
    if index >= s.len() {
        return LvStatus::InvalidInput;
    }
    *out = s.values()[index];
    LvStatus::Ok
}

/// One detected drawdown. `end_index` is meaningful only when `has_end` is
/// true.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LvDrawdownEvent {
    pub peak_index: usize,
    pub peak_value: f64,
    pub trough_index: usize,
    pub trough_value: f64,
    pub has_end: bool,
    pub end_index: usize,
    pub magnitude: f64,
}

/// Segment drawdowns of at least `threshold` (a fraction of the running
/// peak). On success writes a heap array to free with [`lv_events_free`].
///
/// # Safety
/// `series` must be a live handle; `out_events` and `out_len` valid
/// destinations.
#[no_mangle]
pub unsafe extern "C" fn lv_segment_drawdowns(
    series: *const LvSeries,
    threshold: f64,
    out_events: *mut *mut LvDrawdownEvent,
    out_len: *mut usize,
) -> LvStatus {
    if series.is_null() || out_events.is_null() || out_len.is_null() {
        return LvStatus::NullPointer;
    }
    match segment_drawdowns(&(*series).inner, threshold) {
        Ok(events) => {
            let mut converted: Vec<LvDrawdownEvent> = events
                .iter()
                .map(|e| LvDrawdownEvent {
                    peak_index: e.peak_index,
                    peak_value: e.peak_value,
                    trough_index: e.trough_index,
                    trough_value: e.trough_value,
                    has_end: e.end_index.is_some(),
                    end_index: e.end_index.unwrap_or(0),
                    magnitude: e.magnitude,
                })
                .collect();
            converted.shrink_to_fit();
            *out_len = converted.len();
            *out_events = converted.as_mut_ptr();
            std::mem::forget(converted);
            LvStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Release an event array from [`lv_segment_drawdowns`]. Accepts NULL.
///
/// # Safety
/// `(events, len)` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn lv_events_free(events: *mut LvDrawdownEvent, len: usize) {
    if !events.is_null() {
        drop(Vec::from_raw_parts(events, len, len));
    }
}

/// Critical time and peak value of the last drawdown (needs at least two
/// events).
///
/// # Safety
/// `series` must be a live handle; `out_tc` and `out_peak` valid
/// destinations.
#[no_mangle]
pub unsafe extern "C" fn lv_critical_event(
    series: *const LvSeries,
    threshold: f64,
    out_tc: *mut f64,
    out_peak: *mut f64,
) -> LvStatus {
    if series.is_null() || out_tc.is_null() || out_peak.is_null() {
        return LvStatus::NullPointer;
    }
    match critical_event(&(*series).inner, threshold) {
        Ok((tc, peak)) => {
            *out_tc = tc;
            *out_peak = peak;
            LvStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// The seven LPPL parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LvLpplParams {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub m: f64,
    pub omega: f64,
    pub psi: f64,
    pub tc: f64,
}

impl From<LpplParams> for LvLpplParams {
    fn from(p: LpplParams) -> Self {
        Self {
            a: p.a,
            b: p.b,
            c: p.c,
            m: p.m,
            omega: p.omega,
            psi: p.psi,
            tc: p.tc,
        }
    }
}

/// Evaluate the LPPL at a pre-critical time.
///
/// # Safety
/// `params` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn lv_lppl_eval(
    params: *const LvLpplParams,
    t: f64,
    out: *mut f64,
) -> LvStatus {
    if params.is_null() || out.is_null() {
        return LvStatus::NullPointer;
    }
    let p = *params;
    let rust = LpplParams {
        a: p.a,
        b: p.b,
        c: p.c,
        m: p.m,
        omega: p.omega,
        psi: p.psi,
        tc: p.tc,
    };
    match lppl_eval(&rust, t) {
        Ok(v) => {
            *out = v;
            LvStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Search-space bounds and optimizer budget for the fitters.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LvSearchConfig {
    pub m_lo: f64,
    pub m_hi: f64,
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub tc_step_samples: f64,
    pub tc_max_offset_frac: f64,
    pub multistart_m: usize,
    pub multistart_omega: usize,
    pub ftol: f64,
    pub xtol: f64,
    pub max_evals: u64,
}

impl From<LvSearchConfig> for SearchConfig {
    fn from(c: LvSearchConfig) -> Self {
        Self {
            m_bounds: (c.m_lo, c.m_hi),
            omega_bounds: (c.omega_lo, c.omega_hi),
            tc_step_samples: c.tc_step_samples,
            tc_max_offset_frac: c.tc_max_offset_frac,
            multistart_m: c.multistart_m,
            multistart_omega: c.multistart_omega,
            ftol: c.ftol,
            xtol: c.xtol,
            max_evals: c.max_evals,
        }
    }
}

/// The library's default search configuration.
#[no_mangle]
pub extern "C" fn lv_search_config_default() -> LvSearchConfig {
    let d = SearchConfig::default();
    LvSearchConfig {
        m_lo: d.m_bounds.0,
        m_hi: d.m_bounds.1,
        omega_lo: d.omega_bounds.0,
        omega_hi: d.omega_bounds.1,
        tc_step_samples: d.tc_step_samples,
        tc_max_offset_frac: d.tc_max_offset_frac,
        multistart_m: d.multistart_m,
        multistart_omega: d.multistart_omega,
        ftol: d.ftol,
        xtol: d.xtol,
        max_evals: d.max_evals,
    }
}

fn window_of(series: &TimeSeries, start: usize, end: usize) -> Result<WindowSpec, Error> {
    if end >= series.len() {
        return Err(Error::InvalidInput(format!(
            "window end {end} outside series of {} samples",
            series.len()
        )));
    }
    WindowSpec::new(start, end, WindowLabel::Subsample(0))
}

/// Subordinated fit over the sample window `[start, end]`. `config` may be
/// NULL for defaults.
///
/// # Safety
/// `series` must be a live handle; out pointers valid; `config` NULL or
/// valid.
#[no_mangle]
pub unsafe extern "C" fn lv_fit_subordinated(
    series: *const LvSeries,
    start: usize,
    end: usize,
    config: *const LvSearchConfig,
    out_params: *mut LvLpplParams,
    out_sse: *mut f64,
    out_converged: *mut bool,
) -> LvStatus {
    if series.is_null() || out_params.is_null() || out_sse.is_null() || out_converged.is_null() {
        return LvStatus::NullPointer;
    }
    let cfg: SearchConfig = if config.is_null() {
        SearchConfig::default()
    } else {
        (*config).into()
    };
    let ts = &(*series).inner;
    let window = match window_of(ts, start, end) {
        Ok(w) => w,
        Err(e) => return status_of(&e),
    };
    match fit_subordinated(ts, &window, &cfg) {
        Ok(fit) => {
            debug_assert_eq!(fit.algorithm, Algorithm::Subordinated);
            if let FitParams::Lppl(p) = fit.params {
                *out_params = p.into();
            }
            *out_sse = fit.sse;
            *out_converged = fit.converged;
            LvStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Exponential trend parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LvExpTrendParams {
    pub a: f64,
    pub b: f64,
    pub m: f64,
}

/// Log-divergent reduction parameters.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct LvLogDivergentParams {
    pub b: f64,
    pub d: f64,
    pub omega: f64,
    pub psi: f64,
    pub tc: f64,
}

/// Phase-transition fit over the sample window `[start, end]`. `config` may
/// be NULL for defaults.
///
/// # Safety
/// As for [`lv_fit_subordinated`].
#[no_mangle]
pub unsafe extern "C" fn lv_fit_phase_transition(
    series: *const LvSeries,
    start: usize,
    end: usize,
    config: *const LvSearchConfig,
    out_trend: *mut LvExpTrendParams,
    out_log_divergent: *mut LvLogDivergentParams,
    out_sse: *mut f64,
    out_converged: *mut bool,
) -> LvStatus {
    if series.is_null()
        || out_trend.is_null()
        || out_log_divergent.is_null()
        || out_sse.is_null()
        || out_converged.is_null()
    {
        return LvStatus::NullPointer;
    }
    let cfg: SearchConfig = if config.is_null() {
        SearchConfig::default()
    } else {
        (*config).into()
    };
    let ts = &(*series).inner;
    let window = match window_of(ts, start, end) {
        Ok(w) => w,
        Err(e) => return status_of(&e),
    };
    match fit_phase_transition(ts, &window, &cfg) {
        Ok(fit) => {
            if let FitParams::Detrended {
                trend,
                log_divergent,
            } = fit.params
            {
                *out_trend = LvExpTrendParams {
                    a: trend.a,
                    b: trend.b,
                    m: trend.m,
                };
                *out_log_divergent = LvLogDivergentParams {
                    b: log_divergent.b,
                    d: log_divergent.d,
                    omega: log_divergent.omega,
                    psi: log_divergent.psi,
                    tc: log_divergent.tc,
                };
            }
            *out_sse = fit.sse;
            *out_converged = fit.converged;
            LvStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Holm-Bonferroni correction. `paper_naive` keeps multipliers only (values
/// above 1 are reported as-is); otherwise the standard step-down form with
/// running maximum and cap applies. `out` must hold `len` doubles.
///
/// # Safety
/// `p_raw` must point to `len` readable doubles and `out` to `len` writable
/// doubles.
#[no_mangle]
pub unsafe extern "C" fn lv_holm_bonferroni(
    p_raw: *const f64,
    len: usize,
    paper_naive: bool,
    out: *mut f64,
) -> LvStatus {
    if p_raw.is_null() || out.is_null() {
        return LvStatus::NullPointer;
    }
    let raw = std::slice::from_raw_parts(p_raw, len);
    let mode = if paper_naive {
        HolmMode::PaperNaive
    } else {
        HolmMode::Standard
    };
    match holm_bonferroni(raw, mode) {
        Ok(corrected) => {
            std::ptr::copy_nonoverlapping(corrected.as_ptr(), out, len);
            LvStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

/// Two-sided t-test on two error samples. Paired mode pairs elements by
/// index and requires equal lengths.
///
/// # Safety
/// `a` and `b` must point to `na` and `nb` readable doubles; out pointers
/// valid.
#[no_mangle]
pub unsafe extern "C" fn lv_t_test(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    paired: bool,
    out_t: *mut f64,
    out_dof: *mut f64,
    out_p: *mut f64,
) -> LvStatus {
    if a.is_null() || b.is_null() || out_t.is_null() || out_dof.is_null() || out_p.is_null() {
        return LvStatus::NullPointer;
    }
    if paired && na != nb {
        return LvStatus::InvalidPairing;
    }
    let xs = std::slice::from_raw_parts(a, na);
    let ys = std::slice::from_raw_parts(b, nb);
    let mut sa = ErrorSample::new(WindowFraction::Half);
    let mut sb = ErrorSample::new(WindowFraction::Third);
    for (i, &v) in xs.iter().enumerate() {
        if let Err(e) = sa.insert(i as u64, v) {
            return status_of(&e);
        }
    }
    for (i, &v) in ys.iter().enumerate() {
        if let Err(e) = sb.insert(i as u64, v) {
            return status_of(&e);
        }
    }
    match t_test(&sa, &sb, paired) {
        Ok(r) => {
            *out_t = r.t_stat;
            *out_dof = r.dof;
            *out_p = r.p_value;
            LvStatus::Ok
        }
        Err(e) => status_of(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn make_series(values: &[f64]) -> *mut LvSeries {
        let mut out = std::ptr::null_mut();
        let status = unsafe { lv_series_new(0.0, 1.0, values.as_ptr(), values.len(), &mut out) };
        assert_eq!(status, LvStatus::Ok);
        out
    }

    #[test]
    fn series_round_trip_through_handles() {
        let values = [1.0, 1.2, 1.0, 1.25, 1.3, 1.05, 1.4];
        let s = make_series(&values);
        unsafe {
            assert_eq!(lv_series_len(s), 7);
            let mut v = 0.0;
            assert_eq!(lv_series_value(s, 4, &mut v), LvStatus::Ok);
            assert_eq!(v, 1.3);
            assert_eq!(lv_series_value(s, 99, &mut v), LvStatus::InvalidInput);
            lv_series_free(s);
        }
    }

    #[test]
    fn null_arguments_are_rejected() {
        unsafe {
            let mut out = std::ptr::null_mut();
            assert_eq!(
                lv_series_new(0.0, 1.0, std::ptr::null(), 3, &mut out),
                LvStatus::NullPointer
            );
            assert_eq!(
                lv_series_new(0.0, -1.0, [1.0, 2.0].as_ptr(), 2, &mut out),
                LvStatus::InvalidInput
            );
        }
    }

    #[test]
    fn segmentation_matches_library_semantics() {
        let s = make_series(&[1.0, 1.2, 1.0, 1.25, 1.3, 1.05, 1.4]);
        unsafe {
            let mut events = std::ptr::null_mut();
            let mut len = 0usize;
            assert_eq!(
                lv_segment_drawdowns(s, 0.15, &mut events, &mut len),
                LvStatus::Ok
            );
            assert_eq!(len, 2);
            let evs = std::slice::from_raw_parts(events, len);
            assert_eq!(evs[0].peak_index, 1);
            assert!(evs[0].has_end && evs[0].end_index == 3);
            assert_eq!(evs[1].peak_index, 4);
            lv_events_free(events, len);

            let mut tc = 0.0;
            let mut peak = 0.0;
            assert_eq!(lv_critical_event(s, 0.15, &mut tc, &mut peak), LvStatus::Ok);
            assert_eq!(tc, 4.0);
            assert_eq!(peak, 1.3);
            lv_series_free(s);
        }
    }

    #[test]
    fn not_enough_events_maps_to_code() {
        let s = make_series(&[2.0, 1.0]);
        unsafe {
            let mut tc = 0.0;
            let mut peak = 0.0;
            assert_eq!(
                lv_critical_event(s, 0.15, &mut tc, &mut peak),
                LvStatus::NotEnoughEvents
            );
            lv_series_free(s);
        }
    }

    #[test]
    fn subordinated_fit_recovers_synthetic_truth() {
        let truth = LpplParams {
            a: 2.0,
            b: -1.1,
            c: 0.12,
            m: 0.5,
            omega: 8.0,
            psi: 1.3,
            tc: 175.0,
        };
        let values: Vec<f64> = (0..160)
            .map(|i| lppl_eval(&truth, i as f64).unwrap())
            .collect();
        let s = make_series(&values);
        unsafe {
            let mut params = LvLpplParams {
                a: 0.0,
                b: 0.0,
                c: 0.0,
                m: 0.0,
                omega: 0.0,
                psi: 0.0,
                tc: 0.0,
            };
            let mut sse = 0.0;
            let mut converged = false;
            let status = lv_fit_subordinated(
                s,
                0,
                159,
                std::ptr::null(),
                &mut params,
                &mut sse,
                &mut converged,
            );
            assert_eq!(status, LvStatus::Ok);
            assert!(converged);
            assert!((params.tc - truth.tc).abs() <= 1.0 + 1e-9);
            assert!((params.m - truth.m).abs() < 1e-3);
            lv_series_free(s);
        }
    }

    #[test]
    fn holm_matches_published_triple() {
        let raw = [0.49, 0.35, 0.81];
        let mut out = [0.0; 3];
        unsafe {
            assert_eq!(
                lv_holm_bonferroni(raw.as_ptr(), 3, true, out.as_mut_ptr()),
                LvStatus::Ok
            );
        }
        assert!((out[0] - 0.98).abs() < 1e-12);
        assert!((out[1] - 1.05).abs() < 1e-12);
        assert!((out[2] - 0.81).abs() < 1e-12);
    }

    #[test]
    fn t_test_through_the_abi() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [2.0, 3.0, 4.0, 5.0, 6.0];
        let (mut t, mut dof, mut p) = (0.0, 0.0, 0.0);
        unsafe {
            assert_eq!(
                lv_t_test(a.as_ptr(), 5, b.as_ptr(), 5, false, &mut t, &mut dof, &mut p),
                LvStatus::Ok
            );
        }
        assert!((t + 1.0).abs() < 1e-12);
        assert!((dof - 8.0).abs() < 1e-12);
        assert!((p - 0.34659350708733425).abs() < 1e-10);
    }

    #[test]
    fn status_messages_are_static_c_strings() {
        for status in [LvStatus::Ok, LvStatus::BlowUp, LvStatus::BadEncoding] {
            let ptr = lv_status_message(status);
            assert!(!ptr.is_null());
            let text = unsafe { CStr::from_ptr(ptr) }.to_str().unwrap();
            assert!(!text.is_empty());
        }
    }

    #[test]
    fn generated_header_declares_the_surface() {
        let header = include_str!("../include/lppl_vnv.h");
        for decl in [
            "LvStatus",
            "LvSeries",
            "LvDrawdownEvent",
            "LvLpplParams",
            "lv_series_new",
            "lv_series_free",
            "lv_segment_drawdowns",
            "lv_fit_subordinated",
            "lv_fit_phase_transition",
            "lv_holm_bonferroni",
            "lv_t_test",
            "lv_status_message",
        ] {
            assert!(header.contains(decl), "header is missing `{decl}`");
        }
    }
}
