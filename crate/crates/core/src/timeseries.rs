//! Uniformly sampled time series plus the drawdown segmentation and
//! window-construction machinery that turns a raw trajectory into analysis
//! windows.
//!
//! A *drawdown* is a peak-to-trough decline of at least a threshold fraction
//! of the peak value. The critical event of a series is the start (peak) of
//! its last drawdown; analysis windows run from the end of the second-to-last
//! drawdown to the first sample at which the series reaches a given fraction
//! of the final peak value.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniformly sampled scalar series. The time of sample `i` is exactly
/// `t0 + i * dt`; there are no gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
}

impl TimeSeries {
    /// Build a series, validating `dt > 0`, at least two samples and finite
    /// values.
    pub fn new(t0: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() || !t0.is_finite() {
            return Err(Error::InvalidInput(format!(
                "time grid must be finite with dt > 0, got t0={t0}, dt={dt}"
            )));
        }
        if values.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "series needs at least 2 samples, got {}",
                values.len()
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value at index {bad}"
            )));
        }
        Ok(Self { t0, dt, values })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // at least two samples by construction
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Time of sample `i`, computed directly from the grid (never
    /// accumulated).
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Write as two-column CSV (`time,value` with a header row). Values are
    /// printed with the shortest representation that round-trips in f64.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time,value")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.time(i), v)?;
        }
        Ok(())
    }

    pub fn write_csv_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut buf = std::io::BufWriter::new(f);
        self.write_csv(&mut buf)?;
        buf.flush()?;
        Ok(())
    }

    /// Read a two-column `time,value` CSV, reconstructing the uniform grid.
    /// The time column must sit on a uniform grid to within 1e-9 relative.
    pub fn read_csv<R: std::io::Read>(r: R) -> Result<Self> {
        let reader = BufReader::new(r);
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if lineno == 0 {
                // header row
                continue;
            }
            let mut cols = line.split(',');
            let (t, v) = match (cols.next(), cols.next()) {
                (Some(t), Some(v)) => (t, v),
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "line {}: expected `time,value`",
                        lineno + 1
                    )))
                }
            };
            let t: f64 = t.trim().parse().map_err(|_| {
                Error::InvalidInput(format!("line {}: bad time `{t}`", lineno + 1))
            })?;
            let v: f64 = v.trim().parse().map_err(|_| {
                Error::InvalidInput(format!("line {}: bad value `{v}`", lineno + 1))
            })?;
            times.push(t);
            values.push(v);
        }
        if times.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "series needs at least 2 samples, got {}",
                times.len()
            )));
        }
        let t0 = times[0];
        let dt_raw = times[1] - times[0];
        if !(dt_raw > 0.0) {
            return Err(Error::InvalidInput(format!(
                "time column must be strictly increasing, got dt={dt_raw}"
            )));
        }
        // The first difference carries the rounding of `fl(t0 + dt)`; a
        // 12-digit decimal snap recovers grids written from short decimals
        // exactly. Keep whichever candidate tracks the column better.
        let dt_snap: f64 = format!("{dt_raw:.12e}").parse().unwrap_or(dt_raw);
        let deviation = |dt: f64| -> f64 {
            times
                .iter()
                .enumerate()
                .map(|(i, &t)| (t - (t0 + i as f64 * dt)).abs())
                .fold(0.0, f64::max)
        };
        let dt = if deviation(dt_snap) <= deviation(dt_raw) {
            dt_snap
        } else {
            dt_raw
        };
        for (i, &t) in times.iter().enumerate() {
            let expect = t0 + i as f64 * dt;
            let tol = 1e-9 * expect.abs().max(1.0);
            if (t - expect).abs() > tol {
                return Err(Error::InvalidInput(format!(
                    "time column is not a uniform grid at row {} ({} vs {})",
                    i + 2,
                    t,
                    expect
                )));
            }
        }
        Self::new(t0, dt, values)
    }

    pub fn read_csv_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(f)
    }
}

/// One peak-to-trough decline of at least the detection threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DrawdownEvent {
    pub peak_index: usize,
    pub peak_value: f64,
    pub trough_index: usize,
    pub trough_value: f64,
    /// First index at which the series strictly exceeds the opening peak.
    /// Absent when the decline never recovers before the series ends.
    pub end_index: Option<usize>,
    /// `(peak_value - trough_value) / peak_value`.
    pub magnitude: f64,
}

/// Window-class tag: one of the three peak-value fractions, or a subsample id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowLabel {
    Half,
    Third,
    Quarter,
    Subsample(u32),
}

impl std::fmt::Display for WindowLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WindowLabel::Half => write!(f, "half"),
            WindowLabel::Third => write!(f, "third"),
            WindowLabel::Quarter => write!(f, "quarter"),
            WindowLabel::Subsample(k) => write!(f, "subsample-{k}"),
        }
    }
}

/// The peak-value fraction at which an analysis window ends.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowFraction {
    Half,
    Third,
    Quarter,
}

impl WindowFraction {
    pub const ALL: [WindowFraction; 3] = [
        WindowFraction::Half,
        WindowFraction::Third,
        WindowFraction::Quarter,
    ];

    pub fn value(self) -> f64 {
        match self {
            WindowFraction::Half => 0.5,
            WindowFraction::Third => 1.0 / 3.0,
            WindowFraction::Quarter => 0.25,
        }
    }

    pub fn label(self) -> WindowLabel {
        match self {
            WindowFraction::Half => WindowLabel::Half,
            WindowFraction::Third => WindowLabel::Third,
            WindowFraction::Quarter => WindowLabel::Quarter,
        }
    }
}

impl std::fmt::Display for WindowFraction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WindowFraction::Half => write!(f, "half"),
            WindowFraction::Third => write!(f, "third"),
            WindowFraction::Quarter => write!(f, "quarter"),
        }
    }
}

/// Half-open-by-convention sample window `[start_index, end_index]`; its
/// length is `end_index - start_index`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub start_index: usize,
    pub end_index: usize,
    pub label: WindowLabel,
}

impl WindowSpec {
    pub fn new(start_index: usize, end_index: usize, label: WindowLabel) -> Result<Self> {
        if start_index >= end_index {
            return Err(Error::InvalidInput(format!(
                "window start {start_index} must precede end {end_index}"
            )));
        }
        Ok(Self {
            start_index,
            end_index,
            label,
        })
    }

    pub fn len(&self) -> usize {
        self.end_index - self.start_index
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// Scan left to right maintaining a running peak. A drawdown opens at the
/// running-peak index once the series falls to `(1 - threshold) * peak` or
/// below; its trough is the minimum before recovery; it closes at the first
/// index whose value strictly exceeds the opening peak. A final unrecovered
/// drawdown is reported with `end_index` absent.
pub fn segment_drawdowns(ts: &TimeSeries, threshold: f64) -> Result<Vec<DrawdownEvent>> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(Error::InvalidInput(format!(
            "drawdown threshold must lie in (0,1), got {threshold}"
        )));
    }
    let v = ts.values();

    struct Open {
        peak_index: usize,
        trough_index: usize,
    }

    let mut events = Vec::new();
    let mut peak_index = 0usize;
    let mut open: Option<Open> = None;

    for i in 1..v.len() {
        match open {
            None => {
                if v[i] > v[peak_index] {
                    peak_index = i;
                } else {
                    let peak = v[peak_index];
                    if peak <= 0.0 {
                        return Err(Error::DegenerateData(format!(
                            "nonpositive running peak {peak} at index {peak_index}"
                        )));
                    }
                    if v[i] <= (1.0 - threshold) * peak {
                        open = Some(Open {
                            peak_index,
                            trough_index: i,
                        });
                    }
                }
            }
            Some(ref mut o) => {
                if v[i] > v[o.peak_index] {
                    events.push(close_event(v, o.peak_index, o.trough_index, Some(i)));
                    open = None;
                    peak_index = i;
                } else if v[i] < v[o.trough_index] {
                    o.trough_index = i;
                }
            }
        }
    }
    if let Some(o) = open {
        events.push(close_event(v, o.peak_index, o.trough_index, None));
    }
    Ok(events)
}

fn close_event(
    v: &[f64],
    peak_index: usize,
    trough_index: usize,
    end_index: Option<usize>,
) -> DrawdownEvent {
    let peak_value = v[peak_index];
    let trough_value = v[trough_index];
    DrawdownEvent {
        peak_index,
        peak_value,
        trough_index,
        trough_value,
        end_index,
        magnitude: (peak_value - trough_value) / peak_value,
    }
}

/// Peak time and peak value of the last drawdown. At least two events are
/// required so that a window start (end of the second-to-last drawdown)
/// exists.
pub fn critical_event(ts: &TimeSeries, threshold: f64) -> Result<(f64, f64)> {
    let events = segment_drawdowns(ts, threshold)?;
    if events.len() < 2 {
        return Err(Error::NotEnoughEvents {
            found: events.len(),
        });
    }
    let last = events.last().expect("nonempty");
    Ok((ts.time(last.peak_index), last.peak_value))
}

/// Analysis window for one peak-value fraction: starts at the end of the
/// second-to-last drawdown and ends at the first sample, strictly before the
/// final peak, whose value reaches `fraction * peak_value`.
pub fn analysis_window(
    ts: &TimeSeries,
    events: &[DrawdownEvent],
    fraction: WindowFraction,
    min_len: usize,
) -> Result<WindowSpec> {
    if events.len() < 2 {
        return Err(Error::NotEnoughEvents {
            found: events.len(),
        });
    }
    let last = &events[events.len() - 1];
    let prior = &events[events.len() - 2];
    let start = prior.end_index.ok_or_else(|| {
        Error::InvalidInput("second-to-last drawdown never recovered".to_string())
    })?;
    let level = fraction.value() * last.peak_value;
    let v = ts.values();
    let end = (start..last.peak_index)
        .find(|&i| v[i] >= level)
        .ok_or_else(|| Error::NoWindow {
            level: fraction.to_string(),
        })?;
    let len = end.saturating_sub(start);
    if len < min_len.max(1) {
        return Err(Error::WindowTooShort {
            len,
            min: min_len.max(1),
        });
    }
    WindowSpec::new(start, end, fraction.label())
}

/// `count` windows sharing `w`'s right endpoint, left endpoints swept from
/// `w.start_index` in equal integer steps while keeping at least `min_len`
/// samples in every window. Deterministic for fixed inputs.
pub fn subsample_windows(w: &WindowSpec, count: usize, min_len: usize) -> Result<Vec<WindowSpec>> {
    if count < 1 {
        return Err(Error::InvalidInput("subsample count must be >= 1".into()));
    }
    if min_len > w.len() {
        return Err(Error::WindowTooShort {
            len: w.len(),
            min: min_len,
        });
    }
    if count == 1 {
        return Ok(vec![WindowSpec {
            start_index: w.start_index,
            end_index: w.end_index,
            label: WindowLabel::Subsample(0),
        }]);
    }
    let avail = w.len() - min_len;
    let spacing = avail / (count - 1);
    if spacing == 0 {
        return Err(Error::WindowTooShort {
            len: w.len(),
            min: min_len + (count - 1),
        });
    }
    Ok((0..count)
        .map(|k| WindowSpec {
            start_index: w.start_index + k * spacing,
            end_index: w.end_index,
            label: WindowLabel::Subsample(k as u32),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn series(values: &[f64]) -> TimeSeries {
        TimeSeries::new(0.0, 1.0, values.to_vec()).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeSeries::new(0.0, 0.0, vec![1.0, 2.0]).is_err());
        assert!(TimeSeries::new(0.0, -0.1, vec![1.0, 2.0]).is_err());
        assert!(TimeSeries::new(0.0, 1.0, vec![1.0]).is_err());
        assert!(TimeSeries::new(0.0, 1.0, vec![1.0, f64::NAN]).is_err());
    }

    #[test]
    fn time_grid_is_exact() {
        let ts = TimeSeries::new(2.0, 0.25, vec![0.0; 9]).unwrap();
        assert_eq!(ts.time(0), 2.0);
        assert_eq!(ts.time(8), 2.0 + 8.0 * 0.25);
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let values = vec![1.0, 0.1234567890123456, 7.2e-13, 3.0f64.sqrt()];
        let ts = TimeSeries::new(0.5, 0.005, values).unwrap();
        let mut buf = Vec::new();
        ts.write_csv(&mut buf).unwrap();
        let back = TimeSeries::read_csv(&buf[..]).unwrap();
        assert_eq!(ts, back);
        let mut buf2 = Vec::new();
        back.write_csv(&mut buf2).unwrap();
        assert_eq!(buf, buf2);
    }

    #[test]
    fn csv_rejects_nonuniform_grid() {
        let text = "time,value\n0,1\n1,2\n2.5,3\n";
        assert!(matches!(
            TimeSeries::read_csv(text.as_bytes()),
            Err(Error::InvalidInput(_))
        ));
    }

    // Hand trace of the scan rule on the seven-point series.
    #[test]
    fn segments_two_recovered_drawdowns() {
        let ts = series(&[1.0, 1.2, 1.0, 1.25, 1.3, 1.05, 1.4]);
        let events = segment_drawdowns(&ts, 0.15).unwrap();
        assert_eq!(events.len(), 2);

        assert_eq!(events[0].peak_index, 1);
        assert_eq!(events[0].trough_index, 2);
        assert_eq!(events[0].end_index, Some(3));
        assert_relative_eq!(events[0].magnitude, 0.2 / 1.2, max_relative = 1e-12);

        assert_eq!(events[1].peak_index, 4);
        assert_eq!(events[1].trough_index, 5);
        assert_eq!(events[1].end_index, Some(6));
        assert_relative_eq!(events[1].magnitude, 0.25 / 1.3, max_relative = 1e-12);
    }

    #[test]
    fn increasing_series_has_no_events() {
        let ts = series(&[1.0, 1.1, 1.2, 1.3, 1.4]);
        assert!(segment_drawdowns(&ts, 0.15).unwrap().is_empty());
    }

    #[test]
    fn final_decline_is_unrecovered() {
        let ts = series(&[2.0, 1.0]);
        let events = segment_drawdowns(&ts, 0.15).unwrap();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].peak_index, 0);
        assert_eq!(events[0].trough_index, 1);
        assert_eq!(events[0].end_index, None);
        assert_relative_eq!(events[0].magnitude, 0.5);
    }

    #[test]
    fn nonpositive_running_peak_errors() {
        let ts = series(&[-1.0, -2.0]);
        assert!(matches!(
            segment_drawdowns(&ts, 0.15),
            Err(Error::DegenerateData(_))
        ));
        // A negative start that immediately rises never tests the bad peak.
        let ts = series(&[-1.0, 2.0, 2.1]);
        assert!(segment_drawdowns(&ts, 0.15).unwrap().is_empty());
    }

    #[test]
    fn every_event_magnitude_meets_threshold() {
        let ts = series(&[1.0, 1.2, 1.0, 1.25, 1.3, 1.05, 1.4, 0.9, 1.5, 0.2]);
        for threshold in [0.1, 0.15, 0.3] {
            for e in segment_drawdowns(&ts, threshold).unwrap() {
                assert!(e.magnitude >= threshold);
                assert!(e.peak_index < e.trough_index);
                if let Some(end) = e.end_index {
                    assert!(end > e.trough_index);
                }
            }
        }
    }

    #[test]
    fn critical_event_is_last_peak() {
        let ts = series(&[1.0, 1.2, 1.0, 1.25, 1.3, 1.05, 1.4]);
        let (tc, peak) = critical_event(&ts, 0.15).unwrap();
        assert_eq!(tc, 4.0);
        assert_eq!(peak, 1.3);
    }

    #[test]
    fn critical_event_needs_two_drawdowns() {
        let ts = series(&[2.0, 1.0]);
        assert!(matches!(
            critical_event(&ts, 0.15),
            Err(Error::NotEnoughEvents { found: 1 })
        ));
    }

    #[test]
    fn analysis_window_ends_at_first_crossing() {
        // Prior drawdown recovers at index 3, then a slow ramp to the final
        // peak at index 13 and an unrecovered crash.
        let mut values = vec![1.0, 0.5, 0.9, 1.05];
        for i in 0..10 {
            values.push(1.1 + i as f64 * 1.0); // 1.1 .. 10.1
        }
        values.push(3.0); // crash from peak 10.1
        let ts = series(&values);
        let events = segment_drawdowns(&ts, 0.15).unwrap();
        assert_eq!(events.len(), 2);
        assert_eq!(events[1].peak_index, 13);

        let w = analysis_window(&ts, &events, WindowFraction::Half, 1).unwrap();
        assert_eq!(w.start_index, 3);
        // Half of the 10.1 peak is 5.05; the first value at or above it is
        // 5.1 at index 8.
        assert_eq!(w.end_index, 8);

        let w3 = analysis_window(&ts, &events, WindowFraction::Third, 1).unwrap();
        let w4 = analysis_window(&ts, &events, WindowFraction::Quarter, 1).unwrap();
        assert!(w4.end_index <= w3.end_index && w3.end_index <= w.end_index);
    }

    #[test]
    fn analysis_window_too_short_errors() {
        let values = vec![1.0, 0.5, 0.9, 1.05, 0.9, 2.0, 3.0, 1.0];
        let ts = series(&values);
        let events = segment_drawdowns(&ts, 0.15).unwrap();
        assert!(matches!(
            analysis_window(&ts, &events, WindowFraction::Half, 50),
            Err(Error::WindowTooShort { .. })
        ));
    }

    #[test]
    fn subsample_grid_matches_even_spacing() {
        let w = WindowSpec::new(0, 100, WindowLabel::Half).unwrap();
        let subs = subsample_windows(&w, 5, 20).unwrap();
        let starts: Vec<usize> = subs.iter().map(|s| s.start_index).collect();
        assert_eq!(starts, vec![0, 20, 40, 60, 80]);
        assert!(subs.iter().all(|s| s.end_index == 100));
        assert_eq!(subs[3].label, WindowLabel::Subsample(3));
    }

    #[test]
    fn subsample_count_one_is_identity() {
        let w = WindowSpec::new(5, 60, WindowLabel::Third).unwrap();
        let subs = subsample_windows(&w, 1, 10).unwrap();
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].start_index, 5);
        assert_eq!(subs[0].end_index, 60);
    }

    #[test]
    fn subsample_infeasible_spacing_errors() {
        let w = WindowSpec::new(0, 10, WindowLabel::Half).unwrap();
        assert!(matches!(
            subsample_windows(&w, 3, 9),
            Err(Error::WindowTooShort { .. })
        ));
    }

    #[test]
    fn segmentation_is_deterministic() {
        let ts = series(&[1.0, 1.2, 1.0, 1.25, 1.3, 1.05, 1.4, 0.9, 1.5]);
        let a = segment_drawdowns(&ts, 0.15).unwrap();
        let b = segment_drawdowns(&ts, 0.15).unwrap();
        assert_eq!(a, b);
    }

    // Gluing a fully recovered series onto itself, continued geometrically
    // from its final value, doubles the event list with equal magnitudes.
    #[test]
    fn geometric_self_concatenation_doubles_events() {
        let base = [1.0, 1.2, 1.0, 1.25, 1.3, 1.05, 1.4];
        let scale = base[base.len() - 1] / base[0];
        let mut values = base.to_vec();
        values.extend(base.iter().skip(1).map(|v| v * scale));
        let ts = series(&values);

        let single = segment_drawdowns(&series(&base), 0.15).unwrap();
        let doubled = segment_drawdowns(&ts, 0.15).unwrap();
        assert_eq!(doubled.len(), 2 * single.len());
        for (k, e) in doubled.iter().enumerate() {
            let src = &single[k % single.len()];
            assert_relative_eq!(e.magnitude, src.magnitude, max_relative = 1e-12);
        }
    }
}
