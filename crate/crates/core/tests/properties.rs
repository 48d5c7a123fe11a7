//! Property tests for the module invariants.

use lppl_vnv::lppl::{lppl_eval, LpplParams, TAU};
use lppl_vnv::stats::{holm_bonferroni, HolmMode};
use lppl_vnv::timeseries::{segment_drawdowns, subsample_windows, TimeSeries, WindowLabel, WindowSpec};
use proptest::prelude::*;

fn positive_series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.05f64..10.0, 3..120)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // Scaling all values by a positive constant leaves segmentation indices
    // and magnitudes unchanged: drawdowns are relative.
    #[test]
    fn drawdown_scale_invariance(values in positive_series(), scale in 0.01f64..100.0) {
        let ts = TimeSeries::new(0.0, 1.0, values.clone()).unwrap();
        let scaled = TimeSeries::new(0.0, 1.0, values.iter().map(|v| v * scale).collect()).unwrap();
        let a = segment_drawdowns(&ts, 0.15).unwrap();
        let b = segment_drawdowns(&scaled, 0.15).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for (ea, eb) in a.iter().zip(b.iter()) {
            prop_assert_eq!(ea.peak_index, eb.peak_index);
            prop_assert_eq!(ea.trough_index, eb.trough_index);
            prop_assert_eq!(ea.end_index, eb.end_index);
            prop_assert!((ea.magnitude - eb.magnitude).abs() <= 1e-9);
        }
    }

    // Every reported event meets the threshold and keeps its indices ordered.
    #[test]
    fn drawdown_events_are_well_formed(values in positive_series(), threshold in 0.05f64..0.5) {
        let ts = TimeSeries::new(0.0, 1.0, values).unwrap();
        let events = segment_drawdowns(&ts, threshold).unwrap();
        let mut previous_end = 0usize;
        for e in &events {
            prop_assert!(e.magnitude >= threshold - 1e-12);
            prop_assert!(e.peak_index < e.trough_index);
            prop_assert!(e.peak_index >= previous_end);
            if let Some(end) = e.end_index {
                prop_assert!(end > e.trough_index);
                previous_end = end;
            }
        }
    }

    // Segmentation is a pure function: repeated runs agree.
    #[test]
    fn drawdown_determinism(values in positive_series()) {
        let ts = TimeSeries::new(0.0, 1.0, values).unwrap();
        prop_assert_eq!(
            segment_drawdowns(&ts, 0.15).unwrap(),
            segment_drawdowns(&ts, 0.15).unwrap()
        );
    }

    // Full-period phase shifts and simultaneous (C, psi) sign flips leave
    // the model unchanged.
    #[test]
    fn lppl_phase_symmetries(
        a in -2.0f64..2.0,
        b in -2.0f64..-0.01,
        c in 0.0f64..0.5,
        m in 0.05f64..0.95,
        omega in 2.0f64..20.0,
        psi in -7.0f64..7.0,
        t in 0.0f64..49.0,
    ) {
        let p = LpplParams { a, b, c, m, omega, psi, tc: 50.0 };
        let v = lppl_eval(&p, t).unwrap();
        let shifted = LpplParams { psi: psi + TAU, ..p };
        let flipped = LpplParams { c: -c, psi: psi + std::f64::consts::PI, ..p };
        let tol = 1e-9 * (1.0 + v.abs());
        prop_assert!((v - lppl_eval(&shifted, t).unwrap()).abs() <= tol);
        prop_assert!((v - lppl_eval(&flipped, t).unwrap()).abs() <= tol);
    }

    // Standard-mode correction is monotone in the raw p-values and never
    // leaves [0, 1].
    #[test]
    fn holm_standard_monotone_and_capped(ps in prop::collection::vec(0.0f64..=1.0, 1..12)) {
        let corrected = holm_bonferroni(&ps, HolmMode::Standard).unwrap();
        for c in &corrected {
            prop_assert!((0.0..=1.0).contains(c));
        }
        for i in 0..ps.len() {
            for j in 0..ps.len() {
                if ps[i] <= ps[j] {
                    prop_assert!(corrected[i] <= corrected[j] + 1e-12);
                }
            }
        }
        // Paper-naive mode never reports below the raw value either.
        let naive = holm_bonferroni(&ps, HolmMode::PaperNaive).unwrap();
        for (c, p) in naive.iter().zip(ps.iter()) {
            prop_assert!(c >= p);
        }
    }

    // Subsample windows share the right endpoint, respect the minimum
    // length, and sweep starts monotonically.
    #[test]
    fn subsample_windows_stay_inside(
        start in 0usize..50,
        len in 20usize..400,
        count in 1usize..12,
        min_len in 5usize..20,
    ) {
        let w = WindowSpec::new(start, start + len, WindowLabel::Half).unwrap();
        match subsample_windows(&w, count, min_len) {
            Ok(subs) => {
                prop_assert_eq!(subs.len(), count);
                let mut last_start = None;
                for s in &subs {
                    prop_assert_eq!(s.end_index, w.end_index);
                    prop_assert!(s.start_index >= w.start_index);
                    prop_assert!(s.len() >= min_len);
                    if let Some(prev) = last_start {
                        prop_assert!(s.start_index > prev);
                    }
                    last_start = Some(s.start_index);
                }
            }
            Err(_) => {
                // Only legal when the spacing is infeasible.
                prop_assert!(len < min_len + count.saturating_sub(1));
            }
        }
    }

    // CSV serialization round-trips values exactly.
    #[test]
    fn csv_round_trip(values in prop::collection::vec(-1e6f64..1e6, 2..60)) {
        let ts = TimeSeries::new(0.25, 0.125, values).unwrap();
        let mut buf = Vec::new();
        ts.write_csv(&mut buf).unwrap();
        let back = TimeSeries::read_csv(&buf[..]).unwrap();
        prop_assert_eq!(ts, back);
    }
}
