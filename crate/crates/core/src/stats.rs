//! Forecast-error aggregation, t-tests, and the Holm-Bonferroni multiple
//! testing correction.
//!
//! The Student-t tail probability is evaluated through the regularized
//! incomplete beta function (continued fraction, 1e-10 absolute target).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::WindowFraction;

/// Per-simulation absolute forecast errors for one window class, keyed by
/// simulation id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSample {
    pub window_class: WindowFraction,
    pub errors: BTreeMap<u64, f64>,
}

impl ErrorSample {
    pub fn new(window_class: WindowFraction) -> Self {
        Self {
            window_class,
            errors: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, sim_id: u64, error: f64) -> Result<()> {
        if !(error >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "forecast error must be nonnegative, got {error}"
            )));
        }
        if self.errors.insert(sim_id, error).is_some() {
            return Err(Error::InvalidInput(format!(
                "duplicate simulation id {sim_id}"
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.errors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Arithmetic mean of the absolute errors.
pub fn mean_absolute_error(sample: &ErrorSample) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::InvalidInput("empty error sample".into()));
    }
    Ok(sample.errors.values().sum::<f64>() / sample.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_stat: f64,
    pub dof: f64,
    pub p_value: f64,
    pub paired: bool,
    pub n: usize,
}

/// Two-sided t-test between two error samples. Paired mode runs a one-sample
/// test on per-simulation differences and requires identical id sets;
/// unpaired mode is Welch's test with Welch-Satterthwaite degrees of freedom.
pub fn t_test(a: &ErrorSample, b: &ErrorSample, paired: bool) -> Result<TTestResult> {
    if paired {
        if a.errors.len() != b.errors.len()
            || !a.errors.keys().eq(b.errors.keys())
        {
            return Err(Error::InvalidPairing);
        }
        let n = a.errors.len();
        if n < 2 {
            return Err(Error::InvalidInput(
                "paired test needs at least 2 pairs".into(),
            ));
        }
        let d: Vec<f64> = a
            .errors
            .values()
            .zip(b.errors.values())
            .map(|(x, y)| x - y)
            .collect();
        let mean = d.iter().sum::<f64>() / n as f64;
        let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        if var == 0.0 {
            if mean == 0.0 {
                // Identical samples carry no evidence either way.
                return Ok(TTestResult {
                    t_stat: 0.0,
                    dof: (n - 1) as f64,
                    p_value: 1.0,
                    paired: true,
                    n,
                });
            }
            return Err(Error::DegenerateTest(
                "differences have zero variance but nonzero mean".into(),
            ));
        }
        let t = mean / (var / n as f64).sqrt();
        let dof = (n - 1) as f64;
        Ok(TTestResult {
            t_stat: t,
            dof,
            p_value: student_t_two_sided_p(t, dof),
            paired: true,
            n,
        })
    } else {
        let na = a.errors.len();
        let nb = b.errors.len();
        if na < 2 || nb < 2 {
            return Err(Error::InvalidInput(
                "unpaired test needs at least 2 observations per sample".into(),
            ));
        }
        let xs: Vec<f64> = a.errors.values().copied().collect();
        let ys: Vec<f64> = b.errors.values().copied().collect();
        let ma = xs.iter().sum::<f64>() / na as f64;
        let mb = ys.iter().sum::<f64>() / nb as f64;
        let va = xs.iter().map(|x| (x - ma).powi(2)).sum::<f64>() / (na - 1) as f64;
        let vb = ys.iter().map(|y| (y - mb).powi(2)).sum::<f64>() / (nb - 1) as f64;
        let se2 = va / na as f64 + vb / nb as f64;
        if se2 == 0.0 {
            if ma == mb {
                return Ok(TTestResult {
                    t_stat: 0.0,
                    dof: (na + nb - 2) as f64,
                    p_value: 1.0,
                    paired: false,
                    n: na.min(nb),
                });
            }
            return Err(Error::DegenerateTest(
                "both samples have zero variance".into(),
            ));
        }
        let t = (ma - mb) / se2.sqrt();
        let dof = se2 * se2
            / ((va / na as f64).powi(2) / (na - 1) as f64
                + (vb / nb as f64).powi(2) / (nb - 1) as f64);
        Ok(TTestResult {
            t_stat: t,
            dof,
            p_value: student_t_two_sided_p(t, dof),
            paired: false,
            n: na.min(nb),
        })
    }
}

/// Holm-Bonferroni operating mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HolmMode {
    /// Step-down multipliers with running-maximum monotonicity, capped at 1.
    Standard,
    /// Multipliers only: no monotonicity pass and no cap, so corrected values
    /// above 1 are reported as-is.
    PaperNaive,
}

impl std::fmt::Display for HolmMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            HolmMode::Standard => write!(f, "standard"),
            HolmMode::PaperNaive => write!(f, "paper-naive"),
        }
    }
}

/// Holm-Bonferroni correction: the k-th smallest raw p is multiplied by
/// `(m - k + 1)`; results are reported in the original order.
pub fn holm_bonferroni(p_raw: &[f64], mode: HolmMode) -> Result<Vec<f64>> {
    if p_raw.is_empty() {
        return Err(Error::InvalidInput("no p-values to correct".into()));
    }
    if let Some(bad) = p_raw.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidInput(format!(
            "p-value {bad} outside [0, 1]"
        )));
    }
    let m = p_raw.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&i, &j| p_raw[i].total_cmp(&p_raw[j]).then(i.cmp(&j)));

    let mut corrected = vec![0.0; m];
    let mut running_max = 0.0f64;
    for (k, &idx) in order.iter().enumerate() {
        let mut c = p_raw[idx] * (m - k) as f64;
        if mode == HolmMode::Standard {
            running_max = running_max.max(c);
            c = running_max.min(1.0);
        }
        corrected[idx] = c;
    }
    Ok(corrected)
}

/// One row of the hypothesis-test report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisTestRow {
    pub label: String,
    pub p_raw: f64,
    /// May exceed 1 in paper-naive mode.
    pub p_corrected: f64,
    pub n: usize,
}

impl HypothesisTestRow {
    /// Corrected p as rendered in reports: values above 1 print as `>1`.
    pub fn corrected_cell(&self, mode: HolmMode) -> String {
        if mode == HolmMode::PaperNaive && self.p_corrected > 1.0 {
            ">1".to_string()
        } else {
            format!("{:.2}", self.p_corrected)
        }
    }
}

// --- Student-t tail probability -------------------------------------------

/// Two-sided p-value for a t-statistic at the given degrees of freedom.
pub fn student_t_two_sided_p(t: f64, dof: f64) -> f64 {
    if !t.is_finite() {
        return 0.0;
    }
    let x = dof / (dof + t * t);
    regularized_incomplete_beta(0.5 * dof, 0.5, x).clamp(0.0, 1.0)
}

/// Regularized incomplete beta function `I_x(a, b)` via Lentz's continued
/// fraction, with the symmetry transform for fast convergence.
pub fn regularized_incomplete_beta(a: f64, b: f64, x: f64) -> f64 {
    assert!(a > 0.0 && b > 0.0, "shape parameters must be positive");
    assert!((0.0..=1.0).contains(&x), "x must lie in [0,1]");
    if x == 0.0 {
        return 0.0;
    }
    if x == 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b)
        + a * x.ln()
        + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Continued fraction for the incomplete beta (Lentz's algorithm).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const MAX_ITER: usize = 300;
    const EPS: f64 = 1e-15;
    const TINY: f64 = 1e-300;

    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;

    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;

    for m in 1..=MAX_ITER {
        let m_f = m as f64;
        let m2 = 2.0 * m_f;

        let aa = m_f * (b - m_f) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;

        let aa = -(a + m_f) * (qab + m_f) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;

        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Log-gamma by the Lanczos approximation (g = 7, 9 coefficients).
fn ln_gamma(z: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    if z < 0.5 {
        // Reflection for the left half-plane.
        let pi = std::f64::consts::PI;
        return pi.ln() - (pi * z).sin().abs().ln() - ln_gamma(1.0 - z);
    }
    let z = z - 1.0;
    let mut x = 0.99999999999980993;
    for (i, &c) in COEFFS.iter().enumerate() {
        x += c / (z + i as f64 + 1.0);
    }
    let t = z + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (z + 0.5) * t.ln() - t + x.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    fn sample(class: WindowFraction, errors: &[f64]) -> ErrorSample {
        let mut s = ErrorSample::new(class);
        for (i, &e) in errors.iter().enumerate() {
            s.insert(i as u64, e).unwrap();
        }
        s
    }

    #[test]
    fn ln_gamma_spot_values() {
        assert_abs_diff_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(ln_gamma(5.0), 24.0f64.ln(), epsilon = 1e-12);
        assert_abs_diff_eq!(
            ln_gamma(0.5),
            std::f64::consts::PI.sqrt().ln(),
            epsilon = 1e-13
        );
    }

    #[test]
    fn incomplete_beta_matches_reference() {
        let cases = [
            (0.5, 0.5, 0.3, 0.36901011956554538),
            (2.0, 3.0, 0.4, 0.52480000000000004),
            (5.5, 0.5, 0.9, 0.29251845539577321),
            (4.0, 4.0, 0.5, 0.5),
            (0.25, 7.0, 0.05, 0.79027244927304195),
        ];
        for (a, b, x, want) in cases {
            assert_abs_diff_eq!(
                regularized_incomplete_beta(a, b, x),
                want,
                epsilon = 1e-10
            );
        }
    }

    #[test]
    fn student_t_tail_matches_reference() {
        let cases = [
            (1.0, 1.0, 0.5),
            (2.0, 5.0, 0.10193947882985836),
            (2.776445105, 4.0, 0.050000000010119479),
            (0.5, 30.0, 0.62072300488512729),
            (3.5, 12.5, 0.0041351410457612798),
            (1.9599, 1e6, 0.050007756937383308),
        ];
        for (t, dof, want) in cases {
            assert_abs_diff_eq!(student_t_two_sided_p(t, dof), want, epsilon = 1e-10);
            // Symmetric in the sign of t.
            assert_abs_diff_eq!(student_t_two_sided_p(-t, dof), want, epsilon = 1e-10);
        }
    }

    #[test]
    fn welch_test_matches_reference() {
        let a = sample(WindowFraction::Half, &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let b = sample(WindowFraction::Third, &[2.0, 3.0, 4.0, 5.0, 6.0]);
        let r = t_test(&a, &b, false).unwrap();
        assert_relative_eq!(r.t_stat, -1.0, max_relative = 1e-12);
        assert_relative_eq!(r.dof, 8.0, max_relative = 1e-12);
        assert_abs_diff_eq!(r.p_value, 0.34659350708733425, epsilon = 1e-10);

        // Unequal sizes exercise the Welch-Satterthwaite formula.
        let a = sample(WindowFraction::Half, &[0.5, 1.5, 2.5]);
        let b = sample(WindowFraction::Third, &[2.0, 2.2, 2.4, 2.6, 2.8, 3.0]);
        let r = t_test(&a, &b, false).unwrap();
        assert_relative_eq!(r.t_stat, -1.6744367165578427, max_relative = 1e-12);
        assert_relative_eq!(r.dof, 2.285320771288275, max_relative = 1e-12);
        assert_abs_diff_eq!(r.p_value, 0.22027169070694628, epsilon = 1e-10);
    }

    #[test]
    fn paired_test_matches_reference() {
        let a = sample(WindowFraction::Half, &[1.0, 2.0, 3.0, 4.0, 5.0]);
        let b = sample(WindowFraction::Third, &[1.1, 2.3, 2.6, 4.4, 5.2]);
        let r = t_test(&a, &b, true).unwrap();
        assert_relative_eq!(r.t_stat, -0.86154979034128573, max_relative = 1e-11);
        assert_eq!(r.dof, 4.0);
        assert_abs_diff_eq!(r.p_value, 0.43751978747715909, epsilon = 1e-10);
    }

    #[test]
    fn identical_paired_samples_give_p_one() {
        let a = sample(WindowFraction::Half, &[1.0, 2.0, 3.0]);
        let b = sample(WindowFraction::Third, &[1.0, 2.0, 3.0]);
        let r = t_test(&a, &b, true).unwrap();
        assert_eq!(r.t_stat, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn constant_nonzero_differences_are_degenerate() {
        let a = sample(WindowFraction::Half, &[1.0, 2.0, 3.0]);
        let b = sample(WindowFraction::Third, &[2.0, 3.0, 4.0]);
        assert!(matches!(
            t_test(&a, &b, true),
            Err(Error::DegenerateTest(_))
        ));
    }

    #[test]
    fn paired_translation_invariance() {
        let a = sample(WindowFraction::Half, &[1.0, 2.5, 3.0, 4.5]);
        let b = sample(WindowFraction::Third, &[1.5, 2.0, 3.5, 4.0]);
        let ra = t_test(&a, &b, true).unwrap();
        let shift = |s: &ErrorSample| {
            let mut out = ErrorSample::new(s.window_class);
            for (&k, &v) in &s.errors {
                out.insert(k, v + 10.0).unwrap();
            }
            out
        };
        let rb = t_test(&shift(&a), &shift(&b), true).unwrap();
        assert_relative_eq!(ra.t_stat, rb.t_stat, max_relative = 1e-12);
    }

    #[test]
    fn swapping_samples_flips_t_and_keeps_p() {
        let a = sample(WindowFraction::Half, &[1.0, 2.0, 3.0, 4.0]);
        let b = sample(WindowFraction::Third, &[2.0, 2.5, 4.0, 5.5]);
        for paired in [true, false] {
            let ab = t_test(&a, &b, paired).unwrap();
            let ba = t_test(&b, &a, paired).unwrap();
            assert_relative_eq!(ab.t_stat, -ba.t_stat, max_relative = 1e-12);
            assert_relative_eq!(ab.p_value, ba.p_value, max_relative = 1e-12);
        }
    }

    // The paired t-statistic is scale invariant, so a lone nonzero
    // difference pins t at +-1 no matter its size; the growing difference
    // only moves p against a fixed noise floor in the other pairs.
    #[test]
    fn growing_single_difference_shrinks_p() {
        let floor = [0.3, -0.25, 0.2, -0.35];
        let mut last_p = 1.0;
        for delta in [0.5, 1.0, 2.0, 4.0] {
            let a = sample(WindowFraction::Half, &[10.0; 5]);
            let mut b_vals: Vec<f64> = floor.iter().map(|f| 10.0 - f).collect();
            b_vals.push(10.0 - delta);
            let b = sample(WindowFraction::Third, &b_vals);
            let r = t_test(&a, &b, true).unwrap();
            assert!(r.p_value < last_p, "p did not shrink at delta={delta}");
            last_p = r.p_value;
        }
    }

    #[test]
    fn mismatched_ids_reject_pairing() {
        let mut a = ErrorSample::new(WindowFraction::Half);
        a.insert(0, 1.0).unwrap();
        a.insert(1, 2.0).unwrap();
        let mut b = ErrorSample::new(WindowFraction::Third);
        b.insert(0, 1.0).unwrap();
        b.insert(2, 2.0).unwrap();
        assert!(matches!(t_test(&a, &b, true), Err(Error::InvalidPairing)));
    }

    #[test]
    fn holm_paper_naive_reproduces_published_triple() {
        let corrected = holm_bonferroni(&[0.49, 0.35, 0.81], HolmMode::PaperNaive).unwrap();
        assert_relative_eq!(corrected[0], 0.98, max_relative = 1e-12);
        assert_relative_eq!(corrected[1], 1.05, max_relative = 1e-12);
        assert_relative_eq!(corrected[2], 0.81, max_relative = 1e-12);
    }

    #[test]
    fn holm_standard_applies_running_max_and_cap() {
        let corrected = holm_bonferroni(&[0.49, 0.35, 0.81], HolmMode::Standard).unwrap();
        assert_eq!(corrected, vec![1.0, 1.0, 1.0]);

        // A triple where the step-down structure survives the cap.
        let corrected = holm_bonferroni(&[0.01, 0.04, 0.3], HolmMode::Standard).unwrap();
        assert_relative_eq!(corrected[0], 0.03, max_relative = 1e-12);
        assert_relative_eq!(corrected[1], 0.08, max_relative = 1e-12);
        assert_relative_eq!(corrected[2], 0.3, max_relative = 1e-12);
    }

    #[test]
    fn holm_single_p_unchanged() {
        for mode in [HolmMode::Standard, HolmMode::PaperNaive] {
            assert_eq!(holm_bonferroni(&[0.2], mode).unwrap(), vec![0.2]);
        }
    }

    #[test]
    fn holm_standard_is_monotone() {
        let raw = [0.31, 0.02, 0.6, 0.02, 0.11, 0.97, 0.45];
        let corrected = holm_bonferroni(&raw, HolmMode::Standard).unwrap();
        for i in 0..raw.len() {
            for j in 0..raw.len() {
                if raw[i] <= raw[j] {
                    assert!(corrected[i] <= corrected[j] + 1e-15);
                }
            }
        }
    }

    #[test]
    fn holm_rejects_out_of_range() {
        assert!(holm_bonferroni(&[0.5, 1.2], HolmMode::Standard).is_err());
        assert!(holm_bonferroni(&[], HolmMode::Standard).is_err());
    }

    #[test]
    fn mae_basics() {
        let s = sample(WindowFraction::Half, &[0.0, 0.0, 0.0]);
        assert_eq!(mean_absolute_error(&s).unwrap(), 0.0);
        let s = sample(WindowFraction::Half, &[1.0, 2.0, 3.0]);
        assert_eq!(mean_absolute_error(&s).unwrap(), 2.0);
        assert!(mean_absolute_error(&ErrorSample::new(WindowFraction::Half)).is_err());
    }

    #[test]
    fn mae_matches_naive_resummation() {
        let vals: Vec<f64> = (0..100).map(|i| ((i * 37) % 101) as f64 / 7.0).collect();
        let s = sample(WindowFraction::Quarter, &vals);
        let naive = vals.iter().fold(0.0, |acc, v| acc + v) / vals.len() as f64;
        assert_relative_eq!(mean_absolute_error(&s).unwrap(), naive, max_relative = 1e-14);
    }

    #[test]
    fn corrected_cell_renders_overflow() {
        let row = HypothesisTestRow {
            label: "x".into(),
            p_raw: 0.35,
            p_corrected: 1.05,
            n: 10,
        };
        assert_eq!(row.corrected_cell(HolmMode::PaperNaive), ">1");
        let row = HypothesisTestRow {
            p_corrected: 0.98,
            ..row
        };
        assert_eq!(row.corrected_cell(HolmMode::PaperNaive), "0.98");
    }
}
