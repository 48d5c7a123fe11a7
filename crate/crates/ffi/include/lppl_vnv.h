/* C API for the LPPL verification toolkit. */

#ifndef LPPL_VNV_H
#define LPPL_VNV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum LvStatus {
  LvStatus_Ok = 0,
  LvStatus_InvalidInput = 1,
  LvStatus_DegenerateData = 2,
  LvStatus_NotEnoughEvents = 3,
  LvStatus_NoWindow = 4,
  LvStatus_WindowTooShort = 5,
  LvStatus_NumericOverflow = 6,
  LvStatus_BlowUp = 7,
  LvStatus_DegenerateDesign = 8,
  LvStatus_FitFailed = 9,
  LvStatus_NoEstimate = 10,
  LvStatus_DegenerateTest = 11,
  LvStatus_InvalidPairing = 12,
  LvStatus_ExperimentFailed = 13,
  LvStatus_ConfigError = 14,
  LvStatus_IoError = 15,
  LvStatus_NullPointer = 16,
  LvStatus_BadEncoding = 17,
} LvStatus;

// Opaque uniformly sampled series handle.
typedef struct LvSeries LvSeries;

// One detected drawdown. `end_index` is meaningful only when `has_end` is
// true.
typedef struct LvDrawdownEvent {
  uintptr_t peak_index;
  double peak_value;
  uintptr_t trough_index;
  double trough_value;
  bool has_end;
  uintptr_t end_index;
  double magnitude;
} LvDrawdownEvent;

// The seven LPPL parameters.
typedef struct LvLpplParams {
  double a;
  double b;
  double c;
  double m;
  double omega;
  double psi;
  double tc;
} LvLpplParams;

// Search-space bounds and optimizer budget for the fitters.
typedef struct LvSearchConfig {
  double m_lo;
  double m_hi;
  double omega_lo;
  double omega_hi;
  double tc_step_samples;
  double tc_max_offset_frac;
  uintptr_t multistart_m;
  uintptr_t multistart_omega;
  double ftol;
  double xtol;
  uint64_t max_evals;
} LvSearchConfig;

// Exponential trend parameters.
typedef struct LvExpTrendParams {
  double a;
  double b;
  double m;
} LvExpTrendParams;

// Log-divergent reduction parameters.
typedef struct LvLogDivergentParams {
  double b;
  double d;
  double omega;
  double psi;
  double tc;
} LvLogDivergentParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Static description of a status code.
const char *lv_status_message(enum LvStatus status);

// Build a series from a value buffer. On success writes a new handle that
// must be released with [`lv_series_free`].
//
// # Safety
// `values` must point to `len` readable doubles and `out` must be a valid
// destination for one pointer.
enum LvStatus lv_series_new(double t0,
                            double dt,
                            const double *values,
                            uintptr_t len,
                            struct LvSeries **out);

// Read a `time,value` CSV into a new series handle.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid destination.
enum LvStatus lv_series_read_csv(const char *path, struct LvSeries **out);

// Write a series as `time,value` CSV.
//
// # Safety
// `series` must be a live handle and `path` a NUL-terminated string.
enum LvStatus lv_series_write_csv(const struct LvSeries *series, const char *path);

// Release a series handle. Accepts NULL.
//
// # Safety
// `series` must have been returned by this library and not yet freed.
void lv_series_free(struct LvSeries *series);

// Number of samples.
//
// # Safety
// `series` must be a live handle.
uintptr_t lv_series_len(const struct LvSeries *series);

// Sample value at an index; writes NaN-free data only for valid indices.
//
// # Safety
// `series` must be a live handle and `out` a valid destination.
enum LvStatus lv_series_value(const struct LvSeries *series, uintptr_t index, double *out);

// Segment drawdowns of at least `threshold` (a fraction of the running
// peak). On success writes a heap array to free with [`lv_events_free`].
//
// # Safety
// `series` must be a live handle; `out_events` and `out_len` valid
// destinations.
enum LvStatus lv_segment_drawdowns(const struct LvSeries *series,
                                   double threshold,
                                   struct LvDrawdownEvent **out_events,
                                   uintptr_t *out_len);

// Release an event array from [`lv_segment_drawdowns`]. Accepts NULL.
//
// # Safety
// `(events, len)` must come from this library and not be freed twice.
void lv_events_free(struct LvDrawdownEvent *events, uintptr_t len);

// Critical time and peak value of the last drawdown (needs at least two
// events).
//
// # Safety
// `series` must be a live handle; `out_tc` and `out_peak` valid
// destinations.
enum LvStatus lv_critical_event(const struct LvSeries *series,
                                double threshold,
                                double *out_tc,
                                double *out_peak);

// Evaluate the LPPL at a pre-critical time.
//
// # Safety
// `params` and `out` must be valid.
enum LvStatus lv_lppl_eval(const struct LvLpplParams *params, double t, double *out);

// The library's default search configuration.
struct LvSearchConfig lv_search_config_default(void);

// Subordinated fit over the sample window `[start, end]`. `config` may be
// NULL for defaults.
//
// # Safety
// `series` must be a live handle; out pointers valid; `config` NULL or
// valid.
enum LvStatus lv_fit_subordinated(const struct LvSeries *series,
                                  uintptr_t start,
                                  uintptr_t end,
                                  const struct LvSearchConfig *config,
                                  struct LvLpplParams *out_params,
                                  double *out_sse,
                                  bool *out_converged);

// Phase-transition fit over the sample window `[start, end]`. `config` may
// be NULL for defaults.
//
// # Safety
// As for [`lv_fit_subordinated`].
enum LvStatus lv_fit_phase_transition(const struct LvSeries *series,
                                      uintptr_t start,
                                      uintptr_t end,
                                      const struct LvSearchConfig *config,
                                      struct LvExpTrendParams *out_trend,
                                      struct LvLogDivergentParams *out_log_divergent,
                                      double *out_sse,
                                      bool *out_converged);

// Holm-Bonferroni correction. `paper_naive` keeps multipliers only (values
// above 1 are reported as-is); otherwise the standard step-down form with
// running maximum and cap applies. `out` must hold `len` doubles.
//
// # Safety
// `p_raw` must point to `len` readable doubles and `out` to `len` writable
// doubles.
enum LvStatus lv_holm_bonferroni(const double *p_raw, uintptr_t len, bool paper_naive, double *out);

// Two-sided t-test on two error samples. Paired mode pairs elements by
// index and requires equal lengths.
//
// # Safety
// `a` and `b` must point to `na` and `nb` readable doubles; out pointers
// valid.
enum LvStatus lv_t_test(const double *a,
                        uintptr_t na,
                        const double *b,
                        uintptr_t nb,
                        bool paired,
                        double *out_t,
                        double *out_dof,
                        double *out_p);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LPPL_VNV_H */
