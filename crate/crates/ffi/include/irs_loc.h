#ifndef IRS_LOC_H
#define IRS_LOC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum IrsStatus {
  IRS_STATUS_OK = 0,
  IRS_STATUS_NULL_POINTER = 1,
  IRS_STATUS_INVALID_ARGUMENT = 2,
  IRS_STATUS_INVALID_CONFIG = 3,
  IRS_STATUS_DEGENERATE_GEOMETRY = 4,
  IRS_STATUS_DOMAIN = 5,
  IRS_STATUS_SINGULAR_FIM = 6,
  IRS_STATUS_NUMERICAL = 7,
  IRS_STATUS_PARSE = 8,
  IRS_STATUS_IO = 9,
  IRS_STATUS_PANIC = 10,
} IrsStatus;

typedef enum IrsScheduleKind {
  IRS_SCHEDULE_KIND_DFT_SCAN = 0,
  IRS_SCHEDULE_KIND_RANDOM = 1,
  IRS_SCHEDULE_KIND_ORACLE_OPTIMAL = 2,
} IrsScheduleKind;

typedef enum IrsScheme {
  IRS_SCHEME_SEMI_PASSIVE_DFT = 0,
  IRS_SCHEME_SEMI_PASSIVE_RANDOM = 1,
  IRS_SCHEME_FULLY_PASSIVE = 2,
} IrsScheme;

typedef enum IrsSplitObjective {
  IRS_SPLIT_OBJECTIVE_TOA = 0,
  IRS_SPLIT_OBJECTIVE_DOA = 1,
} IrsSplitObjective;

// Opaque scenario handle.
typedef struct IrsScenario IrsScenario;

typedef struct IrsCrbReport {
  // s²
  double crb_tau;
  double crb_mu;
  // m²
  double crb_position;
  // Row-major 4×4 over (τ, μ, Re β, Im β).
  double fim_channel[16];
  // Row-major 4×4 over (x, y, Re β, Im β).
  double fim_position[16];
  bool closed_form_used;
} IrsCrbReport;

// Estimator settings. Zero grid sizes select the library defaults.
typedef struct IrsEstimatorOptions {
  size_t grid_doa;
  size_t grid_toa;
  bool refine;
  // false: plain sum over sensors and frames; true: maximum-ratio weights.
  bool maximum_ratio;
} IrsEstimatorOptions;

typedef struct IrsEstimate {
  double mu_hat;
  double tau_hat;
  double beta_re;
  double beta_im;
  double x_hat;
  double y_hat;
  bool feasible;
  bool low_confidence;
  // Absolute errors against the configured target; NaN when unavailable.
  double err_mu;
  double err_tau;
  double err_position_m;
} IrsEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *irs_version(void);

// Copies the calling thread's last error message into `buf` (always
// NUL-terminated when `len > 0`). Returns the full message length in
// bytes, excluding the terminator, so callers can size a retry.
//
// # Safety
// `buf` must be null or valid for `len` bytes.
size_t irs_last_error_message(char *buf, size_t len);

// Creates the reference scenario.
//
// # Safety
// `out` must be valid for one pointer write.
enum IrsStatus irs_scenario_new_default(struct IrsScenario **out);

// Parses a scenario from a JSON document and validates it.
//
// # Safety
// `json` must be a NUL-terminated string; `out` valid for one pointer write.
enum IrsStatus irs_scenario_from_json(const char *json, struct IrsScenario **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `h` must come from this library and not be used afterwards.
void irs_scenario_free(struct IrsScenario *h);

// Writes the scenario as JSON into `buf`; returns the required length
// (excluding NUL) through `needed`. Truncation is reported as
// `IRS_STATUS_INVALID_ARGUMENT` with `needed` filled in.
//
// # Safety
// `h` must be a live handle, `buf` null or valid for `len` bytes, and
// `needed` null or valid for one write.
enum IrsStatus irs_scenario_to_json(const struct IrsScenario *h,
                                    char *buf,
                                    size_t len,
                                    size_t *needed);

// Overrides the BS transmit power.
//
// # Safety
// `h` must be a live handle.
enum IrsStatus irs_scenario_set_tx_power_dbm(struct IrsScenario *h, double dbm);

// Sets the element counts. Zero leaves a count unchanged.
//
// # Safety
// `h` must be a live handle.
enum IrsStatus irs_scenario_set_elements(struct IrsScenario *h,
                                         size_t n_reflectors,
                                         size_t n_sensors,
                                         size_t n_frames);

// Cramér-Rao report. With `use_seed` false the fading is fixed at α = 1.
//
// # Safety
// `h` must be a live handle; `out` valid for one write.
enum IrsStatus irs_crb(const struct IrsScenario *h,
                       enum IrsScheduleKind kind,
                       bool use_seed,
                       uint64_t seed,
                       struct IrsCrbReport *out);

// Simulates one noisy trial under `scheme` and estimates the target.
// `options` may be null for the defaults.
//
// # Safety
// `h` must be a live handle, `options` null or valid, `out` valid for one write.
enum IrsStatus irs_estimate(const struct IrsScenario *h,
                            enum IrsScheme scheme,
                            uint64_t seed,
                            const struct IrsEstimatorOptions *options,
                            struct IrsEstimate *out);

// Best reflector/sensor split of `total` elements.
//
// # Safety
// `n_r` and `n_s` must be valid for one write each.
enum IrsStatus irs_optimal_split(size_t total,
                                 enum IrsSplitObjective objective,
                                 bool brute_force,
                                 size_t *n_r,
                                 size_t *n_s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IRS_LOC_H */
