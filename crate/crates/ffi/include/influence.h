#ifndef INFLUENCE_H
#define INFLUENCE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Number of descriptor columns per order in `inf_engine_push_slice`.
#define INF_DESCRIPTOR_COUNT 7

typedef enum InfStatus {
  INF_STATUS_OK = 0,
  INF_STATUS_NULL_POINTER = 1,
  INF_STATUS_INVALID_ARGUMENT = 2,
  INF_STATUS_CONFIG = 3,
  INF_STATUS_DOMAIN = 4,
  INF_STATUS_IO = 5,
  INF_STATUS_PANIC = 6,
} InfStatus;

typedef enum InfQualityKind {
  // `p1` when both rates reach `param`, else 0.
  INF_QUALITY_KIND_FLOOR = 0,
  // Smaller of the two joint rates; `param` is ignored.
  INF_QUALITY_KIND_MIN = 1,
  // `param * P1 + (1 - param) * P0`.
  INF_QUALITY_KIND_WEIGHTED = 2,
} InfQualityKind;

// Streaming engine handle.
typedef struct InfEngine InfEngine;

// Report of one analyzed slice.
typedef struct InfReport InfReport;

typedef struct InfQuality {
  enum InfQualityKind kind;
  double param;
} InfQuality;

// Fitted two-sided rule: fires when `z < theta_minus` or `z > theta_plus`.
typedef struct InfTwoSided {
  double theta_minus;
  double theta_plus;
  double power;
  double p1;
  double p0;
} InfTwoSided;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL
// terminated, truncated to `len`). Returns the full message length, 0 when
// there is no error.
size_t inf_last_error(char *buf, size_t len);

// Creates an engine. `config_json` may be null for the defaults; otherwise
// it is a JSON object whose fields override them.
enum InfStatus inf_engine_new(const char *config_json, struct InfEngine **out);

void inf_engine_free(struct InfEngine *engine);

// Feeds one slice. `descriptors` holds `n` rows of `INF_DESCRIPTOR_COUNT`
// raw values in portfolio CSV column order; `performance` holds `n`
// evaluations. Slices must be pushed in increasing order.
enum InfStatus inf_engine_push_slice(struct InfEngine *engine,
                                     uint32_t slice_id,
                                     size_t n,
                                     const uint32_t *order_ids,
                                     const double *descriptors,
                                     const double *performance,
                                     struct InfReport **out);

void inf_report_free(struct InfReport *report);

uint32_t inf_report_slice(const struct InfReport *report);

// Nonzero when the slice was not analyzed.
int32_t inf_report_is_skipped(const struct InfReport *report);

size_t inf_report_active_orders(const struct InfReport *report);

double inf_report_max_influence(const struct InfReport *report);

// Number of groups in the report (0 for a skipped slice).
size_t inf_report_group_count(const struct InfReport *report);

// Influence of group `index` in catalogue order.
enum InfStatus inf_report_group_influence(const struct InfReport *report,
                                          size_t index,
                                          double *out);

size_t inf_report_dominating_count(const struct InfReport *report);

// Label of dominating group `index`, released with `inf_string_free`.
enum InfStatus inf_report_dominating(const struct InfReport *report, size_t index, char **out);

// The full report as JSON, released with `inf_string_free`.
enum InfStatus inf_report_to_json(const struct InfReport *report, char **out);

void inf_string_free(char *s);

// Best two-sided rule for `y` (nonzero = bad) from `z`. With `pin_lower`
// nonzero, `theta_minus` is fixed at 0. Infinite thresholds mean the side
// never fires.
enum InfStatus inf_fit_two_sided(const double *z,
                                 const uint8_t *y,
                                 size_t n,
                                 struct InfQuality quality_fn,
                                 int32_t pin_lower,
                                 struct InfTwoSided *out);

// Tags the orders below the `q`-quantile of `performance`. Writes 0/1 into
// `y_out` (length `n`) and the quantile into `threshold_out`.
enum InfStatus inf_binarize(const double *performance,
                            size_t n,
                            double q,
                            uint8_t *y_out,
                            double *threshold_out);

// Mutual information ratio between predictions and truth, both 0/1 arrays.
enum InfStatus inf_mir(const uint8_t *yhat, const uint8_t *y, size_t n, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INFLUENCE_H */
