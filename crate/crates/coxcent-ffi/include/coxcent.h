#ifndef COXCENT_H
#define COXCENT_H

#include <stdint.h>

// Status codes; the nonzero input/budget/invariant values match the CLI exit codes.
typedef enum CoxStatus {
  CoxStatus_Ok = 0,
  CoxStatus_NullArgument = 1,
  CoxStatus_InvalidInput = 2,
  CoxStatus_Budget = 3,
  CoxStatus_Invariant = 4,
  CoxStatus_Panic = 5,
} CoxStatus;

// Opaque result of an analysis.
typedef struct CoxAnalysis CoxAnalysis;

// Integer summary of an analysis. `free_rank` is −1 when `π₁` is not visibly free.
typedef struct CoxSummary {
  uint64_t vertices;
  uint64_t loops;
  uint64_t edges;
  uint64_t cells;
  uint64_t tours;
  uint64_t pi1_generators;
  int64_t free_rank;
  uint64_t window_classes;
  uint64_t center_order;
  uint64_t a_group_order;
  uint64_t normalizer_symmetries;
} CoxSummary;

// Group orders computed by brute-force enumeration.
typedef struct CoxOracleOrders {
  uint64_t group;
  uint64_t parabolic;
  uint64_t centralizer;
  uint64_t normalizer;
} CoxOracleOrders;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failure on this thread, or null. The pointer stays
// valid until the next failing call on the same thread.
const char *coxcent_last_error(void);

// Runs the full analysis on an instance document.
//
// # Safety
// `document` must be a NUL-terminated string; `out` must be writable.
enum CoxStatus coxcent_analyze(const char *document,
                               uint32_t bound,
                               const char *tree_preference,
                               struct CoxAnalysis **out);

// # Safety
// `handle` must be null or come from [`coxcent_analyze`] and not be freed yet.
void coxcent_analysis_free(struct CoxAnalysis *handle);

// # Safety
// `handle` must be a live analysis handle; `out` must be writable.
enum CoxStatus coxcent_summary(const struct CoxAnalysis *handle, struct CoxSummary *out);

// Writes the JSON report; free the string with [`coxcent_string_free`].
//
// # Safety
// `handle` must be a live analysis handle; `out` must be writable.
enum CoxStatus coxcent_report_json(const struct CoxAnalysis *handle, char **out);

// # Safety
// `s` must be null or a string returned by this library and not freed yet.
void coxcent_string_free(char *s);

// Brute-force orders for a finite group; `cap` bounds the enumeration.
//
// # Safety
// `document` must be a NUL-terminated string; `out` must be writable.
enum CoxStatus coxcent_oracle(const char *document, uint64_t cap, struct CoxOracleOrders *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COXCENT_H */
