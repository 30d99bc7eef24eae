#ifndef PREFATTACH_H
#define PREFATTACH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Growth regime selected by the sign of delta.
typedef enum PaRegime {
  PA_REGIME_STATIC = 0,
  PA_REGIME_LOGARITHMIC = 1,
  PA_REGIME_POWER = 2,
} PaRegime;

// Result code of every call.
typedef enum PaStatus {
  PA_STATUS_OK = 0,
  PA_STATUS_NULL_POINTER = 1,
  PA_STATUS_PARAMETER_DOMAIN = 2,
  PA_STATUS_INVALID_ARGUMENT = 3,
  PA_STATUS_RESOURCE = 4,
  PA_STATUS_IO = 5,
  PA_STATUS_FORMAT = 6,
  PA_STATUS_PANIC = 7,
} PaStatus;

// A growing graph.
typedef struct PaGraph PaGraph;

// Incremental common-friend counter for one pair.
typedef struct PaTracker PaTracker;

// Exponents and rates for one `(c, delta)`.
typedef struct PaConstants {
  double gamma;
  double gamma1;
  double gamma2;
  enum PaRegime regime;
  // `2 gamma - 1`.
  double power_exponent;
  // `c (c - 1) / (2c + delta)^2`.
  double pair_rate;
} PaConstants;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty if none. Valid
// until the next failing call on the same thread.
const char *pa_last_error(void);

// Library version as a static NUL-terminated string.
const char *pa_version(void);

// New graph with one node carrying `c` self-loops.
//
// # Safety
// `out` must be valid for a pointer write.
enum PaStatus pa_graph_new(uint32_t c, double delta, uint64_t seed, struct PaGraph **out);

// Releases a graph; null is ignored.
//
// # Safety
// `graph` must come from this library and not be used afterwards.
void pa_graph_free(struct PaGraph *graph);

// Current number of nodes.
//
// # Safety
// Pointers must be valid.
enum PaStatus pa_graph_n(const struct PaGraph *graph, size_t *out);

// Degree of node `i` (1-based), counting multiplicity.
//
// # Safety
// Pointers must be valid.
enum PaStatus pa_graph_degree(const struct PaGraph *graph, size_t i, uint32_t *out);

// Common-friend count of `(i, j)` recomputed from the adjacency lists.
//
// # Safety
// Pointers must be valid.
enum PaStatus pa_graph_common_friends(const struct PaGraph *graph,
                                      size_t i,
                                      size_t j,
                                      uint64_t *out);

// Grows the graph to `target_n` nodes, updating `count` trackers on the way.
// Every tracker must be at the graph's current size.
//
// # Safety
// `trackers` must point to `count` valid tracker pointers (or be null when
// `count` is 0), none of them aliasing each other.
enum PaStatus pa_graph_grow(struct PaGraph *graph,
                            size_t target_n,
                            struct PaTracker *const *trackers,
                            size_t count);

// Writes a snapshot of the graph to `path`.
//
// # Safety
// `graph` must be valid and `path` a NUL-terminated string.
enum PaStatus pa_graph_save(const struct PaGraph *graph, const char *path);

// Restores a graph saved with [`pa_graph_save`]; evolution continues with
// the same random stream.
//
// # Safety
// `path` must be a NUL-terminated string and `out` valid for a pointer write.
enum PaStatus pa_graph_load(const char *path, struct PaGraph **out);

// Starts tracking `(i, j)` on the graph as it is now; needs `1 <= i < j <= n`.
//
// # Safety
// `graph` must be valid and `out` valid for a pointer write.
enum PaStatus pa_tracker_new(const struct PaGraph *graph,
                             size_t i,
                             size_t j,
                             struct PaTracker **out);

// Releases a tracker; null is ignored.
//
// # Safety
// `tracker` must come from this library and not be used afterwards.
void pa_tracker_free(struct PaTracker *tracker);

// Current common-friend count.
//
// # Safety
// Pointers must be valid.
enum PaStatus pa_tracker_common_friends(const struct PaTracker *tracker, uint64_t *out);

// Graph size the tracker has seen.
//
// # Safety
// Pointers must be valid.
enum PaStatus pa_tracker_n(const struct PaTracker *tracker, uint64_t *out);

// Product of the shifted degrees of the pair.
//
// # Safety
// Pointers must be valid.
enum PaStatus pa_tracker_degree_product(const struct PaTracker *tracker, double *out);

// Common-friend count divided by its regime normaliser.
//
// # Safety
// Pointers must be valid.
enum PaStatus pa_tracker_scaled(const struct PaTracker *tracker, double *out);

// Exponents, regime and pair rate for `(c, delta)`.
//
// # Safety
// `out` must be valid for a write.
enum PaStatus pa_constants(uint32_t c, double delta, struct PaConstants *out);

// Mean of the limiting scaled degree product of `(i, j)`, `2 <= i < j`.
//
// # Safety
// `out` must be valid for a write.
enum PaStatus pa_c_ij(uint32_t c, double delta, uint64_t i, uint64_t j, double *out);

// Exact mean shifted degree of node `i` at size `n`.
//
// # Safety
// `out` must be valid for a write.
enum PaStatus pa_expected_shifted_degree(uint32_t c,
                                         double delta,
                                         uint64_t i,
                                         uint64_t n,
                                         double *out);

// Exact mean product of shifted degrees of `(i, j)` at size `n`.
//
// # Safety
// `out` must be valid for a write.
enum PaStatus pa_expected_degree_product(uint32_t c,
                                         double delta,
                                         uint64_t i,
                                         uint64_t j,
                                         uint64_t n,
                                         double *out);

// Estimate of the common-friend count at size `n` from the count observed
// at `floor(n / k)`, `k > 1`.
//
// # Safety
// `out` must be valid for a write.
enum PaStatus pa_estimate(uint32_t c,
                          double delta,
                          uint64_t subsample_count,
                          double k,
                          double *out);

// Size at which the subsample is read for size `n` and factor `k`.
uint64_t pa_subsample_time(uint64_t n, double k);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PREFATTACH_H */
