#ifndef GRAPHNOTICE_H
#define GRAPHNOTICE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Kind of a single trace operation.
typedef enum GnOpKind {
  GN_OP_KIND_INSERT = 0,
  GN_OP_KIND_DELETE = 1,
} GnOpKind;

// Result codes. `Ok` is zero; the others mirror the library's error kinds.
typedef enum GnStatus {
  GN_STATUS_OK = 0,
  GN_STATUS_NULL_POINTER = 1,
  GN_STATUS_INVALID_GRAPH = 2,
  GN_STATUS_SHAPE = 3,
  GN_STATUS_EMPTY_SAMPLE = 4,
  GN_STATUS_DEGENERATE = 5,
  GN_STATUS_INFEASIBLE = 6,
  GN_STATUS_NOT_APPLICABLE = 7,
  GN_STATUS_NUMERICAL = 8,
  GN_STATUS_DIVERGENCE = 9,
  GN_STATUS_OUT_OF_RANGE = 10,
  GN_STATUS_PARSE = 11,
  GN_STATUS_CONFIG = 12,
  GN_STATUS_USAGE = 13,
  GN_STATUS_IO = 14,
  GN_STATUS_INVALID_UTF8 = 15,
  GN_STATUS_PANIC = 16,
} GnStatus;

// Opaque graph handle.
typedef struct GnGraph GnGraph;

// Opaque attack trace handle.
typedef struct GnTrace GnTrace;

// Noticeability report. `has_statistic`/`has_p_value` are 0 when the
// corresponding value is undefined; `noticeable` is -1 when undefined.
typedef struct GnReport {
  int32_t has_statistic;
  double statistic;
  int32_t has_p_value;
  double p_value;
  double threshold;
  int32_t noticeable;
} GnReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *gn_last_error_message(void);

// Builds a graph on `n` nodes from `num_edges` pairs stored as
// `edges[2k], edges[2k+1]`.
//
// # Safety
// `edges` must point to `2 * num_edges` values; `out` must be writable.
enum GnStatus gn_graph_new(size_t n, const size_t *edges, size_t num_edges, struct GnGraph **out);

// Loads a dataset directory (`edges.txt`, optional `features.csv` and `labels.txt`).
//
// # Safety
// `dir` must be a NUL-terminated string; `out` must be writable.
enum GnStatus gn_graph_load_dir(const char *dir, struct GnGraph **out);

// Releases a graph. Null is ignored.
//
// # Safety
// `g` must come from this library and not be used afterwards.
void gn_graph_free(struct GnGraph *g);

// Attaches a row-major `n × dim` feature matrix.
//
// # Safety
// `g` must be a live handle; `data` must hold `n * dim` values.
enum GnStatus gn_graph_set_features(struct GnGraph *g, const double *data, size_t dim);

// Attaches one class label per node.
//
// # Safety
// `g` must be a live handle; `labels` must hold `n` values.
enum GnStatus gn_graph_set_labels(struct GnGraph *g, const size_t *labels);

// # Safety
// `g` must be a live handle or null (returns 0).
size_t gn_graph_num_nodes(const struct GnGraph *g);

// # Safety
// `g` must be a live handle or null (returns 0).
size_t gn_graph_num_edges(const struct GnGraph *g);

// Copies the edges into `edges` as `2 * gn_graph_num_edges` values, sorted.
//
// # Safety
// `edges` must have room for `capacity` values.
enum GnStatus gn_graph_edges(const struct GnGraph *g, size_t *edges, size_t capacity);

// Per-node degrees, written to `out[0..n]`.
//
// # Safety
// `g` must be a live handle; `out` must hold `n` values.
enum GnStatus gn_graph_degrees(const struct GnGraph *g, double *out);

// Local clustering coefficients, written to `out[0..n]`.
//
// # Safety
// `g` must be a live handle; `out` must hold `n` values.
enum GnStatus gn_graph_clustering(const struct GnGraph *g, double *out);

// Node feature homophily, written to `out[0..n]`. Needs features.
//
// # Safety
// `g` must be a live handle; `out` must hold `n` values.
enum GnStatus gn_graph_homophily(const struct GnGraph *g, double *out);

// Area under the ROC curve of `scores` against binary `labels` (non-zero = positive).
//
// # Safety
// `labels` and `scores` must hold `len` values; `out` must be writable.
enum GnStatus gn_auroc(const uint8_t *labels, const double *scores, size_t len, double *out);

// Two-sample Kolmogorov-Smirnov test.
//
// # Safety
// `x`/`y` must hold `nx`/`ny` values; `d` and `p_value` must be writable.
enum GnStatus gn_ks_two_sample(const double *x,
                               size_t nx,
                               const double *y,
                               size_t ny,
                               double *d,
                               double *p_value);

// Statistical noticeability of `attacked` against `original`. `measure` is
// one of `degree_ks`, `clscoef_ks`, `degree_lr`, `homophily_ks`.
//
// # Safety
// Handles must be live; `measure` NUL-terminated; `out` writable.
enum GnStatus gn_measure(const char *measure,
                         const struct GnGraph *original,
                         const struct GnGraph *attacked,
                         struct GnReport *out);

// Learned noticeability: AUROC of `scorer` (`leo`, `gcn`, `svd`, `cosine`,
// `degree`, `clscoef`, `homophily`) separating original from inserted edges.
// `svd_rank` is used by the `svd` scorer only.
//
// # Safety
// Handles must be live; `scorer` NUL-terminated; `out` writable.
enum GnStatus gn_hidenseek(const char *scorer,
                           const struct GnGraph *original,
                           const struct GnGraph *attacked,
                           size_t svd_rank,
                           uint64_t seed,
                           struct GnReport *out);

// `delta` uniformly random edge insertions.
//
// # Safety
// `g` must be live; `out` writable.
enum GnStatus gn_attack_random(const struct GnGraph *g,
                               size_t delta,
                               uint64_t seed,
                               struct GnTrace **out);

// DICE: delete within-class edges, insert cross-class edges. Needs labels.
//
// # Safety
// `g` must be live; `out` writable.
enum GnStatus gn_attack_dice(const struct GnGraph *g,
                             size_t delta,
                             uint64_t seed,
                             struct GnTrace **out);

// Structack: links low-centrality nodes across communities.
//
// # Safety
// `g` must be live; `out` writable.
enum GnStatus gn_attack_structack(const struct GnGraph *g, size_t delta, struct GnTrace **out);

// Releases a trace. Null is ignored.
//
// # Safety
// `t` must come from this library and not be used afterwards.
void gn_trace_free(struct GnTrace *t);

// # Safety
// `t` must be a live handle or null (returns 0).
size_t gn_trace_len(const struct GnTrace *t);

// Operation `index` of the trace.
//
// # Safety
// `t` must be live; the out pointers writable.
enum GnStatus gn_trace_op(const struct GnTrace *t,
                          size_t index,
                          size_t *u,
                          size_t *v,
                          enum GnOpKind *kind);

// New graph with the first `prefix` operations of `t` applied to `g`.
//
// # Safety
// Handles must be live; `out` writable.
enum GnStatus gn_trace_apply(const struct GnGraph *g,
                             const struct GnTrace *t,
                             size_t prefix,
                             struct GnGraph **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GRAPHNOTICE_H */
