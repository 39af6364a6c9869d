#ifndef S2RQ_H
#define S2RQ_H

/* Generated by cbindgen from the s2rq-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by fallible functions.
typedef enum s2rq_status {
  S2RQ_STATUS_OK = 0,
  S2RQ_STATUS_INVALID_ARGUMENT = 1,
  S2RQ_STATUS_IO = 2,
  S2RQ_STATUS_PARSE = 3,
  S2RQ_STATUS_PIPELINE = 4,
} s2rq_status;

// Opaque handle to a loaded execution graph.
typedef struct s2rq_graph s2rq_graph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Last error message for this thread, or NULL when the previous call
// succeeded. Free with `s2rq_string_free`.
char *s2rq_last_error(void);

// Frees a string returned by this library.
//
// # Safety
// `s` must be a pointer previously returned by an `s2rq_*` function and not
// yet freed; NULL is accepted.
void s2rq_string_free(char *s);

// Loads an execution graph file. Returns NULL on failure.
//
// # Safety
// `path` must be a valid NUL-terminated string or NULL.
struct s2rq_graph *s2rq_graph_load(const char *path);

// Builds a graph from a directory of trace files and writes it to
// `out_path`, returning the loaded handle. Returns NULL on failure.
//
// # Safety
// Both arguments must be valid NUL-terminated strings or NULL.
struct s2rq_graph *s2rq_graph_build(const char *trace_dir, const char *out_path);

// Frees a graph handle.
//
// # Safety
// `graph` must be a pointer previously returned by `s2rq_graph_load` or
// `s2rq_graph_build` and not yet freed; NULL is accepted.
void s2rq_graph_free(struct s2rq_graph *graph);

// Number of screens in the graph, including the synthetic start node.
//
// # Safety
// `graph` must be a valid handle or NULL (which returns -1).
int s2rq_graph_node_count(const struct s2rq_graph *graph);

// Number of interaction edges in the graph.
//
// # Safety
// `graph` must be a valid handle or NULL (which returns -1).
int s2rq_graph_edge_count(const struct s2rq_graph *graph);

// Assesses one bug report file against the graph with the offline provider
// and stores the quality report into `out_document`: machine JSON when
// `machine_format` is nonzero, human text otherwise. `threshold` is the
// offline match threshold; pass a value outside 0..=1 for the default.
//
// # Safety
// `graph` must be a valid handle; `report_path` a valid NUL-terminated
// string; `out_document` a valid non-NULL destination pointer.
enum s2rq_status s2rq_assess_report(const struct s2rq_graph *graph,
                                    const char *report_path,
                                    double threshold,
                                    int machine_format,
                                    char **out_document);

// Scores predicted reports against ground truth and stores the metrics
// document (JSON) into `out_metrics`.
//
// # Safety
// Directory arguments must be valid NUL-terminated strings; `out_metrics`
// a valid non-NULL destination pointer.
enum s2rq_status s2rq_evaluate(const char *predicted_dir,
                               const char *truth_dir,
                               char **out_metrics);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* S2RQ_H */
