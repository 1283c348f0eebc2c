#ifndef THDKIT_H
#define THDKIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Linkage criterion for [`thdkit_linkage`].
 */
typedef enum ThdkitLinkage {
  THDKIT_LINKAGE_SINGLE = 0,
  THDKIT_LINKAGE_COMPLETE = 1,
} ThdkitLinkage;

/**
 * Result codes.
 */
typedef enum ThdkitStatus {
  THDKIT_STATUS_OK = 0,
  THDKIT_STATUS_NULL_POINTER = 1,
  THDKIT_STATUS_INVALID_ARGUMENT = 2,
  THDKIT_STATUS_INVALID_INPUT = 3,
  THDKIT_STATUS_IO = 4,
  THDKIT_STATUS_VERIFICATION = 5,
  THDKIT_STATUS_PANIC = 6,
} ThdkitStatus;

/**
 * A finite metric sample.
 */
typedef struct ThdkitCloud ThdkitCloud;

/**
 * A mapper graph.
 */
typedef struct ThdkitMapper ThdkitMapper;

/**
 * A topological hierarchical decomposition.
 */
typedef struct ThdkitThd ThdkitThd;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *thdkit_last_error(void);

/**
 * Library version as a static string.
 */
const char *thdkit_version(void);

void thdkit_string_free(char *s);

/**
 * `n` points of dimension `dim`, row-major.
 */
enum ThdkitStatus thdkit_cloud_from_points(const double *coords,
                                           uintptr_t n,
                                           uintptr_t dim,
                                           struct ThdkitCloud **out);

/**
 * An `n` by `n` row-major distance matrix. `check_triangle` nonzero
 * validates the triangle inequality.
 */
enum ThdkitStatus thdkit_cloud_from_distances(const double *matrix,
                                              uintptr_t n,
                                              int check_triangle,
                                              struct ThdkitCloud **out);

/**
 * Points from a CSV file.
 */
enum ThdkitStatus thdkit_cloud_from_csv(const char *path, struct ThdkitCloud **out);

uintptr_t thdkit_cloud_len(const struct ThdkitCloud *cloud);

void thdkit_cloud_free(struct ThdkitCloud *cloud);

/**
 * Components of the `eps`-offset as a JSON array of index arrays.
 */
enum ThdkitStatus thdkit_offset_components_json(const struct ThdkitCloud *cloud,
                                                double eps,
                                                char **out_json);

enum ThdkitStatus thdkit_linkage(const struct ThdkitCloud *cloud,
                                 enum ThdkitLinkage mode,
                                 struct ThdkitThd **out);

/**
 * Multiscale mapper THD for per-point filter values and a tower
 * configuration in JSON.
 */
enum ThdkitStatus thdkit_multiscale(const struct ThdkitCloud *cloud,
                                    const double *filter,
                                    uintptr_t n,
                                    const char *tower_json,
                                    double eps,
                                    struct ThdkitThd **out);

uintptr_t thdkit_thd_node_count(const struct ThdkitThd *thd);

uintptr_t thdkit_thd_edge_count(const struct ThdkitThd *thd);

enum ThdkitStatus thdkit_thd_to_json(const struct ThdkitThd *thd, char **out_json);

/**
 * Newick text with point indices as leaf names; dendrograms only.
 */
enum ThdkitStatus thdkit_thd_to_newick(const struct ThdkitThd *thd, char **out);

void thdkit_thd_free(struct ThdkitThd *thd);

/**
 * Mapper graph of per-point filter values over `intervals` overlapping
 * intervals spanning the filter range.
 */
enum ThdkitStatus thdkit_mapper(const struct ThdkitCloud *cloud,
                                const double *filter,
                                uintptr_t n,
                                uintptr_t intervals,
                                double overlap,
                                double eps,
                                struct ThdkitMapper **out);

uintptr_t thdkit_mapper_vertex_count(const struct ThdkitMapper *graph);

uintptr_t thdkit_mapper_edge_count(const struct ThdkitMapper *graph);

enum ThdkitStatus thdkit_mapper_to_json(const struct ThdkitMapper *graph, char **out_json);

void thdkit_mapper_free(struct ThdkitMapper *graph);

/**
 * Runs the verification suite. The report is written to `out_json` when
 * it is not null; the status is `Verification` when a check failed.
 */
enum ThdkitStatus thdkit_verify(uint64_t seed, uintptr_t trials, char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* THDKIT_H */
