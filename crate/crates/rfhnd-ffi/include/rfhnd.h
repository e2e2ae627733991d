#ifndef RFHND_H
#define RFHND_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum {
  RF_STATUS_OK = 0,
  RF_STATUS_NULL_POINTER = 1,
  RF_STATUS_INVALID_ARGUMENT = 2,
  RF_STATUS_IO_ERROR = 3,
  RF_STATUS_NUMERIC_ERROR = 4,
} RfStatus;

/**
 * Opaque dataset handle: hypergraph plus optional features/labels/weights.
 */
typedef struct RfDataset RfDataset;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message into `buf` (truncated to `cap - 1` bytes,
 * always NUL-terminated when cap > 0). Returns the full message length.
 *
 * # Safety
 * `buf` must point to `cap` writable bytes, or be null with cap = 0.
 */
uintptr_t rf_last_error(char *buf, uintptr_t cap);

/**
 * Load a dataset document (the JSON format written by the CLI).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be a valid pointer.
 */
RfStatus rf_dataset_load(const char *path, RfDataset **out);

/**
 * Generate a two-class contextual SBM dataset.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
RfStatus rf_dataset_generate_sbm(uintptr_t nodes_per_class,
                                 uintptr_t num_edges,
                                 uintptr_t edge_size,
                                 uintptr_t alpha,
                                 uintptr_t feature_dim,
                                 double feature_std,
                                 double mean_separation,
                                 uint64_t seed,
                                 RfDataset **out);

/**
 * Save the dataset to `path` (features go to a sidecar CSV).
 *
 * # Safety
 * `ds` must come from this library; `path` must be NUL-terminated.
 */
RfStatus rf_dataset_save(const RfDataset *ds, const char *path);

/**
 * Node count, hyperedge count, and feature dimension (0 when absent).
 *
 * # Safety
 * All out-pointers must be valid or null.
 */
RfStatus rf_dataset_counts(const RfDataset *ds, uintptr_t *n, uintptr_t *m, uintptr_t *d);

/**
 * Destroy a dataset handle.
 *
 * # Safety
 * `ds` must come from this library and not be used afterwards.
 */
void rf_dataset_free(RfDataset *ds);

/**
 * Per-edge curvature. `kind`: 0 = Forman, 1 = Ollivier. `out_kappa` must
 * hold one f64 per hyperedge.
 *
 * # Safety
 * `out_kappa` must point to at least m writable doubles.
 */
RfStatus rf_curvature(const RfDataset *ds,
                      uint32_t kind,
                      bool use_attribute_weights,
                      double epsilon,
                      double *out_kappa);

/**
 * Attribute weights of the dataset features. `out_w` must hold one f64 per
 * hyperedge.
 *
 * # Safety
 * `out_w` must point to at least m writable doubles.
 */
RfStatus rf_attribute_weights(const RfDataset *ds, double epsilon, double *out_w);

/**
 * Dirichlet energy of the dataset's raw features.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
RfStatus rf_dirichlet_energy(const RfDataset *ds, double *out);

/**
 * Run the analytic curvature-guided diffusion for `steps` steps and write
 * the Dirichlet-energy trajectory (steps + 1 values, initial state first).
 *
 * # Safety
 * `out_energies` must point to at least steps + 1 writable doubles.
 */
RfStatus rf_diffuse_analytic(const RfDataset *ds,
                             uint32_t kind,
                             double tau,
                             uintptr_t steps,
                             bool use_cosine,
                             double epsilon,
                             double *out_energies);

/**
 * Hyperedge members of edge `e` copied into `out` (must hold the edge
 * size); writes the size through `size_out` when non-null.
 *
 * # Safety
 * `out` must point to enough writable u32 slots for the edge.
 */
RfStatus rf_edge_members(const RfDataset *ds, uintptr_t e, uint32_t *out, uintptr_t *size_out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RFHND_H */
