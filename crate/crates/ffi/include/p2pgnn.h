#ifndef P2PGNN_H
#define P2PGNN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

#define P2PGNN_OK 0

#define P2PGNN_NULL_POINTER 1

#define P2PGNN_INVALID_ARGUMENT 2

#define P2PGNN_IO 3

#define P2PGNN_PARSE 4

#define P2PGNN_VALIDATION 5

#define P2PGNN_NON_CONVERGENCE 6

#define P2PGNN_PROTOCOL 7

#define P2PGNN_CODEC 8

#define P2PGNN_PANIC 9

/**
 * A loaded graph with node features, labels and splits.
 */
typedef struct P2pgnnDataset P2pgnnDataset;

/**
 * A running peer-to-peer simulation over a dataset.
 */
typedef struct P2pgnnSimulation P2pgnnSimulation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failed call on this thread, or null. The
 * pointer stays valid until the next p2pgnn call on the same thread.
 */
const char *p2pgnn_last_error_message(void);

/**
 * Loads a dataset from its nodes, edges and splits files.
 *
 * # Safety
 * Paths must be null or NUL-terminated strings; `out` must be null or
 * writable.
 */
int32_t p2pgnn_dataset_load(const char *nodes,
                            const char *edges,
                            const char *splits,
                            struct P2pgnnDataset **out);

/**
 * # Safety
 * `ds` must be null or a handle from `p2pgnn_dataset_load` not yet freed.
 */
void p2pgnn_dataset_free(struct P2pgnnDataset *ds);

/**
 * Number of nodes; 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle.
 */
uintptr_t p2pgnn_dataset_num_nodes(const struct P2pgnnDataset *ds);

/**
 * # Safety
 * `ds` must be null or a live handle.
 */
uintptr_t p2pgnn_dataset_num_classes(const struct P2pgnnDataset *ds);

/**
 * # Safety
 * `ds` must be null or a live handle.
 */
uintptr_t p2pgnn_dataset_num_features(const struct P2pgnnDataset *ds);

/**
 * Writes the label rows of the known (train and validation) nodes, zeros
 * elsewhere; usable directly as label-propagation base predictions.
 *
 * # Safety
 * `out` must point to `out_len` writable doubles.
 */
int32_t p2pgnn_dataset_known_labels(const struct P2pgnnDataset *ds, double *out, uintptr_t out_len);

/**
 * Centralized FDiff-scale of `base`, with train and validation labels
 * known. Writes the smoothed predictions to `out` and, if
 * `test_accuracy` is non-null, their test accuracy.
 *
 * # Safety
 * `base` and `out` must point to `len` readable / writable doubles.
 */
int32_t p2pgnn_oracle_fdiff(const struct P2pgnnDataset *ds,
                            const double *base,
                            double *out,
                            uintptr_t len,
                            double beta,
                            double s,
                            double *test_accuracy);

/**
 * Starts a simulation whose devices hold the `base` rows, with edge
 * probabilities drawn uniformly from `[0, sigma_max]`.
 *
 * # Safety
 * `base` must point to `len` readable doubles; `out` must be writable.
 */
int32_t p2pgnn_simulation_new(const struct P2pgnnDataset *ds,
                              const double *base,
                              uintptr_t len,
                              double beta,
                              double s,
                              double sigma_max,
                              uint64_t seed,
                              struct P2pgnnSimulation **out);

/**
 * # Safety
 * `sim` must be null or a handle from `p2pgnn_simulation_new` not yet freed.
 */
void p2pgnn_simulation_free(struct P2pgnnSimulation *sim);

/**
 * Advances the simulation by `steps` time steps.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
int32_t p2pgnn_simulation_step(struct P2pgnnSimulation *sim, uint64_t steps);

/**
 * Current time step; 0 for a null handle.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
uint64_t p2pgnn_simulation_time(const struct P2pgnnSimulation *sim);

/**
 * # Safety
 * `out` must point to `out_len` writable doubles.
 */
int32_t p2pgnn_simulation_predictions(const struct P2pgnnSimulation *sim,
                                      double *out,
                                      uintptr_t out_len);

/**
 * Test accuracy of the devices' current predictions.
 *
 * # Safety
 * `out` must be writable.
 */
int32_t p2pgnn_simulation_test_accuracy(const struct P2pgnnSimulation *sim, double *out);

/**
 * Cumulative bytes sent by the diffusion protocol.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
uint64_t p2pgnn_simulation_bytes(const struct P2pgnnSimulation *sim);

/**
 * Encoded size of a message carrying `n_classes` values per share.
 */
uintptr_t p2pgnn_message_len(uintptr_t n_classes);

/**
 * Encodes one protocol message into `out`, which must hold exactly
 * `p2pgnn_message_len(n_classes)` bytes.
 *
 * # Safety
 * `pred_share` and `err_share` must point to `n_classes` doubles and `out`
 * to `out_len` writable bytes.
 */
int32_t p2pgnn_message_encode(uint32_t sender,
                              const double *pred_share,
                              const double *err_share,
                              uintptr_t n_classes,
                              uint8_t *out,
                              uintptr_t out_len);

/**
 * Decodes a message whose shares have `n_classes` entries.
 *
 * # Safety
 * `bytes` must point to `len` readable bytes; `sender` must be writable and
 * `pred_share`, `err_share` must point to `n_classes` writable doubles.
 */
int32_t p2pgnn_message_decode(const uint8_t *bytes,
                              uintptr_t len,
                              uintptr_t n_classes,
                              uint32_t *sender,
                              double *pred_share,
                              double *err_share);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* P2PGNN_H */
