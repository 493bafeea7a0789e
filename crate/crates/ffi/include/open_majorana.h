#ifndef OPEN_MAJORANA_H
#define OPEN_MAJORANA_H

#include <stddef.h>
#include <stdint.h>

// Result of every fallible call.
typedef enum MajStatus {
  MAJ_STATUS_OK = 0,
  // A required pointer argument was null.
  MAJ_STATUS_NULL_POINTER = 1,
  // Bad key, out-of-range value or malformed text.
  MAJ_STATUS_INVALID_ARGUMENT = 2,
  // The integration failed (step collapse, divergence, invalid state).
  MAJ_STATUS_NUMERICAL = 3,
  // Reading or writing a file failed.
  MAJ_STATUS_IO = 4,
  // An internal panic was caught.
  MAJ_STATUS_PANIC = 5,
} MajStatus;

// A two-axis (or one-axis) efficiency map.
typedef struct MajMap MajMap;

// Model and solver settings.
typedef struct MajParams MajParams;

// A propagated trajectory.
typedef struct MajTrajectory MajTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// New settings with the library defaults: `κ = 0.25`, `κt₀ = 25`, `λ = 0`,
// `φ = ϕ = 0`, `k_BT = 0.001`, default solver tolerances. Free with
// [`maj_params_free`].
struct MajParams *maj_params_new(void);

// # Safety
// `p` must be null or a pointer from [`maj_params_new`] not yet freed.
void maj_params_free(struct MajParams *p);

// Sets one value by key. Model keys: `kappa` (keeps `κt₀` fixed), `kt0`,
// `t0`, `lambda`, `phi`, `varphi`, `kbt`. Solver keys: `rtol`, `atol`,
// `dt_max`, `dt_init` (0 restores the automatic value). The settings are
// unchanged when the new value is rejected.
//
// # Safety
// `p` must be a live handle; `key` a NUL-terminated string.
enum MajStatus maj_params_set(struct MajParams *p, const char *key, double value);

// Reads one value by key; accepts the keys of [`maj_params_set`]. Automatic
// step settings read as 0.
//
// # Safety
// `p` must be a live handle, `key` a NUL-terminated string, `out` writable.
enum MajStatus maj_params_get(const struct MajParams *p, const char *key, double *out);

// Final population of bare state `target` after starting in bare state
// `initial` (each -1, 0 or 1).
//
// # Safety
// `p` must be a live handle and `out` writable.
enum MajStatus maj_efficiency(const struct MajParams *p,
                              int32_t initial,
                              int32_t target,
                              double *out);

// Propagates from bare state `initial` over `[-t₀, t₀]`, recording
// `samples ≥ 2` evenly spaced snapshots. On success `*out` receives a handle
// to free with [`maj_trajectory_free`].
//
// # Safety
// `p` must be a live handle and `out` writable.
enum MajStatus maj_propagate(const struct MajParams *p,
                             int32_t initial,
                             size_t samples,
                             struct MajTrajectory **out);

// Number of samples; 0 for a null handle.
//
// # Safety
// `tr` must be null or a live handle.
size_t maj_trajectory_len(const struct MajTrajectory *tr);

// Time and bare-state populations `(m = -1, 0, 1)` of sample `index`.
//
// # Safety
// `tr` must be a live handle, `t` writable, `pops` writable for 3 doubles.
enum MajStatus maj_trajectory_sample(const struct MajTrajectory *tr,
                                     size_t index,
                                     double *t,
                                     double *pops);

// Final density matrix, row-major, split into real and imaginary parts.
//
// # Safety
// `tr` must be a live handle; `re` and `im` writable for 9 doubles each.
enum MajStatus maj_trajectory_final_rho(const struct MajTrajectory *tr, double *re, double *im);

// Writes the trajectory as CSV, atomically.
//
// # Safety
// `tr` must be a live handle; `path` a NUL-terminated string.
enum MajStatus maj_trajectory_write_csv(const struct MajTrajectory *tr, const char *path);

// # Safety
// `tr` must be null or a handle from [`maj_propagate`] not yet freed.
void maj_trajectory_free(struct MajTrajectory *tr);

// Efficiency map over `axis1 × axis2`. Axes use the command-line format,
// `param:min:max:count` or `param:v1,v2,...`; `axis2` may be null for a
// single axis. `workers` threads are used (at least 1); the values do not
// depend on it. Failed cells hold NaN. Free the result with [`maj_map_free`].
//
// # Safety
// `p` must be a live handle, `axis1` a NUL-terminated string, `axis2` null
// or a NUL-terminated string, `out` writable.
enum MajStatus maj_sweep2d(const struct MajParams *p,
                           const char *axis1,
                           const char *axis2,
                           int32_t initial,
                           int32_t target,
                           size_t workers,
                           struct MajMap **out);

// Grid shape; `n2` is 1 for a one-axis map.
//
// # Safety
// `m` must be a live handle; `n1` and `n2` writable.
enum MajStatus maj_map_shape(const struct MajMap *m, size_t *n1, size_t *n2);

// Efficiency of cell `(i, j)`; NaN marks a failed cell.
//
// # Safety
// `m` must be a live handle and `out` writable.
enum MajStatus maj_map_value(const struct MajMap *m, size_t i, size_t j, double *out);

// Number of failed cells.
//
// # Safety
// `m` must be null or a live handle.
size_t maj_map_failures(const struct MajMap *m);

// Writes the map as CSV, atomically.
//
// # Safety
// `m` must be a live handle; `path` a NUL-terminated string.
enum MajStatus maj_map_write_csv(const struct MajMap *m, const char *path);

// # Safety
// `m` must be null or a handle from [`maj_sweep2d`] not yet freed.
void maj_map_free(struct MajMap *m);

// Message of the last failed call on this thread, or an empty string. The
// pointer stays valid until the next library call on the same thread.
const char *maj_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *maj_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPEN_MAJORANA_H */
