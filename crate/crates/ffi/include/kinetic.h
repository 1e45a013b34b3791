#ifndef KINETIC_H
#define KINETIC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KnStatus {
  KN_STATUS_OK = 0,
  KN_STATUS_NULL_POINTER = 1,
  KN_STATUS_INVALID_ARGUMENT = 2,
  KN_STATUS_NOT_HERMITIAN = 3,
  KN_STATUS_DIMENSION_MISMATCH = 4,
  KN_STATUS_DIVERGENT = 5,
  KN_STATUS_NON_FINITE = 6,
  KN_STATUS_NUMERICAL = 7,
  KN_STATUS_BUFFER_TOO_SMALL = 8,
  KN_STATUS_UNSUPPORTED = 9,
  KN_STATUS_PANIC = 10,
} KnStatus;

typedef enum KnPath {
  // Closed forms for orders 2 and 4.
  KN_PATH_FAST = 0,
  // Recursive engine, any even order.
  KN_PATH_ENGINE = 1,
  // Secular GKLS form of order 2.
  KN_PATH_SECULAR = 2,
} KnPath;

typedef struct KnBath KnBath;

typedef struct KnGenerator KnGenerator;

typedef struct KnSystem KnSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// Valid until the next call on the same thread.
const char *kn_last_error(void);

// Library version as a static NUL-terminated string.
const char *kn_version(void);

// System with Hermitian `H_S` and `n_couplings` Hermitian coupling operators,
// all `dim × dim`. `couplings` holds them back to back.
//
// # Safety
// `hamiltonian` must hold `2·dim²` doubles and `couplings` `2·n_couplings·dim²`.
enum KnStatus kn_system_new(size_t dim,
                            const double *hamiltonian,
                            size_t n_couplings,
                            const double *couplings,
                            struct KnSystem **out);

// # Safety
// `system` must come from [`kn_system_new`] or be null.
void kn_system_free(struct KnSystem *system);

// Empty pair-correlation table for `n_labels` bath operators. A finite
// `beta` is recorded for detailed-balance checks; pass a negative value for
// none.
//
// # Safety
// `out` must be writable.
enum KnStatus kn_bath_new(size_t n_labels, double beta, struct KnBath **out);

// Sets `C_{αβ}(t) = Σ_k a_k e^{-z_k t}`; `a` and `z` hold `n_terms`
// interleaved complex numbers each.
//
// # Safety
// `bath` must be a live handle; `a` and `z` must hold `2·n_terms` doubles.
enum KnStatus kn_bath_set(struct KnBath *bath,
                          size_t alpha,
                          size_t beta,
                          size_t n_terms,
                          const double *a,
                          const double *z);

// # Safety
// `bath` must come from [`kn_bath_new`] or be null.
void kn_bath_free(struct KnBath *bath);

// `-i𝓛_S + Σ_{r even ≤ max_order} λ^r 𝒢_r`. Odd orders vanish for a
// Gaussian bath and are left out. The fast path supports `max_order` 2 and
// 4 (the latter for one coupling operator), the secular path only 2.
//
// # Safety
// `system` and `bath` must be live handles and `out` writable.
enum KnStatus kn_generator_new(const struct KnSystem *system,
                               const struct KnBath *bath,
                               enum KnPath path,
                               size_t max_order,
                               double lambda,
                               struct KnGenerator **out);

// # Safety
// `generator` must come from [`kn_generator_new`] or be null.
void kn_generator_free(struct KnGenerator *generator);

// System dimension `d`; 0 for a null handle.
//
// # Safety
// `generator` must be a live handle or null.
size_t kn_generator_dim(const struct KnGenerator *generator);

// Writes the `d² × d²` matrix of order `order` (0 for the total generator)
// acting on column-stacked density matrices. `len` counts doubles.
//
// # Safety
// `generator` must be a live handle and `out` hold `len` doubles.
enum KnStatus kn_generator_matrix(const struct KnGenerator *generator,
                                  size_t order,
                                  double *out,
                                  size_t len);

// `ρ(t_k) = e^{𝒢t_k} ρ₀` for an ascending grid. `out` receives `n_times`
// density matrices back to back.
//
// # Safety
// `rho0` must hold `2·d²` doubles, `times` `n_times` doubles and `out`
// `len` doubles.
enum KnStatus kn_propagate(const struct KnGenerator *generator,
                           const double *rho0,
                           size_t n_times,
                           const double *times,
                           double *out,
                           size_t len);

// Normalized null vector of the total generator. `unique` (optional) is set
// to 1 when the null space is one-dimensional.
//
// # Safety
// `out` must hold `len` doubles; `unique` must be writable or null.
enum KnStatus kn_steady_state(const struct KnGenerator *generator,
                              double *out,
                              size_t len,
                              int32_t *unique);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KINETIC_H */
