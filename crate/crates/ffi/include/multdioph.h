#ifndef MULTDIOPH_H
#define MULTDIOPH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

#define MD_OK 0

#define MD_ERR_DOMAIN 1

#define MD_ERR_RESOURCE 2

#define MD_ERR_INTERNAL 3

#define MD_ERR_NULL 4

/**
 * Opaque handle around a parsed approximation function.
 */
typedef struct MdPsi MdPsi;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version string; static storage, do not free.
 */
const char *md_version(void);

/**
 * Message of the last error on this thread, or NULL. Valid until the next
 * failing call on the same thread; do not free.
 */
const char *md_last_error(void);

/**
 * Parses a JSON PsiSpec, e.g. {"kind":"hard","c":0.5}. On success stores a
 * heap handle in *out; release it with md_psi_free.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
int32_t md_psi_parse(const char *json, struct MdPsi **out);

/**
 * Releases a handle from md_psi_parse. NULL is a no-op.
 *
 * # Safety
 * `psi` must be NULL or a pointer returned by md_psi_parse, freed once.
 */
void md_psi_free(struct MdPsi *psi);

/**
 * Evaluates psi at x.
 *
 * # Safety
 * `psi` must come from md_psi_parse; `out` must be a valid pointer.
 */
int32_t md_psi_eval(const struct MdPsi *psi, double x, double *out);

/**
 * Closed-form cusp radius of the hard Dirichlet function: log(1/c)/(m+n).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
int32_t md_r_hard(uint32_t m, uint32_t n, double c, double *out);

/**
 * Solves the correspondence equation for R(t) to tolerance `tol`.
 *
 * # Safety
 * `psi` must come from md_psi_parse; `out` must be a valid pointer.
 */
int32_t md_solve_r(const struct MdPsi *psi,
                   uint32_t m,
                   uint32_t n,
                   double t,
                   double tol,
                   double *out);

/**
 * Smallest valid flow time of the log-power family: e + n*lambda/(m+n).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
int32_t md_t_lambda(uint32_t m, uint32_t n, double lambda, double *out);

/**
 * Shortest sup-norm vector of the flowed lattice a.x_Y. `y` is row-major
 * m x n, `a` has m+n entries summing to zero. `cutoff <= 0` disables the
 * early exit. Witness buffers may be NULL; otherwise `p` holds m entries
 * and `q` holds n.
 *
 * # Safety
 * Buffers must match the advertised lengths; `out_delta` must be valid.
 */
int32_t md_delta_flowed(uint32_t m,
                        uint32_t n,
                        const double *y,
                        const double *a,
                        double cutoff,
                        double *out_delta,
                        int64_t *out_p,
                        int64_t *out_q);

/**
 * Tests the additive Dirichlet system at height T against psi(T) = psi_t;
 * *out_found is 1 when a solution exists.
 *
 * # Safety
 * `y` must hold m*n doubles; `out_found` must be a valid pointer.
 */
int32_t md_in_s_additive(uint32_t m,
                         uint32_t n,
                         const double *y,
                         double psi_t,
                         double t_height,
                         int32_t *out_found);

/**
 * Multiplicative counterpart of md_in_s_additive.
 *
 * # Safety
 * `y` must hold m*n doubles; `out_found` must be a valid pointer.
 */
int32_t md_in_s_mult(uint32_t m,
                     uint32_t n,
                     const double *y,
                     double psi_t,
                     double t_height,
                     int32_t *out_found);

/**
 * Integer point of the convex body at height T and constant c; writes the
 * witness into `out_p` (m entries) and `out_q` (n entries).
 *
 * # Safety
 * Buffers must match the advertised lengths.
 */
int32_t md_minkowski_point(uint32_t m,
                           uint32_t n,
                           const double *y,
                           double t_height,
                           double c,
                           int64_t *out_p,
                           int64_t *out_q);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* MULTDIOPH_H */
