#ifndef ATD_H
#define ATD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AtdStatus {
  ATD_STATUS_OK = 0,
  ATD_STATUS_NULL_POINTER = 1,
  ATD_STATUS_INVALID_INPUT = 2,
  ATD_STATUS_PARSE = 3,
  ATD_STATUS_IO = 4,
  ATD_STATUS_OUT_OF_RANGE = 5,
  ATD_STATUS_PANIC = 6,
} AtdStatus;

typedef enum AtdSided {
  ATD_SIDED_TWO = 0,
  ATD_SIDED_LESS = 1,
  ATD_SIDED_GREATER = 2,
} AtdSided;

typedef struct AtdMatrix AtdMatrix;

typedef struct AtdTree AtdTree;

// Mirrors the core Sinkhorn settings; fill with
// [`atd_sinkhorn_default_config`] and adjust.
typedef struct AtdSinkhornConfig {
  double blur;
  double scaling;
  double tolerance;
  size_t max_iterations;
} AtdSinkhornConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Exact 1-D Wasserstein-2 distance on the index grid `0..n`.
enum AtdStatus atd_w2_exact(const double *p, const double *q, size_t n, double *result);

// L2 norm of the CDF difference.
enum AtdStatus atd_cramer_l2(const double *p, const double *q, size_t n, double *result);

struct AtdSinkhornConfig atd_sinkhorn_default_config(void);

// Debiased Sinkhorn divergence on the unit grid. `converged` may be null.
enum AtdStatus atd_sinkhorn_divergence(const double *p,
                                       const double *q,
                                       size_t n,
                                       const struct AtdSinkhornConfig *config,
                                       double *result,
                                       bool *converged);

// Matrix from `n` labels and `n*n` row-major values.
enum AtdStatus atd_matrix_new(const char *const *labels,
                              size_t n,
                              const double *values,
                              struct AtdMatrix **matrix);

// Read a matrix file (text table or JSON).
enum AtdStatus atd_matrix_read(const char *path, struct AtdMatrix **matrix);

// Number of languages; 0 for a null handle.
size_t atd_matrix_size(const struct AtdMatrix *matrix);

enum AtdStatus atd_matrix_get(const struct AtdMatrix *matrix, size_t i, size_t j, double *result);

// Label of row `i`, as a new string for [`atd_string_free`].
enum AtdStatus atd_matrix_label(const struct AtdMatrix *matrix, size_t i, char **label);

void atd_matrix_free(struct AtdMatrix *matrix);

// Neighbor-Joining tree of a matrix with at least three languages.
enum AtdStatus atd_nj_build(const struct AtdMatrix *matrix, struct AtdTree **tree);

enum AtdStatus atd_tree_from_newick(const char *newick, struct AtdTree **tree);

enum AtdStatus atd_tree_to_newick(const struct AtdTree *tree, char **newick);

size_t atd_tree_leaf_count(const struct AtdTree *tree);

void atd_tree_free(struct AtdTree *tree);

// Pearson and Spearman correlation between matrix and tree distances.
// An undefined correlation (constant input) is returned as NaN.
enum AtdStatus atd_cophenetic(const struct AtdMatrix *matrix,
                              const struct AtdTree *tree,
                              double *pearson,
                              double *spearman);

// Mann-Whitney U of `a` against `b`; `exact` may be null.
enum AtdStatus atd_mann_whitney_u(const double *a,
                                  size_t n_a,
                                  const double *b,
                                  size_t n_b,
                                  enum AtdSided sided,
                                  double *u,
                                  double *p,
                                  bool *exact);

void atd_string_free(char *s);

// Message for the last failed call on this thread; empty after a success.
// Valid until the next library call on the same thread.
const char *atd_last_error_message(void);

const char *atd_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ATD_H */
