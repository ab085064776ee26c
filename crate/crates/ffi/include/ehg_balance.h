#ifndef EHG_BALANCE_H
#define EHG_BALANCE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EhgbClassifier {
  EHGB_CLASSIFIER_LRC = 0,
  EHGB_CLASSIFIER_LDC = 1,
  EHGB_CLASSIFIER_DTC = 2,
  EHGB_CLASSIFIER_GBC = 3,
  EHGB_CLASSIFIER_SVC = 4,
  EHGB_CLASSIFIER_RF = 5,
} EhgbClassifier;

typedef enum EhgbMethod {
  EHGB_METHOD_SMOTE = 0,
  EHGB_METHOD_ADASYN = 1,
} EhgbMethod;

typedef enum EhgbStatus {
  EHGB_STATUS_OK = 0,
  EHGB_STATUS_NULL_POINTER = 1,
  EHGB_STATUS_CONFIG_ERROR = 2,
  EHGB_STATUS_PARSE_ERROR = 3,
  EHGB_STATUS_DOMAIN_ERROR = 4,
  EHGB_STATUS_IO_ERROR = 5,
  EHGB_STATUS_INTERNAL_ERROR = 6,
  EHGB_STATUS_PANIC = 7,
} EhgbStatus;

/**
 * Opaque result of a balance-coefficient sweep.
 */
typedef struct EhgbAlphaCurve EhgbAlphaCurve;

/**
 * Opaque feature table.
 */
typedef struct EhgbFeatureTable EhgbFeatureTable;

/**
 * Opaque fitted classifier.
 */
typedef struct EhgbModel EhgbModel;

/**
 * One grid point of an [`EhgbAlphaCurve`].
 */
typedef struct EhgbAlphaPoint {
  double alpha;
  double f_score;
  double c_plus;
  double c_minus;
  double f_e;
} EhgbAlphaPoint;

typedef struct EhgbFeatureConfig {
  double band_low_hz;
  double band_high_hz;
  size_t filter_order;
  size_t sampen_m;
  double sampen_r;
} EhgbFeatureConfig;

typedef struct EhgbFeatureVector {
  double rms;
  double f_med;
  double f_peak;
  double e_samp;
} EhgbFeatureVector;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *ehgb_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *ehgb_version(void);

/**
 * Load a feature table CSV.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum EhgbStatus ehgb_table_load(const char *path, struct EhgbFeatureTable **out);

/**
 * Write a feature table CSV (atomically).
 *
 * # Safety
 * `table` must come from this library; `path` must be NUL-terminated.
 */
enum EhgbStatus ehgb_table_write(const struct EhgbFeatureTable *table, const char *path);

/**
 * # Safety
 * `table` must come from this library and not be used afterwards. NULL is
 * ignored.
 */
void ehgb_table_free(struct EhgbFeatureTable *table);

/**
 * # Safety
 * `table` must be a live handle or NULL (returns 0).
 */
size_t ehgb_table_rows(const struct EhgbFeatureTable *table);

/**
 * # Safety
 * `table` must be a live handle or NULL (returns 0).
 */
size_t ehgb_table_features(const struct EhgbFeatureTable *table);

/**
 * Preterm (minority) row count.
 *
 * # Safety
 * `table` must be a live handle or NULL (returns 0).
 */
size_t ehgb_table_n_plus(const struct EhgbFeatureTable *table);

/**
 * Term (majority) row count.
 *
 * # Safety
 * `table` must be a live handle or NULL (returns 0).
 */
size_t ehgb_table_n_minus(const struct EhgbFeatureTable *table);

/**
 * Per-feature class-separation scores, written to `out[0..len]`; `len`
 * must equal the feature count.
 *
 * # Safety
 * `table` must be live; `out` must have room for `len` doubles.
 */
enum EhgbStatus ehgb_feature_scores(const struct EhgbFeatureTable *table, double *out, size_t len);

/**
 * Over-sample the minority class to balance `alpha`; the result is a new
 * table.
 *
 * # Safety
 * `table` must be live and `out` valid.
 */
enum EhgbStatus ehgb_synthesize(const struct EhgbFeatureTable *table,
                                enum EhgbMethod method,
                                double alpha,
                                size_t k,
                                uint64_t seed,
                                struct EhgbFeatureTable **out);

/**
 * Synthetic rows needed to reach `alpha`.
 *
 * # Safety
 * `out` must be valid.
 */
enum EhgbStatus ehgb_required_synthetic_count(size_t n_plus,
                                              size_t n_minus,
                                              double alpha,
                                              size_t *out);

/**
 * Sweep `grid` (or the default grid when `grid_len` is 0) and build the
 * effective-score curve.
 *
 * # Safety
 * `table` must be live, `grid` readable for `grid_len` doubles, `out` valid.
 */
enum EhgbStatus ehgb_optimize_alpha(const struct EhgbFeatureTable *table,
                                    enum EhgbMethod method,
                                    const double *grid,
                                    size_t grid_len,
                                    size_t repeats,
                                    uint64_t seed,
                                    struct EhgbAlphaCurve **out);

/**
 * # Safety
 * `curve` must be a live handle or NULL (returns NaN).
 */
double ehgb_curve_alpha_star(const struct EhgbAlphaCurve *curve);

/**
 * # Safety
 * `curve` must be a live handle or NULL (returns 0).
 */
size_t ehgb_curve_len(const struct EhgbAlphaCurve *curve);

/**
 * # Safety
 * `curve` must be live and `out` valid.
 */
enum EhgbStatus ehgb_curve_point(const struct EhgbAlphaCurve *curve,
                                 size_t index,
                                 struct EhgbAlphaPoint *out);

/**
 * Write the curve as CSV (atomically).
 *
 * # Safety
 * `curve` must be live; `path` NUL-terminated.
 */
enum EhgbStatus ehgb_curve_write_csv(const struct EhgbAlphaCurve *curve, const char *path);

/**
 * # Safety
 * `curve` must come from this library and not be used afterwards. NULL is
 * ignored.
 */
void ehgb_curve_free(struct EhgbAlphaCurve *curve);

/**
 * Minority-side envelope C+ for original balance `alpha0` and steepness `k`.
 *
 * # Safety
 * `out` must be valid.
 */
enum EhgbStatus ehgb_activation(double alpha, double alpha0, double k, double *out);

/**
 * Majority-side envelope C-.
 *
 * # Safety
 * `out` must be valid.
 */
enum EhgbStatus ehgb_inactivation(double alpha, double alpha0, double k, double *out);

/**
 * Sets `*is_preterm` to 1 iff `delivery_weeks < 37`.
 *
 * # Safety
 * `is_preterm` must be valid.
 */
enum EhgbStatus ehgb_label_by_gestation(double delivery_weeks, int32_t *is_preterm);

/**
 * Fit a classifier with default hyperparameters.
 *
 * # Safety
 * `table` must be live and `out` valid.
 */
enum EhgbStatus ehgb_train(const struct EhgbFeatureTable *table,
                           enum EhgbClassifier kind,
                           uint64_t seed,
                           struct EhgbModel **out);

/**
 * Decision score for one feature vector; positive means preterm.
 *
 * # Safety
 * `model` must be live, `x` readable for `len` doubles, `out` valid.
 */
enum EhgbStatus ehgb_model_score(const struct EhgbModel *model,
                                 const double *x,
                                 size_t len,
                                 double *out);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards. NULL is
 * ignored.
 */
void ehgb_model_free(struct EhgbModel *model);

/**
 * Area under the ROC curve; `is_preterm[i]` non-zero marks a positive.
 *
 * # Safety
 * `scores` and `is_preterm` must be readable for `n` elements; `out` valid.
 */
enum EhgbStatus ehgb_auc(const double *scores, const uint8_t *is_preterm, size_t n, double *out);

/**
 * Default feature-extraction settings.
 */
struct EhgbFeatureConfig ehgb_feature_config_default(void);

/**
 * Features of one single-channel signal sampled at `fs` Hz.
 *
 * # Safety
 * `samples` must be readable for `n` doubles; `config` and `out` valid.
 */
enum EhgbStatus ehgb_extract_features(const double *samples,
                                      size_t n,
                                      double fs,
                                      const struct EhgbFeatureConfig *config,
                                      struct EhgbFeatureVector *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EHG_BALANCE_H */
