/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#ifndef MOLTR_H
#define MOLTR_H

#include <stddef.h>
#include <stdint.h>

typedef enum {
  MOLTR_STATUS_OK = 0,
  MOLTR_STATUS_NULL_ARGUMENT = 1,
  MOLTR_STATUS_INVALID_UTF8 = 2,
  MOLTR_STATUS_INVALID_INPUT = 3,
  MOLTR_STATUS_INVALID_CONFIG = 4,
  MOLTR_STATUS_TRAINING = 5,
  MOLTR_STATUS_PARSE = 6,
  MOLTR_STATUS_IO = 7,
  MOLTR_STATUS_CALIBRATION = 8,
  MOLTR_STATUS_BUFFER_TOO_SMALL = 9,
  MOLTR_STATUS_INTERNAL = 10,
  MOLTR_STATUS_PANIC = 11,
} MoltrStatus;

typedef enum {
  /**
   * Established items with rating at least `rho`.
   */
  MOLTR_BOOST_KIND_RATING_AT_LEAST = 0,
  MOLTR_BOOST_KIND_NEW_ITEMS = 1,
} MoltrBoostKind;

typedef struct MoltrDataset MoltrDataset;

typedef struct MoltrModel MoltrModel;

typedef struct MoltrSoftLabels MoltrSoftLabels;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the last failed call on this thread ("" after a success).
 * The pointer stays valid until the next call into this library on the same thread.
 */
const char *moltr_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *moltr_version(void);

/**
 * Generates a synthetic dataset from a generator config (JSON, NULL for defaults).
 */
MoltrStatus moltr_dataset_generate(const char *config_json, MoltrDataset **out);

MoltrStatus moltr_dataset_load(const char *path, MoltrDataset **out);

MoltrStatus moltr_dataset_save(const MoltrDataset *dataset, const char *path);

void moltr_dataset_free(MoltrDataset *dataset);

MoltrStatus moltr_dataset_num_queries(const MoltrDataset *dataset, size_t *out);

/**
 * Number of items in query group `query`.
 */
MoltrStatus moltr_dataset_query_len(const MoltrDataset *dataset, size_t query, size_t *out);

/**
 * Splits into groups before `boundary_day` and the rest.
 */
MoltrStatus moltr_dataset_split_by_time(const MoltrDataset *dataset,
                                        uint32_t boundary_day,
                                        MoltrDataset **before,
                                        MoltrDataset **after);

/**
 * Trains the teacher for `objective` with a training config (JSON, NULL for defaults).
 */
MoltrStatus moltr_model_train_teacher(const MoltrDataset *dataset,
                                      size_t objective,
                                      const char *train_config_json,
                                      MoltrModel **out);

/**
 * Distills a student from soft labels and the dataset's primary labels.
 */
MoltrStatus moltr_model_train_student(const MoltrDataset *dataset,
                                      const MoltrSoftLabels *soft_labels,
                                      const char *distill_config_json,
                                      MoltrModel **out);

/**
 * Next student generation: `previous` scores `dataset` and a fresh student learns from them.
 * Without explicit layer dims the previous student's structure is kept.
 */
MoltrStatus moltr_model_self_distill(const MoltrModel *previous,
                                     const MoltrDataset *dataset,
                                     const char *distill_config_json,
                                     MoltrModel **out);

MoltrStatus moltr_model_load(const char *path, MoltrModel **out);

MoltrStatus moltr_model_save(const MoltrModel *model, const char *path);

void moltr_model_free(MoltrModel *model);

/**
 * Scores query group `query`. `out_len` must be at least the group size
 * (see `moltr_dataset_query_len`); `written` receives the number of scores.
 */
MoltrStatus moltr_model_score_query(const MoltrModel *model,
                                    const MoltrDataset *dataset,
                                    size_t query,
                                    double *out,
                                    size_t out_len,
                                    size_t *written);

/**
 * Ranking metrics of `model` on `dataset` as a JSON string, released with `moltr_string_free`.
 */
MoltrStatus moltr_model_evaluate_json(const MoltrModel *model,
                                      const MoltrDataset *dataset,
                                      size_t exposure_k,
                                      char **out);

void moltr_string_free(char *s);

/**
 * Raw-score fusion of `num_teachers` teachers. `weights` may be NULL for uniform weights.
 */
MoltrStatus moltr_soft_labels_fuse(const MoltrModel *const *teachers,
                                   const double *weights,
                                   size_t num_teachers,
                                   const MoltrDataset *dataset,
                                   MoltrSoftLabels **out);

/**
 * Adds `beta` to the soft score of items matching the predicate. `rho` is ignored for new items.
 */
MoltrStatus moltr_soft_labels_inject_boost(const MoltrSoftLabels *soft_labels,
                                           const MoltrDataset *dataset,
                                           MoltrBoostKind kind,
                                           double rho,
                                           double beta,
                                           MoltrSoftLabels **out);

MoltrStatus moltr_soft_labels_load(const char *path, MoltrSoftLabels **out);

MoltrStatus moltr_soft_labels_save(const MoltrSoftLabels *soft_labels, const char *path);

void moltr_soft_labels_free(MoltrSoftLabels *soft_labels);

/**
 * NDCG@k with binary relevance (`relevant[i] != 0`).
 */
MoltrStatus moltr_ndcg_at_k(const double *scores,
                            const uint8_t *relevant,
                            size_t n,
                            size_t k,
                            double *out);

/**
 * Kendall's tau between two rankings, each a permutation of `0..n` listing items best first.
 */
MoltrStatus moltr_kendall_tau(const size_t *ranking_a,
                              const size_t *ranking_b,
                              size_t n,
                              double *out);

/**
 * Relative prediction difference of two positive prediction vectors.
 */
MoltrStatus moltr_prediction_difference(const double *preds_a,
                                        const double *preds_b,
                                        size_t n,
                                        double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MOLTR_H */
