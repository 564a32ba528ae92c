#ifndef SGC_SGC_H
#define SGC_SGC_H

/* C interface to the spatial graph convolution library.
 *
 * Every function returning sgc_status stores a message retrievable with
 * sgc_last_error() on failure (per thread). Strings returned through char**
 * are owned by the caller and released with sgc_string_free(). */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SGC_API __declspec(dllexport)
#elif defined(SGC_BUILDING_LIBRARY)
#define SGC_API __attribute__((visibility("default")))
#else
#define SGC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sgc_status {
  SGC_OK = 0,
  SGC_ERR_GENERIC = 1,
  SGC_ERR_PARSE = 2,
  SGC_ERR_CONFIG = 3,
  SGC_ERR_NUMERIC = 4,
  SGC_ERR_IO = 5,
  SGC_ERR_ARGUMENT = 6
} sgc_status;

typedef enum sgc_fold { SGC_FOLD_TRAIN = 0, SGC_FOLD_VALID = 1, SGC_FOLD_TEST = 2 } sgc_fold;

typedef struct sgc_dataset sgc_dataset;
typedef struct sgc_folds sgc_folds;
typedef struct sgc_model sgc_model;

typedef void (*sgc_log_fn)(const char* message, void* user);

SGC_API const char* sgc_version(void);
SGC_API const char* sgc_last_error(void);
SGC_API void sgc_string_free(char* s);
/* Progress messages from training and search; NULL disables. */
SGC_API void sgc_set_log_callback(sgc_log_fn fn, void* user);

/* ---- datasets ---------------------------------------------------------- */

/* options_json (nullable): {"schema": {...}, "element_vocab": [...],
 * "strip_hydrogens": bool, "ligand_resname": "LIG", "pocket_cutoff": 12.0}.
 * labels_csv_path (nullable): header "id,<task>..." */
SGC_API sgc_status sgc_featurize_sdf(const char* sdf_path, const char* labels_csv_path,
                                     const char* options_json, sgc_dataset** out);
/* One complex per file; the sample id is the file name without extension. */
SGC_API sgc_status sgc_featurize_pdb(const char* const* pdb_paths, size_t n_paths,
                                     const char* labels_csv_path, const char* options_json,
                                     sgc_dataset** out);
SGC_API sgc_status sgc_dataset_load(const char* path, sgc_dataset** out);
SGC_API sgc_status sgc_dataset_save(const sgc_dataset* ds, const char* path);
SGC_API size_t sgc_dataset_size(const sgc_dataset* ds);
SGC_API size_t sgc_dataset_task_count(const sgc_dataset* ds);
/* Borrowed pointer, valid while ds lives; NULL when out of range. */
SGC_API const char* sgc_dataset_id(const sgc_dataset* ds, size_t index);
SGC_API void sgc_dataset_free(sgc_dataset* ds);

/* ---- splits ------------------------------------------------------------ */

/* fractions: train, valid, test. */
SGC_API sgc_status sgc_split_random(const sgc_dataset* ds, const double fractions[3],
                                    uint64_t seed, sgc_folds** out);
/* Ward clustering of a distance matrix CSV (header row of ids). Exactly one
 * of n_clusters > 0 or threshold >= 0 selects the dendrogram cut; with
 * n_clusters == 0 and threshold < 0 the count defaults to round(0.15 N). */
SGC_API sgc_status sgc_split_agglomerative_matrix(const char* matrix_csv_path,
                                                  const double fractions[3], size_t n_clusters,
                                                  double threshold, uint64_t seed,
                                                  sgc_folds** out);
/* Same, with distances 1 - identity from a CSV "sample_id,sequence". */
SGC_API sgc_status sgc_split_agglomerative_sequences(const char* sequences_csv_path,
                                                     const double fractions[3],
                                                     size_t n_clusters, double threshold,
                                                     uint64_t seed, sgc_folds** out);
SGC_API sgc_status sgc_folds_load(const char* path, sgc_folds** out);
SGC_API sgc_status sgc_folds_save(const sgc_folds* folds, const char* path);
SGC_API size_t sgc_folds_size(const sgc_folds* folds);
SGC_API size_t sgc_folds_count(const sgc_folds* folds, sgc_fold fold);
/* {"method", "target", "achieved", "cluster_count", "warnings"} */
SGC_API sgc_status sgc_folds_summary_json(const sgc_folds* folds, char** out);
SGC_API void sgc_folds_free(sgc_folds* folds);

/* ---- training ---------------------------------------------------------- */

/* config_path: experiment JSON. folds_path overrides the config's folds file
 * when non-NULL; seed overrides the config seed when non-NULL. Writes one
 * checkpoint per fold into the config's output_dir when set. */
SGC_API sgc_status sgc_train(const char* config_path, const char* folds_path,
                             const uint64_t* seed, char** result_json);
SGC_API sgc_status sgc_hpsearch(const char* config_path, const char* folds_path,
                                size_t n_samples, const uint64_t* seed, char** result_json);

/* ---- models and evaluation -------------------------------------------- */

SGC_API sgc_status sgc_model_load(const char* checkpoint_path, sgc_model** out);
SGC_API size_t sgc_model_task_count(const sgc_model* model);
/* Writes size(ds) * task_count values, row-major, into out. */
SGC_API sgc_status sgc_model_predict(const sgc_model* model, const sgc_dataset* ds, double* out,
                                     size_t capacity);
/* folds (nullable) restricts evaluation to the samples of `fold`. Either
 * output pointer may be NULL. */
SGC_API sgc_status sgc_evaluate(const sgc_model* model, const sgc_dataset* ds, double chi,
                                const sgc_folds* folds, sgc_fold fold, char** report_json,
                                char** report_table);
SGC_API void sgc_model_free(sgc_model* model);

/* ---- metrics ----------------------------------------------------------- */

SGC_API sgc_status sgc_ef_chi(const double* y, const double* y_hat, size_t n, double chi,
                              double* out);
SGC_API sgc_status sgc_sequence_identity(const char* a, const char* b, double* out);

#ifdef __cplusplus
}
#endif

#endif /* SGC_SGC_H */
