/* C interface to the scl recommender library. */
#ifndef SCL_SCL_H
#define SCL_SCL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(SCL_BUILDING_LIBRARY)
#    define SCL_API __declspec(dllexport)
#  else
#    define SCL_API __declspec(dllimport)
#  endif
#else
#  define SCL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum scl_status {
    SCL_OK = 0,
    SCL_ERR_INVALID_ARGUMENT = 1,
    SCL_ERR_IO = 2,
    SCL_ERR_PARSE = 3,
    SCL_ERR_CONFIG = 4,
    SCL_ERR_SHAPE = 5,
    SCL_ERR_NUMERIC = 6,
    SCL_ERR_INTERNAL = 7
} scl_status;

/* Message for the last failing call on this thread; never NULL. */
SCL_API const char* scl_last_error(void);
SCL_API const char* scl_version(void);
SCL_API const char* scl_status_name(scl_status status);

/* Strings returned through char** out-parameters. */
SCL_API void scl_string_free(char* s);

/* ---- dataset ---------------------------------------------------------- */

typedef struct scl_dataset scl_dataset;

typedef struct scl_dataset_info {
    uint64_t num_users;
    uint64_t num_items;
    uint64_t num_train;
    uint64_t num_test;
    double density;
} scl_dataset_info;

/* Loads a tab-separated interaction file and splits it per user. */
SCL_API scl_status scl_dataset_load(const char* path, double split_ratio, uint64_t seed, scl_dataset** out);
SCL_API void scl_dataset_free(scl_dataset* dataset);
SCL_API scl_status scl_dataset_get_info(const scl_dataset* dataset, scl_dataset_info* out);

/* ---- config ----------------------------------------------------------- */

/* Parses a config file and writes its canonical form to *out. */
SCL_API scl_status scl_config_canonical(const char* path, char** out);

/* ---- runs ------------------------------------------------------------- */

typedef void (*scl_log_fn)(const char* line, void* user);

typedef struct scl_run_options {
    int has_seed;
    uint64_t seed;
    const char* out_dir; /* NULL keeps the config value */
    scl_log_fn log;      /* may be NULL */
    void* log_user;
} scl_run_options;

typedef struct scl_report {
    double map[3]; /* @3, @5, @10 */
    double mrr[3];
    double ndcg[3];
    uint64_t evaluated_users;
    uint64_t best_epoch;
} scl_report;

/* Runs one full training pipeline. options and report may be NULL. */
SCL_API scl_status scl_run(const char* config_path, const scl_run_options* options, scl_report* report);

/* Averages report CSVs per method; *out receives CSV text. */
SCL_API scl_status scl_compare_reports(const char* const* paths, size_t count, char** out);

/* ---- checkpoints and models ------------------------------------------- */

typedef struct scl_checkpoint_info {
    uint64_t num_users;
    uint64_t num_items;
    uint64_t dim;
    uint64_t layers;
    int has_head;
    uint64_t head_hidden;
    uint64_t head_output;
    double mean_abs;
    int all_finite;
} scl_checkpoint_info;

SCL_API scl_status scl_checkpoint_inspect(const char* path, scl_checkpoint_info* out);

typedef struct scl_model scl_model;

/* Loads a checkpoint and propagates it over the dataset's training graph. */
SCL_API scl_status scl_model_load(const char* checkpoint_path, const scl_dataset* dataset, scl_model** out);
SCL_API void scl_model_free(scl_model* model);
SCL_API scl_status scl_model_score(const scl_model* model, uint32_t user, uint32_t item, float* out);

/* Top-k items for a user, training items excluded. *written <= k. */
SCL_API scl_status scl_model_recommend(const scl_model* model, uint32_t user, size_t k, uint32_t* items,
                                       size_t* written);
SCL_API scl_status scl_model_evaluate(const scl_model* model, scl_report* out);

#ifdef __cplusplus
}
#endif

#endif
