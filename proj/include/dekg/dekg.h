#ifndef DEKG_H
#define DEKG_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DEKG_API __declspec(dllexport)
#else
#define DEKG_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dekg_status {
  DEKG_OK = 0,
  DEKG_ERR_INVALID_ARGUMENT = 1,
  DEKG_ERR_IO = 2,
  DEKG_ERR_PARSE = 3,
  DEKG_ERR_DIMENSION = 4,
  DEKG_ERR_INDEX = 5,
  DEKG_ERR_NUMERIC = 6,
  DEKG_ERR_CONSTRAINT = 7,
  DEKG_ERR_DEGENERATE_SPLIT = 8,
  DEKG_ERR_CHECKPOINT = 9,
  DEKG_ERR_VERIFICATION = 10,
  DEKG_ERR_CONFIG = 11,
  DEKG_ERR_CONSTRUCTION = 12,
  DEKG_ERR_INTERNAL = 13
} dekg_status;

typedef struct dekg_config dekg_config;
typedef struct dekg_dataset dekg_dataset;
typedef struct dekg_model dekg_model;

/* Message of the last failed call on this thread ("" if none). */
DEKG_API const char* dekg_last_error(void);
DEKG_API const char* dekg_status_name(int status);
DEKG_API void dekg_string_free(char* s);

/* Configuration: flat key = value pairs. */
DEKG_API int dekg_config_new(dekg_config** out);
DEKG_API int dekg_config_load(const char* path, dekg_config** out);
DEKG_API void dekg_config_free(dekg_config* cfg);
/* Entries apply in order; gamma is resolved against the final dim. */
DEKG_API int dekg_config_set(dekg_config* cfg, const char* key, const char* value);
DEKG_API int dekg_config_to_string(const dekg_config* cfg, char** out);
DEKG_API size_t dekg_config_key_count(void);
DEKG_API const char* dekg_config_key(size_t i);

/* Datasets: a directory with train.txt, valid.txt, test.txt.
   time_format is "auto", "iso" or "integer" (NULL means auto). */
DEKG_API int dekg_dataset_load(const char* dir, const char* time_format, dekg_dataset** out);
DEKG_API void dekg_dataset_free(dekg_dataset* ds);

typedef struct dekg_dataset_info {
  size_t num_entities;
  size_t num_relations;
  size_t num_timestamps;
  size_t num_train;
  size_t num_valid;
  size_t num_test;
} dekg_dataset_info;

DEKG_API int dekg_dataset_info_get(const dekg_dataset* ds, dekg_dataset_info* out);
DEKG_API int dekg_dataset_write(const dekg_dataset* ds, const char* dir);
/* Number of distinct timestamps shared by two splits ("train", "valid", "test"). */
DEKG_API int dekg_dataset_shared_timestamps(const dekg_dataset* ds, const char* split_a,
                                            const char* split_b, size_t* out);
/* Holds out every fact whose day of month is in `days`. */
DEKG_API int dekg_dataset_split_unseen(const dekg_dataset* ds, const int* days, size_t num_days,
                                       uint64_t seed, dekg_dataset** out, size_t* dropped);

/* Training. The callback, if given, runs after every validation. */
typedef void (*dekg_history_fn)(int epoch, double loss, double val_mrr, void* user);

DEKG_API int dekg_train(const dekg_config* cfg, const dekg_dataset* ds, dekg_history_fn fn,
                        void* user, dekg_model** out);
DEKG_API void dekg_model_free(dekg_model* model);

typedef struct dekg_model_info {
  int best_epoch;
  double best_val_mrr; /* NaN when no validation ran */
  size_t num_history_rows;
  size_t num_parameters;
} dekg_model_info;

DEKG_API int dekg_model_info_get(const dekg_model* model, dekg_model_info* out);
/* "epoch,loss,val_mrr" rows with a header. */
DEKG_API int dekg_model_history_csv(const dekg_model* model, char** out);
DEKG_API int dekg_model_save(const dekg_model* model, const char* path);
/* Fails with DEKG_ERR_CHECKPOINT when the dataset vocabulary differs. */
DEKG_API int dekg_model_load(const char* path, const dekg_dataset* ds, dekg_model** out);
/* Score of (head, relation, tail) at the dataset's timestamp `time_id`. */
DEKG_API int dekg_model_score(const dekg_model* model, int32_t head, int32_t relation,
                              int32_t tail, int32_t time_id, double* out);

typedef struct dekg_metrics {
  double mrr;
  double hit1;
  double hit3;
  double hit10;
  size_t num_queries;
} dekg_metrics;

/* split: "train", "valid" or "test"; ties: "optimistic" or "pessimistic" (NULL means optimistic). */
DEKG_API int dekg_evaluate(const dekg_model* model, const dekg_dataset* ds, const char* split,
                           const char* ties, int threads, dekg_metrics* out);
/* CSV and table renderings of one report row. */
DEKG_API int dekg_report(const char* model_name, const char* split, const dekg_metrics* m,
                         char** csv, char** table);
DEKG_API const char* dekg_model_kind(const dekg_model* model);

/* Sweeps over "gamma", "activation" or "dropout". Writes CSV and SVG text. */
DEKG_API int dekg_sweep(const dekg_config* cfg, const dekg_dataset* ds, const char* axis,
                        const char* const* values, size_t num_values, char** csv, char** svg);
/* Validation-MRR training curves for the listed model kinds. */
DEKG_API int dekg_training_curves(const dekg_config* cfg, const dekg_dataset* ds,
                                  const char* const* models, size_t num_models, char** csv,
                                  char** svg);

/* Expressivity construction checks. */
typedef struct dekg_expressivity_summary {
  size_t worlds;
  size_t worlds_failed;
  size_t tuples;
  size_t mismatches;
  double max_indicator_error;
} dekg_expressivity_summary;

typedef void (*dekg_world_fn)(size_t index, int passed, size_t mismatches, double indicator_error,
                              void* user);

/* exhaustive != 0 enumerates every truth table (at most 16 tuples);
   otherwise `random_worlds` tables are drawn from `seed`. */
DEKG_API int dekg_theory_expressivity(int num_entities, int num_relations, int num_timestamps,
                                      int block_length, int exhaustive, size_t random_worlds,
                                      uint64_t seed, dekg_world_fn fn, void* user,
                                      dekg_expressivity_summary* out);

typedef struct dekg_tying_summary {
  size_t checked;
  size_t violations;
} dekg_tying_summary;

/* scheme: "symmetric", "anti-symmetric", "inverse" or "entails".
   negative_delta != 0 injects a negative entailment delta element. */
DEKG_API int dekg_theory_tying(const char* scheme, const char* model_kind, int num_entities,
                               int dim, size_t samples, uint64_t seed, int negative_delta,
                               dekg_tying_summary* out);

#ifdef __cplusplus
}
#endif

#endif
