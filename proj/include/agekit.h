/* agekit — confidence-aware age estimation toolkit, C interface.
 *
 * Every object is an opaque handle created and destroyed by this library.
 * Functions returning agekit_status never throw across the boundary; on
 * failure they return a nonzero code and leave a message retrievable with
 * agekit_last_error() (thread-local). Output strings are allocated by the
 * library and must be released with agekit_string_free().
 */
#ifndef AGEKIT_H
#define AGEKIT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum agekit_status {
    AGEKIT_OK = 0,
    AGEKIT_ERR_INVALID_ARGUMENT = 1,
    AGEKIT_ERR_PARSE = 2,
    AGEKIT_ERR_IO = 3,
    AGEKIT_ERR_NUMERIC = 4,
    AGEKIT_ERR_INTERNAL = 5
} agekit_status;

/* Library version, e.g. "1.0.0". Static storage; do not free. */
const char* agekit_version(void);

/* Message from the calling thread's most recent failed call; empty string
 * when the last call succeeded. Static storage; do not free. */
const char* agekit_last_error(void);

void agekit_string_free(char* s);

typedef struct agekit_config agekit_config;
typedef struct agekit_dataset agekit_dataset;
typedef struct agekit_model agekit_model;
typedef struct agekit_table agekit_table;
typedef struct agekit_report agekit_report;

/* ---- run configuration -------------------------------------------------
 * Flat dotted keys (e.g. "train.epochs", "gen.group_noise_mult"); the full
 * schema and defaults are documented in docs/FORMATS.md. Unknown keys are
 * rejected.
 */
agekit_config* agekit_config_create(void);
agekit_status agekit_config_load(const char* path, agekit_config** out);
agekit_status agekit_config_set(agekit_config* cfg, const char* key,
                                const char* value);
agekit_status agekit_config_get(const agekit_config* cfg, const char* key,
                                char** out);
void agekit_config_free(agekit_config* cfg);

/* ---- datasets ---------------------------------------------------------- */
agekit_status agekit_dataset_generate(const agekit_config* cfg,
                                      agekit_dataset** out);
agekit_status agekit_dataset_load_csv(const char* path, agekit_dataset** out);
/* cfg may be NULL; when given, its key = value echo is embedded as leading
 * '#' comment lines. */
agekit_status agekit_dataset_save_csv(const agekit_dataset* ds,
                                      const agekit_config* cfg,
                                      const char* path);
size_t agekit_dataset_size(const agekit_dataset* ds);
size_t agekit_dataset_feature_dim(const agekit_dataset* ds);
void agekit_dataset_free(agekit_dataset* ds);

/* ---- models ------------------------------------------------------------ */
/* Trains on ds with the config's model/train/loss blocks and global seed.
 * When log_path is non-NULL the per-epoch training log (TSV) is written
 * there. */
agekit_status agekit_train(const agekit_config* cfg, const agekit_dataset* ds,
                           const char* log_path, agekit_model** out);
agekit_status agekit_model_load(const char* path, agekit_model** out);
agekit_status agekit_model_save(const agekit_model* model, const char* path);
size_t agekit_model_input_dim(const agekit_model* model);
/* features: row-major n_rows x input_dim. mu_out/sigma_out: n_rows each. */
agekit_status agekit_model_predict(const agekit_model* model,
                                   const double* features, size_t n_rows,
                                   double* mu_out, double* sigma_out);
void agekit_model_free(agekit_model* model);

/* ---- threshold tables --------------------------------------------------- */
/* Calibrates confidence thresholds (and the sigma-blind fixed-width
 * baseline) from the model's predictions over ds. */
agekit_status agekit_calibrate(const agekit_config* cfg,
                               const agekit_model* model,
                               const agekit_dataset* ds, agekit_table** out);
agekit_status agekit_table_load(const char* path, agekit_table** out);
agekit_status agekit_table_save(const agekit_table* table, const char* path);
agekit_status agekit_range_for(const agekit_table* table, double mu,
                               double sigma, double* lo_out, double* hi_out);
void agekit_table_free(agekit_table* table);

/* ---- one-shot decisions -------------------------------------------------
 * Each writes one serialized decision-record line (no trailing newline)
 * into *out. method is "sr" or "confidence"; the confidence method needs a
 * table, sr ignores it.
 */
agekit_status agekit_decide_estimate(double mu, double sigma, char** out);
agekit_status agekit_decide_verify(double mu, double sigma, double legal_age,
                                   double challenge_age, const char* method,
                                   const agekit_table* table, char** out);
agekit_status agekit_decide_compare(double mu, double sigma,
                                    double claimed_age,
                                    const agekit_table* table, char** out);

/* ---- evaluation ---------------------------------------------------------
 * task is "estimate", "verify", or "compare". table may be NULL for tasks
 * and methods that do not use it.
 */
agekit_status agekit_eval(const agekit_config* cfg, const agekit_model* model,
                          const agekit_table* table, const agekit_dataset* ds,
                          const char* task, agekit_report** out);
agekit_status agekit_report_save(const agekit_report* report,
                                 const char* path);
/* Flat name<TAB>value metric lines. */
agekit_status agekit_report_summary(const agekit_report* report, char** out);
void agekit_report_free(agekit_report* report);

#ifdef __cplusplus
}
#endif

#endif /* AGEKIT_H */
