/* gowid — Gower-dissimilarity intrusion detection, centralized and federated.
 *
 * C interface of the shared library. Every function returns GOWID_OK (0) on
 * success or a nonzero gowid_status; gowid_last_error() holds a thread-local
 * message for the most recent failure on the calling thread. Handles are
 * opaque and owned by the caller via the matching *_free function.
 */
#ifndef GOWID_H
#define GOWID_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gowid_status {
    GOWID_OK = 0,
    GOWID_ERR_IO = 1,
    GOWID_ERR_FORMAT = 2,
    GOWID_ERR_CONFIG = 3,
    GOWID_ERR_SHAPE = 4,
    GOWID_ERR_STATE = 5,
    GOWID_ERR_MEMORY = 6,
    GOWID_ERR_NUMERIC = 7,
    GOWID_ERR_INTERNAL = 8
} gowid_status;

const char* gowid_version(void);
const char* gowid_status_name(gowid_status status);
const char* gowid_last_error(void);

typedef struct gowid_schema gowid_schema;
typedef struct gowid_table gowid_table;
typedef struct gowid_matrix gowid_matrix;
typedef struct gowid_model gowid_model;

/* ---- schemas and instance tables ---- */

gowid_status gowid_schema_load(const char* path, gowid_schema** out);
void gowid_schema_free(gowid_schema* schema);

gowid_status gowid_table_load_csv(const char* csv_path, const gowid_schema* schema,
                                  gowid_table** out);
gowid_status gowid_table_balance(const gowid_table* table, uint64_t seed, gowid_table** out);
size_t gowid_table_rows(const gowid_table* table);
size_t gowid_table_features(const gowid_table* table);
void gowid_table_free(gowid_table* table);

/* ---- dissimilarity matrices ---- */

/* square training matrix over the whole table; threads <= 0 picks one worker per core */
gowid_status gowid_matrix_train(const gowid_table* table, int threads, gowid_matrix** out);
gowid_status gowid_matrix_load(const char* gowm_path, const char* gowl_path, gowid_matrix** out);
gowid_status gowid_matrix_save(const gowid_matrix* matrix, const char* gowm_path,
                               const char* gowl_path);
size_t gowid_matrix_rows(const gowid_matrix* matrix);
size_t gowid_matrix_cols(const gowid_matrix* matrix);
float gowid_matrix_get(const gowid_matrix* matrix, size_t row, size_t col);
int gowid_matrix_label(const gowid_matrix* matrix, size_t row);
void gowid_matrix_free(gowid_matrix* matrix);

/* ---- trained models ---- */

gowid_status gowid_model_load(const char* path, gowid_model** out);
size_t gowid_model_input_dim(const gowid_model* model);
/* scores must hold gowid_matrix_rows(matrix) doubles */
gowid_status gowid_model_predict(const gowid_model* model, const gowid_matrix* matrix,
                                 double* scores);
void gowid_model_free(gowid_model* model);

typedef struct gowid_metrics {
    uint64_t tp, fp, tn, fn;
    double accuracy, precision, recall, f1, fpr, auc;
    int auc_degenerate;
} gowid_metrics;

gowid_status gowid_model_evaluate(const gowid_model* model, const gowid_matrix* matrix,
                                  gowid_metrics* out);

/* ---- experiment pipeline (the CLI surface) ---- */

typedef struct gowid_run_options {
    int threads;               /* <= 0: one worker per core */
    uint64_t memory_cap_bytes; /* 0: 8 GiB default */
} gowid_run_options;

gowid_status gowid_synth_data(const char* out_dir, uint64_t rows, uint64_t seed);

/* mode: "cnl" or "fl" */
gowid_status gowid_create_matrices(const char* mode, const char* data_csv,
                                   const char* schema_path, const char* config_path,
                                   const char* out_dir, const gowid_run_options* options);

/* mode: "gc", "gf" or "gf-am" */
gowid_status gowid_train(const char* mode, const char* config_path, const char* matrices_dir,
                         const char* out_dir, const gowid_run_options* options);

gowid_status gowid_report(const char* run_dir);

#ifdef __cplusplus
}
#endif

#endif /* GOWID_H */
