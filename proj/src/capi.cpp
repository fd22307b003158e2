#include "gowid.h"

#include <cstring>
#include <new>
#include <string>

#include "gowid/error.hpp"
#include "gowid/experiment.hpp"
#include "gowid/gower.hpp"
#include "gowid/metrics.hpp"
#include "gowid/model.hpp"
#include "gowid/schema.hpp"
#include "gowid/table.hpp"
#include "gowid/trainer.hpp"

struct gowid_schema {
    gowid::FeatureSchema value;
};
struct gowid_table {
    gowid::InstanceTable value;
};
struct gowid_matrix {
    gowid::GowerMatrix value;
};
struct gowid_model {
    gowid::ModelParameters value;
};

namespace {

thread_local std::string g_last_error;

gowid_status to_status(gowid::ErrorCode code) {
    switch (code) {
        case gowid::ErrorCode::io: return GOWID_ERR_IO;
        case gowid::ErrorCode::format: return GOWID_ERR_FORMAT;
        case gowid::ErrorCode::config: return GOWID_ERR_CONFIG;
        case gowid::ErrorCode::shape: return GOWID_ERR_SHAPE;
        case gowid::ErrorCode::state: return GOWID_ERR_STATE;
        case gowid::ErrorCode::memory: return GOWID_ERR_MEMORY;
        case gowid::ErrorCode::numeric: return GOWID_ERR_NUMERIC;
        case gowid::ErrorCode::internal: return GOWID_ERR_INTERNAL;
    }
    return GOWID_ERR_INTERNAL;
}

template <typename Fn>
gowid_status guarded(Fn&& fn) {
    try {
        fn();
        g_last_error.clear();
        return GOWID_OK;
    } catch (const gowid::Error& e) {
        g_last_error = e.what();
        return to_status(e.code());
    } catch (const std::bad_alloc&) {
        g_last_error = "out of memory";
        return GOWID_ERR_MEMORY;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return GOWID_ERR_INTERNAL;
    } catch (...) {
        g_last_error = "unknown error";
        return GOWID_ERR_INTERNAL;
    }
}

gowid_status require(bool ok, const char* message) {
    if (ok) return GOWID_OK;
    g_last_error = message;
    return GOWID_ERR_CONFIG;
}

gowid::RunOptions to_run_options(const gowid_run_options* options) {
    gowid::RunOptions out;
    if (options) {
        out.threads = options->threads;
        out.memory_cap_bytes = options->memory_cap_bytes;
    }
    return out;
}

}  // namespace

extern "C" {

const char* gowid_version(void) { return gowid::kToolVersion; }

const char* gowid_status_name(gowid_status status) {
    switch (status) {
        case GOWID_OK: return "ok";
        case GOWID_ERR_IO: return "io";
        case GOWID_ERR_FORMAT: return "format";
        case GOWID_ERR_CONFIG: return "config";
        case GOWID_ERR_SHAPE: return "shape";
        case GOWID_ERR_STATE: return "state";
        case GOWID_ERR_MEMORY: return "memory";
        case GOWID_ERR_NUMERIC: return "numeric";
        case GOWID_ERR_INTERNAL: return "internal";
    }
    return "internal";
}

const char* gowid_last_error(void) { return g_last_error.c_str(); }

gowid_status gowid_schema_load(const char* path, gowid_schema** out) {
    if (auto s = require(path && out, "gowid_schema_load: null argument")) return s;
    return guarded([&] { *out = new gowid_schema{gowid::FeatureSchema::from_json_file(path)}; });
}

void gowid_schema_free(gowid_schema* schema) { delete schema; }

gowid_status gowid_table_load_csv(const char* csv_path, const gowid_schema* schema,
                                  gowid_table** out) {
    if (auto s = require(csv_path && schema && out, "gowid_table_load_csv: null argument"))
        return s;
    return guarded([&] { *out = new gowid_table{gowid::load_csv(csv_path, schema->value)}; });
}

gowid_status gowid_table_balance(const gowid_table* table, uint64_t seed, gowid_table** out) {
    if (auto s = require(table && out, "gowid_table_balance: null argument")) return s;
    return guarded([&] { *out = new gowid_table{gowid::balance(table->value, seed)}; });
}

size_t gowid_table_rows(const gowid_table* table) { return table ? table->value.size() : 0; }

size_t gowid_table_features(const gowid_table* table) {
    return table ? table->value.schema.feature_count() : 0;
}

void gowid_table_free(gowid_table* table) { delete table; }

gowid_status gowid_matrix_train(const gowid_table* table, int threads, gowid_matrix** out) {
    if (auto s = require(table && out, "gowid_matrix_train: null argument")) return s;
    return guarded([&] {
        gowid::GowerBuildOptions options;
        options.threads = threads;
        *out = new gowid_matrix{gowid::gower_matrix(table->value, options)};
    });
}

gowid_status gowid_matrix_load(const char* gowm_path, const char* gowl_path, gowid_matrix** out) {
    if (auto s = require(gowm_path && gowl_path && out, "gowid_matrix_load: null argument"))
        return s;
    return guarded([&] { *out = new gowid_matrix{gowid::load_matrix(gowm_path, gowl_path)}; });
}

gowid_status gowid_matrix_save(const gowid_matrix* matrix, const char* gowm_path,
                               const char* gowl_path) {
    if (auto s = require(matrix && gowm_path && gowl_path, "gowid_matrix_save: null argument"))
        return s;
    return guarded([&] { gowid::save_matrix(matrix->value, gowm_path, gowl_path); });
}

size_t gowid_matrix_rows(const gowid_matrix* matrix) { return matrix ? matrix->value.rows : 0; }
size_t gowid_matrix_cols(const gowid_matrix* matrix) { return matrix ? matrix->value.cols : 0; }

float gowid_matrix_get(const gowid_matrix* matrix, size_t row, size_t col) {
    if (!matrix || row >= matrix->value.rows || col >= matrix->value.cols) return -1.0f;
    return matrix->value.at(row, col);
}

int gowid_matrix_label(const gowid_matrix* matrix, size_t row) {
    if (!matrix || row >= matrix->value.row_labels.size()) return -1;
    return matrix->value.row_labels[row];
}

void gowid_matrix_free(gowid_matrix* matrix) { delete matrix; }

gowid_status gowid_model_load(const char* path, gowid_model** out) {
    if (auto s = require(path && out, "gowid_model_load: null argument")) return s;
    return guarded([&] { *out = new gowid_model{gowid::load_model(path)}; });
}

size_t gowid_model_input_dim(const gowid_model* model) {
    return model ? static_cast<size_t>(model->value.input_dim()) : 0;
}

gowid_status gowid_model_predict(const gowid_model* model, const gowid_matrix* matrix,
                                 double* scores) {
    if (auto s = require(model && matrix && scores, "gowid_model_predict: null argument"))
        return s;
    return guarded([&] {
        const std::vector<double> s =
            gowid::predict(model->value, gowid::widen(matrix->value));
        std::memcpy(scores, s.data(), s.size() * sizeof(double));
    });
}

void gowid_model_free(gowid_model* model) { delete model; }

gowid_status gowid_model_evaluate(const gowid_model* model, const gowid_matrix* matrix,
                                  gowid_metrics* out) {
    if (auto s = require(model && matrix && out, "gowid_model_evaluate: null argument")) return s;
    return guarded([&] {
        const gowid::MetricsReport m = gowid::evaluate(model->value, matrix->value);
        *out = gowid_metrics{m.counts.tp, m.counts.fp, m.counts.tn,
                             m.counts.fn, m.accuracy,  m.precision,
                             m.recall,    m.f1,        m.fpr,
                             m.auc,       m.auc_degenerate ? 1 : 0};
    });
}

gowid_status gowid_synth_data(const char* out_dir, uint64_t rows, uint64_t seed) {
    if (auto s = require(out_dir != nullptr, "gowid_synth_data: null argument")) return s;
    return guarded([&] { gowid::synth_data(out_dir, rows, seed); });
}

gowid_status gowid_create_matrices(const char* mode, const char* data_csv,
                                   const char* schema_path, const char* config_path,
                                   const char* out_dir, const gowid_run_options* options) {
    if (auto s = require(mode && data_csv && schema_path && config_path && out_dir,
                         "gowid_create_matrices: null argument"))
        return s;
    return guarded([&] {
        gowid::create_matrices(mode, data_csv, schema_path, config_path, out_dir,
                               to_run_options(options));
    });
}

gowid_status gowid_train(const char* mode, const char* config_path, const char* matrices_dir,
                         const char* out_dir, const gowid_run_options* options) {
    if (auto s = require(mode && config_path && matrices_dir && out_dir,
                         "gowid_train: null argument"))
        return s;
    return guarded([&] {
        gowid::train_run(mode, config_path, matrices_dir, out_dir, to_run_options(options));
    });
}

gowid_status gowid_report(const char* run_dir) {
    if (auto s = require(run_dir != nullptr, "gowid_report: null argument")) return s;
    return guarded([&] { gowid::emit_plot_data(run_dir); });
}

}  // extern "C"
