// Exercises libgowid strictly through the C interface. No core headers, so
// a failure here means the shared-library surface itself regressed.

#include <cassert>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "gowid.h"

namespace fs = std::filesystem;

static int g_failures = 0;

#define CHECK(cond)                                                        \
    do {                                                                   \
        if (!(cond)) {                                                     \
            std::fprintf(stderr, "FAIL %s:%d: %s\n", __FILE__, __LINE__,   \
                         #cond);                                           \
            ++g_failures;                                                  \
        }                                                                  \
    } while (0)

static std::string fresh_dir(const char* name) {
    const fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

static void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    out << content;
}

int main() {
    CHECK(gowid_version() != nullptr);
    CHECK(std::strlen(gowid_version()) > 0);
    CHECK(std::strcmp(gowid_status_name(GOWID_ERR_MEMORY), "memory") == 0);

    // ---- error reporting ----
    gowid_schema* schema = nullptr;
    gowid_status status = gowid_schema_load("/nonexistent/schema.json", &schema);
    CHECK(status == GOWID_ERR_IO);
    CHECK(std::strlen(gowid_last_error()) > 0);
    CHECK(gowid_schema_load(nullptr, &schema) == GOWID_ERR_CONFIG);

    // ---- full pipeline over the C surface ----
    const std::string data_dir = fresh_dir("gowid_capi_data");
    CHECK(gowid_synth_data(data_dir.c_str(), 240, 26) == GOWID_OK);
    CHECK(fs::exists(data_dir + "/data.csv"));
    CHECK(fs::exists(data_dir + "/schema.json"));

    const std::string config_path = data_dir + "/gc.json";
    write_file(config_path, R"({
        "run_name": "capi_gc",
        "training_ds_size": 80,
        "test_ds_size": 20,
        "balanced": false,
        "epochs": 4,
        "learning_rate": 0.001,
        "batch_size": 16,
        "seed": 26
    })");

    const std::string matrices_dir = fresh_dir("gowid_capi_matrices");
    gowid_run_options options{1, 0};
    CHECK(gowid_create_matrices("cnl", (data_dir + "/data.csv").c_str(),
                                (data_dir + "/schema.json").c_str(), config_path.c_str(),
                                matrices_dir.c_str(), &options) == GOWID_OK);

    const std::string run_dir = fresh_dir("gowid_capi_run");
    CHECK(gowid_train("gc", config_path.c_str(), matrices_dir.c_str(), run_dir.c_str(),
                      &options) == GOWID_OK);
    CHECK(fs::exists(run_dir + "/summary.json"));
    CHECK(gowid_report(run_dir.c_str()) == GOWID_OK);
    CHECK(fs::exists(run_dir + "/pr_scatter.csv"));

    // ---- handle-based access ----
    CHECK(gowid_schema_load((data_dir + "/schema.json").c_str(), &schema) == GOWID_OK);
    gowid_table* table = nullptr;
    CHECK(gowid_table_load_csv((data_dir + "/data.csv").c_str(), schema, &table) == GOWID_OK);
    CHECK(gowid_table_rows(table) == 240);
    CHECK(gowid_table_features(table) == 6);

    gowid_table* balanced = nullptr;
    CHECK(gowid_table_balance(table, 7, &balanced) == GOWID_OK);
    CHECK(gowid_table_rows(balanced) % 2 == 0);
    CHECK(gowid_table_rows(balanced) <= 240);

    gowid_matrix* matrix = nullptr;
    CHECK(gowid_matrix_train(balanced, 1, &matrix) == GOWID_OK);
    const size_t k = gowid_matrix_rows(matrix);
    CHECK(k == gowid_table_rows(balanced));
    CHECK(gowid_matrix_cols(matrix) == k);
    CHECK(gowid_matrix_get(matrix, 0, 0) == 0.0f);
    bool in_bounds = true;
    for (size_t r = 0; r < k; ++r)
        for (size_t c = 0; c < k; ++c) {
            const float v = gowid_matrix_get(matrix, r, c);
            in_bounds = in_bounds && v >= 0.0f && v <= 1.0f;
        }
    CHECK(in_bounds);
    CHECK(gowid_matrix_label(matrix, 0) >= 0);
    CHECK(gowid_matrix_label(matrix, k) == -1);  // out of range

    const std::string mpath = data_dir + "/roundtrip.gowm";
    const std::string lpath = data_dir + "/roundtrip.gowl";
    CHECK(gowid_matrix_save(matrix, mpath.c_str(), lpath.c_str()) == GOWID_OK);
    gowid_matrix* reloaded = nullptr;
    CHECK(gowid_matrix_load(mpath.c_str(), lpath.c_str(), &reloaded) == GOWID_OK);
    CHECK(gowid_matrix_rows(reloaded) == k);
    CHECK(gowid_matrix_get(reloaded, 1, 0) == gowid_matrix_get(matrix, 1, 0));

    // ---- model scoring ----
    gowid_model* model = nullptr;
    CHECK(gowid_model_load((run_dir + "/model.gown").c_str(), &model) == GOWID_OK);
    CHECK(gowid_model_input_dim(model) == 80);

    gowid_matrix* test_matrix = nullptr;
    CHECK(gowid_matrix_load((matrices_dir + "/test.gowm").c_str(),
                            (matrices_dir + "/test.gowl").c_str(), &test_matrix) == GOWID_OK);
    std::vector<double> scores(gowid_matrix_rows(test_matrix));
    CHECK(gowid_model_predict(model, test_matrix, scores.data()) == GOWID_OK);
    bool scores_valid = true;
    for (double s : scores) scores_valid = scores_valid && s > 0.0 && s < 1.0;
    CHECK(scores_valid);

    gowid_metrics metrics{};
    CHECK(gowid_model_evaluate(model, test_matrix, &metrics) == GOWID_OK);
    CHECK(metrics.tp + metrics.fp + metrics.tn + metrics.fn == gowid_matrix_rows(test_matrix));
    CHECK(metrics.accuracy >= 0.0);
    CHECK(metrics.accuracy <= 1.0);

    // width mismatch surfaces as a shape error
    CHECK(gowid_model_predict(model, matrix, scores.data()) == GOWID_ERR_SHAPE);

    // ---- config errors carry their status ----
    const std::string bad_config = data_dir + "/bad.json";
    write_file(bad_config, "{\"run_name\": \"x\"}");
    CHECK(gowid_train("gc", bad_config.c_str(), matrices_dir.c_str(), run_dir.c_str(),
                      nullptr) == GOWID_ERR_CONFIG);
    CHECK(gowid_create_matrices("weird", (data_dir + "/data.csv").c_str(),
                                (data_dir + "/schema.json").c_str(), config_path.c_str(),
                                matrices_dir.c_str(), nullptr) == GOWID_ERR_CONFIG);

    gowid_matrix_free(test_matrix);
    gowid_matrix_free(reloaded);
    gowid_matrix_free(matrix);
    gowid_model_free(model);
    gowid_table_free(balanced);
    gowid_table_free(table);
    gowid_schema_free(schema);

    if (g_failures == 0) {
        std::printf("capi: all checks passed\n");
        return 0;
    }
    std::fprintf(stderr, "capi: %d check(s) failed\n", g_failures);
    return 1;
}
