#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gowid/table.hpp"

namespace gowid {

inline constexpr uint64_t kDefaultMemoryCapBytes = 8ULL << 30;  // 8 GiB

// Per-feature value spread over a reference instance set, missing cells
// ignored. Categorical slots hold 0.
struct RangeVector {
    std::vector<double> ranges;

    size_t size() const { return ranges.size(); }
    double operator[](size_t f) const { return ranges[f]; }
};

// Dense dissimilarity block. Entries live in [0,1] and are stored as float;
// all per-pair accumulation is done in double.
struct GowerMatrix {
    size_t rows = 0;
    size_t cols = 0;                  // k: width of the reference (training) set
    std::vector<float> values;        // row-major, rows * cols
    std::vector<uint8_t> row_labels;  // one per row
    std::string col_reference_id;

    float at(size_t r, size_t c) const { return values[r * cols + c]; }
    bool empty() const { return rows == 0; }
};

struct GowerBuildOptions {
    int threads = 1;  // <=0: one worker per core
    uint64_t memory_cap_bytes = kDefaultMemoryCapBytes;
};

RangeVector compute_ranges(const InstanceTable& reference);

// Categorical: 0 on exact token match, else 1. Numerical: |a-b|/R clamped to
// [0,1], 0 when R == 0. Missing on either side: nullopt (excluded from the mean).
std::optional<double> partial_dissimilarity(const Cell& a, const Cell& b, FeatureKind kind,
                                            double range);

// Mean of the defined partial dissimilarities; 1.0 when every partial is missing.
double gower_distance(const std::vector<Cell>& a, const std::vector<Cell>& b,
                      const FeatureSchema& schema, const RangeVector& ranges);

// Square symmetric zero-diagonal k x k matrix over `train`, ranges from `train`.
GowerMatrix gower_matrix(const InstanceTable& train, const GowerBuildOptions& options = {});

// rows x col_limit left block: entry (r,c) = GD(instance r, instance c), c < col_limit.
GowerMatrix gower_matrix_limit_cols(const InstanceTable& instances, size_t col_limit,
                                    const GowerBuildOptions& options = {});

// Test block: rows are instances [skip_train, n), columns the first col_limit
// training instances, ranges from the training slice only. Test-vs-test
// distances are never produced (col_limit must stay within skip_train).
GowerMatrix sliced_gower_matrix_limit_cols(const InstanceTable& all, size_t skip_train,
                                           size_t col_limit,
                                           const GowerBuildOptions& options = {});

// O(k) streaming row: GD(new_instance, train_c) for every column c. Ranges are
// the fixed training ranges, never recomputed.
std::vector<float> append_row(const GowerMatrix& matrix, const std::vector<Cell>& new_instance,
                              const InstanceTable& train, const RangeVector& ranges);

// "GOWM": magic, u16 version=1, u64 rows, u64 cols, float32 row-major; all LE.
// "GOWL": magic, u64 rows, one byte in {0,1} per row.
void save_matrix(const GowerMatrix& matrix, const std::string& gowm_path,
                 const std::string& gowl_path);
GowerMatrix load_matrix(const std::string& gowm_path, const std::string& gowl_path);

}  // namespace gowid
