#include "gowid/gower.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>
#include <unordered_map>

#include "binio.hpp"
#include "gowid/error.hpp"

namespace gowid {

namespace {

// Token id for values absent from the reference intern map; compares unequal
// to every reference id.
constexpr uint32_t kForeignToken = std::numeric_limits<uint32_t>::max();

// Column-major view of an instance table: the hot pairwise loop never touches
// strings or variants. Feature order (and therefore accumulation order) stays
// the schema order, so every matrix path produces bit-identical sums.
struct Columnized {
    struct Col {
        FeatureKind kind;
        std::vector<double> num;
        std::vector<uint32_t> tok;
        std::vector<uint8_t> present;
        std::unordered_map<std::string, uint32_t> intern;
    };
    std::vector<Col> cols;
    size_t rows = 0;
};

Columnized columnize(const InstanceTable& table) {
    const FeatureSchema& schema = table.schema;
    Columnized out;
    out.rows = table.size();
    out.cols.resize(schema.feature_count());
    for (size_t f = 0; f < schema.feature_count(); ++f) {
        Columnized::Col& col = out.cols[f];
        col.kind = schema.columns[f].kind;
        col.present.assign(out.rows, 0);
        if (col.kind == FeatureKind::numerical) col.num.assign(out.rows, 0.0);
        else col.tok.assign(out.rows, kForeignToken);
    }
    for (size_t r = 0; r < out.rows; ++r) {
        const std::vector<Cell>& row = table.rows[r];
        if (row.size() != schema.feature_count())
            fail(ErrorCode::shape, "gower: row " + std::to_string(r) + " has " +
                                       std::to_string(row.size()) + " cells, schema expects " +
                                       std::to_string(schema.feature_count()));
        for (size_t f = 0; f < row.size(); ++f) {
            const Cell& cell = row[f];
            Columnized::Col& col = out.cols[f];
            if (cell.is_missing()) continue;
            if (col.kind == FeatureKind::numerical) {
                if (cell.state != Cell::State::number)
                    fail(ErrorCode::shape, "gower: token in numerical column \"" +
                                               schema.columns[f].name + "\"");
                col.num[r] = cell.number;
            } else {
                if (cell.state != Cell::State::token)
                    fail(ErrorCode::shape, "gower: number in categorical column \"" +
                                               schema.columns[f].name + "\"");
                auto [it, _] = col.intern.try_emplace(
                    cell.token, static_cast<uint32_t>(col.intern.size()));
                col.tok[r] = it->second;
            }
            col.present[r] = 1;
        }
    }
    return out;
}

// One extra row interned against a reference table's token maps.
Columnized columnize_against(const std::vector<Cell>& row, const FeatureSchema& schema,
                             const Columnized& reference) {
    if (row.size() != schema.feature_count())
        fail(ErrorCode::shape, "gower: instance has " + std::to_string(row.size()) +
                                   " cells, schema expects " +
                                   std::to_string(schema.feature_count()));
    Columnized out;
    out.rows = 1;
    out.cols.resize(schema.feature_count());
    for (size_t f = 0; f < schema.feature_count(); ++f) {
        const Cell& cell = row[f];
        Columnized::Col& col = out.cols[f];
        col.kind = schema.columns[f].kind;
        col.present.assign(1, 0);
        if (col.kind == FeatureKind::numerical) col.num.assign(1, 0.0);
        else col.tok.assign(1, kForeignToken);
        if (cell.is_missing()) continue;
        if (col.kind == FeatureKind::numerical) {
            if (cell.state != Cell::State::number)
                fail(ErrorCode::shape,
                     "gower: token in numerical column \"" + schema.columns[f].name + "\"");
            col.num[0] = cell.number;
        } else {
            if (cell.state != Cell::State::token)
                fail(ErrorCode::shape,
                     "gower: number in categorical column \"" + schema.columns[f].name + "\"");
            auto it = reference.cols[f].intern.find(cell.token);
            col.tok[0] = it == reference.cols[f].intern.end() ? kForeignToken : it->second;
        }
        col.present[0] = 1;
    }
    return out;
}

RangeVector ranges_over(const Columnized& data, size_t row_count) {
    RangeVector rv;
    rv.ranges.assign(data.cols.size(), 0.0);
    for (size_t f = 0; f < data.cols.size(); ++f) {
        const Columnized::Col& col = data.cols[f];
        if (col.kind != FeatureKind::numerical) continue;
        double lo = 0.0, hi = 0.0;
        bool seen = false;
        for (size_t r = 0; r < row_count; ++r) {
            if (!col.present[r]) continue;
            if (!seen) {
                lo = hi = col.num[r];
                seen = true;
            } else {
                lo = std::min(lo, col.num[r]);
                hi = std::max(hi, col.num[r]);
            }
        }
        rv.ranges[f] = seen ? hi - lo : 0.0;
    }
    return rv;
}

double pair_distance(const Columnized& a, size_t i, const Columnized& b, size_t j,
                     const RangeVector& ranges) {
    double sum = 0.0;
    unsigned counted = 0;
    for (size_t f = 0; f < a.cols.size(); ++f) {
        const Columnized::Col& ca = a.cols[f];
        const Columnized::Col& cb = b.cols[f];
        if (!(ca.present[i] && cb.present[j])) continue;
        ++counted;
        if (ca.kind == FeatureKind::numerical) {
            const double range = ranges[f];
            if (range > 0.0) {
                double d = std::abs(ca.num[i] - cb.num[j]) / range;
                sum += d > 1.0 ? 1.0 : d;
            }
        } else {
            sum += ca.tok[i] != cb.tok[j] ? 1.0 : 0.0;
        }
    }
    return counted == 0 ? 1.0 : sum / static_cast<double>(counted);
}

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 16u));
}

// Row-parallel fill; each worker owns whole output rows, so the result cannot
// depend on the worker count.
template <typename RowFn>
void fill_rows(size_t rows, int threads_requested, RowFn&& per_row) {
    size_t workers = static_cast<size_t>(resolve_threads(threads_requested));
    if (rows > 0 && workers > rows) workers = rows;
    if (workers <= 1) {
        for (size_t r = 0; r < rows; ++r) per_row(r);
        return;
    }
    std::atomic<size_t> next{0};
    auto worker = [&] {
        while (true) {
            size_t r = next.fetch_add(1);
            if (r >= rows) break;
            per_row(r);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
}

void check_memory(size_t rows, size_t cols, uint64_t cap) {
    if (cap == 0) cap = kDefaultMemoryCapBytes;
    const uint64_t required = 4ull * rows * cols;
    if (required > cap)
        fail(ErrorCode::memory, "gower matrix " + std::to_string(rows) + "x" +
                                    std::to_string(cols) + " requires " +
                                    std::to_string(required) +
                                    " bytes of matrix storage (plus overhead); cap is " +
                                    std::to_string(cap) + " bytes");
}

}  // namespace

RangeVector compute_ranges(const InstanceTable& reference) {
    if (reference.empty()) fail(ErrorCode::state, "compute_ranges: empty reference table");
    Columnized data = columnize(reference);
    return ranges_over(data, data.rows);
}

std::optional<double> partial_dissimilarity(const Cell& a, const Cell& b, FeatureKind kind,
                                            double range) {
    if (a.is_missing() || b.is_missing()) return std::nullopt;
    if (kind == FeatureKind::categorical) {
        if (a.state != Cell::State::token || b.state != Cell::State::token)
            fail(ErrorCode::shape, "partial_dissimilarity: categorical feature expects tokens");
        return a.token == b.token ? 0.0 : 1.0;
    }
    if (a.state != Cell::State::number || b.state != Cell::State::number)
        fail(ErrorCode::shape, "partial_dissimilarity: numerical feature expects numbers");
    if (!(range > 0.0)) return 0.0;
    double d = std::abs(a.number - b.number) / range;
    return d > 1.0 ? 1.0 : d;
}

double gower_distance(const std::vector<Cell>& a, const std::vector<Cell>& b,
                      const FeatureSchema& schema, const RangeVector& ranges) {
    if (a.size() != schema.feature_count() || b.size() != schema.feature_count())
        fail(ErrorCode::shape, "gower_distance: instance arity does not match schema");
    if (ranges.size() != schema.feature_count())
        fail(ErrorCode::shape, "gower_distance: range vector arity does not match schema");
    double sum = 0.0;
    unsigned counted = 0;
    for (size_t f = 0; f < schema.feature_count(); ++f) {
        auto pd = partial_dissimilarity(a[f], b[f], schema.columns[f].kind, ranges[f]);
        if (!pd) continue;
        ++counted;
        sum += *pd;
    }
    return counted == 0 ? 1.0 : sum / static_cast<double>(counted);
}

GowerMatrix gower_matrix(const InstanceTable& train, const GowerBuildOptions& options) {
    if (train.empty()) fail(ErrorCode::state, "gower_matrix: empty training table");
    const size_t k = train.size();
    check_memory(k, k, options.memory_cap_bytes);

    Columnized data = columnize(train);
    RangeVector ranges = ranges_over(data, k);

    GowerMatrix m;
    m.rows = m.cols = k;
    m.values.assign(k * k, 0.0f);
    m.row_labels = train.labels;
    m.col_reference_id = "train";

    // lower triangle, mirrored; GD is symmetric in exact arithmetic
    fill_rows(k, options.threads, [&](size_t r) {
        for (size_t c = 0; c < r; ++c)
            m.values[r * k + c] = static_cast<float>(pair_distance(data, r, data, c, ranges));
        m.values[r * k + r] = 0.0f;
    });
    for (size_t r = 0; r < k; ++r)
        for (size_t c = r + 1; c < k; ++c) m.values[r * k + c] = m.values[c * k + r];
    return m;
}

GowerMatrix gower_matrix_limit_cols(const InstanceTable& instances, size_t col_limit,
                                    const GowerBuildOptions& options) {
    if (instances.empty()) fail(ErrorCode::state, "gower_matrix_limit_cols: empty table");
    if (col_limit == 0 || col_limit > instances.size())
        fail(ErrorCode::config, "gower_matrix_limit_cols: col_limit " +
                                    std::to_string(col_limit) + " outside [1, " +
                                    std::to_string(instances.size()) + "]");
    const size_t rows = instances.size();
    check_memory(rows, col_limit, options.memory_cap_bytes);

    Columnized data = columnize(instances);
    RangeVector ranges = ranges_over(data, rows);

    GowerMatrix m;
    m.rows = rows;
    m.cols = col_limit;
    m.values.assign(rows * col_limit, 0.0f);
    m.row_labels = instances.labels;
    m.col_reference_id = "train";

    fill_rows(rows, options.threads, [&](size_t r) {
        for (size_t c = 0; c < col_limit; ++c)
            m.values[r * col_limit + c] =
                r == c ? 0.0f : static_cast<float>(pair_distance(data, r, data, c, ranges));
    });
    return m;
}

GowerMatrix sliced_gower_matrix_limit_cols(const InstanceTable& all, size_t skip_train,
                                           size_t col_limit, const GowerBuildOptions& options) {
    if (skip_train == 0 || skip_train >= all.size())
        fail(ErrorCode::config,
             "sliced_gower_matrix_limit_cols: need at least one training and one test row");
    if (col_limit == 0 || col_limit > skip_train)
        fail(ErrorCode::config, "sliced_gower_matrix_limit_cols: col_limit " +
                                    std::to_string(col_limit) +
                                    " exceeds the training slice of " +
                                    std::to_string(skip_train) +
                                    " rows (test-vs-test distances are not produced)");
    const size_t test_rows = all.size() - skip_train;
    check_memory(test_rows, col_limit, options.memory_cap_bytes);

    Columnized data = columnize(all);
    RangeVector ranges = ranges_over(data, skip_train);  // training ranges only

    GowerMatrix m;
    m.rows = test_rows;
    m.cols = col_limit;
    m.values.assign(test_rows * col_limit, 0.0f);
    m.row_labels.assign(all.labels.begin() + static_cast<long>(skip_train), all.labels.end());
    m.col_reference_id = "train";

    fill_rows(test_rows, options.threads, [&](size_t r) {
        for (size_t c = 0; c < col_limit; ++c)
            m.values[r * col_limit + c] =
                static_cast<float>(pair_distance(data, skip_train + r, data, c, ranges));
    });
    return m;
}

std::vector<float> append_row(const GowerMatrix& matrix, const std::vector<Cell>& new_instance,
                              const InstanceTable& train, const RangeVector& ranges) {
    if (matrix.cols != train.size())
        fail(ErrorCode::shape, "append_row: matrix has " + std::to_string(matrix.cols) +
                                   " columns but the training table holds " +
                                   std::to_string(train.size()) + " rows");
    if (ranges.size() != train.schema.feature_count())
        fail(ErrorCode::shape, "append_row: range vector arity does not match schema");

    Columnized ref = columnize(train);
    Columnized one = columnize_against(new_instance, train.schema, ref);

    std::vector<float> row(matrix.cols);
    for (size_t c = 0; c < matrix.cols; ++c)
        row[c] = static_cast<float>(pair_distance(one, 0, ref, c, ranges));
    return row;
}

void save_matrix(const GowerMatrix& matrix, const std::string& gowm_path,
                 const std::string& gowl_path) {
    if (matrix.row_labels.size() != matrix.rows)
        fail(ErrorCode::shape, "save_matrix: label count does not match rows");
    for (uint8_t y : matrix.row_labels)
        if (y > 1) fail(ErrorCode::format, "save_matrix: labels must be 0 or 1");

    std::ofstream out(gowm_path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "save_matrix: cannot open " + gowm_path);
    binio::put_bytes(out, "GOWM", 4);
    binio::put_u16(out, 1);
    binio::put_u64(out, matrix.rows);
    binio::put_u64(out, matrix.cols);
    binio::put_f32_array(out, matrix.values.data(), matrix.values.size());
    if (!out) fail(ErrorCode::io, "save_matrix: write failed for " + gowm_path);
    out.close();

    std::ofstream lab(gowl_path, std::ios::binary);
    if (!lab) fail(ErrorCode::io, "save_matrix: cannot open " + gowl_path);
    binio::put_bytes(lab, "GOWL", 4);
    binio::put_u64(lab, matrix.rows);
    binio::put_bytes(lab, matrix.row_labels.data(), matrix.row_labels.size());
    if (!lab) fail(ErrorCode::io, "save_matrix: write failed for " + gowl_path);
}

GowerMatrix load_matrix(const std::string& gowm_path, const std::string& gowl_path) {
    std::ifstream in(gowm_path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "load_matrix: cannot open " + gowm_path);
    binio::expect_magic(in, "GOWM", gowm_path);
    const uint16_t version = binio::get_u16(in, gowm_path);
    if (version != 1)
        fail(ErrorCode::format,
             gowm_path + ": unsupported version " + std::to_string(version));

    GowerMatrix m;
    m.rows = binio::get_u64(in, gowm_path);
    m.cols = binio::get_u64(in, gowm_path);
    const uint64_t count = static_cast<uint64_t>(m.rows) * m.cols;
    m.values.resize(count);
    binio::get_f32_array(in, m.values.data(), count, gowm_path);
    binio::expect_eof(in, gowm_path);
    for (float v : m.values)
        if (!(v >= 0.0f && v <= 1.0f))
            fail(ErrorCode::format, gowm_path + ": dissimilarity entry outside [0,1]");

    std::ifstream lab(gowl_path, std::ios::binary);
    if (!lab) fail(ErrorCode::io, "load_matrix: cannot open " + gowl_path);
    binio::expect_magic(lab, "GOWL", gowl_path);
    const uint64_t label_rows = binio::get_u64(lab, gowl_path);
    if (label_rows != m.rows)
        fail(ErrorCode::format, gowl_path + ": " + std::to_string(label_rows) +
                                    " labels for " + std::to_string(m.rows) + " matrix rows");
    m.row_labels.resize(label_rows);
    binio::get_bytes(lab, m.row_labels.data(), label_rows, gowl_path);
    binio::expect_eof(lab, gowl_path);
    for (uint8_t y : m.row_labels)
        if (y > 1) fail(ErrorCode::format, gowl_path + ": label byte outside {0,1}");

    m.col_reference_id = "train";
    return m;
}

}  // namespace gowid
