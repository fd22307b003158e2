#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace gowid {

enum class FeatureKind : uint8_t { numerical, categorical };

struct Column {
    std::string name;
    FeatureKind kind;
};

// Column roles for one CSV layout. Every column of an input file must be
// exactly one of: feature (listed in `columns`), label, or excluded.
struct FeatureSchema {
    std::vector<Column> columns;
    std::string label_column;
    std::vector<std::string> excluded_columns;

    size_t feature_count() const { return columns.size(); }
    bool is_excluded(const std::string& name) const;
    // index into `columns`, or -1
    int feature_index(const std::string& name) const;

    // {"label": name, "exclude": [...], "categorical": [...], "numerical": [...]}
    static FeatureSchema from_json_text(const std::string& text);
    static FeatureSchema from_json_file(const std::string& path);

    void validate() const;
};

// Port/DNS/HTTP columns that carry identifiers rather than magnitudes; a
// schema declaring any of them numerical is rejected.
extern const std::vector<std::string> kForcedCategoricalColumns;

}  // namespace gowid
