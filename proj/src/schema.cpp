#include "gowid/schema.hpp"

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unordered_set>

#include "gowid/error.hpp"

namespace gowid {

using nlohmann::json;

const std::vector<std::string> kForcedCategoricalColumns = {
    "src_port",   "dst_port",         "dns_qclass",       "dns_qtype",
    "dns_rcode",  "http_trans_depth", "http_status_code", "http_user_agent",
};

bool FeatureSchema::is_excluded(const std::string& name) const {
    return std::find(excluded_columns.begin(), excluded_columns.end(), name) !=
           excluded_columns.end();
}

int FeatureSchema::feature_index(const std::string& name) const {
    for (size_t i = 0; i < columns.size(); ++i)
        if (columns[i].name == name) return static_cast<int>(i);
    return -1;
}

namespace {

std::vector<std::string> string_array(const json& j, const char* key, const std::string& origin) {
    if (!j.contains(key)) return {};
    const json& arr = j.at(key);
    if (!arr.is_array())
        fail(ErrorCode::format, origin + ": \"" + key + "\" must be an array of strings");
    std::vector<std::string> out;
    for (const auto& v : arr) {
        if (!v.is_string())
            fail(ErrorCode::format, origin + ": \"" + key + "\" must contain only strings");
        out.push_back(v.get<std::string>());
    }
    return out;
}

}  // namespace

FeatureSchema FeatureSchema::from_json_text(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::format, std::string("schema: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) fail(ErrorCode::format, "schema: top-level JSON object expected");

    static const std::unordered_set<std::string> known = {"label", "exclude", "categorical",
                                                          "numerical"};
    for (const auto& [key, _] : j.items())
        if (!known.count(key)) fail(ErrorCode::format, "schema: unknown key \"" + key + "\"");
    if (!j.contains("label") || !j.at("label").is_string())
        fail(ErrorCode::format, "schema: required string key \"label\" missing");

    FeatureSchema schema;
    schema.label_column = j.at("label").get<std::string>();
    schema.excluded_columns = string_array(j, "exclude", "schema");
    for (const auto& name : string_array(j, "categorical", "schema"))
        schema.columns.push_back({name, FeatureKind::categorical});
    for (const auto& name : string_array(j, "numerical", "schema"))
        schema.columns.push_back({name, FeatureKind::numerical});
    schema.validate();
    return schema;
}

FeatureSchema FeatureSchema::from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "schema: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return from_json_text(buf.str());
}

void FeatureSchema::validate() const {
    if (label_column.empty()) fail(ErrorCode::format, "schema: empty label column name");
    if (columns.empty()) fail(ErrorCode::format, "schema: no feature columns declared");

    std::unordered_set<std::string> seen;
    for (const auto& col : columns) {
        if (!seen.insert(col.name).second)
            fail(ErrorCode::format, "schema: column \"" + col.name + "\" declared twice");
        if (col.name == label_column)
            fail(ErrorCode::format, "schema: label column \"" + col.name +
                                        "\" also declared as a feature");
        if (col.kind == FeatureKind::numerical) {
            for (const auto& forced : kForcedCategoricalColumns)
                if (col.name == forced)
                    fail(ErrorCode::format, "schema: column \"" + col.name +
                                                "\" carries identifiers and must be categorical");
        }
    }
    for (const auto& name : excluded_columns) {
        if (name == label_column)
            fail(ErrorCode::format, "schema: label column \"" + name + "\" is also excluded");
        if (seen.count(name))
            fail(ErrorCode::format,
                 "schema: column \"" + name + "\" is both a feature and excluded");
    }
}

}  // namespace gowid
