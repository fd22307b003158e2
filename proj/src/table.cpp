#include "gowid/table.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include "gowid/error.hpp"
#include "gowid/rng.hpp"

namespace gowid {

std::pair<size_t, size_t> InstanceTable::class_counts() const {
    size_t attack = 0;
    for (uint8_t y : labels) attack += (y != 0);
    return {labels.size() - attack, attack};
}

namespace {

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line, size_t line_no) {
    if (line.find('"') != std::string::npos)
        fail(ErrorCode::format,
             "csv: quoted field on line " + std::to_string(line_no) + "; quoting is not supported");
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!out.empty()) {
        // tolerate CRLF input
        std::string& last = out.back();
        if (!last.empty() && last.back() == '\r') last.pop_back();
    }
    return out;
}

Cell parse_cell(const std::string& raw, FeatureKind kind, const std::string& missing_token) {
    if (raw == missing_token) return Cell::make_missing();
    if (kind == FeatureKind::categorical) return Cell::make_token(raw);
    const std::string t = trim(raw);
    if (t.empty()) return Cell::make_missing();
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc{} || ptr != t.data() + t.size() || !std::isfinite(value))
        return Cell::make_missing();
    return Cell::make_number(value);
}

InstanceTable select_rows(const InstanceTable& table, const std::vector<size_t>& indices) {
    InstanceTable out;
    out.schema = table.schema;
    out.rows.reserve(indices.size());
    out.labels.reserve(indices.size());
    for (size_t i : indices) {
        out.rows.push_back(table.rows[i]);
        out.labels.push_back(table.labels[i]);
    }
    return out;
}

}  // namespace

InstanceTable load_csv(const std::string& path, const FeatureSchema& schema,
                       const CsvOptions& options) {
    schema.validate();
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "csv: cannot open " + path);

    std::string line;
    if (!std::getline(in, line)) fail(ErrorCode::format, "csv: " + path + " has no header row");
    const std::vector<std::string> header = split_line(line, 1);

    // map every header column to a feature slot, the label, or exclusion
    constexpr int kLabelSlot = -1;
    constexpr int kExcludedSlot = -2;
    std::vector<int> slot(header.size());
    std::vector<char> feature_seen(schema.feature_count(), 0);
    bool label_seen = false;
    for (size_t c = 0; c < header.size(); ++c) {
        const std::string& name = header[c];
        if (name == schema.label_column) {
            if (label_seen) fail(ErrorCode::format, "csv: duplicate label column " + name);
            slot[c] = kLabelSlot;
            label_seen = true;
        } else if (schema.is_excluded(name)) {
            slot[c] = kExcludedSlot;
        } else {
            int f = schema.feature_index(name);
            if (f < 0)
                fail(ErrorCode::format,
                     "csv: column \"" + name + "\" is not declared by the schema");
            if (feature_seen[f]) fail(ErrorCode::format, "csv: duplicate column " + name);
            feature_seen[f] = 1;
            slot[c] = f;
        }
    }
    if (!label_seen)
        fail(ErrorCode::format, "csv: label column \"" + schema.label_column + "\" not found");
    for (size_t f = 0; f < feature_seen.size(); ++f)
        if (!feature_seen[f])
            fail(ErrorCode::format,
                 "csv: schema column \"" + schema.columns[f].name + "\" not found in header");

    InstanceTable table;
    table.schema = schema;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split_line(line, line_no);
        if (fields.size() != header.size())
            fail(ErrorCode::format, "csv: line " + std::to_string(line_no) + " has " +
                                        std::to_string(fields.size()) + " fields, expected " +
                                        std::to_string(header.size()));
        std::vector<Cell> row(schema.feature_count());
        uint8_t label = 0;
        for (size_t c = 0; c < fields.size(); ++c) {
            if (slot[c] == kExcludedSlot) continue;
            if (slot[c] == kLabelSlot) {
                const std::string v = trim(fields[c]);
                if (v == "0") label = 0;
                else if (v == "1") label = 1;
                else
                    fail(ErrorCode::format, "csv: row " + std::to_string(table.rows.size()) +
                                                " (line " + std::to_string(line_no) +
                                                "): label \"" + v + "\" outside {0,1}");
            } else {
                size_t f = static_cast<size_t>(slot[c]);
                row[f] = parse_cell(fields[c], schema.columns[f].kind, options.missing_token);
            }
        }
        table.rows.push_back(std::move(row));
        table.labels.push_back(label);
    }
    return table;
}

InstanceTable balance(const InstanceTable& table, uint64_t rng_seed) {
    auto [normal, attack] = table.class_counts();
    if (normal == 0 || attack == 0)
        fail(ErrorCode::state, "balance: both classes must be present (normal=" +
                                   std::to_string(normal) + ", attack=" +
                                   std::to_string(attack) + ")");

    const uint8_t majority_label = normal >= attack ? 0 : 1;
    const size_t minority_count = std::min(normal, attack);

    std::vector<size_t> majority, minority;
    for (size_t i = 0; i < table.size(); ++i)
        (table.labels[i] == majority_label ? majority : minority).push_back(i);

    Rng rng(derive_seed({rng_seed, seed_tag::balance}));
    rng.shuffle(majority);
    majority.resize(minority_count);

    std::vector<size_t> kept = std::move(minority);
    kept.insert(kept.end(), majority.begin(), majority.end());
    rng.shuffle(kept);
    return select_rows(table, kept);
}

std::pair<InstanceTable, InstanceTable> shuffle_split(const InstanceTable& table,
                                                      size_t train_size, size_t test_size,
                                                      uint64_t rng_seed) {
    if (train_size + test_size > table.size())
        fail(ErrorCode::state, "shuffle_split: need " + std::to_string(train_size + test_size) +
                                   " rows, table has " + std::to_string(table.size()));
    std::vector<size_t> perm =
        make_permutation(table.size(), derive_seed({rng_seed, seed_tag::split}));
    std::vector<size_t> train_idx(perm.begin(), perm.begin() + train_size);
    std::vector<size_t> test_idx(perm.begin() + train_size, perm.begin() + train_size + test_size);
    return {select_rows(table, train_idx), select_rows(table, test_idx)};
}

std::vector<AgentDataset> partition_agents(const InstanceTable& table, size_t n_agents,
                                           double train_fraction, uint64_t rng_seed) {
    if (n_agents < 1) fail(ErrorCode::config, "partition_agents: n_agents must be >= 1");
    if (n_agents > table.size())
        fail(ErrorCode::state, "partition_agents: " + std::to_string(n_agents) +
                                   " agents exceed " + std::to_string(table.size()) + " rows");
    if (!(train_fraction >= 0.0 && train_fraction <= 1.0))
        fail(ErrorCode::config, "partition_agents: train_fraction outside [0,1]");

    std::vector<size_t> perm =
        make_permutation(table.size(), derive_seed({rng_seed, seed_tag::partition}));

    const size_t base = table.size() / n_agents;
    const size_t remainder = table.size() % n_agents;

    std::vector<AgentDataset> agents;
    agents.reserve(n_agents);
    size_t cursor = 0;
    for (size_t a = 0; a < n_agents; ++a) {
        const size_t group = base + (a < remainder ? 1 : 0);
        std::vector<size_t> block(perm.begin() + cursor, perm.begin() + cursor + group);
        cursor += group;

        size_t train_count = static_cast<size_t>(
            std::llround(train_fraction * static_cast<double>(group)));
        train_count = std::min(train_count, group);

        AgentDataset agent;
        agent.agent_id = static_cast<int>(a);
        agent.train = select_rows(
            table, std::vector<size_t>(block.begin(), block.begin() + train_count));
        agent.test = select_rows(
            table, std::vector<size_t>(block.begin() + train_count, block.end()));
        agents.push_back(std::move(agent));
    }
    return agents;
}

size_t min_train_count(const std::vector<AgentDataset>& agents) {
    if (agents.empty()) fail(ErrorCode::state, "min_train_count: no agents");
    size_t m = agents.front().train.size();
    for (const auto& a : agents) m = std::min(m, a.train.size());
    return m;
}

}  // namespace gowid
