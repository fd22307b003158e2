#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gowid/schema.hpp"

namespace gowid {

// One feature cell: a finite number, a categorical token, or missing.
struct Cell {
    enum class State : uint8_t { missing, number, token };

    State state = State::missing;
    double number = 0.0;
    std::string token;

    static Cell make_missing() { return Cell{}; }
    static Cell make_number(double v) { return Cell{State::number, v, {}}; }
    static Cell make_token(std::string t) { return Cell{State::token, 0.0, std::move(t)}; }

    bool is_missing() const { return state == State::missing; }
};

struct InstanceTable {
    FeatureSchema schema;
    std::vector<std::vector<Cell>> rows;
    std::vector<uint8_t> labels;  // {0,1}, attack = 1

    size_t size() const { return rows.size(); }
    bool empty() const { return rows.empty(); }
    // (normal_count, attack_count)
    std::pair<size_t, size_t> class_counts() const;
};

struct AgentDataset {
    int agent_id = 0;
    InstanceTable train;
    InstanceTable test;
};

struct CsvOptions {
    // cells equal to this token become missing (numerical and categorical alike)
    std::string missing_token = "-";
};

InstanceTable load_csv(const std::string& path, const FeatureSchema& schema,
                       const CsvOptions& options = {});

// Downsample the majority class to the minority count and reshuffle.
// Result holds exactly 2 * minority_count rows. Rejects single-class input.
InstanceTable balance(const InstanceTable& table, uint64_t rng_seed);

// Seeded uniform permutation; first train_size rows -> train, next test_size -> test.
std::pair<InstanceTable, InstanceTable> shuffle_split(const InstanceTable& table,
                                                      size_t train_size, size_t test_size,
                                                      uint64_t rng_seed);

// Shuffle, deal contiguous near-equal blocks (remainder spread one-per-agent
// from agent 0), then split each block by train_fraction.
std::vector<AgentDataset> partition_agents(const InstanceTable& table, size_t n_agents,
                                           double train_fraction, uint64_t rng_seed);

// M: the smallest training partition across agents; fixes the shared matrix
// width in federated mode.
size_t min_train_count(const std::vector<AgentDataset>& agents);

}  // namespace gowid
