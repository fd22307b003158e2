#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "gowid/federated.hpp"
#include "gowid/gower.hpp"
#include "gowid/table.hpp"
#include "gowid/trainer.hpp"

namespace gowid {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunOptions {
    int threads = 0;                // <=0: one worker per core
    uint64_t memory_cap_bytes = 0;  // 0: 8 GiB default
};

using ExperimentConfig = std::variant<GCConfig, GFConfig>;

// Flat JSON, snake_case keys, unknown keys rejected. A config holding
// node_number parses as a federated one.
ExperimentConfig parse_config(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text, const std::string& origin);

// Planted-rule dataset: a row is an attack iff its categorical flag equals
// "bad" or its rule feature exceeds the column's 80th percentile. Writes
// data.csv and schema.json under out_dir.
struct SynthPaths {
    std::string csv;
    std::string schema;
};
SynthPaths synth_data(const std::string& out_dir, size_t rows, uint64_t seed);

// Matrix files for one run. Mode "cnl": train.gowm/.gowl (k x k) and
// test.gowm/.gowl (l x k). Mode "fl": train_<id>/test_<id> per agent, all
// width M = the smallest agent training partition. Writes
// matrices_manifest.json alongside.
void create_matrices(const std::string& mode, const std::string& data_csv,
                     const std::string& schema_path, const std::string& config_path,
                     const std::string& out_dir, const RunOptions& options = {});

// Per-agent matrix construction behind "fl" mode; exposed so the width rule
// is testable with explicit agent partitions.
std::vector<AgentMatrices> build_agent_matrices(const std::vector<AgentDataset>& agents,
                                                const GowerBuildOptions& options = {});

// Dispatches to the centralized or federated trainer and writes histories,
// agent_metrics.csv, pr_space.csv, summary.json, the final model and
// run_manifest.json into out_dir. Mode is one of gc, gf, gf-am.
void train_run(const std::string& mode, const std::string& config_path,
               const std::string& matrices_dir, const std::string& out_dir,
               const RunOptions& options = {});

// Plot-ready CSV bundle (pr_scatter.csv, loss_curves.csv, per_agent_bars.csv)
// derived from a completed run directory.
void emit_plot_data(const std::string& run_dir);

uint64_t fnv1a64_file(const std::string& path);

}  // namespace gowid
