#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gowid/gower.hpp"
#include "gowid/metrics.hpp"
#include "gowid/model.hpp"

namespace gowid {

struct GFConfig {
    std::string run_name;
    size_t node_number = 0;
    size_t training_ds_size = 0;  // total across agents
    size_t test_ds_size = 0;      // total across agents
    bool balanced = false;
    size_t total_rounds = 0;
    size_t nodes_per_round = 0;
    size_t local_epochs = 0;
    double server_learning_rate = 0.0;
    double client_learning_rate = 0.0;
    size_t training_batch = 0;
    size_t test_batch = 0;
    uint64_t seed = 0;
    double attention_proportion = 1.0;  // P in (0,1]; 1.0 = vanilla FedAVG

    void validate() const;
};

// The server model weights are replaced by the clients' weighted average
// (`replace`); `server_sgd` instead moves the global model toward that
// average by server_learning_rate.
enum class ServerUpdateMode { replace, server_sgd };

struct AgentMatrices {
    int agent_id = 0;
    GowerMatrix train;
    GowerMatrix test;
};

struct ClientResult {
    int agent_id = 0;
    ModelParameters params;
    size_t n_train_instances = 0;
    std::optional<double> local_train_loss;
    double local_auc = 0.5;  // ROC-AUC of the updated model on the agent's local test matrix
    bool auc_degenerate = false;
};

struct RoundReport {
    size_t round = 0;
    std::vector<int> sampled_ids;   // ascending
    std::vector<int> selected_ids;  // ascending, subset of sampled
    double aggregate_train_loss = 0.0;  // instance-weighted mean of selected clients' losses
    double validation_loss = 0.0;       // global model on all agents' test matrices
};

struct ServerState {
    ModelParameters global;
    size_t round = 0;
};

struct GFRunResult {
    ModelParameters global;
    std::vector<RoundReport> rounds;
    std::vector<MetricsReport> agent_metrics;   // indexed by agent id
    std::vector<size_t> agent_train_sizes;      // indexed by agent id
};

ServerState initialize(size_t input_dim, uint64_t seed);

// Uniform sample without replacement from a stream derived from
// (master_seed, round); ascending ids.
std::vector<int> sample_clients(size_t round, size_t node_number, size_t nodes_per_round,
                                uint64_t master_seed);

// Number of clients the attention stage keeps out of `sampled` participants.
size_t attention_keep_count(double proportion, size_t sampled);

// Keep the results with the greatest local AUC, ties broken by lower agent id.
std::vector<ClientResult> select_attention(std::vector<ClientResult> results, double proportion);

// Instance-weighted mean of client parameters, summed in ascending agent id
// order in 64-bit.
ModelParameters aggregate_fedavg(const std::vector<ClientResult>& selected,
                                 const ModelParameters& current_global,
                                 ServerUpdateMode mode = ServerUpdateMode::replace,
                                 double server_learning_rate = 0.0);

// Widened per-agent view reused across rounds; the optimizer state persists
// on the agent between its participations.
struct AgentData {
    int agent_id = 0;
    TrainingData train;
    TrainingData test;
};

ClientResult client_update(const ModelParameters& global, const AgentData& agent,
                           size_t local_epochs, double client_learning_rate, size_t round,
                           uint64_t master_seed, OptimizerState& optimizer_state,
                           size_t batch_size);

GFRunResult run_gf(const GFConfig& config, const std::vector<AgentMatrices>& agents,
                   ServerUpdateMode mode = ServerUpdateMode::replace, int threads = 1);

}  // namespace gowid
