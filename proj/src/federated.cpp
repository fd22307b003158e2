#include "gowid/federated.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "gowid/error.hpp"
#include "gowid/rng.hpp"
#include "gowid/trainer.hpp"

namespace gowid {

void GFConfig::validate() const {
    if (run_name.empty()) fail(ErrorCode::config, "gf config: run_name must not be empty");
    if (node_number < 1) fail(ErrorCode::config, "gf config: node_number must be >= 1");
    if (training_ds_size < 1) fail(ErrorCode::config, "gf config: training_ds_size must be >= 1");
    if (test_ds_size < 1) fail(ErrorCode::config, "gf config: test_ds_size must be >= 1");
    if (total_rounds < 1) fail(ErrorCode::config, "gf config: total_rounds must be >= 1");
    if (nodes_per_round < 1) fail(ErrorCode::config, "gf config: nodes_per_round must be >= 1");
    if (nodes_per_round > node_number)
        fail(ErrorCode::config, "gf config: nodes_per_round " + std::to_string(nodes_per_round) +
                                    " exceeds node_number " + std::to_string(node_number));
    if (!(server_learning_rate > 0.0))
        fail(ErrorCode::config, "gf config: server_learning_rate must be > 0");
    if (!(client_learning_rate > 0.0))
        fail(ErrorCode::config, "gf config: client_learning_rate must be > 0");
    if (training_batch < 1) fail(ErrorCode::config, "gf config: training_batch must be >= 1");
    if (test_batch < 1) fail(ErrorCode::config, "gf config: test_batch must be >= 1");
    if (!(attention_proportion > 0.0 && attention_proportion <= 1.0))
        fail(ErrorCode::config, "gf config: attention_proportion must lie in (0,1]");
}

ServerState initialize(size_t input_dim, uint64_t seed) {
    return {init_model(input_dim, init_seed(seed)), 0};
}

std::vector<int> sample_clients(size_t round, size_t node_number, size_t nodes_per_round,
                                uint64_t master_seed) {
    if (nodes_per_round < 1 || nodes_per_round > node_number)
        fail(ErrorCode::config, "sample_clients: nodes_per_round outside [1, node_number]");
    Rng rng(derive_seed({master_seed, seed_tag::client_sample, round}));
    std::vector<size_t> picked = rng.sample_without_replacement(node_number, nodes_per_round);
    return {picked.begin(), picked.end()};
}

size_t attention_keep_count(double proportion, size_t sampled) {
    if (!(proportion > 0.0 && proportion <= 1.0))
        fail(ErrorCode::config, "attention: proportion must lie in (0,1]");
    if (sampled == 0) fail(ErrorCode::state, "attention: no sampled clients");
    // nudge past binary representation residue so 0.8 of 4 keeps 3, not 4
    auto keep = static_cast<size_t>(std::floor(proportion * static_cast<double>(sampled) + 1e-9));
    return std::clamp<size_t>(keep, 1, sampled);
}

std::vector<ClientResult> select_attention(std::vector<ClientResult> results, double proportion) {
    const size_t keep = attention_keep_count(proportion, results.size());
    std::sort(results.begin(), results.end(), [](const ClientResult& a, const ClientResult& b) {
        if (a.local_auc != b.local_auc) return a.local_auc > b.local_auc;
        return a.agent_id < b.agent_id;
    });
    results.resize(keep);
    std::sort(results.begin(), results.end(),
              [](const ClientResult& a, const ClientResult& b) { return a.agent_id < b.agent_id; });
    return results;
}

ModelParameters aggregate_fedavg(const std::vector<ClientResult>& selected,
                                 const ModelParameters& current_global, ServerUpdateMode mode,
                                 double server_learning_rate) {
    if (selected.empty()) fail(ErrorCode::state, "aggregate: no client results");
    for (const auto& r : selected)
        if (!same_shapes(r.params, current_global))
            fail(ErrorCode::shape, "aggregate: client " + std::to_string(r.agent_id) +
                                       " parameter shapes do not match the global model");

    std::vector<const ClientResult*> ordered;
    ordered.reserve(selected.size());
    for (const auto& r : selected) ordered.push_back(&r);
    std::sort(ordered.begin(), ordered.end(),
              [](const ClientResult* a, const ClientResult* b) { return a->agent_id < b->agent_id; });

    double total = 0.0;
    for (const auto* r : ordered) total += static_cast<double>(r->n_train_instances);
    if (!(total > 0.0)) fail(ErrorCode::state, "aggregate: zero total instance weight");

    ModelParameters mean = zeros_like(current_global);
    for (const auto* r : ordered)
        axpy(static_cast<double>(r->n_train_instances) / total, r->params, mean);

    if (mode == ServerUpdateMode::replace) return mean;

    // server-sgd: move the global model toward the mean by the server rate
    ModelParameters direction = mean;
    axpy(-1.0, current_global, direction);
    ModelParameters out = current_global;
    axpy(server_learning_rate, direction, out);
    return out;
}

ClientResult client_update(const ModelParameters& global, const AgentData& agent,
                           size_t local_epochs, double client_learning_rate, size_t round,
                           uint64_t master_seed, OptimizerState& optimizer_state,
                           size_t batch_size) {
    if (agent.train.features.cols() != global.input_dim())
        fail(ErrorCode::shape, "client " + std::to_string(agent.agent_id) +
                                   ": training matrix width " +
                                   std::to_string(agent.train.features.cols()) +
                                   " does not match model input " +
                                   std::to_string(global.input_dim()));

    ClientResult result;
    result.agent_id = agent.agent_id;
    result.params = global;
    result.n_train_instances = static_cast<size_t>(agent.train.rows());

    if (local_epochs > 0) {
        double loss_sum = 0.0;
        const uint64_t stream = static_cast<uint64_t>(agent.agent_id);
        for (size_t e = 0; e < local_epochs; ++e) {
            const uint64_t seed =
                epoch_seed(master_seed, stream, round * local_epochs + e);
            loss_sum += train_epoch(result.params, optimizer_state, agent.train, batch_size,
                                    client_learning_rate, seed);
        }
        result.local_train_loss = loss_sum / static_cast<double>(local_epochs);
    }

    if (agent.test.rows() > 0) {
        result.local_auc =
            roc_auc_or_half(predict(result.params, agent.test), agent.test.labels,
                            &result.auc_degenerate);
    } else {
        result.local_auc = 0.5;
        result.auc_degenerate = true;
    }
    return result;
}

namespace {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(std::min(hw, 16u));
}

// runs fn(i) for i in [0, count); any exception is rethrown on the caller
template <typename Fn>
void parallel_for(size_t count, int threads, Fn&& fn) {
    size_t workers = static_cast<size_t>(resolve_threads(threads));
    if (count > 0 && workers > count) workers = count;
    if (workers <= 1) {
        for (size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            size_t i = next.fetch_add(1);
            if (i >= count) break;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

}  // namespace

GFRunResult run_gf(const GFConfig& config, const std::vector<AgentMatrices>& agents,
                   ServerUpdateMode mode, int threads) {
    config.validate();
    if (agents.size() != config.node_number)
        fail(ErrorCode::config, "run_gf: " + std::to_string(agents.size()) +
                                    " agent matrix sets for node_number " +
                                    std::to_string(config.node_number));

    const size_t width = agents.empty() ? 0 : agents.front().train.cols;
    std::vector<AgentData> data(agents.size());
    for (size_t i = 0; i < agents.size(); ++i) {
        const AgentMatrices& am = agents[i];
        if (am.agent_id != static_cast<int>(i))
            fail(ErrorCode::config, "run_gf: agent ids must be 0..n-1 in order");
        if (am.train.cols != width || am.test.cols != width)
            fail(ErrorCode::shape, "run_gf: agent " + std::to_string(am.agent_id) +
                                       " matrices are not width " + std::to_string(width));
        if (am.train.empty())
            fail(ErrorCode::state,
                 "run_gf: agent " + std::to_string(am.agent_id) + " has no training rows");
        if (am.test.empty())
            fail(ErrorCode::state,
                 "run_gf: agent " + std::to_string(am.agent_id) + " has no test rows");
        data[i].agent_id = am.agent_id;
        data[i].train = widen(am.train);
        data[i].test = widen(am.test);
    }

    ServerState server = initialize(width, config.seed);
    std::vector<OptimizerState> states;
    states.reserve(agents.size());
    for (size_t i = 0; i < agents.size(); ++i) states.push_back(make_optimizer_state(server.global));

    GFRunResult out;
    out.rounds.reserve(config.total_rounds);

    for (size_t round = 0; round < config.total_rounds; ++round) {
        const std::vector<int> sampled =
            sample_clients(round, config.node_number, config.nodes_per_round, config.seed);

        std::vector<ClientResult> results(sampled.size());
        parallel_for(sampled.size(), threads, [&](size_t i) {
            const int id = sampled[i];
            results[i] = client_update(server.global, data[static_cast<size_t>(id)],
                                       config.local_epochs, config.client_learning_rate, round,
                                       config.seed, states[static_cast<size_t>(id)],
                                       config.training_batch);
        });

        std::vector<ClientResult> selected =
            select_attention(std::move(results), config.attention_proportion);
        server.global = aggregate_fedavg(selected, server.global, mode,
                                         config.server_learning_rate);
        server.round = round + 1;

        RoundReport report;
        report.round = round;
        report.sampled_ids = sampled;
        for (const auto& r : selected) report.selected_ids.push_back(r.agent_id);

        double loss_weight = 0.0, loss_sum = 0.0;
        bool loss_known = true;
        for (const auto& r : selected) {
            if (!r.local_train_loss) {
                loss_known = false;
                break;
            }
            loss_sum += *r.local_train_loss * static_cast<double>(r.n_train_instances);
            loss_weight += static_cast<double>(r.n_train_instances);
        }
        report.aggregate_train_loss = loss_known && loss_weight > 0.0
                                          ? loss_sum / loss_weight
                                          : std::numeric_limits<double>::quiet_NaN();

        double val_rows = 0.0, val_sum = 0.0;
        for (const auto& agent : data) {
            const double rows = static_cast<double>(agent.test.rows());
            val_sum += validation_loss(server.global, agent.test) * rows;
            val_rows += rows;
        }
        report.validation_loss = val_sum / val_rows;
        out.rounds.push_back(std::move(report));
    }

    out.global = server.global;
    out.agent_metrics.resize(agents.size());
    out.agent_train_sizes.resize(agents.size());
    for (size_t i = 0; i < data.size(); ++i) {
        out.agent_metrics[i] = evaluate(out.global, data[i].test);
        out.agent_train_sizes[i] = static_cast<size_t>(data[i].train.rows());
    }
    return out;
}

}  // namespace gowid
