#include "gowid/experiment.hpp"

#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unordered_set>

#include "gowid/error.hpp"
#include "gowid/rng.hpp"

namespace gowid {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "cannot open " + path + " for writing");
    out << content;
    if (!out) fail(ErrorCode::io, "write failed for " + path);
}

std::string join_ids(const std::vector<int>& ids) {
    std::string out;
    for (size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ';';
        out += std::to_string(ids[i]);
    }
    return out;
}

// ---- config parsing ----

class ConfigReader {
public:
    ConfigReader(const json& j, std::string origin) : j_(j), origin_(std::move(origin)) {
        if (!j_.is_object()) fail(ErrorCode::config, origin_ + ": JSON object expected");
    }

    bool has(const char* key) const { return j_.contains(key); }

    uint64_t require_count(const char* key) {
        const json& v = require(key);
        if (!v.is_number_unsigned())
            fail(ErrorCode::config,
                 origin_ + ": \"" + key + "\" must be a non-negative integer");
        return v.get<uint64_t>();
    }

    double require_number(const char* key) {
        const json& v = require(key);
        if (!v.is_number())
            fail(ErrorCode::config, origin_ + ": \"" + key + "\" must be a number");
        return v.get<double>();
    }

    bool require_bool(const char* key) {
        const json& v = require(key);
        if (!v.is_boolean())
            fail(ErrorCode::config, origin_ + ": \"" + key + "\" must be true or false");
        return v.get<bool>();
    }

    std::string require_string(const char* key) {
        const json& v = require(key);
        if (!v.is_string())
            fail(ErrorCode::config, origin_ + ": \"" + key + "\" must be a string");
        return v.get<std::string>();
    }

    double optional_number(const char* key, double fallback) {
        if (!j_.contains(key)) return fallback;
        return require_number(key);
    }

    void finish() const {
        for (const auto& [key, _] : j_.items())
            if (!consumed_.count(key))
                fail(ErrorCode::config, origin_ + ": unknown key \"" + key + "\"");
    }

private:
    const json& require(const char* key) {
        if (!j_.contains(key))
            fail(ErrorCode::config, origin_ + ": required key \"" + std::string(key) +
                                        "\" is missing");
        consumed_.insert(key);
        return j_.at(key);
    }

    const json& j_;
    std::string origin_;
    std::unordered_set<std::string> consumed_;
};

GCConfig parse_gc(const json& j, const std::string& origin) {
    ConfigReader r(j, origin);
    GCConfig c;
    c.run_name = r.require_string("run_name");
    c.training_ds_size = r.require_count("training_ds_size");
    c.test_ds_size = r.require_count("test_ds_size");
    c.balanced = r.require_bool("balanced");
    c.epochs = r.require_count("epochs");
    c.learning_rate = r.require_number("learning_rate");
    c.batch_size = r.require_count("batch_size");
    c.seed = r.require_count("seed");
    r.finish();
    c.validate();
    return c;
}

GFConfig parse_gf(const json& j, const std::string& origin) {
    ConfigReader r(j, origin);
    GFConfig c;
    c.run_name = r.require_string("run_name");
    c.node_number = r.require_count("node_number");
    c.training_ds_size = r.require_count("training_ds_size");
    c.test_ds_size = r.require_count("test_ds_size");
    c.balanced = r.require_bool("balanced");
    c.total_rounds = r.require_count("total_rounds");
    c.nodes_per_round = r.require_count("nodes_per_round");
    c.local_epochs = r.require_count("local_epochs");
    c.server_learning_rate = r.require_number("server_learning_rate");
    c.client_learning_rate = r.require_number("client_learning_rate");
    c.training_batch = r.require_count("training_batch");
    c.test_batch = r.require_count("test_batch");
    c.seed = r.require_count("seed");
    c.attention_proportion = r.optional_number("attention_proportion", 1.0);
    r.finish();
    c.validate();
    return c;
}

json config_to_json(const GCConfig& c) {
    return json{{"run_name", c.run_name},
                {"training_ds_size", c.training_ds_size},
                {"test_ds_size", c.test_ds_size},
                {"balanced", c.balanced},
                {"epochs", c.epochs},
                {"learning_rate", c.learning_rate},
                {"batch_size", c.batch_size},
                {"seed", c.seed}};
}

json config_to_json(const GFConfig& c) {
    return json{{"run_name", c.run_name},
                {"node_number", c.node_number},
                {"training_ds_size", c.training_ds_size},
                {"test_ds_size", c.test_ds_size},
                {"balanced", c.balanced},
                {"total_rounds", c.total_rounds},
                {"nodes_per_round", c.nodes_per_round},
                {"local_epochs", c.local_epochs},
                {"server_learning_rate", c.server_learning_rate},
                {"client_learning_rate", c.client_learning_rate},
                {"training_batch", c.training_batch},
                {"test_batch", c.test_batch},
                {"seed", c.seed},
                {"attention_proportion", c.attention_proportion}};
}

json config_to_json(const ExperimentConfig& c) {
    if (std::holds_alternative<GCConfig>(c)) return config_to_json(std::get<GCConfig>(c));
    return config_to_json(std::get<GFConfig>(c));
}

GowerBuildOptions build_options(const RunOptions& options) {
    GowerBuildOptions b;
    b.threads = options.threads;
    b.memory_cap_bytes =
        options.memory_cap_bytes == 0 ? kDefaultMemoryCapBytes : options.memory_cap_bytes;
    return b;
}

void check_total_memory(uint64_t value_count, uint64_t cap) {
    const uint64_t required = 4ull * value_count;
    if (required > cap)
        fail(ErrorCode::memory, "matrix files require " + std::to_string(required) +
                                    " bytes of dissimilarity storage (plus overhead); cap is " +
                                    std::to_string(cap) +
                                    " bytes (raise it explicitly to proceed)");
}

InstanceTable concat_rows(const InstanceTable& a, const InstanceTable& b) {
    InstanceTable out = a;
    out.rows.insert(out.rows.end(), b.rows.begin(), b.rows.end());
    out.labels.insert(out.labels.end(), b.labels.begin(), b.labels.end());
    return out;
}

json metrics_to_json(const MetricsReport& m) {
    return json{{"tp", m.counts.tp},
                {"fp", m.counts.fp},
                {"tn", m.counts.tn},
                {"fn", m.counts.fn},
                {"accuracy", m.accuracy},
                {"precision", m.precision},
                {"recall", m.recall},
                {"f1", m.f1},
                {"fpr", m.fpr},
                {"auc", m.auc},
                {"auc_degenerate", m.auc_degenerate},
                {"pr_point", json::array({m.precision, m.recall})}};
}

std::string agent_metrics_csv(const std::vector<MetricsReport>& reports,
                              const std::vector<size_t>& train_sizes) {
    std::string out = "agent_id,n_train,accuracy,precision,recall,f1,auc\n";
    for (size_t i = 0; i < reports.size(); ++i) {
        const MetricsReport& m = reports[i];
        out += std::to_string(i) + "," + std::to_string(train_sizes[i]) + "," +
               fmt(m.accuracy) + "," + fmt(m.precision) + "," + fmt(m.recall) + "," +
               fmt(m.f1) + "," + fmt(m.auc) + "\n";
    }
    return out;
}

std::string pr_space_csv(const std::vector<MetricsReport>& reports) {
    std::string out = "agent_id,precision,recall\n";
    for (size_t i = 0; i < reports.size(); ++i)
        out += std::to_string(i) + "," + fmt(reports[i].precision) + "," +
               fmt(reports[i].recall) + "\n";
    return out;
}

struct ManifestInput {
    std::string path;
    std::string digest;
};

void write_run_manifest(const std::string& out_dir, const std::string& run_name,
                        const std::string& mode, const json& config_snapshot,
                        const std::vector<ManifestInput>& inputs, double duration_seconds) {
    json inputs_json = json::array();
    for (const auto& in : inputs)
        inputs_json.push_back(json{{"path", in.path}, {"digest", in.digest}});
    json manifest{{"kind", "run"},
                  {"run_name", run_name},
                  {"mode", mode},
                  {"tool_version", kToolVersion},
                  {"config", config_snapshot},
                  {"inputs", inputs_json},
                  {"duration_seconds", duration_seconds}};
    write_text_file(out_dir + "/run_manifest.json", manifest.dump(2) + "\n");
}

std::string digest_hex(uint64_t digest) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016" PRIx64, digest);
    return buf;
}

}  // namespace

uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "digest: cannot open " + path);
    uint64_t h = 14695981039346656037ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    return h;
}

ExperimentConfig parse_config_text(const std::string& text, const std::string& origin) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::config, origin + ": invalid JSON: " + e.what());
    }
    if (!j.is_object()) fail(ErrorCode::config, origin + ": JSON object expected");
    if (j.contains("node_number")) return parse_gf(j, origin);
    return parse_gc(j, origin);
}

ExperimentConfig parse_config(const std::string& path) {
    return parse_config_text(read_text_file(path), path);
}

SynthPaths synth_data(const std::string& out_dir, size_t rows, uint64_t seed) {
    if (rows < 10) fail(ErrorCode::config, "synth_data: need at least 10 rows");
    fs::create_directories(out_dir);

    Rng rng(derive_seed({seed, seed_tag::synth}));
    static const char* kProto[] = {"tcp", "udp", "icmp"};

    std::vector<std::string> flag(rows), proto(rows), duration(rows);
    std::vector<uint64_t> bytes(rows);
    for (size_t r = 0; r < rows; ++r) {
        const double u = rng.uniform();
        flag[r] = u < 0.20 ? "bad" : (u < 0.60 ? "ok" : "idle");
        proto[r] = rng.uniform() < 0.04 ? "-" : kProto[rng.bounded(3)];
        bytes[r] = rng.bounded(10001);
        duration[r] = rng.uniform() < 0.02 ? "-" : std::to_string(rng.bounded(101));
    }

    // nearest-rank 80th percentile of the rule feature
    std::vector<uint64_t> sorted_bytes = bytes;
    std::sort(sorted_bytes.begin(), sorted_bytes.end());
    const size_t rank = static_cast<size_t>(
        std::ceil(0.8 * static_cast<double>(rows)));
    const uint64_t p80 = sorted_bytes[rank - 1];

    std::string csv = "ts,flag,proto,bytes,duration,label\n";
    for (size_t r = 0; r < rows; ++r) {
        const bool attack = flag[r] == "bad" || bytes[r] > p80;
        csv += std::to_string(1600000000 + r) + "," + flag[r] + "," + proto[r] + "," +
               std::to_string(bytes[r]) + "," + duration[r] + "," + (attack ? "1" : "0") + "\n";
    }

    SynthPaths paths{out_dir + "/data.csv", out_dir + "/schema.json"};
    write_text_file(paths.csv, csv);
    const json schema{{"label", "label"},
                      {"exclude", json::array({"ts"})},
                      {"categorical", json::array({"flag", "proto"})},
                      {"numerical", json::array({"bytes", "duration"})}};
    write_text_file(paths.schema, schema.dump(2) + "\n");
    return paths;
}

std::vector<AgentMatrices> build_agent_matrices(const std::vector<AgentDataset>& agents,
                                                const GowerBuildOptions& options) {
    if (agents.empty()) fail(ErrorCode::state, "build_agent_matrices: no agents");
    const size_t width = min_train_count(agents);
    if (width == 0) fail(ErrorCode::state, "build_agent_matrices: an agent has no training rows");

    std::vector<AgentMatrices> out;
    out.reserve(agents.size());
    for (const AgentDataset& agent : agents) {
        AgentMatrices m;
        m.agent_id = agent.agent_id;
        m.train = gower_matrix_limit_cols(agent.train, width, options);
        const InstanceTable all = concat_rows(agent.train, agent.test);
        m.test = sliced_gower_matrix_limit_cols(all, agent.train.size(), width, options);
        out.push_back(std::move(m));
    }
    return out;
}

void create_matrices(const std::string& mode, const std::string& data_csv,
                     const std::string& schema_path, const std::string& config_path,
                     const std::string& out_dir, const RunOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    if (mode != "cnl" && mode != "fl")
        fail(ErrorCode::config, "create_matrices: mode must be \"cnl\" or \"fl\", got \"" +
                                    mode + "\"");

    const FeatureSchema schema = FeatureSchema::from_json_file(schema_path);
    const ExperimentConfig config = parse_config(config_path);
    const GowerBuildOptions build = build_options(options);

    if (mode == "cnl" && !std::holds_alternative<GCConfig>(config))
        fail(ErrorCode::config, "create_matrices: cnl mode needs a centralized (gc) config");
    if (mode == "fl" && !std::holds_alternative<GFConfig>(config))
        fail(ErrorCode::config, "create_matrices: fl mode needs a federated (gf) config");

    InstanceTable table = load_csv(data_csv, schema);
    fs::create_directories(out_dir);

    json manifest{{"kind", "matrices"},
                  {"mode", mode},
                  {"tool_version", kToolVersion},
                  {"data_csv", data_csv},
                  {"data_digest", digest_hex(fnv1a64_file(data_csv))},
                  {"schema_digest", digest_hex(fnv1a64_file(schema_path))},
                  {"config", config_to_json(config)}};

    if (mode == "cnl") {
        const GCConfig& cfg = std::get<GCConfig>(config);
        if (cfg.balanced) table = balance(table, cfg.seed);
        auto [train, test] = shuffle_split(table, cfg.training_ds_size, cfg.test_ds_size,
                                           cfg.seed);
        const uint64_t k = cfg.training_ds_size, l = cfg.test_ds_size;
        check_total_memory(k * k + l * k, build.memory_cap_bytes);

        GowerMatrix train_matrix = gower_matrix(train, build);
        GowerMatrix test_matrix =
            sliced_gower_matrix_limit_cols(concat_rows(train, test), train.size(),
                                           train.size(), build);
        save_matrix(train_matrix, out_dir + "/train.gowm", out_dir + "/train.gowl");
        save_matrix(test_matrix, out_dir + "/test.gowm", out_dir + "/test.gowl");
        manifest["width"] = train_matrix.cols;
        manifest["files"] = json::array({"train.gowm", "train.gowl", "test.gowm", "test.gowl"});
    } else {
        const GFConfig& cfg = std::get<GFConfig>(config);
        if (cfg.balanced) table = balance(table, cfg.seed);
        const size_t total = cfg.training_ds_size + cfg.test_ds_size;
        auto [subset, rest] = shuffle_split(table, total, 0, cfg.seed);
        (void)rest;
        const double train_fraction = static_cast<double>(cfg.training_ds_size) /
                                      static_cast<double>(total);
        const std::vector<AgentDataset> agents =
            partition_agents(subset, cfg.node_number, train_fraction, cfg.seed);

        const size_t width = min_train_count(agents);
        uint64_t value_count = 0;
        for (const auto& a : agents)
            value_count += static_cast<uint64_t>(a.train.size() + a.test.size()) * width;
        check_total_memory(value_count, build.memory_cap_bytes);

        const std::vector<AgentMatrices> matrices = build_agent_matrices(agents, build);
        json files = json::array();
        for (const auto& m : matrices) {
            const std::string id = std::to_string(m.agent_id);
            save_matrix(m.train, out_dir + "/train_" + id + ".gowm",
                        out_dir + "/train_" + id + ".gowl");
            save_matrix(m.test, out_dir + "/test_" + id + ".gowm",
                        out_dir + "/test_" + id + ".gowl");
            files.push_back("train_" + id + ".gowm");
            files.push_back("test_" + id + ".gowm");
        }
        manifest["width"] = width;
        manifest["node_number"] = cfg.node_number;
        manifest["files"] = files;
    }

    const double duration =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    manifest["duration_seconds"] = duration;
    write_text_file(out_dir + "/matrices_manifest.json", manifest.dump(2) + "\n");
}

namespace {

GowerMatrix matrix_rows_slice(const GowerMatrix& m, size_t begin, size_t end) {
    GowerMatrix out;
    out.rows = end - begin;
    out.cols = m.cols;
    out.values.assign(m.values.begin() + static_cast<long>(begin * m.cols),
                      m.values.begin() + static_cast<long>(end * m.cols));
    out.row_labels.assign(m.row_labels.begin() + static_cast<long>(begin),
                          m.row_labels.begin() + static_cast<long>(end));
    out.col_reference_id = m.col_reference_id;
    return out;
}

json load_matrices_manifest(const std::string& matrices_dir) {
    const std::string path = matrices_dir + "/matrices_manifest.json";
    if (!fs::exists(path))
        fail(ErrorCode::io, matrices_dir + " is not a matrices directory (missing " + path + ")");
    json manifest;
    try {
        manifest = json::parse(read_text_file(path));
    } catch (const json::parse_error& e) {
        fail(ErrorCode::format, path + ": invalid JSON: " + e.what());
    }
    return manifest;
}

void run_gc_experiment(const GCConfig& cfg, const std::string& matrices_dir,
                       const std::string& out_dir, const RunOptions& options,
                       std::vector<ManifestInput>& inputs) {
    (void)options;
    const std::string train_m = matrices_dir + "/train.gowm";
    const std::string train_l = matrices_dir + "/train.gowl";
    const std::string test_m = matrices_dir + "/test.gowm";
    const std::string test_l = matrices_dir + "/test.gowl";
    const GowerMatrix train_matrix = load_matrix(train_m, train_l);
    const GowerMatrix test_all = load_matrix(test_m, test_l);
    for (const auto& p : {train_m, train_l, test_m, test_l})
        inputs.push_back({p, digest_hex(fnv1a64_file(p))});

    if (train_matrix.rows != cfg.training_ds_size)
        fail(ErrorCode::config, "train matrix holds " + std::to_string(train_matrix.rows) +
                                    " rows but the config says training_ds_size=" +
                                    std::to_string(cfg.training_ds_size));
    if (test_all.rows != cfg.test_ds_size)
        fail(ErrorCode::config, "test matrix holds " + std::to_string(test_all.rows) +
                                    " rows but the config says test_ds_size=" +
                                    std::to_string(cfg.test_ds_size));

    // first half of the test partition validates, the second half stays held out
    const size_t val_rows = test_all.rows / 2;
    const GowerMatrix val_matrix = matrix_rows_slice(test_all, 0, val_rows);
    const GowerMatrix heldout = matrix_rows_slice(test_all, val_rows, test_all.rows);

    auto [params, history] = train_gc(cfg, train_matrix, val_matrix);
    const MetricsReport metrics = evaluate(params, heldout);

    std::string loss_csv = "epoch,train_loss,val_loss\n";
    for (size_t e = 0; e < history.train_loss.size(); ++e)
        loss_csv += std::to_string(e + 1) + "," + fmt(history.train_loss[e]) + "," +
                    fmt(history.val_loss[e]) + "\n";
    write_text_file(out_dir + "/loss_history.csv", loss_csv);

    save_model(params, out_dir + "/model.gown");
    write_text_file(out_dir + "/agent_metrics.csv",
                    agent_metrics_csv({metrics}, {train_matrix.rows}));
    write_text_file(out_dir + "/pr_space.csv", pr_space_csv({metrics}));

    json summary{{"run_name", cfg.run_name},
                 {"mode", "gc"},
                 {"stopped_epoch", history.stopped_epoch},
                 {"configured_epochs", cfg.epochs},
                 {"metrics", metrics_to_json(metrics)},
                 {"warnings", history.warnings}};
    write_text_file(out_dir + "/summary.json", summary.dump(2) + "\n");
}

void run_gf_experiment(const GFConfig& cfg, const std::string& matrices_dir,
                       const std::string& out_dir, const RunOptions& options,
                       std::vector<ManifestInput>& inputs, const std::string& mode) {
    std::vector<AgentMatrices> agents;
    agents.reserve(cfg.node_number);
    for (size_t id = 0; id < cfg.node_number; ++id) {
        const std::string sid = std::to_string(id);
        const std::string train_m = matrices_dir + "/train_" + sid + ".gowm";
        const std::string train_l = matrices_dir + "/train_" + sid + ".gowl";
        const std::string test_m = matrices_dir + "/test_" + sid + ".gowm";
        const std::string test_l = matrices_dir + "/test_" + sid + ".gowl";
        AgentMatrices m;
        m.agent_id = static_cast<int>(id);
        m.train = load_matrix(train_m, train_l);
        m.test = load_matrix(test_m, test_l);
        for (const auto& p : {train_m, train_l, test_m, test_l})
            inputs.push_back({p, digest_hex(fnv1a64_file(p))});
        agents.push_back(std::move(m));
    }

    const GFRunResult result = run_gf(cfg, agents, ServerUpdateMode::replace, options.threads);

    std::string round_csv = "round,agg_train_loss,val_loss,sampled_ids,selected_ids\n";
    for (const RoundReport& r : result.rounds)
        round_csv += std::to_string(r.round) + "," + fmt(r.aggregate_train_loss) + "," +
                     fmt(r.validation_loss) + "," + join_ids(r.sampled_ids) + "," +
                     join_ids(r.selected_ids) + "\n";
    write_text_file(out_dir + "/round_history.csv", round_csv);

    save_model(result.global, out_dir + "/model.gown");
    write_text_file(out_dir + "/agent_metrics.csv",
                    agent_metrics_csv(result.agent_metrics, result.agent_train_sizes));
    write_text_file(out_dir + "/pr_space.csv", pr_space_csv(result.agent_metrics));

    auto median_of = [&](auto selector) {
        std::vector<double> values;
        values.reserve(result.agent_metrics.size());
        for (const auto& m : result.agent_metrics) values.push_back(selector(m));
        return lower_median(values);
    };
    json median{{"accuracy", median_of([](const MetricsReport& m) { return m.accuracy; })},
                {"precision", median_of([](const MetricsReport& m) { return m.precision; })},
                {"recall", median_of([](const MetricsReport& m) { return m.recall; })},
                {"f1", median_of([](const MetricsReport& m) { return m.f1; })},
                {"fpr", median_of([](const MetricsReport& m) { return m.fpr; })},
                {"auc", median_of([](const MetricsReport& m) { return m.auc; })}};
    median["pr_point"] =
        json::array({median["precision"].get<double>(), median["recall"].get<double>()});

    json per_agent = json::array();
    for (const auto& m : result.agent_metrics) per_agent.push_back(metrics_to_json(m));

    json summary{{"run_name", cfg.run_name},
                 {"mode", mode},
                 {"rounds", cfg.total_rounds},
                 {"node_number", cfg.node_number},
                 {"attention_proportion", cfg.attention_proportion},
                 {"median", median},
                 {"per_agent", per_agent}};
    write_text_file(out_dir + "/summary.json", summary.dump(2) + "\n");
}

}  // namespace

void train_run(const std::string& mode, const std::string& config_path,
               const std::string& matrices_dir, const std::string& out_dir,
               const RunOptions& options) {
    const auto started = std::chrono::steady_clock::now();
    if (mode != "gc" && mode != "gf" && mode != "gf-am")
        fail(ErrorCode::config,
             "train: mode must be \"gc\", \"gf\" or \"gf-am\", got \"" + mode + "\"");

    const ExperimentConfig config = parse_config(config_path);
    const json manifest = load_matrices_manifest(matrices_dir);
    const std::string matrices_mode = manifest.value("mode", "");

    std::vector<ManifestInput> inputs;
    inputs.push_back({config_path, digest_hex(fnv1a64_file(config_path))});

    fs::create_directories(out_dir);

    if (mode == "gc") {
        if (!std::holds_alternative<GCConfig>(config))
            fail(ErrorCode::config, "train: gc mode needs a centralized config (no node_number)");
        if (matrices_mode != "cnl")
            fail(ErrorCode::config, "train: gc mode needs cnl matrices, directory holds \"" +
                                        matrices_mode + "\"");
        run_gc_experiment(std::get<GCConfig>(config), matrices_dir, out_dir, options, inputs);
    } else {
        if (!std::holds_alternative<GFConfig>(config))
            fail(ErrorCode::config, "train: " + mode + " mode needs a federated config");
        if (matrices_mode != "fl")
            fail(ErrorCode::config, "train: " + mode + " mode needs fl matrices, directory holds \"" +
                                        matrices_mode + "\"");
        const GFConfig& cfg = std::get<GFConfig>(config);
        if (mode == "gf" && cfg.attention_proportion != 1.0)
            fail(ErrorCode::config,
                 "train: gf mode requires attention_proportion 1.0 (or omitted); use gf-am");
        if (manifest.contains("node_number") &&
            manifest["node_number"].get<size_t>() != cfg.node_number)
            fail(ErrorCode::config,
                 "train: matrices were created for node_number=" +
                     std::to_string(manifest["node_number"].get<size_t>()) +
                     ", config says " + std::to_string(cfg.node_number));
        run_gf_experiment(cfg, matrices_dir, out_dir, options, inputs, mode);
    }

    const double duration =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    const std::string run_name = std::holds_alternative<GCConfig>(config)
                                     ? std::get<GCConfig>(config).run_name
                                     : std::get<GFConfig>(config).run_name;
    write_run_manifest(out_dir, run_name, mode, config_to_json(config), inputs, duration);
}

namespace {

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::io, "cannot open " + path);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        size_t start = 0;
        while (true) {
            size_t pos = line.find(',', start);
            if (pos == std::string::npos) {
                fields.push_back(line.substr(start));
                break;
            }
            fields.push_back(line.substr(start, pos - start));
            start = pos + 1;
        }
        rows.push_back(std::move(fields));
    }
    return rows;
}

}  // namespace

void emit_plot_data(const std::string& run_dir) {
    const std::string manifest_path = run_dir + "/run_manifest.json";
    if (!fs::exists(manifest_path))
        fail(ErrorCode::io, run_dir + " is not a completed run directory (missing " +
                                manifest_path + ")");
    json manifest;
    try {
        manifest = json::parse(read_text_file(manifest_path));
    } catch (const json::parse_error& e) {
        fail(ErrorCode::format, manifest_path + ": invalid JSON: " + e.what());
    }
    const std::string mode = manifest.value("mode", "");

    const auto metrics_rows = read_csv_rows(run_dir + "/agent_metrics.csv");
    if (metrics_rows.size() < 2)
        fail(ErrorCode::format, run_dir + "/agent_metrics.csv holds no agent rows");

    // agent_metrics columns: agent_id,n_train,accuracy,precision,recall,f1,auc
    std::string scatter =
        "# precision/recall of the final model on each agent's test partition\n"
        "agent_id,precision,recall\n";
    std::string bars =
        "# headline per-agent metrics of the final model\n"
        "agent_id,accuracy,f1,auc\n";
    for (size_t i = 1; i < metrics_rows.size(); ++i) {
        const auto& row = metrics_rows[i];
        if (row.size() < 7)
            fail(ErrorCode::format, run_dir + "/agent_metrics.csv row " + std::to_string(i) +
                                        " is too short");
        scatter += row[0] + "," + row[3] + "," + row[4] + "\n";
        bars += row[0] + "," + row[2] + "," + row[5] + "," + row[6] + "\n";
    }
    write_text_file(run_dir + "/pr_scatter.csv", scatter);
    write_text_file(run_dir + "/per_agent_bars.csv", bars);

    const bool centralized = mode == "gc";
    const std::string history_path =
        run_dir + (centralized ? "/loss_history.csv" : "/round_history.csv");
    const auto history_rows = read_csv_rows(history_path);
    std::string curves = centralized
                             ? "# training/validation loss per epoch\nstep,train_loss,val_loss\n"
                             : "# aggregate training / global validation loss per round\n"
                               "step,train_loss,val_loss\n";
    for (size_t i = 1; i < history_rows.size(); ++i) {
        const auto& row = history_rows[i];
        if (row.size() < 3)
            fail(ErrorCode::format, history_path + " row " + std::to_string(i) + " is too short");
        curves += row[0] + "," + row[1] + "," + row[2] + "\n";
    }
    write_text_file(run_dir + "/loss_curves.csv", curves);
}

}  // namespace gowid
