// Command-line front end for libgowid. Everything goes through the C API so
// this binary doubles as a smoke test of the shared library surface.

#include <cstdint>
#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "gowid.h"

namespace {

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 8);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (static_cast<unsigned char>(c) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\u%04x", c);
                    out += buf;
                } else {
                    out += c;
                }
        }
    }
    return out;
}

int finish(gowid_status status) {
    if (status == GOWID_OK) return 0;
    std::fprintf(stderr, "{\"error\": {\"code\": \"%s\", \"status\": %d, \"message\": \"%s\"}}\n",
                 gowid_status_name(status), static_cast<int>(status),
                 json_escape(gowid_last_error()).c_str());
    return static_cast<int>(status);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gower-dissimilarity intrusion detection: matrix creation, centralized and "
                 "federated training, report emission"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(gowid_version()));

    int threads = 0;
    uint64_t mem_cap_gib = 0;
    app.add_option("--threads", threads, "worker threads (0 = one per core)")
        ->capture_default_str();
    app.add_option("--mem-cap-gib", mem_cap_gib,
                   "dissimilarity storage cap in GiB (0 = default 8)")
        ->capture_default_str();

    std::string mode, data, schema, config, out, matrices, run_dir;
    uint64_t rows = 0, seed = 0;

    CLI::App* synth = app.add_subcommand("synth-data",
                                         "generate the planted-rule dataset (data.csv + "
                                         "schema.json)");
    synth->add_option("--rows", rows, "row count")->required();
    synth->add_option("--seed", seed, "generator seed")->required();
    synth->add_option("--out", out, "output directory")->required();

    CLI::App* create = app.add_subcommand("create-matrices",
                                          "build Gower matrix files from a CSV");
    create->add_option("--mode", mode, "cnl or fl")->required();
    create->add_option("--data", data, "input CSV")->required();
    create->add_option("--schema", schema, "schema JSON")->required();
    create->add_option("--config", config, "run config JSON")->required();
    create->add_option("--out", out, "output directory")->required();

    CLI::App* train = app.add_subcommand("train", "train on prepared matrices");
    train->add_option("--mode", mode, "gc, gf or gf-am")->required();
    train->add_option("--config", config, "run config JSON")->required();
    train->add_option("--matrices", matrices, "matrices directory")->required();
    train->add_option("--out", out, "run output directory")->required();

    CLI::App* report = app.add_subcommand("report", "emit plot-ready CSVs for a finished run");
    report->add_option("--run", run_dir, "run directory")->required();

    CLI11_PARSE(app, argc, argv);

    gowid_run_options options{threads, mem_cap_gib << 30};

    if (synth->parsed()) return finish(gowid_synth_data(out.c_str(), rows, seed));
    if (create->parsed())
        return finish(gowid_create_matrices(mode.c_str(), data.c_str(), schema.c_str(),
                                            config.c_str(), out.c_str(), &options));
    if (train->parsed())
        return finish(gowid_train(mode.c_str(), config.c_str(), matrices.c_str(), out.c_str(),
                                  &options));
    if (report->parsed()) return finish(gowid_report(run_dir.c_str()));
    return 1;
}
