#include <cmath>
#include <random>

#include "doctest.h"
#include "gowid/error.hpp"
#include "gowid/trainer.hpp"

using namespace gowid;

namespace {

// small k x k training block plus a test block with a planted geometry:
// attack rows are near each other and far from normal rows
GowerMatrix planted_matrix(size_t rows, size_t cols, uint64_t seed) {
    std::mt19937_64 gen(seed);
    auto uniform = [&] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
    GowerMatrix m;
    m.rows = rows;
    m.cols = cols;
    m.values.resize(rows * cols);
    m.row_labels.resize(rows);
    for (size_t r = 0; r < rows; ++r) {
        const uint8_t label = r % 2;
        m.row_labels[r] = label;
        for (size_t c = 0; c < cols; ++c) {
            const uint8_t col_label = c % 2;
            const double base = label == col_label ? 0.15 : 0.85;
            m.values[r * cols + c] = static_cast<float>(base + 0.1 * (uniform() - 0.5));
        }
    }
    return m;
}

GowerMatrix empty_matrix(size_t cols) {
    GowerMatrix m;
    m.rows = 0;
    m.cols = cols;
    return m;
}

bool params_equal(const ModelParameters& a, const ModelParameters& b) {
    for (size_t l = 0; l < a.layer_count(); ++l) {
        if (a.layers[l].weights != b.layers[l].weights) return false;
        if (a.layers[l].biases != b.layers[l].biases) return false;
    }
    return a.layer_count() == b.layer_count();
}

GCConfig toy_config(size_t epochs) {
    GCConfig cfg;
    cfg.run_name = "toy";
    cfg.training_ds_size = 40;
    cfg.test_ds_size = 10;
    cfg.balanced = false;
    cfg.epochs = epochs;
    cfg.learning_rate = 1e-3;
    cfg.batch_size = 8;
    cfg.seed = 26;
    return cfg;
}

}  // namespace

TEST_CASE("early stopper follows the patience-2 rule") {
    EarlyStopper s(2);
    CHECK_FALSE(s.observe(0.9));
    CHECK_FALSE(s.observe(0.8));
    CHECK_FALSE(s.observe(0.81));
    CHECK(s.observe(0.82));  // second epoch without improvement: stop after epoch 4
    CHECK(s.best_epoch() == 2);
    CHECK(s.best_loss() == 0.8);

    // equal loss is not an improvement (min_delta = 0)
    EarlyStopper flat(2);
    CHECK_FALSE(flat.observe(0.5));
    CHECK_FALSE(flat.observe(0.5));
    CHECK(flat.observe(0.5));
    CHECK(flat.best_epoch() == 1);

    EarlyStopper improving(2);
    for (int e = 0; e < 100; ++e) CHECK_FALSE(improving.observe(1.0 / (e + 1)));
    CHECK(improving.best_epoch() == 100);
}

TEST_CASE("train_gc runs all epochs under monotone improvement") {
    GowerMatrix train = planted_matrix(40, 40, 1);
    GowerMatrix val = planted_matrix(10, 40, 2);
    auto [params, history] = train_gc(toy_config(6), train, val);
    CHECK(history.stopped_epoch == 6);
    CHECK(history.train_loss.size() == 6);
    CHECK(history.val_loss.size() == 6);
    CHECK(history.warnings.empty());
    for (double v : history.val_loss) CHECK(std::isfinite(v));
}

TEST_CASE("train_gc restores the best-validation parameters") {
    GowerMatrix train = planted_matrix(40, 40, 3);
    GowerMatrix val = planted_matrix(10, 40, 4);
    GCConfig cfg = toy_config(12);
    auto [params, history] = train_gc(cfg, train, val);

    // replay the same seeded epochs up to the best one; the returned
    // parameters must be exactly that snapshot
    size_t best_epoch = 1;
    double best = history.val_loss[0];
    for (size_t e = 1; e < history.val_loss.size(); ++e)
        if (history.val_loss[e] < best) {
            best = history.val_loss[e];
            best_epoch = e + 1;
        }

    TrainingData train_data = widen(train);
    ModelParameters replay = init_model(train.cols, init_seed(cfg.seed));
    OptimizerState state = make_optimizer_state(replay);
    for (size_t e = 0; e < best_epoch; ++e)
        train_epoch(replay, state, train_data, cfg.batch_size, cfg.learning_rate,
                    epoch_seed(cfg.seed, 0, e));
    CHECK(params_equal(params, replay));
}

TEST_CASE("train_gc with an empty validation matrix disables early stopping") {
    GowerMatrix train = planted_matrix(30, 30, 5);
    GCConfig cfg = toy_config(5);
    auto [params, history] = train_gc(cfg, train, empty_matrix(30));
    CHECK(history.stopped_epoch == 5);
    REQUIRE(history.warnings.size() == 1);
    CHECK(history.warnings[0].find("early stopping") != std::string::npos);
    for (double v : history.val_loss) CHECK(std::isnan(v));
}

TEST_CASE("train_gc single-epoch guard") {
    GowerMatrix train = planted_matrix(20, 20, 6);
    GowerMatrix val = planted_matrix(6, 20, 7);
    auto [params, history] = train_gc(toy_config(1), train, val);
    CHECK(history.stopped_epoch == 1);
}

TEST_CASE("train_gc history is bit-identical across runs") {
    GowerMatrix train = planted_matrix(30, 30, 8);
    GowerMatrix val = planted_matrix(8, 30, 9);
    auto [p1, h1] = train_gc(toy_config(5), train, val);
    auto [p2, h2] = train_gc(toy_config(5), train, val);
    CHECK(h1.train_loss == h2.train_loss);
    CHECK(h1.val_loss == h2.val_loss);
    CHECK(params_equal(p1, p2));
}

TEST_CASE("train_gc rejects mismatched validation width") {
    GowerMatrix train = planted_matrix(20, 20, 10);
    GowerMatrix val = planted_matrix(4, 19, 11);
    CHECK_THROWS_AS(train_gc(toy_config(3), train, val), Error);
}

TEST_CASE("evaluate a hand-built perfect model") {
    // the first two input coordinates carry the class signal; route u+ and u-
    // through the identity down to the 2-unit layer and weight them +-B
    const size_t k = 4;
    ModelParameters p = zeros_like(init_model(k, 1));
    p.layers[0].weights(0, 0) = 1.0;
    p.layers[0].weights(1, 0) = -1.0;
    p.layers[0].weights(0, 1) = -1.0;
    p.layers[0].weights(1, 1) = 1.0;
    for (size_t l = 1; l + 1 < p.layer_count(); ++l) {
        p.layers[l].weights(0, 0) = 1.0;
        p.layers[l].weights(1, 1) = 1.0;
    }
    p.layers[6].weights(0, 0) = 50.0;
    p.layers[6].weights(1, 0) = -50.0;

    GowerMatrix test;
    test.rows = 4;
    test.cols = k;
    // attack rows: coordinate 0 high; normal rows: coordinate 1 high
    test.values = {0.9f, 0.1f, 0.5f, 0.5f, 0.1f, 0.9f, 0.5f, 0.5f,
                   0.8f, 0.2f, 0.4f, 0.4f, 0.2f, 0.8f, 0.4f, 0.4f};
    test.row_labels = {1, 0, 1, 0};

    MetricsReport m = evaluate(p, test);
    CHECK(m.accuracy == 1.0);
    CHECK(m.auc == 1.0);
    CHECK(m.counts.tp == 2);
    CHECK(m.counts.tn == 2);
}

TEST_CASE("evaluate the constant-score model") {
    ModelParameters zero = zeros_like(init_model(5, 1));
    GowerMatrix test = planted_matrix(8, 5, 12);
    MetricsReport m = evaluate(zero, test);
    CHECK(m.auc == 0.5);                    // every pair ties
    CHECK(m.counts.tp + m.counts.fp == 8);  // score 0.5 predicts positive

    MetricsReport again = evaluate(zero, test);
    CHECK(m.accuracy == again.accuracy);
    CHECK(m.auc == again.auc);

    CHECK_THROWS_AS(evaluate(zero, empty_matrix(5)), Error);
}
