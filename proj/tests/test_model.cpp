#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "doctest.h"
#include "gowid/error.hpp"
#include "gowid/model.hpp"

using namespace gowid;

namespace {

Eigen::MatrixXd random_batch(Eigen::Index rows, Eigen::Index cols, uint64_t seed) {
    std::mt19937_64 gen(seed);
    auto uniform = [&] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
    Eigen::MatrixXd batch(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) batch(r, c) = uniform();
    return batch;
}

Eigen::VectorXd alternating_labels(Eigen::Index rows) {
    Eigen::VectorXd y(rows);
    for (Eigen::Index i = 0; i < rows; ++i) y[i] = i % 2;
    return y;
}

double loss_at(const ModelParameters& params, const Eigen::MatrixXd& batch,
               const Eigen::VectorXd& labels, const DropoutMask& mask) {
    return bce_loss(forward(params, batch, mask), labels);
}

// central finite differences over a sampled subset of each layer's parameters
void gradient_check(ModelParameters params, const Eigen::MatrixXd& batch,
                    const Eigen::VectorXd& labels, const DropoutMask& mask,
                    size_t samples_per_layer, double tolerance) {
    const double h = 1e-5;
    const ModelGradients grads = backward(params, batch, labels, mask);
    std::mt19937_64 gen(404);

    double worst = 0.0;
    for (size_t l = 0; l < params.layer_count(); ++l) {
        auto check_entry = [&](double* p, double analytic) {
            const double saved = *p;
            *p = saved + h;
            const double up = loss_at(params, batch, labels, mask);
            *p = saved - h;
            const double down = loss_at(params, batch, labels, mask);
            *p = saved;
            const double fd = (up - down) / (2.0 * h);
            const double scale = std::max({std::fabs(fd), std::fabs(analytic), 1e-6});
            worst = std::max(worst, std::fabs(fd - analytic) / scale);
        };
        auto& W = params.layers[l].weights;
        for (size_t s = 0; s < samples_per_layer; ++s) {
            const Eigen::Index idx = static_cast<Eigen::Index>(gen() % W.size());
            check_entry(W.data() + idx, grads.layers[l].weights(idx));
        }
        auto& b = params.layers[l].biases;
        for (size_t s = 0; s < std::min<size_t>(samples_per_layer, b.size()); ++s) {
            const Eigen::Index idx = static_cast<Eigen::Index>(gen() % b.size());
            check_entry(b.data() + idx, grads.layers[l].biases(idx));
        }
    }
    CHECK(worst < tolerance);
}

bool params_equal(const ModelParameters& a, const ModelParameters& b) {
    if (a.layer_count() != b.layer_count()) return false;
    for (size_t l = 0; l < a.layer_count(); ++l) {
        if (a.layers[l].weights != b.layers[l].weights) return false;
        if (a.layers[l].biases != b.layers[l].biases) return false;
    }
    return true;
}

// classes sit at opposite corners of a hypercube, so every feature carries
// label signal in both directions
TrainingData separable_toy(size_t rows, size_t width, uint64_t seed) {
    std::mt19937_64 gen(seed);
    auto uniform = [&] { return static_cast<double>(gen() >> 11) * 0x1.0p-53; };
    TrainingData data;
    data.features.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(width));
    for (size_t r = 0; r < rows; ++r) {
        const uint8_t label = r % 2;
        data.labels.push_back(label);
        for (size_t c = 0; c < width; ++c) {
            const double sign = ((c % 2 == 0) == (label == 1)) ? 1.0 : -1.0;
            data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                sign * (0.75 + 0.5 * uniform());
        }
    }
    return data;
}

}  // namespace

TEST_CASE("init_model produces the documented architecture") {
    ModelParameters p = init_model(100, 7);
    REQUIRE(p.layer_count() == 7);
    const std::pair<Eigen::Index, Eigen::Index> shapes[] = {
        {100, 128}, {128, 64}, {64, 64}, {64, 32}, {32, 32}, {32, 2}, {2, 1}};
    for (size_t l = 0; l < 7; ++l) {
        CHECK(p.layers[l].weights.rows() == shapes[l].first);
        CHECK(p.layers[l].weights.cols() == shapes[l].second);
        CHECK(p.layers[l].biases.size() == shapes[l].second);
        CHECK(p.layers[l].biases.isZero());
        const double limit = std::sqrt(6.0 / (shapes[l].first + shapes[l].second));
        CHECK(p.layers[l].weights.maxCoeff() <= limit);
        CHECK(p.layers[l].weights.minCoeff() >= -limit);
    }
    CHECK(params_equal(init_model(100, 7), p));
    CHECK_FALSE(params_equal(init_model(100, 8), p));
    CHECK_THROWS_AS(init_model(0, 1), Error);
}

TEST_CASE("forward basics") {
    ModelParameters zero = zeros_like(init_model(6, 1));
    Eigen::MatrixXd batch = random_batch(5, 6, 2);
    Eigen::VectorXd scores = forward(zero, batch);
    for (Eigen::Index i = 0; i < scores.size(); ++i) CHECK(scores[i] == 0.5);

    ModelParameters p = init_model(6, 3);
    CHECK(forward(p, batch) == forward(p, batch));
    CHECK_THROWS_AS(forward(p, random_batch(2, 5, 3)), Error);
}

TEST_CASE("forward matches a scalar closed form on the all-ones micro net") {
    ModelParameters p = init_model(1, 5);
    for (auto& layer : p.layers) {
        layer.weights.setOnes();
        layer.biases.setZero();
    }
    const double x = 1e-9;
    // every unit in a layer carries the same value: a_{l+1} = relu(width_l * a_l)
    double a = x;
    const double widths[] = {1, 128, 64, 64, 32, 32, 2};
    for (int l = 1; l <= 6; ++l) a = std::max(0.0, widths[l - 1] * a);
    const double expected = 1.0 / (1.0 + std::exp(-(2.0 * a)));

    Eigen::MatrixXd batch(1, 1);
    batch(0, 0) = x;
    CHECK(forward(p, batch)[0] == doctest::Approx(expected).epsilon(1e-12));

    batch(0, 0) = -x;  // relu kills the negative path at the first layer
    CHECK(forward(p, batch)[0] == 0.5);
}

TEST_CASE("bce_loss values") {
    Eigen::VectorXd half(1), one(1);
    half << 0.5;
    one << 1.0;
    CHECK(bce_loss(half, one) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

    Eigen::VectorXd perfect(1);
    perfect << 1.0 - 1e-12;
    CHECK(bce_loss(perfect, one) == doctest::Approx(0.0).epsilon(1e-9));

    Eigen::VectorXd scores(2), labels(2);
    scores << 0.9, 0.1;
    labels << 1, 0;
    CHECK(bce_loss(scores, labels) == doctest::Approx(0.105361).epsilon(1e-5));

    CHECK_THROWS_AS(bce_loss(scores, one), Error);
}

TEST_CASE("backward agrees with central finite differences") {
    const Eigen::Index k = 9, rows = 8;
    ModelParameters params = init_model(k, 11);
    Eigen::MatrixXd batch = random_batch(rows, k, 12);
    Eigen::VectorXd labels = alternating_labels(rows);

    SUBCASE("dropout off") { gradient_check(params, batch, labels, {}, 24, 1e-4); }
    SUBCASE("pinned dropout mask") {
        Rng rng(77);
        DropoutMask mask = make_dropout_mask(rows, kDropoutRate, rng);
        gradient_check(params, batch, labels, mask, 24, 1e-4);
    }
}

TEST_CASE("backward on an all-zero batch") {
    const Eigen::Index k = 4;
    ModelParameters params = init_model(k, 5);
    Eigen::MatrixXd batch = Eigen::MatrixXd::Zero(3, k);
    Eigen::VectorXd labels = Eigen::VectorXd::Ones(3);
    ModelGradients grads = backward(params, batch, labels);
    CHECK(grads.layers[0].weights.isZero());
    CHECK(grads.layers.back().biases.cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("duplicating every batch row leaves the mean gradient unchanged") {
    const Eigen::Index k = 6, rows = 5;
    ModelParameters params = init_model(k, 21);
    Eigen::MatrixXd batch = random_batch(rows, k, 22);
    Eigen::VectorXd labels = alternating_labels(rows);

    Eigen::MatrixXd doubled(rows * 2, k);
    doubled << batch, batch;
    Eigen::VectorXd doubled_labels(rows * 2);
    doubled_labels << labels, labels;

    ModelGradients g1 = backward(params, batch, labels);
    ModelGradients g2 = backward(params, doubled, doubled_labels);
    for (size_t l = 0; l < g1.layer_count(); ++l) {
        CHECK((g1.layers[l].weights - g2.layers[l].weights).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((g1.layers[l].biases - g2.layers[l].biases).cwiseAbs().maxCoeff() < 1e-14);
    }
}

TEST_CASE("adam_step") {
    ModelParameters params = init_model(3, 31);
    ModelParameters before = params;
    OptimizerState state = make_optimizer_state(params);

    adam_step(params, zeros_like(params), state, 1e-3);
    CHECK(params_equal(params, before));
    CHECK(state.step == 1);

    // closed form for the very first step with gradient 1
    ModelGradients ones = zeros_like(params);
    for (auto& layer : ones.layers) {
        layer.weights.setOnes();
        layer.biases.setOnes();
    }
    ModelParameters p2 = before;
    OptimizerState s2 = make_optimizer_state(p2);
    adam_step(p2, ones, s2, 1e-3);
    const double expected_delta = -1e-3 / (1.0 + 1e-7);
    CHECK(p2.layers[0].weights(0, 0) - before.layers[0].weights(0, 0) ==
          doctest::Approx(expected_delta).epsilon(1e-12));

    // two identical steps keep moving against the gradient sign
    const double after_one = p2.layers[0].weights(0, 0);
    adam_step(p2, ones, s2, 1e-3);
    CHECK(p2.layers[0].weights(0, 0) < after_one);

    ModelGradients bad = zeros_like(params);
    bad.layers[2].weights(0, 0) = std::numeric_limits<double>::quiet_NaN();
    OptimizerState s3 = make_optimizer_state(params);
    try {
        adam_step(params, bad, s3, 1e-3);
        FAIL("expected a numeric error");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::numeric);
        CHECK(std::string(e.what()).find("layer 3") != std::string::npos);
    }
}

TEST_CASE("train_epoch mechanics") {
    TrainingData data = separable_toy(20, 4, 41);
    ModelParameters params = init_model(4, 42);
    OptimizerState state = make_optimizer_state(params);

    // batch >= rows: exactly one optimizer step per epoch
    train_epoch(params, state, data, 64, 1e-3, 1);
    CHECK(state.step == 1);

    CHECK_THROWS_AS(train_epoch(params, state, data, 0, 1e-3, 1), Error);
}

TEST_CASE("train_epoch is bit-deterministic per seed") {
    TrainingData data = separable_toy(30, 5, 51);
    ModelParameters a = init_model(5, 52), b = init_model(5, 52);
    OptimizerState sa = make_optimizer_state(a), sb = make_optimizer_state(b);
    for (uint64_t e = 0; e < 3; ++e) {
        const double la = train_epoch(a, sa, data, 8, 1e-3, 100 + e);
        const double lb = train_epoch(b, sb, data, 8, 1e-3, 100 + e);
        CHECK(la == lb);
    }
    CHECK(params_equal(a, b));
}

TEST_CASE("a linearly separable toy trains below 0.1 loss") {
    TrainingData data = separable_toy(100, 12, 61);
    ModelParameters params = init_model(12, 62);
    OptimizerState state = make_optimizer_state(params);
    double loss = 1.0;
    for (uint64_t e = 0; e < 50; ++e) loss = train_epoch(params, state, data, 2, 1e-3, e);
    CHECK(loss < 0.1);
}

TEST_CASE("parameters form a flat vector space") {
    ModelParameters a = zeros_like(init_model(4, 1));
    ModelParameters b = zeros_like(a);
    // exact binary fractions so the identity holds bit for bit
    a.layers[0].weights.setConstant(0.625);
    a.layers[3].biases.setConstant(-2.25);
    b.layers[0].weights.setConstant(0.0078125);
    b.layers[6].weights.setConstant(42.5);

    ModelParameters sum = zeros_like(a);
    axpy(1.0, a, sum);
    axpy(1.0, b, sum);
    axpy(-1.0, b, sum);
    CHECK(params_equal(sum, a));
}

TEST_CASE("dropout") {
    const Eigen::Index k = 6, rows = 40;
    ModelParameters params = init_model(k, 71);
    Eigen::MatrixXd batch = random_batch(rows, k, 72);

    // an all-ones mask is the identity: bit-equal to the no-dropout path
    DropoutMask ones = DropoutMask::Ones(rows, 32);
    CHECK(forward(params, batch) == forward(params, batch, ones));

    Rng rng(73);
    DropoutMask mask = make_dropout_mask(200, kDropoutRate, rng);
    size_t zeros = 0;
    for (Eigen::Index r = 0; r < mask.rows(); ++r)
        for (Eigen::Index c = 0; c < mask.cols(); ++c) {
            const double v = mask(r, c);
            CHECK((v == 0.0 || v == doctest::Approx(1.0 / 0.85)));
            zeros += v == 0.0;
        }
    const double drop_rate = static_cast<double>(zeros) / static_cast<double>(mask.size());
    CHECK(drop_rate > 0.10);
    CHECK(drop_rate < 0.20);

    CHECK_THROWS_AS(forward(params, batch, make_dropout_mask(3, kDropoutRate, rng)), Error);
}

TEST_CASE("model files round-trip bit-exactly") {
    namespace fs = std::filesystem;
    const std::string path = (fs::temp_directory_path() / "gowid_model.gown").string();
    ModelParameters params = init_model(12, 81);
    save_model(params, path);
    ModelParameters back = load_model(path);
    CHECK(params_equal(params, back));

    std::ifstream in(path, std::ios::binary);
    char head[7];
    in.read(head, 7);
    CHECK(head[0] == 'G');
    CHECK(head[3] == 'N');
    CHECK(head[4] == 1);  // version u16 LE
    CHECK(head[6] == 7);  // layer count

    CHECK_THROWS_AS(load_model("/nonexistent/gowid.gown"), Error);
    const std::string junk = (fs::temp_directory_path() / "gowid_junk.gown").string();
    std::ofstream(junk, std::ios::binary) << "NOPE";
    CHECK_THROWS_AS(load_model(junk), Error);
}
