#include "gowid/model.hpp"

#include <cmath>
#include <fstream>

#include "binio.hpp"
#include "gowid/error.hpp"

namespace gowid {

namespace {

std::vector<Eigen::Index> layer_dims(Eigen::Index input_dim) {
    std::vector<Eigen::Index> dims;
    dims.push_back(input_dim);
    for (Eigen::Index h : kHiddenSizes) dims.push_back(h);
    dims.push_back(1);
    return dims;
}

// 0-based index of the layer whose activation the dropout mask multiplies
constexpr int kMaskedLayer = kDropoutHiddenLayer - 1;

void check_mask(const DropoutMask& mask, Eigen::Index batch_rows) {
    if (mask.size() == 0) return;
    if (mask.rows() != batch_rows || mask.cols() != kHiddenSizes[kMaskedLayer])
        fail(ErrorCode::shape, "dropout mask is " + std::to_string(mask.rows()) + "x" +
                                   std::to_string(mask.cols()) + ", expected " +
                                   std::to_string(batch_rows) + "x" +
                                   std::to_string(kHiddenSizes[kMaskedLayer]));
}

struct ForwardCache {
    std::vector<Eigen::MatrixXd> inputs;  // inputs[l]: what layer l consumed
    std::vector<Eigen::MatrixXd> pre;     // pre[l]: pre-activation of layer l
    Eigen::VectorXd scores;
};

ForwardCache run_forward(const ModelParameters& params, const Eigen::MatrixXd& batch,
                         const DropoutMask& mask, bool want_cache) {
    if (batch.cols() != params.input_dim())
        fail(ErrorCode::shape, "forward: batch width " + std::to_string(batch.cols()) +
                                   " does not match model input " +
                                   std::to_string(params.input_dim()));
    check_mask(mask, batch.rows());

    ForwardCache cache;
    const size_t n_layers = params.layer_count();
    if (want_cache) {
        cache.inputs.resize(n_layers);
        cache.pre.resize(n_layers);
    }

    Eigen::MatrixXd activation = batch;
    for (size_t l = 0; l < n_layers; ++l) {
        if (want_cache) cache.inputs[l] = activation;
        Eigen::MatrixXd z =
            (activation * params.layers[l].weights).rowwise() +
            params.layers[l].biases.transpose();
        if (want_cache) cache.pre[l] = z;
        if (l + 1 < n_layers) {
            activation = z.cwiseMax(0.0);
            if (static_cast<int>(l) == kMaskedLayer && mask.size() != 0)
                activation = activation.cwiseProduct(mask);
        } else {
            cache.scores = (1.0 / (1.0 + (-z.col(0).array()).exp())).matrix();
        }
    }
    return cache;
}

ModelGradients gradients_from_cache(const ModelParameters& params, const ForwardCache& cache,
                                    const Eigen::VectorXd& labels, const DropoutMask& mask) {
    const Eigen::Index n = cache.scores.size();
    if (labels.size() != n)
        fail(ErrorCode::shape, "backward: " + std::to_string(labels.size()) + " labels for " +
                                   std::to_string(n) + " rows");

    ModelGradients grads = zeros_like(params);
    // mean-BCE + sigmoid: dL/dz = (s - y)/n at the output pre-activation
    Eigen::MatrixXd delta = ((cache.scores - labels) / static_cast<double>(n));

    for (int l = static_cast<int>(params.layer_count()) - 1; l >= 0; --l) {
        grads.layers[l].weights = cache.inputs[l].transpose() * delta;
        grads.layers[l].biases = delta.colwise().sum().transpose();
        if (l == 0) break;
        Eigen::MatrixXd d_act = delta * params.layers[l].weights.transpose();
        if (l - 1 == kMaskedLayer && mask.size() != 0) d_act = d_act.cwiseProduct(mask);
        delta = d_act.cwiseProduct(
            (cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
    return grads;
}

}  // namespace

OptimizerState make_optimizer_state(const ModelParameters& params) {
    OptimizerState state;
    ModelParameters z = zeros_like(params);
    state.first_moment = z.layers;
    state.second_moment = z.layers;
    state.step = 0;
    return state;
}

ModelParameters init_model(size_t input_dim, uint64_t rng_seed) {
    if (input_dim == 0) fail(ErrorCode::config, "init_model: input dimension must be >= 1");
    const auto dims = layer_dims(static_cast<Eigen::Index>(input_dim));
    Rng rng(rng_seed);
    ModelParameters params;
    params.layers.reserve(dims.size() - 1);
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        const Eigen::Index fan_in = dims[l], fan_out = dims[l + 1];
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        ModelParameters::Layer layer;
        layer.weights.resize(fan_in, fan_out);
        for (Eigen::Index i = 0; i < fan_in; ++i)
            for (Eigen::Index j = 0; j < fan_out; ++j)
                layer.weights(i, j) = rng.uniform(-limit, limit);
        layer.biases = Eigen::VectorXd::Zero(fan_out);
        params.layers.push_back(std::move(layer));
    }
    return params;
}

DropoutMask make_dropout_mask(Eigen::Index rows, double rate, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0))
        fail(ErrorCode::config, "make_dropout_mask: rate outside [0,1)");
    const double keep_scale = 1.0 / (1.0 - rate);
    DropoutMask mask(rows, kHiddenSizes[kMaskedLayer]);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < mask.cols(); ++c)
            mask(r, c) = rng.uniform() < rate ? 0.0 : keep_scale;
    return mask;
}

Eigen::VectorXd forward(const ModelParameters& params, const Eigen::MatrixXd& batch,
                        const DropoutMask& mask) {
    return run_forward(params, batch, mask, false).scores;
}

double bce_loss(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
    if (scores.size() != labels.size())
        fail(ErrorCode::shape, "bce_loss: score/label length mismatch");
    if (scores.size() == 0) fail(ErrorCode::state, "bce_loss: empty input");
    Eigen::ArrayXd s = scores.array().max(1e-12).min(1.0 - 1e-12);
    Eigen::ArrayXd y = labels.array();
    return -(y * s.log() + (1.0 - y) * (1.0 - s).log()).mean();
}

ModelGradients backward(const ModelParameters& params, const Eigen::MatrixXd& batch,
                        const Eigen::VectorXd& labels, const DropoutMask& mask) {
    ForwardCache cache = run_forward(params, batch, mask, true);
    return gradients_from_cache(params, cache, labels, mask);
}

void adam_step(ModelParameters& params, const ModelGradients& grads, OptimizerState& state,
               double learning_rate) {
    if (!(learning_rate > 0.0)) fail(ErrorCode::config, "adam_step: learning rate must be > 0");
    if (!same_shapes(params, grads)) fail(ErrorCode::shape, "adam_step: gradient shape mismatch");
    for (size_t l = 0; l < params.layer_count(); ++l)
        if (!grads.layers[l].weights.allFinite() || !grads.layers[l].biases.allFinite())
            fail(ErrorCode::numeric,
                 "adam_step: non-finite gradient in layer " + std::to_string(l + 1));

    state.step += 1;
    const double bc1 = 1.0 - std::pow(OptimizerState::kBeta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(OptimizerState::kBeta2, static_cast<double>(state.step));

    auto update = [&](auto& p, const auto& g, auto& m, auto& v) {
        m = OptimizerState::kBeta1 * m + (1.0 - OptimizerState::kBeta1) * g;
        v = (OptimizerState::kBeta2 * v.array() +
             (1.0 - OptimizerState::kBeta2) * g.array().square())
                .matrix();
        p.array() -= learning_rate * (m.array() / bc1) /
                     ((v.array() / bc2).sqrt() + OptimizerState::kEpsilon);
    };
    for (size_t l = 0; l < params.layer_count(); ++l) {
        update(params.layers[l].weights, grads.layers[l].weights, state.first_moment[l].weights,
               state.second_moment[l].weights);
        update(params.layers[l].biases, grads.layers[l].biases, state.first_moment[l].biases,
               state.second_moment[l].biases);
    }
}

Eigen::VectorXd TrainingData::label_vector() const {
    Eigen::VectorXd y(static_cast<Eigen::Index>(labels.size()));
    for (size_t i = 0; i < labels.size(); ++i) y[static_cast<Eigen::Index>(i)] = labels[i];
    return y;
}

TrainingData widen(const GowerMatrix& matrix) {
    TrainingData data;
    data.features.resize(static_cast<Eigen::Index>(matrix.rows),
                         static_cast<Eigen::Index>(matrix.cols));
    for (size_t r = 0; r < matrix.rows; ++r)
        for (size_t c = 0; c < matrix.cols; ++c)
            data.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                static_cast<double>(matrix.values[r * matrix.cols + c]);
    data.labels = matrix.row_labels;
    return data;
}

double train_epoch(ModelParameters& params, OptimizerState& state, const TrainingData& data,
                   size_t batch_size, double learning_rate, uint64_t rng_seed) {
    if (batch_size == 0) fail(ErrorCode::config, "train_epoch: batch size must be >= 1");
    const size_t n = static_cast<size_t>(data.rows());
    if (n == 0) fail(ErrorCode::state, "train_epoch: empty training data");

    Rng rng(rng_seed);
    std::vector<size_t> perm(n);
    for (size_t i = 0; i < n; ++i) perm[i] = i;
    rng.shuffle(perm);

    double loss_sum = 0.0;
    for (size_t start = 0; start < n; start += batch_size) {
        const size_t bn = std::min(batch_size, n - start);
        Eigen::MatrixXd batch(static_cast<Eigen::Index>(bn), data.features.cols());
        Eigen::VectorXd labels(static_cast<Eigen::Index>(bn));
        for (size_t i = 0; i < bn; ++i) {
            batch.row(static_cast<Eigen::Index>(i)) =
                data.features.row(static_cast<Eigen::Index>(perm[start + i]));
            labels[static_cast<Eigen::Index>(i)] = data.labels[perm[start + i]];
        }
        DropoutMask mask = make_dropout_mask(static_cast<Eigen::Index>(bn), kDropoutRate, rng);
        ForwardCache cache = run_forward(params, batch, mask, true);
        loss_sum += bce_loss(cache.scores, labels) * static_cast<double>(bn);
        ModelGradients grads = gradients_from_cache(params, cache, labels, mask);
        adam_step(params, grads, state, learning_rate);
    }
    return loss_sum / static_cast<double>(n);
}

std::vector<double> predict(const ModelParameters& params, const TrainingData& data) {
    constexpr Eigen::Index kChunk = 4096;
    const Eigen::Index n = data.rows();
    std::vector<double> scores(static_cast<size_t>(n));
    for (Eigen::Index start = 0; start < n; start += kChunk) {
        const Eigen::Index bn = std::min(kChunk, n - start);
        Eigen::VectorXd s = forward(params, data.features.middleRows(start, bn));
        for (Eigen::Index i = 0; i < bn; ++i) scores[static_cast<size_t>(start + i)] = s[i];
    }
    return scores;
}

ModelParameters zeros_like(const ModelParameters& params) {
    ModelParameters out;
    out.layers.reserve(params.layer_count());
    for (const auto& layer : params.layers) {
        ModelParameters::Layer z;
        z.weights = Eigen::MatrixXd::Zero(layer.weights.rows(), layer.weights.cols());
        z.biases = Eigen::VectorXd::Zero(layer.biases.size());
        out.layers.push_back(std::move(z));
    }
    return out;
}

void axpy(double a, const ModelParameters& x, ModelParameters& y) {
    if (!same_shapes(x, y)) fail(ErrorCode::shape, "axpy: parameter shape mismatch");
    for (size_t l = 0; l < x.layer_count(); ++l) {
        y.layers[l].weights += a * x.layers[l].weights;
        y.layers[l].biases += a * x.layers[l].biases;
    }
}

bool same_shapes(const ModelParameters& a, const ModelParameters& b) {
    if (a.layer_count() != b.layer_count()) return false;
    for (size_t l = 0; l < a.layer_count(); ++l) {
        if (a.layers[l].weights.rows() != b.layers[l].weights.rows() ||
            a.layers[l].weights.cols() != b.layers[l].weights.cols() ||
            a.layers[l].biases.size() != b.layers[l].biases.size())
            return false;
    }
    return true;
}

void save_model(const ModelParameters& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::io, "save_model: cannot open " + path);
    binio::put_bytes(out, "GOWN", 4);
    binio::put_u16(out, 1);
    out.put(static_cast<char>(params.layer_count()));
    for (const auto& layer : params.layers) {
        binio::put_u32(out, static_cast<uint32_t>(layer.weights.rows()));
        binio::put_u32(out, static_cast<uint32_t>(layer.weights.cols()));
        for (Eigen::Index i = 0; i < layer.weights.rows(); ++i)
            for (Eigen::Index j = 0; j < layer.weights.cols(); ++j)
                binio::put_f64(out, layer.weights(i, j));
        for (Eigen::Index j = 0; j < layer.biases.size(); ++j)
            binio::put_f64(out, layer.biases[j]);
    }
    if (!out) fail(ErrorCode::io, "save_model: write failed for " + path);
}

ModelParameters load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::io, "load_model: cannot open " + path);
    binio::expect_magic(in, "GOWN", path);
    const uint16_t version = binio::get_u16(in, path);
    if (version != 1)
        fail(ErrorCode::format, path + ": unsupported version " + std::to_string(version));
    int layer_count = in.get();
    if (layer_count == EOF) fail(ErrorCode::format, path + ": truncated file");

    ModelParameters params;
    for (int l = 0; l < layer_count; ++l) {
        const uint32_t rows = binio::get_u32(in, path);
        const uint32_t cols = binio::get_u32(in, path);
        ModelParameters::Layer layer;
        layer.weights.resize(rows, cols);
        for (uint32_t i = 0; i < rows; ++i)
            for (uint32_t j = 0; j < cols; ++j) layer.weights(i, j) = binio::get_f64(in, path);
        layer.biases.resize(cols);
        for (uint32_t j = 0; j < cols; ++j) layer.biases[j] = binio::get_f64(in, path);
        if (!layer.weights.allFinite() || !layer.biases.allFinite())
            fail(ErrorCode::format, path + ": non-finite parameter values");
        params.layers.push_back(std::move(layer));
    }
    binio::expect_eof(in, path);

    // the file must hold exactly this architecture
    const auto dims = layer_dims(params.input_dim());
    if (params.layer_count() + 1 != dims.size())
        fail(ErrorCode::format, path + ": expected " + std::to_string(dims.size() - 1) +
                                    " layers, found " + std::to_string(params.layer_count()));
    for (size_t l = 0; l < params.layer_count(); ++l) {
        if (params.layers[l].weights.rows() != dims[l] ||
            params.layers[l].weights.cols() != dims[l + 1])
            fail(ErrorCode::format, path + ": layer " + std::to_string(l + 1) +
                                        " has unexpected shape");
    }
    return params;
}

}  // namespace gowid
