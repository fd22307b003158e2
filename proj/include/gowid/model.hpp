#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "gowid/gower.hpp"
#include "gowid/rng.hpp"

namespace gowid {

// Fully connected binary classifier: input k -> 128 -> 64 -> 64 -> 32 -> 32
// -> 2 -> sigmoid(1). Hidden activations are ReLU; dropout sits between the
// 4th and 5th hidden layers. All training arithmetic is 64-bit.
inline constexpr std::array<Eigen::Index, 6> kHiddenSizes{128, 64, 64, 32, 32, 2};
inline constexpr double kDropoutRate = 0.15;
inline constexpr int kDropoutHiddenLayer = 4;  // mask applies to this hidden activation (1-based)

struct ModelParameters {
    struct Layer {
        Eigen::MatrixXd weights;  // fan_in x fan_out
        Eigen::VectorXd biases;   // fan_out
    };
    std::vector<Layer> layers;  // 7 entries

    Eigen::Index input_dim() const { return layers.empty() ? 0 : layers.front().weights.rows(); }
    size_t layer_count() const { return layers.size(); }
};

// Gradients share the parameter layout.
using ModelGradients = ModelParameters;

struct OptimizerState {
    static constexpr double kBeta1 = 0.9;
    static constexpr double kBeta2 = 0.999;
    static constexpr double kEpsilon = 1e-7;

    std::vector<ModelParameters::Layer> first_moment;
    std::vector<ModelParameters::Layer> second_moment;
    uint64_t step = 0;
};

OptimizerState make_optimizer_state(const ModelParameters& params);

// Glorot-uniform weights, zero biases, deterministic per seed.
ModelParameters init_model(size_t input_dim, uint64_t rng_seed);

// Multipliers for the dropout hidden activation: 0 for dropped units,
// 1/(1-rate) for kept ones (inverted dropout). An empty mask disables dropout;
// an all-ones mask is the identity.
using DropoutMask = Eigen::MatrixXd;

DropoutMask make_dropout_mask(Eigen::Index rows, double rate, Rng& rng);

// Scores in (0,1), one per batch row.
Eigen::VectorXd forward(const ModelParameters& params, const Eigen::MatrixXd& batch,
                        const DropoutMask& mask = {});

// -mean(y ln s + (1-y) ln(1-s)) with scores clamped to [1e-12, 1-1e-12]
double bce_loss(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

// Exact gradient of the mean BCE w.r.t. every parameter, under the same mask
// the forward pass used.
ModelGradients backward(const ModelParameters& params, const Eigen::MatrixXd& batch,
                        const Eigen::VectorXd& labels, const DropoutMask& mask = {});

// Standard Adam with bias correction; rejects non-finite gradients.
void adam_step(ModelParameters& params, const ModelGradients& grads, OptimizerState& state,
               double learning_rate);

// Widened training view of a dissimilarity block.
struct TrainingData {
    Eigen::MatrixXd features;     // rows x k, float entries widened to double
    std::vector<uint8_t> labels;  // {0,1}

    Eigen::Index rows() const { return features.rows(); }
    Eigen::VectorXd label_vector() const;
};

TrainingData widen(const GowerMatrix& matrix);

// One pass over the data: seeded shuffle, sequential mini-batches (last one
// may be short), dropout active, one Adam step per batch. Returns the
// instance-weighted mean training loss.
double train_epoch(ModelParameters& params, OptimizerState& state, const TrainingData& data,
                   size_t batch_size, double learning_rate, uint64_t rng_seed);

// Dropout-off scores for a whole table, evaluated in fixed-size chunks.
std::vector<double> predict(const ModelParameters& params, const TrainingData& data);

// Flat-vector-space helpers used by federated averaging; all exact IEEE ops.
ModelParameters zeros_like(const ModelParameters& params);
void axpy(double a, const ModelParameters& x, ModelParameters& y);  // y += a*x
bool same_shapes(const ModelParameters& a, const ModelParameters& b);

// "GOWN": magic, u16 version, u8 layer count, then per layer u32 rows, u32
// cols, float64 weights row-major, float64 biases; all LE.
void save_model(const ModelParameters& params, const std::string& path);
ModelParameters load_model(const std::string& path);

}  // namespace gowid
