#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gowid/gower.hpp"
#include "gowid/metrics.hpp"
#include "gowid/model.hpp"

namespace gowid {

struct GCConfig {
    std::string run_name;
    size_t training_ds_size = 0;
    size_t test_ds_size = 0;
    bool balanced = false;
    size_t epochs = 0;
    double learning_rate = 0.0;
    size_t batch_size = 0;
    uint64_t seed = 0;

    void validate() const;
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> val_loss;  // NaN per epoch when no validation data
    size_t stopped_epoch = 0;      // 1-based count of epochs actually run
    std::vector<std::string> warnings;
};

// Validation-loss early stopping: stop after `patience` consecutive epochs
// without a strictly lower loss (min_delta = 0).
class EarlyStopper {
public:
    explicit EarlyStopper(size_t patience) : patience_(patience) {}

    // Returns true when training should stop after this observation.
    bool observe(double val_loss);
    bool last_improved() const { return last_improved_; }
    size_t best_epoch() const { return best_epoch_; }  // 1-based
    double best_loss() const { return best_loss_; }

private:
    size_t patience_;
    size_t seen_ = 0;
    size_t best_epoch_ = 0;
    size_t since_improvement_ = 0;
    double best_loss_ = 0.0;
    bool last_improved_ = false;
};

// Trains up to config.epochs epochs with patience-2 early stopping on the
// validation matrix and returns the parameters with the best validation loss.
// An empty validation matrix disables early stopping (with a warning record)
// and the final parameters are returned.
std::pair<ModelParameters, TrainHistory> train_gc(const GCConfig& config,
                                                  const GowerMatrix& train_matrix,
                                                  const GowerMatrix& val_matrix);

// Dropout-off evaluation at threshold 0.5.
MetricsReport evaluate(const ModelParameters& params, const GowerMatrix& test_matrix);
MetricsReport evaluate(const ModelParameters& params, const TrainingData& test_data);

double validation_loss(const ModelParameters& params, const TrainingData& data);

}  // namespace gowid
