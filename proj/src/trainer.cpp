#include "gowid/trainer.hpp"

#include <cmath>
#include <limits>

#include "gowid/error.hpp"

namespace gowid {

void GCConfig::validate() const {
    if (run_name.empty()) fail(ErrorCode::config, "gc config: run_name must not be empty");
    if (training_ds_size < 1) fail(ErrorCode::config, "gc config: training_ds_size must be >= 1");
    if (test_ds_size < 1) fail(ErrorCode::config, "gc config: test_ds_size must be >= 1");
    if (epochs < 1) fail(ErrorCode::config, "gc config: epochs must be >= 1");
    if (!(learning_rate > 0.0)) fail(ErrorCode::config, "gc config: learning_rate must be > 0");
    if (batch_size < 1) fail(ErrorCode::config, "gc config: batch_size must be >= 1");
}

bool EarlyStopper::observe(double val_loss) {
    ++seen_;
    if (seen_ == 1 || val_loss < best_loss_) {
        best_loss_ = val_loss;
        best_epoch_ = seen_;
        since_improvement_ = 0;
        last_improved_ = true;
        return false;
    }
    last_improved_ = false;
    ++since_improvement_;
    return since_improvement_ >= patience_;
}

double validation_loss(const ModelParameters& params, const TrainingData& data) {
    Eigen::VectorXd scores(static_cast<Eigen::Index>(data.rows()));
    std::vector<double> s = predict(params, data);
    for (size_t i = 0; i < s.size(); ++i) scores[static_cast<Eigen::Index>(i)] = s[i];
    return bce_loss(scores, data.label_vector());
}

std::pair<ModelParameters, TrainHistory> train_gc(const GCConfig& config,
                                                  const GowerMatrix& train_matrix,
                                                  const GowerMatrix& val_matrix) {
    config.validate();
    if (train_matrix.empty()) fail(ErrorCode::state, "train_gc: empty training matrix");
    if (!val_matrix.empty() && val_matrix.cols != train_matrix.cols)
        fail(ErrorCode::shape, "train_gc: validation width " + std::to_string(val_matrix.cols) +
                                   " does not match training width " +
                                   std::to_string(train_matrix.cols));

    const TrainingData train_data = widen(train_matrix);
    const bool has_validation = !val_matrix.empty();
    TrainingData val_data;
    if (has_validation) val_data = widen(val_matrix);

    TrainHistory history;
    if (!has_validation)
        history.warnings.push_back("empty validation matrix: early stopping disabled");

    ModelParameters params = init_model(train_matrix.cols, init_seed(config.seed));
    OptimizerState state = make_optimizer_state(params);
    EarlyStopper stopper(2);

    ModelParameters best_params = params;
    for (size_t epoch = 0; epoch < config.epochs; ++epoch) {
        const double train_loss = train_epoch(params, state, train_data, config.batch_size,
                                              config.learning_rate,
                                              epoch_seed(config.seed, 0, epoch));
        history.train_loss.push_back(train_loss);
        history.stopped_epoch = epoch + 1;

        if (!has_validation) {
            history.val_loss.push_back(std::numeric_limits<double>::quiet_NaN());
            continue;
        }
        const double val_loss = validation_loss(params, val_data);
        history.val_loss.push_back(val_loss);
        const bool stop = stopper.observe(val_loss);
        if (stopper.last_improved()) best_params = params;
        if (stop) break;
    }
    return {has_validation ? best_params : params, history};
}

MetricsReport evaluate(const ModelParameters& params, const TrainingData& test_data) {
    if (test_data.rows() == 0) fail(ErrorCode::state, "evaluate: empty test data");
    return evaluate_scores(predict(params, test_data), test_data.labels);
}

MetricsReport evaluate(const ModelParameters& params, const GowerMatrix& test_matrix) {
    if (test_matrix.empty()) fail(ErrorCode::state, "evaluate: empty test matrix");
    return evaluate(params, widen(test_matrix));
}

}  // namespace gowid
