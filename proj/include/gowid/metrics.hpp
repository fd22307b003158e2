#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace gowid {

struct Confusion {
    uint64_t tp = 0, fp = 0, tn = 0, fn = 0;
    uint64_t total() const { return tp + fp + tn + fn; }
};

struct MetricsReport {
    Confusion counts;
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    double fpr = 0.0;
    double auc = 0.0;
    // empty-denominator flags; the corresponding ratio is reported as 0
    bool precision_degenerate = false;
    bool recall_degenerate = false;
    bool f1_degenerate = false;
    bool fpr_degenerate = false;
    bool auc_degenerate = false;

    std::pair<double, double> pr_point() const { return {precision, recall}; }
};

// predict 1 iff score >= threshold; positive class = attack (label 1)
Confusion confusion(const std::vector<double>& scores, const std::vector<uint8_t>& labels,
                    double threshold = 0.5);

MetricsReport derive_ratios(const Confusion& c);

// Exact Mann-Whitney statistic: fraction of (positive, negative) pairs where
// the positive scores higher, ties counted 0.5. Throws on single-class input.
double roc_auc(const std::vector<double>& scores, const std::vector<uint8_t>& labels);

// Single-class input yields 0.5 with the degenerate flag set.
double roc_auc_or_half(const std::vector<double>& scores, const std::vector<uint8_t>& labels,
                       bool* degenerate = nullptr);

// confusion + ratios + AUC in one go
MetricsReport evaluate_scores(const std::vector<double>& scores,
                              const std::vector<uint8_t>& labels, double threshold = 0.5);

// Median with the lower element taken for even counts.
double lower_median(std::vector<double> values);

}  // namespace gowid
