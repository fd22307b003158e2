#include "gowid/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "gowid/error.hpp"

namespace gowid {

Confusion confusion(const std::vector<double>& scores, const std::vector<uint8_t>& labels,
                    double threshold) {
    if (scores.size() != labels.size())
        fail(ErrorCode::shape, "confusion: " + std::to_string(scores.size()) + " scores vs " +
                                   std::to_string(labels.size()) + " labels");
    if (scores.empty()) fail(ErrorCode::state, "confusion: empty input");
    Confusion c;
    for (size_t i = 0; i < scores.size(); ++i) {
        bool predicted = scores[i] >= threshold;
        bool actual = labels[i] != 0;
        if (predicted && actual) ++c.tp;
        else if (predicted && !actual) ++c.fp;
        else if (!predicted && !actual) ++c.tn;
        else ++c.fn;
    }
    return c;
}

MetricsReport derive_ratios(const Confusion& c) {
    if (c.total() == 0) fail(ErrorCode::state, "derive_ratios: zero total count");
    MetricsReport r;
    r.counts = c;
    const auto num = [](uint64_t v) { return static_cast<double>(v); };
    r.accuracy = num(c.tp + c.tn) / num(c.total());
    if (c.tp + c.fp > 0) r.precision = num(c.tp) / num(c.tp + c.fp);
    else r.precision_degenerate = true;
    if (c.tp + c.fn > 0) r.recall = num(c.tp) / num(c.tp + c.fn);
    else r.recall_degenerate = true;
    if (2 * c.tp + c.fp + c.fn > 0) r.f1 = num(2 * c.tp) / num(2 * c.tp + c.fp + c.fn);
    else r.f1_degenerate = true;
    if (c.fp + c.tn > 0) r.fpr = num(c.fp) / num(c.fp + c.tn);
    else r.fpr_degenerate = true;
    return r;
}

double roc_auc(const std::vector<double>& scores, const std::vector<uint8_t>& labels) {
    if (scores.size() != labels.size())
        fail(ErrorCode::shape, "roc_auc: score/label length mismatch");
    if (scores.empty()) fail(ErrorCode::state, "roc_auc: empty input");

    size_t positives = 0;
    for (uint8_t y : labels) positives += (y != 0);
    size_t negatives = labels.size() - positives;
    if (positives == 0 || negatives == 0)
        fail(ErrorCode::state, "roc_auc: both classes must be present");

    std::vector<size_t> order(scores.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return scores[a] < scores[b]; });

    // walk ascending score tie groups; every positive in a group beats all
    // negatives strictly below it and halves against negatives inside it
    double won = 0.0;
    size_t negatives_below = 0;
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        size_t group_pos = 0, group_neg = 0;
        while (j < order.size() && scores[order[j]] == scores[order[i]]) {
            if (labels[order[j]] != 0) ++group_pos;
            else ++group_neg;
            ++j;
        }
        won += static_cast<double>(group_pos) * static_cast<double>(negatives_below);
        won += 0.5 * static_cast<double>(group_pos) * static_cast<double>(group_neg);
        negatives_below += group_neg;
        i = j;
    }
    return won / (static_cast<double>(positives) * static_cast<double>(negatives));
}

double roc_auc_or_half(const std::vector<double>& scores, const std::vector<uint8_t>& labels,
                       bool* degenerate) {
    size_t positives = 0;
    for (uint8_t y : labels) positives += (y != 0);
    if (positives == 0 || positives == labels.size()) {
        if (degenerate) *degenerate = true;
        return 0.5;
    }
    if (degenerate) *degenerate = false;
    return roc_auc(scores, labels);
}

MetricsReport evaluate_scores(const std::vector<double>& scores,
                              const std::vector<uint8_t>& labels, double threshold) {
    MetricsReport r = derive_ratios(confusion(scores, labels, threshold));
    r.auc = roc_auc_or_half(scores, labels, &r.auc_degenerate);
    return r;
}

double lower_median(std::vector<double> values) {
    if (values.empty()) fail(ErrorCode::state, "lower_median: empty input");
    std::sort(values.begin(), values.end());
    return values[(values.size() - 1) / 2];
}

}  // namespace gowid
