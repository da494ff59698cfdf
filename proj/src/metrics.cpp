#include "h2h/metrics.hpp"

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "h2h/errors.hpp"

namespace h2h::run {
namespace {

void require_paired(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) {
        throw DimensionError("metric inputs differ in length: " + std::to_string(predicted.size()) + " vs " +
                             std::to_string(truth.size()));
    }
    if (truth.empty()) {
        throw ContractViolation("metric over an empty split");
    }
}

}  // namespace

double roc_auc(std::span<const double> positives, std::span<const double> negatives) {
    if (positives.empty() || negatives.empty()) {
        throw ContractViolation("roc_auc needs at least one positive and one negative score");
    }
    std::vector<std::pair<double, bool>> all;
    all.reserve(positives.size() + negatives.size());
    for (double s : positives) all.emplace_back(s, true);
    for (double s : negatives) all.emplace_back(s, false);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) { return a.first < b.first; });

    double pos_rank_sum = 0.0;
    for (std::size_t i = 0; i < all.size();) {
        std::size_t j = i;
        while (j < all.size() && all[j].first == all[i].first) ++j;
        const double midrank = 0.5 * static_cast<double>(i + 1 + j);  // mean of ranks i+1 .. j
        for (std::size_t k = i; k < j; ++k) {
            if (all[k].second) pos_rank_sum += midrank;
        }
        i = j;
    }
    const auto np = static_cast<double>(positives.size());
    const auto nn = static_cast<double>(negatives.size());
    return (pos_rank_sum - np * (np + 1.0) / 2.0) / (np * nn);
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    require_paired(predicted, truth);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

double f1_score(std::span<const int> predicted, std::span<const int> truth, int positive) {
    require_paired(predicted, truth);
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        const bool p = predicted[i] == positive;
        const bool t = truth[i] == positive;
        tp += p && t;
        fp += p && !t;
        fn += !p && t;
    }
    if (tp == 0) return 0.0;
    return 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
}

double macro_f1(std::span<const int> predicted, std::span<const int> truth, int num_classes) {
    if (num_classes < 1) {
        throw ContractViolation("macro_f1 needs at least one class");
    }
    double total = 0.0;
    for (int c = 0; c < num_classes; ++c) total += f1_score(predicted, truth, c);
    return total / num_classes;
}

}  // namespace h2h::run
