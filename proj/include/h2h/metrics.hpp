#pragma once

#include <span>

namespace h2h::run {

/// Mann-Whitney estimate of ROC AUC; tied scores get midranks.
/// ContractViolation when either side is empty.
double roc_auc(std::span<const double> positives, std::span<const double> negatives);

double accuracy(std::span<const int> predicted, std::span<const int> truth);
/// F1 of one class treated as positive; 0 when it is never predicted nor present.
double f1_score(std::span<const int> predicted, std::span<const int> truth, int positive = 1);
/// Unweighted mean of per-class F1 over classes 0..num_classes-1.
double macro_f1(std::span<const int> predicted, std::span<const int> truth, int num_classes);

}  // namespace h2h::run
