#pragma once

#include <optional>
#include <span>

namespace agcl::eval {

/// Area under the ROC curve via the Mann-Whitney U statistic (ties count 1/2).
/// Empty when the labels contain a single class.
std::optional<double> auc_roc(std::span<const double> scores, std::span<const int> labels);

}  // namespace agcl::eval
