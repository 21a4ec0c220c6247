#pragma once

#include "agcl/nn/heads.hpp"
#include "agcl/nn/types.hpp"

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>

namespace agcl::nn {

inline constexpr double kProbabilityClamp = 1e-7;

template <typename Scalar>
Scalar smooth_l1(Scalar z) {
  const Scalar a = std::abs(z);
  return a < Scalar(1) ? Scalar(0.5) * z * z : a - Scalar(0.5);
}

template <typename Scalar>
Scalar smooth_l1_grad(Scalar z) {
  return std::clamp(z, Scalar(-1), Scalar(1));
}

/// Sum over cells of smooth_l1(pred - target).
///
/// The per-channel outer sum of the textbook form repeats a channel-independent
/// summand D times; that constant is folded into lambda.
template <typename Scalar>
Scalar regression_loss(const Heatmap<Scalar>& pred, const Heatmap<Scalar>& target) {
  if (pred.class_id != target.class_id) {
    throw ShapeError("regression_loss: class " + std::to_string(pred.class_id) + " vs " +
                     std::to_string(target.class_id));
  }
  if (pred.values.rows() != target.values.rows() || pred.values.cols() != target.values.cols()) {
    throw ShapeError("regression_loss: heatmap shapes differ");
  }
  return (pred.values - target.values).unaryExpr([](Scalar z) { return smooth_l1(z); }).sum();
}

template <typename Scalar>
Scalar clamp_probability(Scalar p) {
  return std::clamp(p, Scalar(kProbabilityClamp), Scalar(1 - kProbabilityClamp));
}

/// Mean over classes of the sigmoid cross-entropy. `labels` holds 0/1 targets.
template <typename Scalar>
Scalar classification_loss(const Vector<Scalar>& probs, const Vector<Scalar>& labels) {
  if (probs.size() != labels.size() || probs.size() == 0) {
    throw ShapeError("classification_loss: probability and label vectors differ in length");
  }
  Scalar total = 0;
  for (Eigen::Index c = 0; c < probs.size(); ++c) {
    const Scalar p = clamp_probability(probs(c));
    total -= labels(c) * std::log(p) + (Scalar(1) - labels(c)) * std::log(Scalar(1) - p);
  }
  return total / static_cast<Scalar>(probs.size());
}

/// Softmax cross-entropy for the 2-way head: -log p_true.
template <typename Scalar>
Scalar binary_classification_loss(std::pair<Scalar, Scalar> probs, bool positive) {
  return -std::log(clamp_probability(positive ? probs.second : probs.first));
}

/// Regression target for one (image, class) pair. `flagged` is the seed
/// indicator; a flagged entry must carry its stored attention map.
template <typename Scalar>
struct SeedTarget {
  bool flagged = false;
  const Heatmap<Scalar>* map = nullptr;
};

class SeedStoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
const Heatmap<Scalar>& require_target(const SeedTarget<Scalar>& t, int c) {
  if (!t.map) {
    throw SeedStoreError("seed flagged for class " + std::to_string(c) + " but attention map is missing");
  }
  return *t.map;
}

/// Classification loss plus lambda times the regression loss over every class
/// for which the image is a seed. `seeds` is empty or has one entry per class.
template <typename Scalar>
Scalar total_loss(const FeatureMap<Scalar>& fm, const Linear<Scalar>& head, const Vector<Scalar>& labels,
                  std::span<const SeedTarget<Scalar>> seeds, double lambda) {
  const Vector<Scalar> probs = classify_multilabel(fm, head);
  Scalar loss = classification_loss(probs, labels);
  if (!seeds.empty() && static_cast<Eigen::Index>(seeds.size()) != head.weight.rows()) {
    throw ShapeError("total_loss: need one seed entry per class");
  }
  Scalar reg = 0;
  for (std::size_t c = 0; c < seeds.size(); ++c) {
    if (!seeds[c].flagged) continue;
    const auto& target = require_target(seeds[c], static_cast<int>(c));
    reg += regression_loss(multilabel_cam(fm, head, static_cast<int>(c)), target);
  }
  return loss + static_cast<Scalar>(lambda) * reg;
}

}  // namespace agcl::nn
