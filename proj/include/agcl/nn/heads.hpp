#pragma once

#include "agcl/nn/model.hpp"
#include "agcl/nn/types.hpp"

#include <cmath>
#include <utility>

namespace agcl::nn {

template <typename Scalar>
Scalar logistic(Scalar z) {
  if (z >= 0) return Scalar(1) / (Scalar(1) + std::exp(-z));
  const Scalar e = std::exp(z);
  return e / (Scalar(1) + e);
}

/// Global average pooling over the spatial cells; length-D vector.
template <typename Scalar>
Vector<Scalar> global_average_pool(const FeatureMap<Scalar>& fm) {
  return fm.data.rowwise().mean();
}

template <typename Scalar>
void check_head(const FeatureMap<Scalar>& fm, const Linear<Scalar>& head, const char* where) {
  if (head.weight.cols() != fm.channels() || head.bias.size() != head.weight.rows()) {
    throw ShapeError(std::string(where) + ": head expects " + std::to_string(head.weight.cols()) +
                     " channels, feature map has " + std::to_string(fm.channels()));
  }
}

template <typename Scalar>
Vector<Scalar> head_logits(const FeatureMap<Scalar>& fm, const Linear<Scalar>& head) {
  return head.weight * global_average_pool(fm) + head.bias;
}

/// Per-class sigmoid probabilities.
template <typename Scalar>
Vector<Scalar> classify_multilabel(const FeatureMap<Scalar>& fm, const Linear<Scalar>& head) {
  check_head(fm, head, "classify_multilabel");
  return head_logits(fm, head).unaryExpr([](Scalar z) { return logistic(z); });
}

template <typename Scalar>
std::pair<Scalar, Scalar> softmax2(Scalar neg_logit, Scalar pos_logit) {
  // p_pos = logistic(pos - neg) and p_neg is its complement
  const Scalar p_pos = logistic(pos_logit - neg_logit);
  const Scalar p_neg = logistic(neg_logit - pos_logit);
  return {p_neg, p_pos};
}

/// (p_neg, p_pos) from the 2-way softmax head.
template <typename Scalar>
std::pair<Scalar, Scalar> classify_binary(const FeatureMap<Scalar>& fm, const Linear<Scalar>& head) {
  check_head(fm, head, "classify_binary");
  if (head.weight.rows() != 2) throw ShapeError("classify_binary: head must have two rows");
  const Vector<Scalar> z = head_logits(fm, head);
  return softmax2(z(0), z(1));
}

/// Class activation map: H(x, y) = sum_d w(d) * f(x, y, d). No bias, no normalization.
template <typename Scalar, typename Derived>
Heatmap<Scalar> compute_cam(const FeatureMap<Scalar>& fm, const Eigen::MatrixBase<Derived>& weights,
                            int class_id = 0) {
  if (weights.size() != fm.channels()) {
    throw ShapeError("compute_cam: weight vector has " + std::to_string(weights.size()) +
                     " entries, feature map has " + std::to_string(fm.channels()) + " channels");
  }
  const RowVector<Scalar> flat = weights.transpose().template cast<Scalar>() * fm.data;
  Heatmap<Scalar> h;
  h.class_id = class_id;
  h.values.resize(fm.height, fm.width);
  for (int y = 0; y < fm.height; ++y) {
    for (int x = 0; x < fm.width; ++x) h.values(y, x) = flat(y * fm.width + x);
  }
  return h;
}

/// CAM for class `c` from row c of a multi-label head.
template <typename Scalar>
Heatmap<Scalar> multilabel_cam(const FeatureMap<Scalar>& fm, const Linear<Scalar>& head, int c) {
  return compute_cam(fm, head.weight.row(c).transpose(), c);
}

/// CAM of a binary head for its disease, weighted by w_pos - w_neg.
///
/// Softmax only sees the row difference, so a single row carries an
/// arbitrary offset. The difference map averages (plus b_pos - b_neg) to the
/// log-odds of the positive class, which is what a multi-label CAM averages
/// to (plus b_c), so the two are on one scale.
template <typename Scalar>
Heatmap<Scalar> binary_cam(const FeatureMap<Scalar>& fm, const BinaryModel<Scalar>& model) {
  const Vector<Scalar> w = (model.head.weight.row(1) - model.head.weight.row(0)).transpose();
  return compute_cam(fm, w, model.disease);
}

}  // namespace agcl::nn
