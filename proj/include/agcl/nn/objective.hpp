#pragma once

#include "agcl/nn/heads.hpp"
#include "agcl/nn/loss.hpp"
#include "agcl/nn/model.hpp"

#include <span>

namespace agcl::nn {

/// Joint objective of the two-path network for one image: sigmoid
/// cross-entropy plus lambda-weighted heatmap regression on seed classes.
///
/// If `grad` is non-null, `scale` times the gradient is accumulated into it.
/// Returns the unscaled loss.
template <typename Scalar, typename Derived>
Scalar multilabel_objective(const MultiLabelModel<Scalar>& model, const Eigen::MatrixBase<Derived>& pixels,
                            const Vector<Scalar>& labels, std::span<const SeedTarget<Scalar>> seeds,
                            double lambda, MultiLabelModel<Scalar>* grad, Scalar scale = Scalar(1)) {
  TrunkCache<Scalar> cache;
  const FeatureMap<Scalar> fm = forward_features(pixels, model.trunk, grad ? &cache : nullptr);
  check_head(fm, model.head, "multilabel_objective");
  const int num_classes = model.num_classes();
  if (labels.size() != num_classes) throw ShapeError("multilabel_objective: label vector length");
  if (!seeds.empty() && static_cast<int>(seeds.size()) != num_classes) {
    throw ShapeError("multilabel_objective: need one seed entry per class");
  }

  const Vector<Scalar> pooled = fm.data.rowwise().mean();
  const Vector<Scalar> logits = model.head.weight * pooled + model.head.bias;
  const Vector<Scalar> probs = logits.unaryExpr([](Scalar z) { return logistic(z); });
  Scalar loss = classification_loss(probs, labels);

  Matrix<Scalar> grad_features;
  const Scalar lam = static_cast<Scalar>(lambda);
  if (grad) {
    const Vector<Scalar> dlogits = (probs - labels) * (scale / static_cast<Scalar>(num_classes));
    grad->head.weight.noalias() += dlogits * pooled.transpose();
    grad->head.bias += dlogits;
    const Vector<Scalar> dpooled = model.head.weight.transpose() * dlogits;
    grad_features = (dpooled / static_cast<Scalar>(fm.cells())).replicate(1, fm.cells());
  }

  for (int c = 0; c < static_cast<int>(seeds.size()); ++c) {
    if (!seeds[c].flagged) continue;
    const Heatmap<Scalar>& target = require_target(seeds[c], c);
    if (target.height() != fm.height || target.width() != fm.width) {
      throw ShapeError("multilabel_objective: attention map shape differs from feature map");
    }
    const RowVector<Scalar> cam = model.head.weight.row(c) * fm.data;
    RowVector<Scalar> dcam(fm.cells());
    Scalar reg = 0;
    for (int y = 0; y < fm.height; ++y) {
      for (int x = 0; x < fm.width; ++x) {
        const int j = y * fm.width + x;
        const Scalar diff = cam(j) - target.values(y, x);
        reg += smooth_l1(diff);
        dcam(j) = smooth_l1_grad(diff);
      }
    }
    loss += lam * reg;
    if (grad && lam != Scalar(0)) {
      dcam *= lam * scale;
      grad->head.weight.row(c).noalias() += dcam * fm.data.transpose();
      grad_features.noalias() += model.head.weight.row(c).transpose() * dcam;
    }
  }

  if (grad) backward_features(grad_features, model.trunk, cache, grad->trunk);
  return loss;
}

/// Softmax cross-entropy of a per-disease binary network for one image.
template <typename Scalar, typename Derived>
Scalar binary_objective(const BinaryModel<Scalar>& model, const Eigen::MatrixBase<Derived>& pixels, bool positive,
                        BinaryModel<Scalar>* grad, Scalar scale = Scalar(1)) {
  TrunkCache<Scalar> cache;
  const FeatureMap<Scalar> fm = forward_features(pixels, model.trunk, grad ? &cache : nullptr);
  check_head(fm, model.head, "binary_objective");
  const Vector<Scalar> pooled = fm.data.rowwise().mean();
  const Vector<Scalar> logits = model.head.weight * pooled + model.head.bias;
  const auto probs = softmax2(logits(0), logits(1));
  const Scalar loss = binary_classification_loss(probs, positive);
  if (grad) {
    Vector<Scalar> dlogits(2);
    dlogits << probs.first - (positive ? 0 : 1), probs.second - (positive ? 1 : 0);
    dlogits *= scale;
    grad->head.weight.noalias() += dlogits * pooled.transpose();
    grad->head.bias += dlogits;
    const Vector<Scalar> dpooled = model.head.weight.transpose() * dlogits;
    const Matrix<Scalar> grad_features = (dpooled / static_cast<Scalar>(fm.cells())).replicate(1, fm.cells());
    backward_features(grad_features, model.trunk, cache, grad->trunk);
  }
  return loss;
}

}  // namespace agcl::nn
