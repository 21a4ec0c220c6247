#pragma once

#include "agcl/nn/types.hpp"
#include "agcl/sample.hpp"

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace agcl::eval {

using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

struct EvalConfig {
  double binarize_fraction = 0.7;  // tau, fraction of the per-map maximum
  double iobb_threshold = 0.25;
  int min_component_cells = 1;

  void validate() const;
};

struct Detection {
  std::string sample_id;
  int disease = 0;
  BBox box;          // image pixels
  double peak = 0;   // maximum heatmap value inside the component
};

/// mask(y, x) = h(y, x) >= tau * max(h) when max(h) > 0, otherwise all false.
template <typename Scalar>
Mask binarize_heatmap(const nn::Heatmap<Scalar>& h, double tau) {
  Mask mask = Mask::Constant(h.height(), h.width(), false);
  if (h.values.size() == 0) return mask;
  const double peak = static_cast<double>(h.values.maxCoeff());
  if (!(peak > 0.0)) return mask;
  const double cut = tau * peak;
  for (int y = 0; y < h.height(); ++y) {
    for (int x = 0; x < h.width(); ++x) mask(y, x) = static_cast<double>(h.values(y, x)) >= cut;
  }
  return mask;
}

/// 8-connected component labels; 0 is background, components are 1..count in
/// raster order of their first cell.
struct Components {
  Eigen::ArrayXXi labels;
  int count = 0;
};
Components label_components(const Mask& mask);

/// One tight box per 8-connected component with at least `min_cells` cells,
/// in heatmap cells scaled by `stride` and clipped to the image.
std::vector<BBox> extract_boxes(const Mask& mask, int stride, int image_width, int image_height,
                                int min_cells = 1);

/// Boxes with their peak activation for one heatmap.
template <typename Scalar>
std::vector<Detection> detect(const nn::Heatmap<Scalar>& h, const std::string& sample_id, int stride,
                              int image_side, const EvalConfig& config) {
  const Mask mask = binarize_heatmap(h, config.binarize_fraction);
  const Components comp = label_components(mask);
  std::vector<Detection> out;
  for (int k = 1; k <= comp.count; ++k) {
    int x0 = h.width(), y0 = h.height(), x1 = 0, y1 = 0, cells = 0;
    double peak = -1e300;
    for (int y = 0; y < h.height(); ++y) {
      for (int x = 0; x < h.width(); ++x) {
        if (comp.labels(y, x) != k) continue;
        ++cells;
        x0 = std::min(x0, x), y0 = std::min(y0, y), x1 = std::max(x1, x + 1), y1 = std::max(y1, y + 1);
        peak = std::max(peak, static_cast<double>(h.values(y, x)));
      }
    }
    if (cells < config.min_component_cells) continue;
    BBox box{x0 * stride, y0 * stride, std::min(x1 * stride, image_side), std::min(y1 * stride, image_side)};
    out.push_back({sample_id, h.class_id, box, peak});
  }
  return out;
}

/// Intersection of gt over the detected box's area.
double iobb(const BBox& gt, const BBox& det);

struct MatchResult {
  int true_positives = 0;
  std::vector<bool> gt_recalled;  // one flag per GT box
};

/// Detections and GT boxes of one (image, disease). A detection is a true
/// positive if it reaches IoBB >= threshold against any GT box; a GT box is
/// recalled if any detection reaches the threshold against it.
MatchResult match_detections(const std::vector<BBox>& gt, const std::vector<BBox>& detections,
                             double threshold);

}  // namespace agcl::eval
