#include "agcl/eval/localization.hpp"

#include <stdexcept>

namespace agcl::eval {

void EvalConfig::validate() const {
  if (!(binarize_fraction > 0.0 && binarize_fraction < 1.0)) {
    throw std::invalid_argument("EvalConfig: binarization fraction must lie in (0,1)");
  }
  if (!(iobb_threshold > 0.0 && iobb_threshold <= 1.0)) {
    throw std::invalid_argument("EvalConfig: IoBB threshold must lie in (0,1]");
  }
  if (min_component_cells < 1) throw std::invalid_argument("EvalConfig: minimum component area must be >= 1");
}

Components label_components(const Mask& mask) {
  Components comp;
  const int h = static_cast<int>(mask.rows()), w = static_cast<int>(mask.cols());
  comp.labels = Eigen::ArrayXXi::Zero(h, w);
  std::vector<std::pair<int, int>> stack;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(y, x) || comp.labels(y, x) != 0) continue;
      const int label = ++comp.count;
      comp.labels(y, x) = label;
      stack.push_back({y, x});
      while (!stack.empty()) {
        const auto [cy, cx] = stack.back();
        stack.pop_back();
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int ny = cy + dy, nx = cx + dx;
            if (ny < 0 || nx < 0 || ny >= h || nx >= w) continue;
            if (mask(ny, nx) && comp.labels(ny, nx) == 0) {
              comp.labels(ny, nx) = label;
              stack.push_back({ny, nx});
            }
          }
        }
      }
    }
  }
  return comp;
}

std::vector<BBox> extract_boxes(const Mask& mask, int stride, int image_width, int image_height, int min_cells) {
  const Components comp = label_components(mask);
  const int h = static_cast<int>(mask.rows()), w = static_cast<int>(mask.cols());
  struct Extent {
    int x0, y0, x1, y1, cells;
  };
  std::vector<Extent> ext(comp.count, {w, h, 0, 0, 0});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const int k = comp.labels(y, x);
      if (k == 0) continue;
      auto& e = ext[k - 1];
      e.x0 = std::min(e.x0, x), e.y0 = std::min(e.y0, y), e.x1 = std::max(e.x1, x + 1), e.y1 = std::max(e.y1, y + 1);
      ++e.cells;
    }
  }
  std::vector<BBox> boxes;
  for (const auto& e : ext) {
    if (e.cells < min_cells) continue;
    boxes.push_back({e.x0 * stride, e.y0 * stride, std::min(e.x1 * stride, image_width),
                     std::min(e.y1 * stride, image_height)});
  }
  return boxes;
}

double iobb(const BBox& gt, const BBox& det) {
  if (det.area() <= 0) return 0.0;
  const BBox i = intersect(gt, det);
  if (i.x1 <= i.x0 || i.y1 <= i.y0) return 0.0;
  return static_cast<double>(i.area()) / static_cast<double>(det.area());
}

MatchResult match_detections(const std::vector<BBox>& gt, const std::vector<BBox>& detections, double threshold) {
  MatchResult r;
  r.gt_recalled.assign(gt.size(), false);
  for (const auto& det : detections) {
    bool hit = false;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (iobb(gt[g], det) >= threshold) {
        hit = true;
        r.gt_recalled[g] = true;
      }
    }
    if (hit) ++r.true_positives;
  }
  return r;
}

}  // namespace agcl::eval
