#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace agcl::nn {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a training step sees a non-finite loss or gradient.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Activations of the last convolutional layer.
///
/// Stored channel-major: `data` is D x (height * width) and spatial cell
/// (x, y) lives in column `y * width + x`.
template <typename Scalar>
struct FeatureMap {
  int height = 0;
  int width = 0;
  Matrix<Scalar> data;

  int channels() const { return static_cast<int>(data.rows()); }
  int cells() const { return height * width; }
  Scalar at(int x, int y, int d) const { return data(d, y * width + x); }
};

/// Per-class spatial activation map; `values(y, x)`.
template <typename Scalar>
struct Heatmap {
  int class_id = 0;
  Matrix<Scalar> values;

  int height() const { return static_cast<int>(values.rows()); }
  int width() const { return static_cast<int>(values.cols()); }
  bool all_finite() const { return values.allFinite(); }
};

struct ModelConfig {
  int input_size = 64;
  std::vector<int> widths = {8, 16, 32};  // one conv block (conv3x3, ReLU, 2x2 max-pool) per entry
  int num_classes = 6;
  // pixels enter the trunk as (v - input_mean) * input_scale
  double input_mean = 0.5;
  double input_scale = 4.0;
  double head_init_std = 0.1;

  int feature_channels() const { return widths.empty() ? 0 : widths.back(); }
  int stride() const { return 1 << static_cast<int>(widths.size()); }
  int heatmap_side() const { return input_size / stride(); }

  void validate() const {
    if (input_size <= 0 || widths.empty() || num_classes < 2) {
      throw std::invalid_argument("ModelConfig: dimensions must be positive and C >= 2");
    }
    for (int w : widths) {
      if (w <= 0) throw std::invalid_argument("ModelConfig: widths must be positive");
    }
    if (!(input_scale > 0) || !(head_init_std > 0)) {
      throw std::invalid_argument("ModelConfig: input scale and head init std must be positive");
    }
    if (input_size % stride() != 0) {
      throw std::invalid_argument("ModelConfig: input size must be divisible by the trunk stride");
    }
  }
};

struct TrainConfig {
  double learning_rate = 0.001;           // training from random initialization
  double finetune_learning_rate = 0.001;  // phases starting from trained weights (binary heads, refinement)
  double momentum = 0.9;
  int lr_decay_every = 10;    // lr is divided by 10 every this many epochs
  double lambda = 0.005;      // regression-loss weight
  double seed_threshold = 0.8;
  int batch_size = 16;
  int max_epochs = 30;        // refinement phases; stop earlier on a validation plateau
  int baseline_max_epochs = 40;
  int plateau_patience = 3;
  std::vector<int> stage_epochs = {5, 5, 10};

  void validate() const {
    if (lambda < 0) throw std::invalid_argument("TrainConfig: lambda must be >= 0");
    if (!(seed_threshold > 0 && seed_threshold < 1)) {
      throw std::invalid_argument("TrainConfig: seed threshold must lie in (0,1)");
    }
    if (learning_rate <= 0 || finetune_learning_rate <= 0 || batch_size <= 0 || lr_decay_every <= 0) {
      throw std::invalid_argument("TrainConfig: learning rate, batch size and decay period must be positive");
    }
    if (stage_epochs.size() != 3) throw std::invalid_argument("TrainConfig: need three stage epoch counts");
  }
};

/// Copy of `config` whose base rate is the fine-tuning rate.
inline TrainConfig finetune_phase(const TrainConfig& config) {
  TrainConfig c = config;
  c.learning_rate = config.finetune_learning_rate;
  return c;
}

}  // namespace agcl::nn
