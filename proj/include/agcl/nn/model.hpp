#pragma once

#include "agcl/nn/layers.hpp"
#include "agcl/nn/types.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace agcl::nn {

template <typename Scalar>
struct ConvLayer {
  Matrix<Scalar> weight;  // out x (in * 9)
  Vector<Scalar> bias;
};

/// Fully connected layer over the pooled feature vector; row c is w_c.
template <typename Scalar>
struct Linear {
  Matrix<Scalar> weight;  // outputs x D
  Vector<Scalar> bias;
};

template <typename Scalar>
struct Trunk {
  int input_size = 0;
  double input_mean = 0.0;
  double input_scale = 1.0;
  std::vector<ConvLayer<Scalar>> layers;

  int feature_side() const { return input_size >> static_cast<int>(layers.size()); }
  int channels() const { return layers.empty() ? 0 : static_cast<int>(layers.back().weight.rows()); }
  bool same_shape(const Trunk& other) const {
    if (input_size != other.input_size || layers.size() != other.layers.size()) return false;
    if (input_mean != other.input_mean || input_scale != other.input_scale) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].weight.rows() != other.layers[i].weight.rows() ||
          layers[i].weight.cols() != other.layers[i].weight.cols()) {
        return false;
      }
    }
    return true;
  }
};

/// Shared trunk plus the C-way sigmoid head (the two-path network reuses the
/// head rows to produce its heatmaps).
template <typename Scalar>
struct MultiLabelModel {
  Trunk<Scalar> trunk;
  Linear<Scalar> head;

  int num_classes() const { return static_cast<int>(head.weight.rows()); }
};

/// Per-disease network: trunk copied from the multi-label model plus a 2-way
/// softmax head (row 0 negative, row 1 positive).
template <typename Scalar>
struct BinaryModel {
  int disease = 0;
  Trunk<Scalar> trunk;
  Linear<Scalar> head;
};

/// Flat view over one parameter tensor; used by the optimizer and checkpoints.
template <typename Scalar>
struct TensorView {
  std::string name;
  Scalar* data;
  Eigen::Index rows;
  Eigen::Index cols;

  Eigen::Index size() const { return rows * cols; }
  Eigen::Map<Vector<Scalar>> flat() const { return {data, size()}; }
};

template <typename Scalar>
void append_views(Trunk<Scalar>& trunk, std::vector<TensorView<Scalar>>& out) {
  for (std::size_t i = 0; i < trunk.layers.size(); ++i) {
    auto& layer = trunk.layers[i];
    const std::string prefix = "trunk.conv" + std::to_string(i);
    out.push_back({prefix + ".weight", layer.weight.data(), layer.weight.rows(), layer.weight.cols()});
    out.push_back({prefix + ".bias", layer.bias.data(), layer.bias.rows(), 1});
  }
}

template <typename Scalar>
void append_views(Linear<Scalar>& linear, const std::string& prefix, std::vector<TensorView<Scalar>>& out) {
  out.push_back({prefix + ".weight", linear.weight.data(), linear.weight.rows(), linear.weight.cols()});
  out.push_back({prefix + ".bias", linear.bias.data(), linear.bias.rows(), 1});
}

template <typename Scalar>
std::vector<TensorView<Scalar>> parameter_views(MultiLabelModel<Scalar>& model) {
  std::vector<TensorView<Scalar>> views;
  append_views(model.trunk, views);
  append_views(model.head, "head.multilabel", views);
  return views;
}

template <typename Scalar>
std::vector<TensorView<Scalar>> parameter_views(BinaryModel<Scalar>& model) {
  std::vector<TensorView<Scalar>> views;
  append_views(model.trunk, views);
  append_views(model.head, "head.binary", views);
  return views;
}

template <typename Model>
Eigen::Index parameter_count(Model& model) {
  Eigen::Index n = 0;
  for (const auto& v : parameter_views(model)) n += v.size();
  return n;
}

template <typename Model>
void set_zero(Model& model) {
  for (auto& v : parameter_views(model)) v.flat().setZero();
}

/// Same shapes as `model`, all values zero; gradient and velocity buffers.
template <typename Model>
Model zeros_like(const Model& model) {
  Model copy = model;
  set_zero(copy);
  return copy;
}

template <typename Scalar, typename Rng>
Matrix<Scalar> gaussian_matrix(Eigen::Index rows, Eigen::Index cols, double stddev, Rng& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  Matrix<Scalar> m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = static_cast<Scalar>(dist(rng));
  }
  return m;
}

/// He-initialized trunk with zero biases.
template <typename Scalar, typename Rng>
Trunk<Scalar> init_trunk(const ModelConfig& config, Rng& rng) {
  config.validate();
  Trunk<Scalar> trunk;
  trunk.input_size = config.input_size;
  trunk.input_mean = config.input_mean;
  trunk.input_scale = config.input_scale;
  int in = 1;
  for (int out : config.widths) {
    ConvLayer<Scalar> layer;
    layer.weight = gaussian_matrix<Scalar>(out, in * 9, std::sqrt(2.0 / (in * 9)), rng);
    layer.bias = Vector<Scalar>::Zero(out);
    trunk.layers.push_back(std::move(layer));
    in = out;
  }
  return trunk;
}

template <typename Scalar, typename Rng>
Linear<Scalar> init_linear(int outputs, int inputs, double stddev, Rng& rng) {
  return {gaussian_matrix<Scalar>(outputs, inputs, stddev, rng), Vector<Scalar>::Zero(outputs)};
}

template <typename Scalar, typename Rng>
MultiLabelModel<Scalar> init_multilabel(const ModelConfig& config, Rng& rng) {
  MultiLabelModel<Scalar> model;
  model.trunk = init_trunk<Scalar>(config, rng);
  model.head = init_linear<Scalar>(config.num_classes, config.feature_channels(), config.head_init_std, rng);
  return model;
}

/// Copies the trunk and attaches a freshly initialized 2-way head.
template <typename Scalar, typename Rng>
BinaryModel<Scalar> init_binary_from(const Trunk<Scalar>& trunk, int disease, Rng& rng, double head_init_std = 0.1) {
  BinaryModel<Scalar> model;
  model.disease = disease;
  model.trunk = trunk;
  model.head = init_linear<Scalar>(2, trunk.channels(), head_init_std, rng);
  return model;
}

template <typename Scalar>
struct TrunkCache {
  struct Layer {
    int height = 0, width = 0;
    Matrix<Scalar> cols;         // im2col of the layer input
    Matrix<Scalar> activation;   // post-ReLU, pre-pool
    Eigen::MatrixXi argmax;
  };
  std::vector<Layer> layers;
};

/// Runs the convolutional trunk. `pixels` is input_size x input_size.
template <typename Scalar, typename Derived>
FeatureMap<Scalar> forward_features(const Eigen::MatrixBase<Derived>& pixels, const Trunk<Scalar>& trunk,
                                    TrunkCache<Scalar>* cache = nullptr) {
  if (pixels.rows() != trunk.input_size || pixels.cols() != trunk.input_size) {
    throw ShapeError("forward_features: image is " + std::to_string(pixels.rows()) + "x" +
                     std::to_string(pixels.cols()) + ", trunk expects " +
                     std::to_string(trunk.input_size));
  }
  int height = trunk.input_size, width = trunk.input_size;
  Matrix<Scalar> x(1, height * width);
  const double mean = trunk.input_mean, scale = trunk.input_scale;
  for (int y = 0; y < height; ++y) {
    for (int xx = 0; xx < width; ++xx) {
      x(0, y * width + xx) = static_cast<Scalar>((static_cast<double>(pixels(y, xx)) - mean) * scale);
    }
  }
  if (cache) cache->layers.resize(trunk.layers.size());

  for (std::size_t i = 0; i < trunk.layers.size(); ++i) {
    const auto& layer = trunk.layers[i];
    Matrix<Scalar> cols = im2col3x3(x, height, width);
    Matrix<Scalar> z = layer.weight * cols;
    z.colwise() += layer.bias;
    z = z.cwiseMax(Scalar(0));
    Eigen::MatrixXi argmax;
    x = maxpool2x2(z, height, width, argmax);
    if (cache) {
      auto& c = cache->layers[i];
      c.height = height;
      c.width = width;
      c.cols = std::move(cols);
      c.activation = std::move(z);
      c.argmax = std::move(argmax);
    }
    height /= 2;
    width /= 2;
  }
  return {height, width, std::move(x)};
}

/// Accumulates trunk parameter gradients into `grad` given dLoss/dFeatures.
template <typename Scalar>
void backward_features(const Matrix<Scalar>& grad_features, const Trunk<Scalar>& trunk,
                       const TrunkCache<Scalar>& cache, Trunk<Scalar>& grad) {
  Matrix<Scalar> g = grad_features;
  for (std::size_t k = trunk.layers.size(); k-- > 0;) {
    const auto& c = cache.layers[k];
    Matrix<Scalar> dz = maxpool2x2_backward(g, c.argmax, c.height * c.width);
    dz = (c.activation.array() > Scalar(0)).select(dz, Scalar(0));
    grad.layers[k].weight.noalias() += dz * c.cols.transpose();
    grad.layers[k].bias += dz.rowwise().sum();
    if (k > 0) {
      Matrix<Scalar> dcols = trunk.layers[k].weight.transpose() * dz;
      g = col2im3x3(dcols, static_cast<int>(trunk.layers[k].weight.cols() / 9), c.height, c.width);
    }
  }
}

}  // namespace agcl::nn
