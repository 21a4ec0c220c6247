#pragma once

#include "agcl/nn/types.hpp"

#include <algorithm>

namespace agcl::nn {

// 3x3 convolution with zero padding 1 and stride 1, lowered to a GEMM.
// Activations are channels x (height * width).

template <typename Scalar>
Matrix<Scalar> im2col3x3(const Matrix<Scalar>& input, int height, int width) {
  const int channels = static_cast<int>(input.rows());
  Matrix<Scalar> cols = Matrix<Scalar>::Zero(channels * 9, height * width);
  for (int c = 0; c < channels; ++c) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int row = c * 9 + (dy + 1) * 3 + (dx + 1);
        const int y_begin = std::max(0, -dy), y_end = std::min(height, height - dy);
        const int x_begin = std::max(0, -dx), x_end = std::min(width, width - dx);
        for (int y = y_begin; y < y_end; ++y) {
          const int src = (y + dy) * width + dx;
          for (int x = x_begin; x < x_end; ++x) {
            cols(row, y * width + x) = input(c, src + x);
          }
        }
      }
    }
  }
  return cols;
}

template <typename Scalar>
Matrix<Scalar> col2im3x3(const Matrix<Scalar>& cols, int channels, int height, int width) {
  Matrix<Scalar> out = Matrix<Scalar>::Zero(channels, height * width);
  for (int c = 0; c < channels; ++c) {
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        const int row = c * 9 + (dy + 1) * 3 + (dx + 1);
        const int y_begin = std::max(0, -dy), y_end = std::min(height, height - dy);
        const int x_begin = std::max(0, -dx), x_end = std::min(width, width - dx);
        for (int y = y_begin; y < y_end; ++y) {
          const int dst = (y + dy) * width + dx;
          for (int x = x_begin; x < x_end; ++x) {
            out(c, dst + x) += cols(row, y * width + x);
          }
        }
      }
    }
  }
  return out;
}

/// 2x2 max pooling with stride 2. `argmax` receives the source column of each
/// pooled cell so the backward pass can route gradients.
template <typename Scalar>
Matrix<Scalar> maxpool2x2(const Matrix<Scalar>& input, int height, int width,
                          Eigen::MatrixXi& argmax) {
  const int channels = static_cast<int>(input.rows());
  const int out_h = height / 2, out_w = width / 2;
  Matrix<Scalar> out(channels, out_h * out_w);
  argmax.resize(channels, out_h * out_w);
  for (int c = 0; c < channels; ++c) {
    for (int y = 0; y < out_h; ++y) {
      for (int x = 0; x < out_w; ++x) {
        int best = (2 * y) * width + 2 * x;
        for (int src : {best + 1, best + width, best + width + 1}) {
          if (input(c, src) > input(c, best)) best = src;
        }
        out(c, y * out_w + x) = input(c, best);
        argmax(c, y * out_w + x) = best;
      }
    }
  }
  return out;
}

template <typename Scalar>
Matrix<Scalar> maxpool2x2_backward(const Matrix<Scalar>& grad_out, const Eigen::MatrixXi& argmax,
                                   int in_cells) {
  Matrix<Scalar> grad_in = Matrix<Scalar>::Zero(grad_out.rows(), in_cells);
  for (Eigen::Index c = 0; c < grad_out.rows(); ++c) {
    for (Eigen::Index j = 0; j < grad_out.cols(); ++j) {
      grad_in(c, argmax(c, j)) += grad_out(c, j);
    }
  }
  return grad_in;
}

}  // namespace agcl::nn
