#pragma once

#include "agcl/nn/model.hpp"
#include "agcl/nn/types.hpp"

#include <cmath>
#include <sstream>

namespace agcl::nn {

/// Step schedule: base rate divided by 10 every `lr_decay_every` epochs.
inline double learning_rate(const TrainConfig& config, int epoch) {
  return config.learning_rate * std::pow(10.0, -static_cast<double>(epoch / config.lr_decay_every));
}

/// SGD with momentum: v <- m v - lr g; p <- p + v.
template <typename Model>
void sgd_step(Model& params, Model& grads, Model& velocity, const TrainConfig& config, int epoch) {
  auto p = parameter_views(params);
  auto g = parameter_views(grads);
  auto v = parameter_views(velocity);
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!g[i].flat().allFinite()) {
      std::ostringstream msg;
      msg << "non-finite gradient in " << g[i].name << " at epoch " << epoch
          << " (max |g| = " << g[i].flat().cwiseAbs().maxCoeff() << ")";
      throw DivergenceError(msg.str());
    }
  }
  using Scalar = std::remove_pointer_t<decltype(p[0].data)>;
  const auto lr = static_cast<Scalar>(learning_rate(config, epoch));
  const auto momentum = static_cast<Scalar>(config.momentum);
  for (std::size_t i = 0; i < p.size(); ++i) {
    v[i].flat() = momentum * v[i].flat() - lr * g[i].flat();
    p[i].flat() += v[i].flat();
  }
}

}  // namespace agcl::nn
