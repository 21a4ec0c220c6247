#pragma once

#include "agcl/nn/model.hpp"
#include "agcl/nn/sgd.hpp"
#include "agcl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace agcl::nn {

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_loss;
};

/// Minibatch SGD over `count` items for `epochs` epochs. `objective(i, grad,
/// scale)` returns the loss of item i and accumulates scale * gradient.
/// `epoch_offset` positions the phase on the learning-rate schedule.
template <typename Model, typename Objective>
std::vector<EpochStats> run_epochs(Model& model, Model& velocity, std::size_t count, Objective&& objective,
                                   const TrainConfig& config, int epochs, int epoch_offset, Rng& rng) {
  std::vector<EpochStats> stats;
  if (count == 0) return stats;
  std::vector<std::size_t> order(count);
  Model grad = zeros_like(model);
  using Scalar = std::remove_pointer_t<decltype(parameter_views(model)[0].data)>;
  for (int e = 0; e < epochs; ++e) {
    const int epoch = epoch_offset + e;
    // fresh permutation per epoch so a resumed phase replays the same order
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t begin = 0; begin < count; begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(count, begin + static_cast<std::size_t>(config.batch_size));
      set_zero(grad);
      const auto scale = static_cast<Scalar>(1.0 / static_cast<double>(end - begin));
      for (std::size_t k = begin; k < end; ++k) {
        const double loss = static_cast<double>(objective(order[k], &grad, scale));
        if (!std::isfinite(loss)) {
          throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", item " +
                                std::to_string(order[k]));
        }
        total += loss;
      }
      sgd_step(model, grad, velocity, config, epoch);
    }
    stats.push_back({epoch, total / static_cast<double>(count), std::nullopt});
  }
  return stats;
}

/// Trains until the validation loss stops improving for `plateau_patience`
/// epochs (or `max_epochs`), then restores the parameters with the lowest
/// validation loss, the starting ones included. At least one epoch runs.
template <typename Model, typename Objective, typename Validation>
std::vector<EpochStats> fit_until_plateau(Model& model, std::size_t count, Objective&& objective,
                                          Validation&& validation_loss, const TrainConfig& config, Rng& rng) {
  std::vector<EpochStats> history;
  Model velocity = zeros_like(model);
  // The starting point is kept unless some epoch beats it; the plateau is
  // judged against the best epoch of this phase.
  Model best = model;
  double best_loss = validation_loss(model);
  if (!std::isfinite(best_loss)) best_loss = std::numeric_limits<double>::infinity();
  double phase_best = std::numeric_limits<double>::infinity();
  int stale = 0;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    auto stats = run_epochs(model, velocity, count, objective, config, 1, epoch, rng);
    if (stats.empty()) break;
    const double val = validation_loss(model);
    stats.back().val_loss = val;
    history.push_back(stats.back());
    if (!std::isfinite(val)) throw DivergenceError("non-finite validation loss at epoch " + std::to_string(epoch));
    if (val < best_loss) {
      best_loss = val;
      best = model;
    }
    if (val < phase_best - 1e-5) {
      phase_best = val;
      stale = 0;
    } else if (++stale >= config.plateau_patience) {
      break;
    }
  }
  model = std::move(best);
  return history;
}

}  // namespace agcl::nn
