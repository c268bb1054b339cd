#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "tagqa/gat.hpp"

namespace tagqa {

/// Rectified Adam with decoupled weight decay.
struct RAdamOptions {
  double lr = 1e-3;
  double weight_decay = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct RAdamState {
  std::vector<std::vector<double>> m;  // first moments, one per tensor
  std::vector<std::vector<double>> v;  // second moments
  std::int64_t step = 0;
};

/// rho_inf - 2 t beta2^t / (1 - beta2^t).
double radam_rho(std::int64_t t, double beta2);

/// Whether step t uses the variance-rectified adaptive update.
bool radam_rectified(std::int64_t t, double beta2);

/// Applies one update to raw buffers. `t` is the 1-based step count after
/// this update. Moments must be sized like the parameters.
void radam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                  std::span<double> v, std::int64_t t, const RAdamOptions& opt);

/// Updates every tensor of `params`, advancing `state.step`.
void radam_step(GatParams& params, const GatParams& grads, RAdamState& state, const RAdamOptions& opt);

}  // namespace tagqa
