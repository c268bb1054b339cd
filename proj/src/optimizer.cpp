#include "tagqa/optimizer.hpp"

#include <cmath>

namespace tagqa {

double radam_rho(std::int64_t t, double beta2) {
  const double rho_inf = 2.0 / (1.0 - beta2) - 1.0;
  const double b2t = std::pow(beta2, static_cast<double>(t));
  return rho_inf - 2.0 * static_cast<double>(t) * b2t / (1.0 - b2t);
}

bool radam_rectified(std::int64_t t, double beta2) { return radam_rho(t, beta2) > 4.0; }

void radam_update(std::span<double> params, std::span<const double> grads, std::span<double> m,
                  std::span<double> v, std::int64_t t, const RAdamOptions& opt) {
  if (t < 1) throw Error("RAdam step count must be >= 1");
  if (grads.size() != params.size() || m.size() != params.size() || v.size() != params.size())
    throw Error("RAdam buffer sizes do not match the parameters");
  const double td = static_cast<double>(t);
  const double bc1 = 1.0 - std::pow(opt.beta1, td);
  const double bc2 = 1.0 - std::pow(opt.beta2, td);
  const double rho_inf = 2.0 / (1.0 - opt.beta2) - 1.0;
  const double rho = radam_rho(t, opt.beta2);
  const bool rectified = rho > 4.0;
  double rect = 0.0;
  if (rectified)
    rect = std::sqrt((rho - 4.0) * (rho - 2.0) * rho_inf / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho));
  const double decay = 1.0 - opt.lr * opt.weight_decay;

  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    params[i] *= decay;
    m[i] = opt.beta1 * m[i] + (1.0 - opt.beta1) * g;
    v[i] = opt.beta2 * v[i] + (1.0 - opt.beta2) * g * g;
    const double m_hat = m[i] / bc1;
    if (rectified) {
      const double v_hat = std::sqrt(v[i] / bc2);
      params[i] -= opt.lr * rect * m_hat / (v_hat + opt.eps);
    } else {
      params[i] -= opt.lr * m_hat;
    }
  }
}

void radam_step(GatParams& params, const GatParams& grads, RAdamState& state, const RAdamOptions& opt) {
  auto pt = params.tensors();
  auto gt = grads.tensors();
  if (pt.size() != gt.size()) throw Error("gradient set does not match the parameters");
  if (state.m.empty()) {
    for (const auto& t : pt) {
      state.m.emplace_back(static_cast<std::size_t>(t.size()), 0.0);
      state.v.emplace_back(static_cast<std::size_t>(t.size()), 0.0);
    }
  }
  ++state.step;
  for (std::size_t i = 0; i < pt.size(); ++i) {
    if (pt[i].size() != gt[i].size()) throw Error("gradient shape mismatch for " + pt[i].name);
    const auto n = static_cast<std::size_t>(pt[i].size());
    radam_update({pt[i].data, n}, {gt[i].data, n}, state.m[i], state.v[i], state.step, opt);
  }
}

}  // namespace tagqa
