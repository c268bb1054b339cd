#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "tagqa/optimizer.hpp"

using namespace tagqa;

namespace {

// Scalar transcription of the published rectified Adam update with decoupled
// weight decay, kept separate from the library implementation.
struct ScalarRAdam {
  double lr, wd, b1, b2, eps;
  double m = 0, v = 0;
  int t = 0;

  double step(double theta, double g) {
    ++t;
    theta = theta - lr * wd * theta;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double m_hat = m / (1 - std::pow(b1, t));
    const double rho_inf = 2 / (1 - b2) - 1;
    const double rho = rho_inf - 2 * t * std::pow(b2, t) / (1 - std::pow(b2, t));
    if (rho > 4) {
      const double l = 1 / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
      const double r = std::sqrt(((rho - 4) * (rho - 2) * rho_inf) / ((rho_inf - 4) * (rho_inf - 2) * rho));
      return theta - lr * r * m_hat * l;
    }
    return theta - lr * m_hat;
  }
};

}  // namespace

TEST(RAdam, RhoAtFirstStepIsOne) {
  EXPECT_NEAR(radam_rho(1, 0.999), 1.0, 1e-9);
  EXPECT_FALSE(radam_rectified(1, 0.999));
}

TEST(RAdam, RectificationStartsAtStepFive) {
  for (int t = 1; t <= 4; ++t) EXPECT_FALSE(radam_rectified(t, 0.999)) << t;
  for (int t = 5; t <= 50; ++t) EXPECT_TRUE(radam_rectified(t, 0.999)) << t;
}

TEST(RAdam, RhoIncreasesTowardItsLimit) {
  const double rho_inf = 2 / (1 - 0.999) - 1;
  double prev = 0;
  for (int t = 1; t < 20000; t += 37) {
    double r = radam_rho(t, 0.999);
    EXPECT_GT(r, prev);
    EXPECT_LT(r, rho_inf);
    prev = r;
  }
}

TEST(RAdam, ZeroGradientZeroDecayLeavesParameters) {
  std::vector<double> p = {1.5, -2.0, 0.25}, g(3, 0.0), m(3, 0.0), v(3, 0.0);
  RAdamOptions opt;
  opt.weight_decay = 0.0;
  for (int t = 1; t <= 10; ++t) radam_update(p, g, m, v, t, opt);
  EXPECT_EQ(p, (std::vector<double>{1.5, -2.0, 0.25}));
}

TEST(RAdam, FirstStepIsMomentumOnly) {
  std::vector<double> p = {1.0}, g = {0.5}, m = {0.0}, v = {0.0};
  RAdamOptions opt;
  radam_update(p, g, m, v, 1, opt);
  // decay then p -= lr * m_hat where m_hat equals the gradient
  EXPECT_NEAR(p[0], 1.0 * (1 - 1e-3 * 0.01) - 1e-3 * 0.5, 1e-15);
}

TEST(RAdam, MatchesScalarReferenceOverManySteps) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> noise(0.0, 1.0);
  RAdamOptions opt;
  opt.lr = 3e-3;
  opt.weight_decay = 0.05;
  std::vector<double> p(5), m(5, 0.0), v(5, 0.0);
  std::vector<ScalarRAdam> ref(5, ScalarRAdam{opt.lr, opt.weight_decay, opt.beta1, opt.beta2, opt.eps});
  std::vector<double> ref_p(5);
  for (int i = 0; i < 5; ++i) p[i] = ref_p[i] = noise(rng);
  for (int t = 1; t <= 300; ++t) {
    std::vector<double> g(5);
    for (int i = 0; i < 5; ++i) g[i] = noise(rng) * (i + 1) + 0.1 * p[i];
    radam_update(p, g, m, v, t, opt);
    for (int i = 0; i < 5; ++i) ref_p[i] = ref[i].step(ref_p[i], g[i]);
    for (int i = 0; i < 5; ++i) ASSERT_NEAR(p[i], ref_p[i], 1e-12 * std::max(1.0, std::abs(ref_p[i]))) << t;
  }
}

TEST(RAdam, ConstantGradientStepApproachesLearningRate) {
  std::vector<double> p = {0.0}, g = {2.5}, m = {0.0}, v = {0.0};
  RAdamOptions opt;
  opt.weight_decay = 0.0;
  double last = 0.0;
  for (int t = 1; t <= 5000; ++t) {
    const double before = p[0];
    radam_update(p, g, m, v, t, opt);
    last = p[0] - before;
  }
  // m_hat / sqrt(v_hat) -> sign(g) and the rectifier -> 1
  EXPECT_NEAR(last, -opt.lr, 2e-5);
}

TEST(RAdam, StepOverParamsAdvancesStateAndChecksShapes) {
  GatConfig c;
  c.layers = 1;
  c.dim = 4;
  c.msg_dim = 4;
  c.type_dim = 4;
  GatModel model = init_model(c, 5, 1);
  GatParams grads = model.params.zeros_like();
  for (auto& t : grads.tensors()) std::fill(t.data, t.data + t.size(), 1.0);
  RAdamState state;
  GatParams before = model.params;
  radam_step(model.params, grads, state, RAdamOptions{});
  EXPECT_EQ(state.step, 1);
  EXPECT_EQ(state.m.size(), model.params.tensors().size());
  EXPECT_FALSE(model.params == before);
  GatParams bad = grads;
  bad.row_head_w = Vec::Zero(7);
  EXPECT_THROW(radam_step(model.params, bad, state, RAdamOptions{}), Error);
  std::vector<double> p(2), g(3), m(2), v(2);
  EXPECT_THROW(radam_update(p, g, m, v, 1, RAdamOptions{}), Error);
}
