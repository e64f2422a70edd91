#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sigroute/maa2c.hpp"
#include "sigroute/neuralcore.hpp"

namespace sigroute::testing {

enum class LossKind { Linear, Policy, Value, Entropy };

struct GradError {
  double front = 0.0, lstm = 0.0, head = 0.0;
  double max() const { return std::max({front, lstm, head}); }
};

// Relative error with an absolute floor: gradients below ~1e-6 are dominated
// by the O(1e-11) rounding noise of a central difference at eps = 1e-5.
inline double rel_error(double a, double b, double floor = 1e-6) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

/// Builds a small random network and compares analytic gradients of a scalar
/// loss over a `steps`-long unroll against central differences.
class GradChecker {
public:
  GradChecker(LossKind kind, int steps, std::uint64_t seed) : kind_(kind), steps_(steps) {
    Rng rng = make_stream(seed, 0x6C);
    spec_.inputs = {2, 3, 2, 1};
    spec_.widths = {3, 2, 3, 2};
    spec_.lstm_units = 3;
    spec_.outputs = kind == LossKind::Value ? 1 : 3;
    net_ = make_net(spec_, seed);
    // Jitter everything, biases included, so no ReLU sits exactly at its kink.
    for (Param* p : net_.params()) {
      for (Eigen::Index k = 0; k < p->value.size(); ++k) p->value.data()[k] += rng.uniform(-0.3, 0.3);
    }
    for (int t = 0; t < steps; ++t) {
      std::vector<double> x(net_.input_size());
      for (double& v : x) v = rng.uniform(0.0, 2.0);
      obs_.push_back(x);
      Vec c(spec_.outputs);
      for (Eigen::Index k = 0; k < c.size(); ++k) c(k) = rng.uniform(-1.0, 1.0);
      coef_.push_back(c);
      actions_.push_back(static_cast<int>(rng.uniform() * spec_.outputs));
      adv_.push_back(rng.uniform(-2.0, 2.0));
      targets_.push_back(rng.uniform(-3.0, 3.0));
    }
    state_ = LstmState::zeros(spec_.lstm_units);
    Rng srng = make_stream(seed, 0x5A);
    for (Eigen::Index k = 0; k < state_.h.size(); ++k) {
      state_.h(k) = srng.uniform(-0.5, 0.5);
      state_.c(k) = srng.uniform(-0.5, 0.5);
    }
  }

  double loss() const {
    std::vector<StepCache> caches = unroll();
    return loss_of(caches);
  }

  GradError check(double eps = 1e-5) {
    net_.zero_grad();
    const std::vector<StepCache> caches = unroll();
    std::vector<Vec> dout;
    const double n = static_cast<double>(steps_);
    for (int t = 0; t < steps_; ++t) {
      const Vec& out = caches[t].out;
      switch (kind_) {
        case LossKind::Linear: dout.push_back(coef_[t]); break;
        case LossKind::Value: dout.push_back(Vec::Constant(1, (out(0) - targets_[t]) / n)); break;
        case LossKind::Policy:
          dout.push_back(policy_logit_grad(softmax(out), actions_[t], adv_[t], kBeta, steps_));
          break;
        case LossKind::Entropy: dout.push_back(policy_logit_grad(softmax(out), actions_[t], 0.0, 1.0, steps_)); break;
      }
    }
    net_.backward(caches, dout);

    GradError err;
    const auto params = net_.params();
    for (std::size_t k = 0; k < params.size(); ++k) {
      Param& p = *params[k];
      double worst = 0.0;
      for (Eigen::Index i = 0; i < p.value.size(); ++i) {
        double& w = p.value.data()[i];
        const double saved = w;
        w = saved + eps;
        const double up = loss();
        w = saved - eps;
        const double down = loss();
        w = saved;
        worst = std::max(worst, rel_error(p.grad.data()[i], (up - down) / (2 * eps)));
      }
      // params(): 8 front-end tensors, 3 LSTM tensors, 2 head tensors.
      double& slot = k < 8 ? err.front : (k < 11 ? err.lstm : err.head);
      slot = std::max(slot, worst);
    }
    return err;
  }

  static constexpr double kBeta = 0.05;

private:
  std::vector<StepCache> unroll() const {
    std::vector<StepCache> caches;
    LstmState s = state_;
    for (const auto& x : obs_) {
      caches.push_back(net_.forward(x, s));
      s = {caches.back().h, caches.back().c};
    }
    return caches;
  }

  double loss_of(const std::vector<StepCache>& caches) const {
    double l = 0.0;
    std::vector<Vec> probs;
    std::vector<double> values;
    for (int t = 0; t < steps_; ++t) {
      probs.push_back(softmax(caches[t].out));
      values.push_back(caches[t].out(0));
      if (kind_ == LossKind::Linear) l += coef_[t].dot(caches[t].out);
    }
    switch (kind_) {
      case LossKind::Linear: return l;
      case LossKind::Value: return value_loss(targets_, values);
      case LossKind::Policy: return -policy_objective(probs, actions_, adv_, kBeta);
      case LossKind::Entropy: return -policy_objective(probs, actions_, std::vector<double>(steps_, 0.0), 1.0);
    }
    return l;
  }

  LossKind kind_;
  int steps_;
  NetSpec spec_;
  Net net_;
  LstmState state_;
  std::vector<std::vector<double>> obs_;
  std::vector<Vec> coef_;
  std::vector<int> actions_;
  std::vector<double> adv_;
  std::vector<double> targets_;
};

}  // namespace sigroute::testing
