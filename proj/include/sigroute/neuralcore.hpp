#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sigroute/rng.hpp"

namespace sigroute {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct Param {
  Mat value, grad, m, v;
  long step = 0;

  explicit Param(Eigen::Index rows = 0, Eigen::Index cols = 0);
  void zero_grad() { grad.setZero(); }
};

struct OptimizerConfig {
  double learning_rate = 2.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 30.0;
};

inline constexpr std::size_t kFrontEnds = 4;

struct NetSpec {
  std::array<int, kFrontEnds> inputs{};  // observation block sizes
  std::array<int, kFrontEnds> widths{};  // front-end layer widths
  int lstm_units = 128;
  int outputs = 1;                       // action count, or 1 for a value net

  friend bool operator==(const NetSpec&, const NetSpec&) = default;
};

struct Dense {
  Param w, b;
};

/// Gate rows are stacked as input, forget, output, candidate.
struct Lstm {
  Param wx, wh, b;
};

struct LstmState {
  Vec h, c;

  static LstmState zeros(int units) { return {Vec::Zero(units), Vec::Zero(units)}; }
};

/// Activations of one forward step, enough to replay the backward pass.
struct StepCache {
  std::array<Vec, kFrontEnds> x;  // front-end inputs
  Vec z;                          // concatenated front-end outputs (post-ReLU)
  Vec h_prev, c_prev;
  Vec gates;                      // post-activation i, f, o, g
  Vec c, tanh_c, h;
  Vec out;                        // logits or value
};

/// Typed FC front-ends -> concatenation -> LSTM -> linear head.
class Net {
public:
  Net() = default;
  explicit Net(const NetSpec& spec);

  const NetSpec& spec() const { return spec_; }
  int input_size() const;

  /// One step. Does not touch `state`; the caller commits the new state.
  StepCache forward(std::span<const double> obs, const LstmState& state) const;

  /// Accumulates parameter gradients for a contiguous unroll whose first
  /// incoming state is treated as a constant. dout[t] is dLoss/dout_t.
  void backward(std::span<const StepCache> caches, std::span<const Vec> dout);

  std::vector<Param*> params();
  std::vector<const Param*> params() const;
  void zero_grad();

  std::array<Dense, kFrontEnds> front;
  Lstm lstm;
  Dense head;

private:
  NetSpec spec_;
};

struct PolicyStep {
  Vec probs;
  LstmState state;
  StepCache cache;
};

struct ValueStep {
  double value = 0.0;
  LstmState state;
  StepCache cache;
};

Vec softmax(const Vec& logits);
PolicyStep forward_policy(const Net& net, std::span<const double> obs, const LstmState& state);
ValueStep forward_value(const Net& net, std::span<const double> obs, const LstmState& state);

/// -sum p log p, with 0 log 0 = 0.
double entropy(const Vec& probs);

/// d(-J_t)/dlogits for one step of the entropy-regularized policy objective
/// J = (1/n) sum_t [log pi(a_t) A_t + beta H(pi_t)].
Vec policy_logit_grad(const Vec& probs, int action, double advantage, double beta, int n);

int sample_action(const Vec& probs, Rng& rng);
int greedy_action(const Vec& probs);

/// Global L2 norm of all gradients before clipping. Scales them to
/// `threshold` when the norm exceeds it.
double clip_grad_norm(std::span<Param* const> params, double threshold);

void adam_step(std::span<Param* const> params, const OptimizerConfig& config);

/// Glorot-uniform weights, zero biases, LSTM forget-gate bias 1.
void init_params(Net& net, std::uint64_t seed);
Net make_net(const NetSpec& spec, std::uint64_t seed);

/// Per-agent policy (theta) and value (omega) networks with their recurrent state.
struct AgentNet {
  Net policy, value;
  LstmState policy_state, value_state;

  void reset_state();
};

AgentNet init_agent_net(const NetSpec& policy_spec, std::uint64_t seed);

}  // namespace sigroute
