#include "sigroute/neuralcore.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace sigroute {

namespace {

Vec sigmoid(const Vec& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

Dense make_dense(int out, int in) { return {Param(out, in), Param(out, 1)}; }

void glorot(Param& p, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(p.value.rows() + p.value.cols()));
  for (Eigen::Index c = 0; c < p.value.cols(); ++c) {
    for (Eigen::Index r = 0; r < p.value.rows(); ++r) p.value(r, c) = rng.uniform(-limit, limit);
  }
}

}  // namespace

Param::Param(Eigen::Index rows, Eigen::Index cols)
    : value(Mat::Zero(rows, cols)), grad(Mat::Zero(rows, cols)), m(Mat::Zero(rows, cols)), v(Mat::Zero(rows, cols)) {}

Net::Net(const NetSpec& spec) : spec_(spec) {
  int merged = 0;
  for (std::size_t k = 0; k < kFrontEnds; ++k) {
    front[k] = make_dense(spec.widths[k], spec.inputs[k]);
    merged += spec.widths[k];
  }
  const int h = spec.lstm_units;
  lstm = {Param(4 * h, merged), Param(4 * h, h), Param(4 * h, 1)};
  head = make_dense(spec.outputs, h);
}

int Net::input_size() const { return std::accumulate(spec_.inputs.begin(), spec_.inputs.end(), 0); }

StepCache Net::forward(std::span<const double> obs, const LstmState& state) const {
  if (static_cast<int>(obs.size()) != input_size()) {
    throw std::invalid_argument("observation has " + std::to_string(obs.size()) + " entries, network expects " +
                                std::to_string(input_size()));
  }
  const int h = spec_.lstm_units;
  StepCache c;
  c.z.resize(lstm.wx.value.cols());
  std::size_t offset = 0;
  Eigen::Index zoff = 0;
  for (std::size_t k = 0; k < kFrontEnds; ++k) {
    const int n = spec_.inputs[k];
    c.x[k] = Eigen::Map<const Vec>(obs.data() + offset, n);
    offset += n;
    const int w = spec_.widths[k];
    c.z.segment(zoff, w) = (front[k].w.value * c.x[k] + front[k].b.value.col(0)).cwiseMax(0.0);
    zoff += w;
  }
  c.h_prev = state.h;
  c.c_prev = state.c;
  Vec pre = lstm.wx.value * c.z + lstm.wh.value * state.h + lstm.b.value.col(0);
  c.gates.resize(4 * h);
  c.gates.head(3 * h) = sigmoid(pre.head(3 * h));
  c.gates.tail(h) = pre.tail(h).array().tanh().matrix();
  const auto i = c.gates.segment(0, h).array();
  const auto f = c.gates.segment(h, h).array();
  const auto o = c.gates.segment(2 * h, h).array();
  const auto g = c.gates.segment(3 * h, h).array();
  c.c = (f * state.c.array() + i * g).matrix();
  c.tanh_c = c.c.array().tanh().matrix();
  c.h = (o * c.tanh_c.array()).matrix();
  c.out = head.w.value * c.h + head.b.value.col(0);
  return c;
}

void Net::backward(std::span<const StepCache> caches, std::span<const Vec> dout) {
  if (caches.size() != dout.size()) throw std::invalid_argument("backward: cache/gradient length mismatch");
  const auto T = static_cast<Eigen::Index>(caches.size());
  if (T == 0) return;
  const int h = spec_.lstm_units;
  const Eigen::Index merged = lstm.wx.value.cols();

  Mat douts(spec_.outputs, T), hs(h, T), hprev(h, T), zs(merged, T), dgates(4 * h, T);
  for (Eigen::Index t = 0; t < T; ++t) {
    douts.col(t) = dout[t];
    hs.col(t) = caches[t].h;
    hprev.col(t) = caches[t].h_prev;
    zs.col(t) = caches[t].z;
  }
  head.w.grad.noalias() += douts * hs.transpose();
  head.b.grad.col(0) += douts.rowwise().sum();

  Mat dh_all = head.w.value.transpose() * douts;
  Vec dh_next = Vec::Zero(h), dc_next = Vec::Zero(h);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    const StepCache& c = caches[t];
    const Vec dh = dh_all.col(t) + dh_next;
    const auto i = c.gates.segment(0, h).array();
    const auto f = c.gates.segment(h, h).array();
    const auto o = c.gates.segment(2 * h, h).array();
    const auto g = c.gates.segment(3 * h, h).array();
    const auto tc = c.tanh_c.array();
    const Eigen::ArrayXd dc = dh.array() * o * (1.0 - tc.square()) + dc_next.array();
    auto dg = dgates.col(t);
    dg.segment(0, h) = (dc * g * i * (1.0 - i)).matrix();
    dg.segment(h, h) = (dc * c.c_prev.array() * f * (1.0 - f)).matrix();
    dg.segment(2 * h, h) = (dh.array() * tc * o * (1.0 - o)).matrix();
    dg.segment(3 * h, h) = (dc * i * (1.0 - g.square())).matrix();
    dc_next = (dc * f).matrix();
    if (t > 0) dh_next.noalias() = lstm.wh.value.transpose() * dg;
  }
  lstm.wx.grad.noalias() += dgates * zs.transpose();
  lstm.wh.grad.noalias() += dgates * hprev.transpose();
  lstm.b.grad.col(0) += dgates.rowwise().sum();

  Mat dz = lstm.wx.value.transpose() * dgates;
  dz = dz.cwiseProduct((zs.array() > 0.0).cast<double>().matrix());
  Eigen::Index zoff = 0;
  for (std::size_t k = 0; k < kFrontEnds; ++k) {
    const int w = spec_.widths[k];
    const int n = spec_.inputs[k];
    const auto da = dz.middleRows(zoff, w);
    if (n > 0) {
      Mat xs(n, T);
      for (Eigen::Index t = 0; t < T; ++t) xs.col(t) = caches[t].x[k];
      front[k].w.grad.noalias() += da * xs.transpose();
    }
    front[k].b.grad.col(0) += da.rowwise().sum();
    zoff += w;
  }
}

std::vector<Param*> Net::params() {
  std::vector<Param*> out;
  for (auto& d : front) out.insert(out.end(), {&d.w, &d.b});
  out.insert(out.end(), {&lstm.wx, &lstm.wh, &lstm.b, &head.w, &head.b});
  return out;
}

std::vector<const Param*> Net::params() const {
  std::vector<const Param*> out;
  for (Param* p : const_cast<Net*>(this)->params()) out.push_back(p);
  return out;
}

void Net::zero_grad() {
  for (Param* p : params()) p->zero_grad();
}

Vec softmax(const Vec& logits) {
  Vec e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

PolicyStep forward_policy(const Net& net, std::span<const double> obs, const LstmState& state) {
  PolicyStep s;
  s.cache = net.forward(obs, state);
  s.probs = softmax(s.cache.out);
  s.state = {s.cache.h, s.cache.c};
  return s;
}

ValueStep forward_value(const Net& net, std::span<const double> obs, const LstmState& state) {
  if (net.spec().outputs != 1) throw std::invalid_argument("value network must have one output");
  ValueStep s;
  s.cache = net.forward(obs, state);
  s.value = s.cache.out(0);
  s.state = {s.cache.h, s.cache.c};
  return s;
}

double entropy(const Vec& probs) {
  double h = 0.0;
  for (double p : probs) {
    if (p > 0.0) h -= p * std::log(p);
  }
  return h;
}

Vec policy_logit_grad(const Vec& probs, int action, double advantage, double beta, int n) {
  const double h = entropy(probs);
  Vec d(probs.size());
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    const double p = probs(k);
    const double dlogp = (k == action ? 1.0 : 0.0) - p;
    const double dh = p > 0.0 ? -p * (std::log(p) + h) : 0.0;
    d(k) = -(advantage * dlogp + beta * dh) / n;
  }
  return d;
}

int sample_action(const Vec& probs, Rng& rng) {
  const double u = rng.uniform();
  double acc = 0.0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    acc += probs(k);
    if (u < acc) return static_cast<int>(k);
  }
  for (Eigen::Index k = probs.size() - 1; k >= 0; --k) {
    if (probs(k) > 0.0) return static_cast<int>(k);
  }
  return 0;
}

int greedy_action(const Vec& probs) {
  Eigen::Index best = 0;
  probs.maxCoeff(&best);
  return static_cast<int>(best);
}

double clip_grad_norm(std::span<Param* const> params, double threshold) {
  double sq = 0.0;
  for (const Param* p : params) sq += p->grad.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > threshold && norm > 0.0) {
    const double scale = threshold / norm;
    for (Param* p : params) p->grad *= scale;
  }
  return norm;
}

void adam_step(std::span<Param* const> params, const OptimizerConfig& cfg) {
  for (Param* p : params) {
    ++p->step;
    p->m = cfg.beta1 * p->m + (1.0 - cfg.beta1) * p->grad;
    p->v = cfg.beta2 * p->v + (1.0 - cfg.beta2) * p->grad.cwiseAbs2();
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p->step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p->step));
    p->value.array() -= cfg.learning_rate * (p->m.array() / bc1) / ((p->v.array() / bc2).sqrt() + cfg.epsilon);
  }
}

void init_params(Net& net, std::uint64_t seed) {
  Rng rng = make_stream(seed, 0x1417);
  for (auto& d : net.front) {
    glorot(d.w, rng);
    d.b.value.setZero();
  }
  glorot(net.lstm.wx, rng);
  glorot(net.lstm.wh, rng);
  const int h = net.spec().lstm_units;
  net.lstm.b.value.setZero();
  net.lstm.b.value.middleRows(h, h).setOnes();
  glorot(net.head.w, rng);
  net.head.b.value.setZero();
  for (Param* p : net.params()) {
    p->grad.setZero();
    p->m.setZero();
    p->v.setZero();
    p->step = 0;
  }
}

Net make_net(const NetSpec& spec, std::uint64_t seed) {
  Net net(spec);
  init_params(net, seed);
  return net;
}

void AgentNet::reset_state() {
  policy_state = LstmState::zeros(policy.spec().lstm_units);
  value_state = LstmState::zeros(value.spec().lstm_units);
}

AgentNet init_agent_net(const NetSpec& policy_spec, std::uint64_t seed) {
  NetSpec value_spec = policy_spec;
  value_spec.outputs = 1;
  AgentNet net{make_net(policy_spec, seed), make_net(value_spec, seed ^ 0x9E3779B97F4A7C15ULL), {}, {}};
  net.reset_state();
  return net;
}

}  // namespace sigroute
