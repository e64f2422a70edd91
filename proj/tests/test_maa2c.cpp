#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <iterator>

#include "sigroute/maa2c.hpp"
#include "testutil.hpp"

using namespace sigroute;
using namespace sigroute::testing;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("sigroute_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

TrainConfig mini_config(std::uint64_t seed = 1) {
  TrainConfig cfg = TrainConfig::from(mini().hp);
  cfg.seed = seed;
  return cfg;
}

bool same_params(const std::vector<AgentNet>& a, const std::vector<AgentNet>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto pa = a[i].policy.params(), pb = b[i].policy.params();
    const auto va = a[i].value.params(), vb = b[i].value.params();
    for (std::size_t k = 0; k < pa.size(); ++k) {
      if (pa[k]->value != pb[k]->value || pa[k]->m != pb[k]->m || pa[k]->v != pb[k]->v) return false;
    }
    for (std::size_t k = 0; k < va.size(); ++k) {
      if (va[k]->value != vb[k]->value) return false;
    }
  }
  return true;
}

}  // namespace

TEST(TdTargets, HandExamples) {
  const std::vector<double> r{1.0, 1.0};
  const auto R = td_targets(r, 0.0, 0.99);
  EXPECT_DOUBLE_EQ(R[0], 1.99);
  EXPECT_DOUBLE_EQ(R[1], 1.0);
  EXPECT_DOUBLE_EQ(td_targets(std::vector<double>{0.0}, 2.0, 0.99)[0], 1.98);
  const std::vector<double> r3{0.5, -2.0, 3.0};
  EXPECT_EQ(td_targets(r3, 7.0, 0.0), r3);
}

TEST(TdTargets, MatchesExplicitDoubleSum) {
  Rng rng(2024);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 1 + static_cast<int>(rng.uniform() * 144);
    const double gamma = rng.uniform(0.0, 1.0);
    const double boot = rng.uniform(-50.0, 50.0);
    std::vector<double> r(n);
    for (double& x : r) x = rng.uniform(-6.0, 6.0);
    const auto R = td_targets(r, boot, gamma);
    for (int t = 0; t < n; ++t) {
      double expected = 0.0;
      for (int k = t; k < n; ++k) expected += std::pow(gamma, k - t) * r[k];
      expected += std::pow(gamma, n - t) * boot;
      ASSERT_NEAR(R[t], expected, 1e-10) << "trial " << trial << " t " << t;
    }
  }
}

TEST(Advantages, Subtraction) {
  const std::vector<double> R{2.0, 0.0}, V{1.0, 1.0};
  EXPECT_EQ(advantages(R, V), (std::vector<double>{1.0, -1.0}));
  EXPECT_EQ(advantages(V, V), (std::vector<double>{0.0, 0.0}));
  EXPECT_THROW(advantages(R, std::vector<double>{1.0}), std::invalid_argument);
}

TEST(ValueLoss, HandExamples) {
  EXPECT_EQ(value_loss(std::vector<double>{3.0}, std::vector<double>{1.0}), 2.0);
  EXPECT_EQ(value_loss(std::vector<double>{1.0, 2.0}, std::vector<double>{0.0, 1.0}), 0.5);
  EXPECT_EQ(value_loss(std::vector<double>{1.5, 2.5}, std::vector<double>{1.5, 2.5}), 0.0);
}

TEST(PolicyObjective, HandExamples) {
  const std::vector<Vec> uniform{Vec::Constant(4, 0.25)};
  const std::vector<int> a{2};
  EXPECT_NEAR(policy_objective(uniform, a, std::vector<double>{0.0}, 0.05), 0.05 * std::log(4.0), 1e-15);
  EXPECT_NEAR(policy_objective(uniform, a, std::vector<double>{0.0}, 0.05), 0.0693, 1e-4);
  Vec p(3);
  p << 0.2, 0.5, 0.3;
  EXPECT_DOUBLE_EQ(policy_objective(std::vector<Vec>{p}, std::vector<int>{1}, std::vector<double>{1.0}, 0.0),
                   std::log(0.5));
}

TEST(PolicyObjective, EntropyOnlyUpdateRaisesEntropy) {
  NetSpec spec;
  spec.inputs = {3, 3, 2, 2};
  spec.widths = {4, 4, 4, 4};
  spec.lstm_units = 6;
  spec.outputs = 4;
  Net net = make_net(spec, 12);
  // Make the initial policy clearly non-uniform.
  net.head.b.value(0, 0) = 2.0;
  const std::vector<double> x(10, 0.8);
  const auto before = forward_policy(net, x, LstmState::zeros(6));
  OptimizerConfig opt;
  opt.learning_rate = 1e-2;
  for (int k = 0; k < 20; ++k) {
    const auto step = forward_policy(net, x, LstmState::zeros(6));
    net.zero_grad();
    net.backward(std::vector<StepCache>{step.cache}, std::vector<Vec>{policy_logit_grad(step.probs, 0, 0.0, 0.05, 1)});
    auto ps = net.params();
    adam_step(ps, opt);
  }
  const auto after = forward_policy(net, x, LstmState::zeros(6));
  EXPECT_GT(entropy(after.probs), entropy(before.probs));
}

TEST(EpisodeReward, SumsStepsAndAgents) {
  const std::vector<std::vector<double>> records(720, std::vector<double>{-1.0, -1.0});
  EXPECT_EQ(episode_reward(records), -1440.0);
  EXPECT_EQ(episode_reward({}), 0.0);
}

TEST(Trainer, FiveFullBatchesPerEpisode) {
  Trainer t(mini(), mini_config());
  for (int b = 0; b < 5; ++b) {
    const TransitionBatch batch = t.collect_batch(144);
    EXPECT_EQ(batch.length, 144);
    EXPECT_EQ(batch.terminal, b == 4);
    for (const auto& a : batch.agents) {
      EXPECT_EQ(a.actions.size(), 144u);
      EXPECT_EQ(a.rewards.size(), 144u);
      EXPECT_EQ(a.policy_caches.size(), 144u);
      if (b == 4) EXPECT_EQ(a.bootstrap, 0.0);
      for (double r : a.rewards) {
        EXPECT_GE(r, -6.0);
        EXPECT_LE(r, 6.0);
      }
    }
  }
  EXPECT_EQ(t.steps_done(), 720);
}

TEST(Trainer, BatchTruncatedAtEpisodeEnd) {
  Trainer t(mini(), mini_config());
  for (int b = 0; b < 7; ++b) EXPECT_FALSE(t.collect_batch(100).terminal);
  const TransitionBatch last = t.collect_batch(100);
  EXPECT_EQ(last.length, 20);
  EXPECT_TRUE(last.terminal);
  for (const auto& a : last.agents) EXPECT_EQ(a.bootstrap, 0.0);
}

TEST(Trainer, SingleStepBatches) {
  Trainer t(mini(), mini_config());
  for (int k = 0; k < 3; ++k) {
    const TransitionBatch b = t.collect_batch(1);
    EXPECT_EQ(b.length, 1);
    EXPECT_FALSE(b.terminal);
    t.update(b);
  }
  EXPECT_EQ(t.steps_done(), 3);
}

TEST(Trainer, UpdateChangesParametersAndStaysFinite) {
  Trainer t(mini(), mini_config());
  const auto before = t.nets();
  t.update(t.collect_batch(144));
  EXPECT_FALSE(same_params(before, t.nets()));
  for (const AgentNet& n : t.nets()) {
    for (const Param* p : n.policy.params()) EXPECT_TRUE(p->value.allFinite());
  }
}

TEST(Trainer, DeterministicPerSeed) {
  Trainer a(mini(), mini_config(5)), b(mini(), mini_config(5)), c(mini(), mini_config(6));
  for (int k = 0; k < 2; ++k) {
    a.update(a.collect_batch(144));
    b.update(b.collect_batch(144));
    c.update(c.collect_batch(144));
  }
  EXPECT_TRUE(same_params(a.nets(), b.nets()));
  EXPECT_FALSE(same_params(a.nets(), c.nets()));
  EXPECT_TRUE(a.sim() == b.sim());
}

TEST(Trainer, NonFiniteLossIsReported) {
  const fs::path dir = scratch("diverged");
  TrainConfig cfg = mini_config();
  cfg.out_dir = dir;
  Trainer t(mini(), cfg);
  t.nets()[0].value.head.b.value(0, 0) = std::nan("");
  const TransitionBatch b = t.collect_batch(3);
  EXPECT_THROW(t.update(b), TrainingDiverged);
  EXPECT_TRUE(fs::exists(dir / "diverged.json"));
}

TEST(Train, WritesCurveAndCheckpoints) {
  const fs::path dir = scratch("train");
  TrainConfig cfg = mini_config(3);
  cfg.total_steps = 1440 + 10;
  cfg.out_dir = dir;
  cfg.checkpoint_every = 1;
  Trainer t(mini(), cfg);
  const TrainingCurve curve = t.train();
  EXPECT_EQ(curve.episodes.size(), 2u);
  EXPECT_EQ(t.steps_done(), 1450);
  EXPECT_TRUE(fs::exists(dir / "ckpt_ep1"));
  EXPECT_TRUE(fs::exists(dir / "ckpt_ep2"));
  const TrainingCurve back = read_curve_csv(dir / "training_curve.csv");
  EXPECT_EQ(back, curve);
  EXPECT_EQ(back.agent_names, (std::vector<std::string>{"SA_A", "SA_B", "RA1"}));
  for (const auto& r : curve.episodes) {
    double sum = 0.0;
    for (double x : r.agent_rewards) sum += x;
    EXPECT_DOUBLE_EQ(r.total_reward, sum);
    EXPECT_LE(r.arrived, r.departed);
  }
  const Checkpoint ck = load_checkpoint(dir / "ckpt_ep2");
  EXPECT_EQ(ck.episodes, 2);
  EXPECT_EQ(ck.steps, 1440);
  EXPECT_EQ(ck.seed, 3u);
  const Checkpoint last = load_checkpoint(dir / "ckpt_final");
  EXPECT_EQ(last.steps, 1450);
  EXPECT_EQ(last.episodes, 2);
}

TEST(CheckpointFile, ByteStableRoundTrip) {
  const fs::path dir = scratch("ckpt");
  Trainer t(mini(), mini_config(8));
  t.update(t.collect_batch(20));
  const Checkpoint c = t.checkpoint();
  save_checkpoint(c, dir / "a");
  const Checkpoint back = load_checkpoint(dir / "a");
  EXPECT_TRUE(same_params(c.nets, back.nets));
  EXPECT_EQ(back.names, c.names);
  EXPECT_EQ(back.steps, 20);
  save_checkpoint(back, dir / "b");
  EXPECT_EQ(bytes_of(dir / "a"), bytes_of(dir / "b"));
  EXPECT_NO_THROW(check_compatible(back, t.agents()));
}

TEST(CheckpointFile, RejectsDamagedFiles) {
  const fs::path dir = scratch("ckpt_bad");
  Trainer t(mini(), mini_config(8));
  save_checkpoint(t.checkpoint(), dir / "good");
  const std::string good = bytes_of(dir / "good");
  std::ofstream(dir / "short", std::ios::binary) << good.substr(0, good.size() / 2);
  std::ofstream(dir / "long", std::ios::binary) << good << 'x';
  std::ofstream(dir / "junk", std::ios::binary) << "not a checkpoint at all";
  EXPECT_THROW(load_checkpoint(dir / "short"), std::runtime_error);
  EXPECT_THROW(load_checkpoint(dir / "long"), std::runtime_error);
  EXPECT_THROW(load_checkpoint(dir / "junk"), std::runtime_error);
  EXPECT_THROW(load_checkpoint(dir / "missing"), std::runtime_error);
}

TEST(CheckpointFile, TopologyMismatchIsDetected) {
  Trainer t(mini(), mini_config());
  const AgentSet other(grid());
  EXPECT_THROW(check_compatible(t.checkpoint(), other), TopologyMismatch);
  Checkpoint renamed = t.checkpoint();
  renamed.names[0] = "SA_Z";
  EXPECT_THROW(check_compatible(renamed, t.agents()), TopologyMismatch);
}

TEST(Seeds, EpisodeSeedsDifferAndRepeat) {
  EXPECT_EQ(episode_seed(1, 0), episode_seed(1, 0));
  EXPECT_NE(episode_seed(1, 0), episode_seed(1, 1));
  EXPECT_NE(episode_seed(1, 0), episode_seed(2, 0));
}
