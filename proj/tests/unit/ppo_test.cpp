#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "hapcache/ppo.hpp"

using namespace hapcache;

namespace {

Transition make_transition(const Policy& p, const Eigen::VectorXd& s, Rng& rng) {
  auto act = sample_action(p, s, rng);
  return {s, act.a, 0.0, s, act.log_prob};
}

Eigen::VectorXd random_vector(Index n, Rng& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  Eigen::VectorXd v(n);
  for (Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

// Costs one unit per bit that differs from a fixed target.
class MatchEnv : public Environment {
 public:
  explicit MatchEnv(Eigen::VectorXd target) : target_(std::move(target)) {}
  Index state_size() const override { return 2; }
  Index action_size() const override { return target_.size(); }
  Eigen::VectorXd reset(Index) override { return Eigen::VectorXd::Ones(2); }
  Step step(const Eigen::VectorXd& a) override {
    return {Eigen::VectorXd::Ones(2), 1.0 + (a - target_).cwiseAbs().sum(), true};
  }

 private:
  Eigen::VectorXd target_;
};

}  // namespace

TEST(Ppo, StateEncoding) {
  CachePlacement z(3, 4);
  BinaryMatrix req(3, 4);
  EXPECT_EQ(encode_state(z, req), Eigen::VectorXd::Zero(24));
  const auto full = encode_state(BinaryMatrix::ones(3, 4), req);
  EXPECT_EQ(full.head(12), Eigen::VectorXd::Ones(12));
  EXPECT_EQ(full.tail(12), Eigen::VectorXd::Zero(12));
  EXPECT_EQ(encode_state(CachePlacement(7, 30), BinaryMatrix(7, 30)).size(), 420);
  req(1, 2) = 1;
  EXPECT_EQ(encode_state(z, req)[12 + 4 + 2], 1.0);
  EXPECT_THROW(encode_state(z, BinaryMatrix(3, 5)), std::invalid_argument);
}

TEST(Ppo, RequestIndicatorAggregatesUsers) {
  NetworkTopology topo;
  topo.haps = {Eigen::Vector3d::Zero(), Eigen::Vector3d::Zero()};
  topo.users = {{Eigen::Vector3d::Zero(), 0}, {Eigen::Vector3d::Zero(), 1}, {Eigen::Vector3d::Zero(), 1}};
  RequestMatrix alpha(3, 3);
  alpha(0, 2) = alpha(1, 0) = alpha(2, 0) = 1;
  const auto b = request_indicator(alpha, topo);
  EXPECT_EQ(b(0, 2), 1);
  EXPECT_EQ(b(1, 0), 1);
  EXPECT_EQ(b(0, 0) + b(1, 1) + b(1, 2) + b(0, 1), 0);
}

TEST(Ppo, ProcActExamples) {
  Eigen::VectorXd a(3);
  a << 1, 1, 1;
  auto z = proc_act(a, 1, 3, 2);
  EXPECT_EQ(z(0, 0) + z(0, 1), 2);
  EXPECT_EQ(z(0, 2), 0);
  EXPECT_EQ(proc_act(Eigen::VectorXd::Zero(6), 2, 3, 2), CachePlacement(2, 3));
  Eigen::VectorXd b(4);
  b << 0, 1, 1, 1;
  z = proc_act(b, 2, 2, 1);
  EXPECT_EQ(z(0, 0), 0);
  EXPECT_EQ(z(0, 1), 1);
  EXPECT_EQ(z(1, 0), 1);
  EXPECT_EQ(z(1, 1), 0);
}

TEST(Ppo, ProcActRespectsCapacityAndIsIdempotent) {
  Rng rng(3);
  std::bernoulli_distribution bit(0.6);
  for (int trial = 0; trial < 2000; ++trial) {
    Eigen::VectorXd a(4 * 6);
    for (Index i = 0; i < a.size(); ++i) a[i] = bit(rng);
    const Index n = trial % 7;
    const auto z = proc_act(a, 4, 6, n);
    for (Index k = 0; k < 4; ++k) EXPECT_LE(z.row_sum(k), n);
    EXPECT_EQ(proc_act(flatten(z), 4, 6, n), z);
  }
}

TEST(Ppo, UniformPolicyLogProbability) {
  PpoConfig cfg;
  cfg.hidden = {4};
  Rng rng(1);
  Policy p = Policy::make(6, 5, cfg, rng);
  p.actor.params().setZero();
  const auto act = sample_action(p, Eigen::VectorXd::Ones(6), rng);
  EXPECT_DOUBLE_EQ(act.log_prob, 5.0 * std::log(0.5));
}

TEST(Ppo, BernoulliMeansAndDeterminism) {
  PpoConfig cfg;
  cfg.hidden = {};
  Rng init(2);
  Policy p = Policy::make(1, 3, cfg, init);
  p.actor.params() << 0.0, 0.0, 0.0, -1.0, 0.3, 2.0;  // weights then biases
  const Eigen::VectorXd s = Eigen::VectorXd::Ones(1);
  const auto prob = p.probabilities(s);
  Rng rng(9);
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(3);
  const int n = 100000;
  for (int i = 0; i < n; ++i) mean += sample_action(p, s, rng).a;
  mean /= n;
  for (Index j = 0; j < 3; ++j) EXPECT_NEAR(mean[j] / prob[j], 1.0, 0.02);
  Rng a(5), b(5);
  EXPECT_EQ(sample_action(p, s, a).a, sample_action(p, s, b).a);
}

TEST(Ppo, ProbabilitiesStayInsideOpenInterval) {
  PpoConfig cfg;
  cfg.hidden = {};
  Rng rng(2);
  Policy p = Policy::make(1, 2, cfg, rng);
  p.actor.params() << 0.0, 0.0, 1e4, -1e4;
  const auto prob = p.probabilities(Eigen::VectorXd::Ones(1));
  EXPECT_GT(prob[1], 0.0);
  EXPECT_LT(prob[0], 1.0);
  Eigen::VectorXd a(2);
  a << 0, 1;
  EXPECT_TRUE(std::isfinite(log_prob(prob, a)));
}

TEST(Ppo, GaeMatchesBruteForce) {
  Rng rng(4);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> r(8), v(9);
    for (auto& x : r) x = u(rng);
    for (auto& x : v) x = u(rng);
    const double gamma = 0.99, zeta = 0.95;
    const auto adv = gae(r, v, gamma, zeta);
    const auto tgt = value_targets(r, gamma);
    for (std::size_t n = 0; n < r.size(); ++n) {
      double a = 0.0, t = 0.0;
      for (std::size_t i = n; i < r.size(); ++i) {
        a += std::pow(gamma * zeta, static_cast<double>(i - n)) * (r[i] + gamma * v[i + 1] - v[i]);
        t += std::pow(gamma, static_cast<double>(i - n)) * r[i];
      }
      EXPECT_NEAR(adv[n], a, 1e-12);
      EXPECT_NEAR(tgt[n], t, 1e-12);
    }
  }
}

TEST(Ppo, GaeAndTargetEdgeCases) {
  EXPECT_DOUBLE_EQ(gae({2.0}, {0.5, 1.5}, 0.9, 0.95)[0], 2.0 + 0.9 * 1.5 - 0.5);
  const auto td = gae({1.0, -1.0, 3.0}, {0.1, 0.2, 0.3, 0.4}, 0.9, 0.0);
  EXPECT_DOUBLE_EQ(td[0], 1.0 + 0.9 * 0.2 - 0.1);
  EXPECT_DOUBLE_EQ(td[1], -1.0 + 0.9 * 0.3 - 0.2);
  EXPECT_DOUBLE_EQ(value_targets({5.0}, 0.99)[0], 5.0);
  EXPECT_EQ(value_targets({1.0, 2.0}, 0.0), (std::vector<double>{1.0, 2.0}));
  const auto two = value_targets({1.0, 1.0}, 0.99);
  EXPECT_DOUBLE_EQ(two[0], 1.99);
  EXPECT_DOUBLE_EQ(two[1], 1.0);
  EXPECT_THROW(gae({}, {0.0}, 0.9, 0.9), std::invalid_argument);
  EXPECT_THROW(value_targets({}, 0.9), std::invalid_argument);
}

TEST(Ppo, ClipHelper) {
  EXPECT_EQ(clip(1.5, 0.8, 1.2), 1.2);
  EXPECT_EQ(clip(0.5, 0.8, 1.2), 0.8);
  EXPECT_EQ(clip(1.0, 0.8, 1.2), 1.0);
}

TEST(Ppo, RatioOneSurrogateIsMeanAdvantage) {
  PpoConfig cfg;
  cfg.hidden = {8};
  Rng rng(6);
  Policy p = Policy::make(4, 3, cfg, rng);
  std::vector<Transition> batch;
  std::vector<double> adv;
  for (int i = 0; i < 10; ++i) {
    batch.push_back(make_transition(p, random_vector(4, rng), rng));
    adv.push_back(random_vector(1, rng)[0]);
  }
  std::vector<const Transition*> mb;
  for (const auto& t : batch) mb.push_back(&t);
  double mean = 0.0;
  for (double a : adv) mean += a;
  mean /= static_cast<double>(adv.size());
  EXPECT_NEAR(surrogate(p, mb, adv, 0.2), mean, 1e-15);
}

TEST(Ppo, SurrogateGradientMatchesFiniteDifferences) {
  for (const auto& hidden : {std::vector<Index>{}, std::vector<Index>{5}}) {
    PpoConfig cfg;
    cfg.hidden = hidden;
    Rng rng(7);
    Policy p = Policy::make(1, 1, cfg, rng);
    p.actor.params() = random_vector(p.actor.size(), rng) * 0.5;
    std::vector<Transition> batch;
    std::vector<double> adv;
    for (int i = 0; i < 6; ++i) {
      batch.push_back(make_transition(p, random_vector(1, rng), rng));
      batch.back().log_prob += 0.3 * random_vector(1, rng)[0];  // stale behaviour policy
      adv.push_back(random_vector(1, rng)[0]);
    }
    std::vector<const Transition*> mb;
    for (const auto& t : batch) mb.push_back(&t);
    Eigen::VectorXd g = Eigen::VectorXd::Zero(p.actor.size());
    surrogate(p, mb, adv, 0.0, &g);
    for (Index i = 0; i < p.actor.size(); ++i) {
      const double h = 1e-6;
      Policy plus = p, minus = p;
      plus.actor.params()[i] += h;
      minus.actor.params()[i] -= h;
      const double fd = (surrogate(plus, mb, adv, 0.0) - surrogate(minus, mb, adv, 0.0)) / (2.0 * h);
      EXPECT_NEAR(g[i], fd, 1e-4 * std::max(1.0, std::abs(fd))) << "param " << i;
      if (std::abs(fd) > 1e-3) EXPECT_NEAR(g[i] / fd, 1.0, 1e-4);
    }
  }
}

// Only the upper side is bounded: a negative advantage with a large ratio
// keeps the unclipped term.
TEST(Ppo, ClippedSurrogateBoundedAbove) {
  PpoConfig cfg;
  cfg.hidden = {6};
  Rng rng(8);
  Policy p = Policy::make(3, 4, cfg, rng);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Transition> batch;
    std::vector<double> adv;
    double amax = 0.0;
    for (int i = 0; i < 8; ++i) {
      batch.push_back(make_transition(p, random_vector(3, rng), rng));
      batch.back().log_prob += 2.0 * random_vector(1, rng)[0];
      adv.push_back(3.0 * random_vector(1, rng)[0]);
      amax = std::max(amax, std::abs(adv.back()));
    }
    std::vector<const Transition*> mb;
    for (const auto& t : batch) mb.push_back(&t);
    EXPECT_LE(surrogate(p, mb, adv, cfg.clip), (1.0 + cfg.clip) * amax + 1e-12);
  }
}

TEST(Ppo, CriticBackpropMatchesFiniteDifferences) {
  nn::Mlp net(3, {4, 3}, 2);
  Rng rng(10);
  net.initialize(rng, 1.0);
  const Eigen::VectorXd x = random_vector(3, rng);
  const Eigen::VectorXd w = random_vector(2, rng);
  nn::Mlp::Tape tape;
  net.forward(x, &tape);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(net.size());
  net.backward(tape, w, g);
  for (Index i = 0; i < net.size(); ++i) {
    nn::Mlp a = net, b = net;
    a.params()[i] += 1e-6;
    b.params()[i] -= 1e-6;
    const double fd = (w.dot(a.forward(x)) - w.dot(b.forward(x))) / 2e-6;
    EXPECT_NEAR(g[i], fd, 1e-7);
  }
}

TEST(Ppo, ZeroIterationsLeavesPolicyUnchanged) {
  PpoConfig cfg;
  cfg.hidden = {4};
  cfg.iter_max = 0;
  Rng rng(11);
  Policy p = Policy::make(2, 3, cfg, rng);
  MatchEnv env(Eigen::VectorXd::Zero(3));
  const auto res = train(env, p, cfg, rng);
  EXPECT_EQ(res.policy.actor.params(), p.actor.params());
  EXPECT_EQ(res.policy.critic.params(), p.critic.params());
  EXPECT_TRUE(res.curve.empty());
}

TEST(Ppo, LearnsTargetPattern) {
  PpoConfig cfg;
  cfg.hidden = {16};
  cfg.iter_max = 150;
  cfg.horizon = 16;
  cfg.lr_actor = 1e-2;
  cfg.lr_critic = 1e-2;
  Eigen::VectorXd target(5);
  target << 1, 0, 1, 1, 0;
  MatchEnv env(target);
  Rng rng(12);
  Policy p = Policy::make(2, 5, cfg, rng);
  const auto res = train(env, p, cfg, rng);
  EXPECT_EQ(res.transitions, 150 * 16);
  EXPECT_EQ(greedy_action(res.policy, Eigen::VectorXd::Ones(2)), target);
  EXPECT_GT(res.curve.back(), res.curve.front());
}

TEST(Ppo, CheckpointRoundTrip) {
  PpoConfig cfg;
  cfg.hidden = {5, 3};
  Rng rng(13);
  Policy p = Policy::make(4, 2, cfg, rng);
  const auto dir = std::filesystem::temp_directory_path() / "hapcache_ckpt_test";
  std::filesystem::create_directories(dir);
  const std::string prefix = (dir / "policy").string();
  save_checkpoint(prefix, p, {{"seed", 13}, {"iteration", 0}});
  nlohmann::json meta;
  const Policy q = load_checkpoint(prefix, &meta);
  EXPECT_EQ(q.actor.params(), p.actor.params());
  EXPECT_EQ(q.critic.params(), p.critic.params());
  EXPECT_EQ(q.actor.widths(), p.actor.widths());
  EXPECT_EQ(meta["seed"], 13);
  EXPECT_EQ(meta["format_version"], 1);
  std::filesystem::remove_all(dir);
}
