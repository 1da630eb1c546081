#ifndef HAPCACHE_PPO_HPP
#define HAPCACHE_PPO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hapcache/core.hpp"
#include "hapcache/nn.hpp"
#include "hapcache/topology.hpp"
#include "hapcache/traffic.hpp"
#include "json.hpp"

namespace hapcache {

struct PpoConfig {
  double lr_actor = 3e-4;
  double lr_critic = 3e-4;
  Index minibatch = 32;
  double gamma = 0.99;
  double zeta = 0.95;
  double clip = 0.2;
  Index iter_mb = 10;
  Index iter_max = 50;
  Index horizon = 16;
  std::vector<Index> hidden = {256, 128};
  /// Listed with the other hyper-parameters but not used by the algorithm.
  double soft_update_lr = 5e-3;
  double prob_floor = 1e-6;
  /// Infeasible slots cost this multiple of the median feasible cost.
  double infeasible_penalty = 10.0;
  bool normalize_advantages = true;
  /// Append the fraction of the episode already played to the state.
  bool time_feature = true;

  void validate() const {
    require(gamma > 0.0 && gamma < 1.0 && zeta > 0.0 && zeta < 1.0, "ppo: gamma and zeta must lie in (0,1)");
    require(clip > 0.0, "ppo: clip ratio must be positive");
    require(lr_actor > 0.0 && lr_critic > 0.0, "ppo: learning rates must be positive");
    require(minibatch >= 1 && iter_mb >= 0 && iter_max >= 0 && horizon >= 1, "ppo: invalid iteration counts");
    require(prob_floor > 0.0 && prob_floor < 0.5, "ppo: probability floor out of range");
  }
};

inline void to_json(nlohmann::json& j, const PpoConfig& c) {
  j = {{"lr_actor", c.lr_actor},     {"lr_critic", c.lr_critic},   {"minibatch", c.minibatch},
       {"gamma", c.gamma},           {"zeta", c.zeta},             {"clip", c.clip},
       {"iter_mb", c.iter_mb},       {"iter_max", c.iter_max},     {"horizon", c.horizon},
       {"hidden", c.hidden},         {"soft_update_lr", c.soft_update_lr},
       {"prob_floor", c.prob_floor}, {"infeasible_penalty", c.infeasible_penalty},
       {"normalize_advantages", c.normalize_advantages}, {"time_feature", c.time_feature}};
}

inline void from_json(const nlohmann::json& j, PpoConfig& c) {
  PpoConfig d;
  c.lr_actor = j.value("lr_actor", d.lr_actor);
  c.lr_critic = j.value("lr_critic", d.lr_critic);
  c.minibatch = j.value("minibatch", d.minibatch);
  c.gamma = j.value("gamma", d.gamma);
  c.zeta = j.value("zeta", d.zeta);
  c.clip = j.value("clip", d.clip);
  c.iter_mb = j.value("iter_mb", d.iter_mb);
  c.iter_max = j.value("iter_max", d.iter_max);
  c.horizon = j.value("horizon", d.horizon);
  c.hidden = j.value("hidden", d.hidden);
  c.soft_update_lr = j.value("soft_update_lr", d.soft_update_lr);
  c.prob_floor = j.value("prob_floor", d.prob_floor);
  c.infeasible_penalty = j.value("infeasible_penalty", d.infeasible_penalty);
  c.normalize_advantages = j.value("normalize_advantages", d.normalize_advantages);
  c.time_feature = j.value("time_feature", d.time_feature);
}

// ---------------------------------------------------------------------------
// State and action encoding

/// Per-HAP, per-content request indicator (K x C).
inline BinaryMatrix request_indicator(const RequestMatrix& alpha, const NetworkTopology& topo) {
  require(alpha.rows() == topo.num_users(), "request indicator: user count mismatch");
  BinaryMatrix b(topo.num_haps(), alpha.cols());
  for (Index u = 0; u < alpha.rows(); ++u)
    for (Index c = 0; c < alpha.cols(); ++c)
      if (alpha(u, c)) b(topo.users[static_cast<std::size_t>(u)].hap, c) = 1;
  return b;
}

/// [z row-major, request indicators row-major], length 2KC.
inline Eigen::VectorXd encode_state(const CachePlacement& z, const BinaryMatrix& requested) {
  require(z.rows() == requested.rows() && z.cols() == requested.cols(), "encode_state: shape mismatch");
  const Index kc = z.rows() * z.cols();
  Eigen::VectorXd s(2 * kc);
  for (Index k = 0; k < z.rows(); ++k)
    for (Index c = 0; c < z.cols(); ++c) {
      s[k * z.cols() + c] = z(k, c);
      s[kc + k * z.cols() + c] = requested(k, c);
    }
  return s;
}

/// Keeps, per HAP, the first n_sto requested contents in index order.
inline CachePlacement proc_act(const Eigen::VectorXd& a, Index num_haps, Index num_contents, Index n_sto) {
  require(a.size() == num_haps * num_contents, "proc_act: action length must be K*C");
  require(n_sto >= 0, "proc_act: negative capacity");
  CachePlacement z(num_haps, num_contents);
  for (Index k = 0; k < num_haps; ++k) {
    Index kept = 0;
    for (Index c = 0; c < num_contents && kept < n_sto; ++c)
      if (a[k * num_contents + c] > 0.5) {
        z(k, c) = 1;
        ++kept;
      }
  }
  return z;
}

inline Eigen::VectorXd flatten(const CachePlacement& z) {
  Eigen::VectorXd a(z.rows() * z.cols());
  for (Index k = 0; k < z.rows(); ++k)
    for (Index c = 0; c < z.cols(); ++c) a[k * z.cols() + c] = z(k, c);
  return a;
}

// ---------------------------------------------------------------------------
// Policy

struct Policy {
  nn::Mlp actor;
  nn::Mlp critic;
  nn::Adam actor_opt;
  nn::Adam critic_opt;
  double prob_floor = 1e-6;

  static Policy make(Index state_size, Index action_size, const PpoConfig& cfg, Rng& rng) {
    cfg.validate();
    Policy p;
    p.actor = nn::Mlp(state_size, cfg.hidden, action_size);
    p.critic = nn::Mlp(state_size, cfg.hidden, 1);
    p.actor.initialize(rng);
    p.critic.initialize(rng, 1.0);
    p.actor_opt.lr = cfg.lr_actor;
    p.critic_opt.lr = cfg.lr_critic;
    p.prob_floor = cfg.prob_floor;
    return p;
  }

  /// p = floor + (1 - 2 floor) * sigmoid(logit), strictly inside (0, 1).
  Eigen::VectorXd probabilities(const Eigen::VectorXd& s, nn::Mlp::Tape* tape = nullptr) const {
    const Eigen::VectorXd o = actor.forward(s, tape);
    const Eigen::ArrayXd sig = 1.0 / (1.0 + (-o.array()).exp());
    return (prob_floor + (1.0 - 2.0 * prob_floor) * sig).matrix();
  }

  double value(const Eigen::VectorXd& s) const { return critic.forward(s)[0]; }
};

inline double clip(double x, double lo, double hi) { return std::min(std::max(x, lo), hi); }

inline double log_prob(const Eigen::VectorXd& p, const Eigen::VectorXd& a) {
  double lp = 0.0;
  for (Index j = 0; j < p.size(); ++j) lp += a[j] > 0.5 ? std::log(p[j]) : std::log1p(-p[j]);
  return lp;
}

struct ActionSample {
  Eigen::VectorXd a;
  double log_prob = 0.0;
};

inline ActionSample sample_action(const Policy& policy, const Eigen::VectorXd& s, Rng& rng) {
  const Eigen::VectorXd p = policy.probabilities(s);
  ActionSample out;
  out.a.resize(p.size());
  for (Index j = 0; j < p.size(); ++j) out.a[j] = uniform_open(rng) < p[j] ? 1.0 : 0.0;
  out.log_prob = log_prob(p, out.a);
  return out;
}

inline Eigen::VectorXd greedy_action(const Policy& policy, const Eigen::VectorXd& s) {
  const Eigen::VectorXd p = policy.probabilities(s);
  return (p.array() > 0.5).cast<double>().matrix();
}

struct Transition {
  Eigen::VectorXd s;
  Eigen::VectorXd a;
  double r = 0.0;
  Eigen::VectorXd s_next;
  double log_prob = 0.0;  // under the policy that collected it
};

// ---------------------------------------------------------------------------
// Advantages and targets

/// values has one more entry than rewards: V(s_0..s_N).
inline std::vector<double> gae(const std::vector<double>& rewards, const std::vector<double>& values, double gamma,
                               double zeta) {
  require(!rewards.empty(), "gae: empty batch");
  require(values.size() == rewards.size() + 1, "gae: need N+1 values");
  std::vector<double> adv(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    const double delta = rewards[i] + gamma * values[i + 1] - values[i];
    acc = delta + gamma * zeta * acc;
    adv[i] = acc;
  }
  return adv;
}

inline std::vector<double> gae(const std::vector<Transition>& batch, const Policy& policy, const PpoConfig& cfg) {
  require(!batch.empty(), "gae: empty batch");
  std::vector<double> r, v;
  for (const auto& t : batch) {
    r.push_back(t.r);
    v.push_back(policy.value(t.s));
  }
  v.push_back(policy.value(batch.back().s_next));
  return gae(r, v, cfg.gamma, cfg.zeta);
}

/// Discounted reward-to-go within the batch.
inline std::vector<double> value_targets(const std::vector<double>& rewards, double gamma) {
  require(!rewards.empty(), "value targets: empty batch");
  std::vector<double> out(rewards.size());
  double acc = 0.0;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    out[i] = acc;
  }
  return out;
}

inline std::vector<double> value_targets(const std::vector<Transition>& batch, const PpoConfig& cfg) {
  std::vector<double> r;
  for (const auto& t : batch) r.push_back(t.r);
  return value_targets(r, cfg.gamma);
}

// ---------------------------------------------------------------------------
// Update

/// Mean clipped surrogate over the minibatch. With `grad`, also accumulates
/// its gradient w.r.t. the actor parameters (ascent direction). clip_ratio
/// <= 0 evaluates the unclipped ratio * advantage objective.
inline double surrogate(const Policy& policy, const std::vector<const Transition*>& mb, const std::vector<double>& adv,
                        double clip_ratio, Eigen::VectorXd* grad = nullptr) {
  require(mb.size() == adv.size() && !mb.empty(), "surrogate: minibatch and advantages misaligned");
  const double n = static_cast<double>(mb.size());
  double total = 0.0;
  for (std::size_t i = 0; i < mb.size(); ++i) {
    nn::Mlp::Tape tape;
    const Eigen::VectorXd p = policy.probabilities(mb[i]->s, grad ? &tape : nullptr);
    const double ratio = std::exp(log_prob(p, mb[i]->a) - mb[i]->log_prob);
    const double a = adv[i];
    double term = ratio * a;
    bool active = true;
    if (clip_ratio > 0.0) {
      const double clipped = clip(ratio, 1.0 - clip_ratio, 1.0 + clip_ratio) * a;
      if (clipped < term) {
        term = clipped;
        active = false;
      }
    }
    total += term;
    if (grad && active) {
      // d(ratio*A)/d logit_j = ratio*A * (a_j - sigma_j) * (1 - 2 floor) sigma_j(1-sigma_j) / (p_j or 1 - p_j)
      const double f = policy.prob_floor;
      Eigen::VectorXd g(p.size());
      for (Index j = 0; j < p.size(); ++j) {
        const double sig = (p[j] - f) / (1.0 - 2.0 * f);
        const double dp = (1.0 - 2.0 * f) * sig * (1.0 - sig);
        const double dlog = mb[i]->a[j] > 0.5 ? dp / p[j] : -dp / (1.0 - p[j]);
        g[j] = ratio * a * dlog / n;
      }
      policy.actor.backward(tape, g, *grad);
    }
  }
  return total / n;
}

struct LossReport {
  bool ok = true;
  std::string message;
  double surrogate = 0.0;
  double value_loss = 0.0;
};

inline LossReport ppo_update(Policy& policy, const std::vector<const Transition*>& mb, const std::vector<double>& adv,
                             const std::vector<double>& targets, const PpoConfig& cfg) {
  require(mb.size() == targets.size(), "ppo update: targets misaligned");
  LossReport rep;
  Eigen::VectorXd ga = Eigen::VectorXd::Zero(policy.actor.size());
  rep.surrogate = surrogate(policy, mb, adv, cfg.clip, &ga);

  Eigen::VectorXd gc = Eigen::VectorXd::Zero(policy.critic.size());
  const double n = static_cast<double>(mb.size());
  for (std::size_t i = 0; i < mb.size(); ++i) {
    nn::Mlp::Tape tape;
    const double v = policy.critic.forward(mb[i]->s, &tape)[0];
    const double err = v - targets[i];
    rep.value_loss += err * err / n;
    policy.critic.backward(tape, Eigen::VectorXd::Constant(1, 2.0 * err / n), gc);
  }
  if (!std::isfinite(rep.surrogate) || !std::isfinite(rep.value_loss) || !ga.allFinite() || !gc.allFinite()) {
    rep.ok = false;
    rep.message = "non-finite loss or gradient; update skipped";
    return rep;
  }
  const Eigen::VectorXd descent = -ga;
  policy.actor_opt.step(policy.actor.params(), descent);
  policy.critic_opt.step(policy.critic.params(), gc);
  return rep;
}

// ---------------------------------------------------------------------------
// Training

class Environment {
 public:
  struct Step {
    Eigen::VectorXd next_state;
    double cost = 0.0;  // watts; meaningful only when feasible
    bool feasible = true;
  };

  virtual ~Environment() = default;
  virtual Index state_size() const = 0;
  virtual Index action_size() const = 0;
  virtual Eigen::VectorXd reset(Index episode) = 0;
  virtual Step step(const Eigen::VectorXd& action) = 0;
};

struct TrainResult {
  Policy policy;
  std::vector<double> curve;           // mean reward per outer iteration, watts
  std::vector<double> feasible_rate;   // per outer iteration
  Index transitions = 0;
  Index failed_updates = 0;
};

inline double median(std::vector<double> v) {
  require(!v.empty(), "median: empty input");
  const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
  std::nth_element(v.begin(), mid, v.end());
  if (v.size() % 2) return *mid;
  return 0.5 * (*mid + *std::max_element(v.begin(), mid));
}

/// Rewards fed to the learner are divided by the running mean |reward|;
/// the returned curve is in watts.
inline TrainResult train(Environment& env, Policy policy, const PpoConfig& cfg, Rng& rng, Index first_episode = 0) {
  cfg.validate();
  require(policy.actor.inputs() == env.state_size() && policy.actor.outputs() == env.action_size(),
          "train: policy shape does not match environment");
  TrainResult out;
  std::vector<double> feasible_costs;
  double abs_sum = 0.0;
  Index abs_count = 0;
  for (Index it = 0; it < cfg.iter_max; ++it) {
    std::vector<Transition> batch;
    std::vector<double> raw;
    std::vector<bool> feasible;
    Eigen::VectorXd s = env.reset(first_episode + it);
    for (Index t = 0; t < cfg.horizon; ++t) {
      auto act = sample_action(policy, s, rng);
      auto st = env.step(act.a);
      if (st.feasible) feasible_costs.push_back(st.cost);
      raw.push_back(st.feasible ? -st.cost : std::numeric_limits<double>::quiet_NaN());
      feasible.push_back(st.feasible);
      batch.push_back({s, act.a, 0.0, st.next_state, act.log_prob});
      s = st.next_state;
    }
    const double penalty = feasible_costs.empty() ? 1.0 : cfg.infeasible_penalty * median(feasible_costs);
    double sum = 0.0, nfeas = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (!feasible[i]) raw[i] = -penalty;
      sum += raw[i];
      nfeas += feasible[i] ? 1.0 : 0.0;
      abs_sum += std::abs(raw[i]);
      ++abs_count;
    }
    out.curve.push_back(sum / static_cast<double>(raw.size()));
    out.feasible_rate.push_back(nfeas / static_cast<double>(raw.size()));
    out.transitions += static_cast<Index>(batch.size());

    const double scale = abs_sum > 0.0 ? abs_sum / static_cast<double>(abs_count) : 1.0;
    for (std::size_t i = 0; i < batch.size(); ++i) batch[i].r = raw[i] / scale;
    auto adv = gae(batch, policy, cfg);
    const auto targets = value_targets(batch, cfg);
    if (cfg.normalize_advantages && adv.size() > 1) {
      const double mean = std::accumulate(adv.begin(), adv.end(), 0.0) / static_cast<double>(adv.size());
      double var = 0.0;
      for (double a : adv) var += (a - mean) * (a - mean);
      const double sd = std::sqrt(var / static_cast<double>(adv.size()));
      for (double& a : adv) a = (a - mean) / (sd + 1e-8);
    }
    const std::size_t nb = std::min<std::size_t>(static_cast<std::size_t>(cfg.minibatch), batch.size());
    std::vector<std::size_t> order(batch.size());
    for (Index k = 0; k < cfg.iter_mb; ++k) {
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::shuffle(order.begin(), order.end(), rng);
      std::vector<const Transition*> mb;
      std::vector<double> mb_adv, mb_tgt;
      for (std::size_t i = 0; i < nb; ++i) {
        mb.push_back(&batch[order[i]]);
        mb_adv.push_back(adv[order[i]]);
        mb_tgt.push_back(targets[order[i]]);
      }
      if (!ppo_update(policy, mb, mb_adv, mb_tgt, cfg).ok) ++out.failed_updates;
    }
  }
  out.policy = std::move(policy);
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints: binary blob plus JSON sidecar.

namespace detail {

constexpr std::uint32_t checkpoint_magic = 0x48435050;  // "PPCH"
constexpr std::uint32_t checkpoint_version = 1;

inline void write_vec(std::ofstream& f, const Eigen::VectorXd& v) {
  const std::uint64_t n = static_cast<std::uint64_t>(v.size());
  f.write(reinterpret_cast<const char*>(&n), sizeof n);
  f.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
}

inline Eigen::VectorXd read_vec(std::ifstream& f) {
  std::uint64_t n = 0;
  f.read(reinterpret_cast<char*>(&n), sizeof n);
  require(f.good() && n < (1ULL << 32), "checkpoint: corrupt vector header");
  Eigen::VectorXd v(static_cast<Index>(n));
  f.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  require(f.good(), "checkpoint: truncated vector");
  return v;
}

inline void write_net(std::ofstream& f, const nn::Mlp& net, const nn::Adam& opt) {
  const std::uint64_t layers = net.widths().size();
  f.write(reinterpret_cast<const char*>(&layers), sizeof layers);
  for (Index w : net.widths()) {
    const std::int64_t x = w;
    f.write(reinterpret_cast<const char*>(&x), sizeof x);
  }
  write_vec(f, net.params());
  f.write(reinterpret_cast<const char*>(&opt.lr), sizeof opt.lr);
  f.write(reinterpret_cast<const char*>(&opt.steps), sizeof opt.steps);
  write_vec(f, opt.m.size() ? opt.m : Eigen::VectorXd::Zero(net.size()));
  write_vec(f, opt.v.size() ? opt.v : Eigen::VectorXd::Zero(net.size()));
}

inline void read_net(std::ifstream& f, nn::Mlp& net, nn::Adam& opt) {
  std::uint64_t layers = 0;
  f.read(reinterpret_cast<char*>(&layers), sizeof layers);
  require(f.good() && layers >= 2 && layers < 64, "checkpoint: corrupt layer count");
  std::vector<Index> w(layers);
  for (auto& x : w) {
    std::int64_t v = 0;
    f.read(reinterpret_cast<char*>(&v), sizeof v);
    x = v;
  }
  net = nn::Mlp(w.front(), std::vector<Index>(w.begin() + 1, w.end() - 1), w.back());
  const auto params = read_vec(f);
  require(params.size() == net.size(), "checkpoint: parameter count mismatch");
  net.params() = params;
  f.read(reinterpret_cast<char*>(&opt.lr), sizeof opt.lr);
  f.read(reinterpret_cast<char*>(&opt.steps), sizeof opt.steps);
  opt.m = read_vec(f);
  opt.v = read_vec(f);
}

}  // namespace detail

/// Writes <prefix>.bin and <prefix>.json.
inline void save_checkpoint(const std::string& prefix, const Policy& policy, const nlohmann::json& meta) {
  {
    std::ofstream f(prefix + ".bin", std::ios::binary);
    require(f.good(), "checkpoint: cannot open blob for writing");
    f.write(reinterpret_cast<const char*>(&detail::checkpoint_magic), sizeof detail::checkpoint_magic);
    f.write(reinterpret_cast<const char*>(&detail::checkpoint_version), sizeof detail::checkpoint_version);
    f.write(reinterpret_cast<const char*>(&policy.prob_floor), sizeof policy.prob_floor);
    detail::write_net(f, policy.actor, policy.actor_opt);
    detail::write_net(f, policy.critic, policy.critic_opt);
  }
  nlohmann::json side = meta;
  side["format_version"] = detail::checkpoint_version;
  side["actor_params"] = policy.actor.size();
  side["critic_params"] = policy.critic.size();
  Fnv1a h;
  h.numbers(std::vector<double>(policy.actor.params().data(), policy.actor.params().data() + policy.actor.size()));
  side["actor_digest"] = hex64(h.value());
  std::ofstream(prefix + ".json") << side.dump(2) << "\n";
}

inline Policy load_checkpoint(const std::string& prefix, nlohmann::json* meta = nullptr) {
  std::ifstream f(prefix + ".bin", std::ios::binary);
  require(f.good(), "checkpoint: cannot open blob");
  std::uint32_t magic = 0, version = 0;
  f.read(reinterpret_cast<char*>(&magic), sizeof magic);
  f.read(reinterpret_cast<char*>(&version), sizeof version);
  require(magic == detail::checkpoint_magic, "checkpoint: bad magic");
  require(version == detail::checkpoint_version, "checkpoint: unsupported version");
  Policy p;
  f.read(reinterpret_cast<char*>(&p.prob_floor), sizeof p.prob_floor);
  detail::read_net(f, p.actor, p.actor_opt);
  detail::read_net(f, p.critic, p.critic_opt);
  if (meta) {
    std::ifstream j(prefix + ".json");
    if (j.good()) *meta = nlohmann::json::parse(j);
  }
  return p;
}

}  // namespace hapcache

#endif  // HAPCACHE_PPO_HPP
