#ifndef HAPCACHE_HARNESS_HPP
#define HAPCACHE_HARNESS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "hapcache/beamforming.hpp"
#include "hapcache/channel.hpp"
#include "hapcache/core.hpp"
#include "hapcache/ppo.hpp"
#include "hapcache/routing.hpp"
#include "hapcache/topology.hpp"
#include "hapcache/traffic.hpp"
#include "json.hpp"

namespace hapcache {

// ---------------------------------------------------------------------------
// Configuration

struct ScenarioConfig {
  std::string profile = "desk";
  TopologyConfig topology;
  Index num_contents = 30;
  Index n_sto = 10;
  double omega = 1.0;
  double mu_cac = 10e6;
  double mu_acc = 4e6;
  double skew_min = 0.5;
  double skew_max = 4.0;
  FsoParams fso;
  RfParams rf;
  PpoConfig ppo;
  Index eval_episodes = 4;
  /// Training cycles through this many episodes; 0 draws a fresh one per
  /// iteration.
  Index train_episodes = 0;
  std::uint64_t seed = 1;
  /// B1 trains its own policy against unicast routing; otherwise it reuses
  /// the proposed policy.
  bool b1_trains_unicast = true;

  static ScenarioConfig full() {
    ScenarioConfig c;
    c.profile = "full";
    c.topology.num_haps = 7;
    c.topology.num_dcs = 2;
    c.topology.num_users = 105;
    c.num_contents = 30;
    c.n_sto = 10;
    c.rf.antennas = 6;
    c.ppo.horizon = 32;
    c.ppo.iter_max = 300;
    return c;
  }

  static ScenarioConfig desk() {
    ScenarioConfig c;
    c.profile = "desk";
    c.topology.num_haps = 3;
    c.topology.num_dcs = 1;
    c.topology.num_users = 12;
    c.num_contents = 5;
    c.n_sto = 2;
    c.rf.antennas = 3;
    c.ppo.horizon = 16;
    c.ppo.iter_max = 300;
    c.ppo.lr_actor = 1e-3;
    c.ppo.lr_critic = 1e-3;
    c.train_episodes = 32;
    return c;
  }

  static ScenarioConfig named(const std::string& name) {
    if (name == "desk") return desk();
    if (name == "full") return full();
    throw std::invalid_argument("unknown profile: " + name);
  }

  void validate() const {
    require(topology.num_haps >= 1 && topology.num_dcs >= 1, "scenario: need at least one HAP and one data center");
    require(num_contents >= 1 && n_sto >= 0, "scenario: invalid catalog or capacity");
    require(omega >= 0.0 && mu_cac > 0.0 && mu_acc > 0.0, "scenario: invalid rates or weight");
    require(eval_episodes >= 1 && train_episodes >= 0, "scenario: invalid episode counts");
    fso.validate();
    require(rf.antennas >= 1 && rf.bandwidth_hz > 0.0, "scenario: invalid RF parameters");
    ppo.validate();
  }

  /// Sets one sweep axis. Rates and bandwidths are in SI units.
  void set_axis(const std::string& axis, double v) {
    if (axis == "contents") num_contents = static_cast<Index>(std::llround(v));
    else if (axis == "users") topology.num_users = static_cast<Index>(std::llround(v));
    else if (axis == "mu_cac") mu_cac = v;
    else if (axis == "mu_acc") mu_acc = v;
    else if (axis == "n_sto") n_sto = static_cast<Index>(std::llround(v));
    else if (axis == "b_fso") fso.bandwidth_hz = v;
    else if (axis == "b_rf") rf.bandwidth_hz = v;
    else if (axis == "visibility") fso.visibility_km = v;
    else if (axis == "omega") omega = v;
    else throw std::invalid_argument("unknown sweep axis: " + axis);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["profile"] = profile;
    j["topology"] = {{"num_haps", topology.num_haps},
                     {"num_dcs", topology.num_dcs},
                     {"num_users", topology.num_users},
                     {"coverage_radius_m", topology.coverage_radius_m},
                     {"spacing_min_m", topology.spacing_min_m},
                     {"spacing_max_m", topology.spacing_max_m},
                     {"altitude_m", topology.altitude_m}};
    j["num_contents"] = num_contents;
    j["n_sto"] = n_sto;
    j["omega"] = omega;
    j["mu_cac"] = mu_cac;
    j["mu_acc"] = mu_acc;
    j["skew_min"] = skew_min;
    j["skew_max"] = skew_max;
    j["fso"] = {{"visibility_km", fso.visibility_km},
                {"wavelength_nm", fso.wavelength_nm},
                {"responsivity", fso.responsivity},
                {"noise_variance", fso.noise_variance},
                {"weibull_phi", fso.weibull_phi},
                {"weibull_varsigma", fso.weibull_varsigma},
                {"weibull_scale", fso.weibull_scale},
                {"pointing_sigma_rad", fso.pointing_sigma_rad},
                {"beamwidth_rad", fso.beamwidth_rad},
                {"aperture_radius_m", fso.aperture_radius_m},
                {"bandwidth_hz", fso.bandwidth_hz},
                {"p_max_w", std::isfinite(fso.p_max_w) ? nlohmann::json(fso.p_max_w) : nlohmann::json("inf")}};
    j["rf"] = {{"antennas", rf.antennas},
               {"carrier_hz", rf.carrier_hz},
               {"rician_k", rf.rician_k},
               {"bandwidth_hz", rf.bandwidth_hz},
               {"noise_figure_db", rf.noise_figure_db},
               {"noise_power_w", rf.noise_power_w}};
    j["ppo"] = ppo;
    j["eval_episodes"] = eval_episodes;
    j["train_episodes"] = train_episodes;
    j["seed"] = seed;
    j["b1_trains_unicast"] = b1_trains_unicast;
    return j;
  }

  /// Overlays the keys present in `j` on top of the named profile (or this).
  static ScenarioConfig from_json(const nlohmann::json& j) {
    ScenarioConfig c = named(j.value("profile", std::string("desk")));
    if (j.contains("topology")) {
      const auto& t = j["topology"];
      c.topology.num_haps = t.value("num_haps", c.topology.num_haps);
      c.topology.num_dcs = t.value("num_dcs", c.topology.num_dcs);
      c.topology.num_users = t.value("num_users", c.topology.num_users);
      c.topology.coverage_radius_m = t.value("coverage_radius_m", c.topology.coverage_radius_m);
      c.topology.spacing_min_m = t.value("spacing_min_m", c.topology.spacing_min_m);
      c.topology.spacing_max_m = t.value("spacing_max_m", c.topology.spacing_max_m);
      c.topology.altitude_m = t.value("altitude_m", c.topology.altitude_m);
    }
    c.num_contents = j.value("num_contents", c.num_contents);
    c.n_sto = j.value("n_sto", c.n_sto);
    c.omega = j.value("omega", c.omega);
    c.mu_cac = j.value("mu_cac", c.mu_cac);
    c.mu_acc = j.value("mu_acc", c.mu_acc);
    c.skew_min = j.value("skew_min", c.skew_min);
    c.skew_max = j.value("skew_max", c.skew_max);
    if (j.contains("fso")) {
      const auto& f = j["fso"];
      c.fso.visibility_km = f.value("visibility_km", c.fso.visibility_km);
      c.fso.wavelength_nm = f.value("wavelength_nm", c.fso.wavelength_nm);
      c.fso.responsivity = f.value("responsivity", c.fso.responsivity);
      c.fso.noise_variance = f.value("noise_variance", c.fso.noise_variance);
      c.fso.weibull_phi = f.value("weibull_phi", c.fso.weibull_phi);
      c.fso.weibull_varsigma = f.value("weibull_varsigma", c.fso.weibull_varsigma);
      c.fso.weibull_scale = f.value("weibull_scale", c.fso.weibull_scale);
      c.fso.pointing_sigma_rad = f.value("pointing_sigma_rad", c.fso.pointing_sigma_rad);
      c.fso.beamwidth_rad = f.value("beamwidth_rad", c.fso.beamwidth_rad);
      c.fso.aperture_radius_m = f.value("aperture_radius_m", c.fso.aperture_radius_m);
      c.fso.bandwidth_hz = f.value("bandwidth_hz", c.fso.bandwidth_hz);
      if (f.contains("p_max_w"))
        c.fso.p_max_w = f["p_max_w"].is_string() ? std::numeric_limits<double>::infinity() : f["p_max_w"].get<double>();
    }
    if (j.contains("rf")) {
      const auto& r = j["rf"];
      c.rf.antennas = r.value("antennas", c.rf.antennas);
      c.rf.carrier_hz = r.value("carrier_hz", c.rf.carrier_hz);
      c.rf.rician_k = r.value("rician_k", c.rf.rician_k);
      c.rf.bandwidth_hz = r.value("bandwidth_hz", c.rf.bandwidth_hz);
      c.rf.noise_figure_db = r.value("noise_figure_db", c.rf.noise_figure_db);
      c.rf.noise_power_w = r.value("noise_power_w", c.rf.noise_power_w);
    }
    if (j.contains("ppo")) {
      nlohmann::json merged = c.ppo;
      merged.update(j["ppo"]);
      c.ppo = merged.get<PpoConfig>();
    }
    c.eval_episodes = j.value("eval_episodes", c.eval_episodes);
    c.train_episodes = j.value("train_episodes", c.train_episodes);
    c.seed = j.value("seed", c.seed);
    c.b1_trains_unicast = j.value("b1_trains_unicast", c.b1_trains_unicast);
    c.validate();
    return c;
  }

  std::uint64_t hash() const {
    Fnv1a h;
    h.text(to_json().dump());
    return h.value();
  }
};

// ---------------------------------------------------------------------------
// Scenario and slot inputs

enum class Phase : std::uint64_t { eval = 0, train = 1 };

struct Scenario {
  ScenarioConfig cfg;
  NetworkTopology topo;
  Catalog catalog;

  explicit Scenario(ScenarioConfig c) : cfg(std::move(c)) {
    cfg.validate();
    auto trng = stream({cfg.seed, stream_tag::topology});
    topo = build_topology(cfg.topology, trng);
    auto crng = stream({cfg.seed, stream_tag::catalog});
    catalog = make_catalog(topo.num_haps(), cfg.num_contents, cfg.mu_cac, cfg.mu_acc, crng, cfg.skew_min, cfg.skew_max);
  }

  Index num_haps() const { return topo.num_haps(); }
  Index num_contents() const { return cfg.num_contents; }
  Index state_size() const { return 2 * num_haps() * num_contents() + (cfg.ppo.time_feature ? 1 : 0); }

  /// Policy input for slot t: placement, requests and, when enabled, t / T.
  Eigen::VectorXd policy_state(const CachePlacement& z, const RequestMatrix& alpha, Index t) const {
    const auto base = encode_state(z, request_indicator(alpha, topo));
    if (!cfg.ppo.time_feature) return base;
    Eigen::VectorXd s(base.size() + 1);
    s << base, static_cast<double>(t) / static_cast<double>(cfg.ppo.horizon);
    return s;
  }
  Index action_size() const { return num_haps() * num_contents(); }
};

/// Requests and channels of one slot. Every method sees the same inputs for
/// a given (phase, episode, slot).
struct SlotInputs {
  RequestMatrix alpha;
  ChannelSnapshot channels;
};

inline SlotInputs slot_inputs(const Scenario& sc, Phase phase, Index episode, Index slot) {
  const auto ph = static_cast<std::uint64_t>(phase);
  const auto ep = static_cast<std::uint64_t>(episode);
  const auto t = static_cast<std::uint64_t>(slot);
  SlotInputs in;
  auto rq = stream({sc.cfg.seed, stream_tag::requests, ph, ep, t});
  in.alpha = sample_requests(sc.catalog, sc.topo, rq);
  auto fr = stream({sc.cfg.seed, stream_tag::fso, ph, ep, t});
  in.channels.fso = sample_fso(sc.topo, sc.cfg.fso, fr);
  auto rr = stream({sc.cfg.seed, stream_tag::rf, ph, ep, t});
  in.channels.rf = sample_rf(sc.topo, sc.cfg.rf, rr);
  return in;
}

// ---------------------------------------------------------------------------
// One slot

struct SlotResult {
  bool feasible = true;
  std::string message;  // identifies the failing session or HAP
  double pc = 0.0;
  double p_dc = 0.0;
  double p_hap = 0.0;
  double p_rf = 0.0;
  Index sessions = 0;
  RoutingStatus routing_status = RoutingStatus::optimal;
  bool routing_verified = true;
  double routing_worst_residual = 0.0;
  bool beams_ok = true;
  double min_sinr_ratio = std::numeric_limits<double>::infinity();  // achieved / target
  nlohmann::json routing_report;
  std::uint64_t fso_digest = 0;
  std::uint64_t rf_digest = 0;
};

inline BeamformingProblem beamforming_problem(const Scenario& sc, const SlotInputs& in) {
  BeamformingProblem bp;
  bp.antennas = sc.cfg.rf.antennas;
  bp.noise_power = sc.cfg.rf.noise_power();
  bp.omega = sc.cfg.omega;
  bp.channels = in.channels.rf.user_channel;
  const double delta = sc.cfg.rf.sinr_target(sc.cfg.mu_acc);
  bp.groups.assign(static_cast<std::size_t>(sc.num_haps()), {});
  for (Index k = 0; k < sc.num_haps(); ++k)
    for (Index c = 0; c < sc.num_contents(); ++c) {
      BeamGroup g{c, {}, delta};
      for (Index u : sc.topo.hap_users[static_cast<std::size_t>(k)])
        if (in.alpha(u, c)) g.users.push_back(u);
      if (!g.users.empty()) bp.groups[static_cast<std::size_t>(k)].push_back(std::move(g));
    }
  return bp;
}

inline RoutingProblem routing_problem(const Scenario& sc, const CachePlacement& z_now, const CachePlacement& z_next,
                                      const SlotInputs& in) {
  DemandProfile demand;
  demand.f_cac = caching_demand(z_now, z_next, sc.catalog);
  auto acc = access_demand(z_now, in.alpha, sc.catalog, sc.topo);
  demand.beta = acc.beta;
  demand.f_acc = acc.f_acc;
  RoutingProblem rp;
  rp.topology = &sc.topo;
  rp.sessions = build_sessions(z_now, demand, sc.topo);
  for (const auto& s : in.channels.fso) rp.g.push_back(s.g);
  rp.fso = sc.cfg.fso;
  rp.omega = sc.cfg.omega;
  rp.mu_cac = sc.cfg.mu_cac;
  rp.mu_acc = sc.cfg.mu_acc;
  return rp;
}

/// Beamforming power of one slot. It depends on requests and channels only,
/// so callers may reuse it across cache policies.
struct RfOutcome {
  bool ok = true;
  std::string message;
  double p_rf = 0.0;
  double min_sinr_ratio = std::numeric_limits<double>::infinity();
  nlohmann::json detail;
};

inline RfOutcome solve_rf(const Scenario& sc, const SlotInputs& in, Phase phase, Index episode, Index slot) {
  RfOutcome out;
  const auto bp = beamforming_problem(sc, in);
  const auto sdp = solve_sdp(bp);
  auto brng = stream({sc.cfg.seed, stream_tag::beams, static_cast<std::uint64_t>(phase),
                      static_cast<std::uint64_t>(episode), static_cast<std::uint64_t>(slot)});
  const auto beams = extract_beams(sdp, bp, brng);
  for (std::size_t k = 0; k < beams.haps.size(); ++k)
    if (beams.haps[k].status != BeamStatus::optimal) {
      out.ok = false;
      out.message = "beamforming " + std::string(to_string(beams.haps[k].status)) + " at hap" + std::to_string(k);
      return out;
    }
  out.p_rf = beams.p_rf;
  for (const auto& hap : bp.groups)
    for (const auto& g : hap)
      for (Index u : g.users)
        out.min_sinr_ratio = std::min(out.min_sinr_ratio, beams.sinr[static_cast<std::size_t>(u)] / g.delta);
  out.detail = beams.to_json(bp);
  return out;
}

inline SlotResult run_slot(const Scenario& sc, const CachePlacement& z_now, const CachePlacement& z_next,
                           const SlotInputs& in, const RfOutcome& rf, Coupling coupling = Coupling::multicast) {
  for (Index k = 0; k < z_next.rows(); ++k) require(z_next.row_sum(k) <= sc.cfg.n_sto, "run_slot: placement exceeds capacity");
  SlotResult r;
  r.fso_digest = in.channels.fso_digest();
  r.rf_digest = in.channels.rf_digest();
  const auto rp = routing_problem(sc, z_now, z_next, in);
  r.sessions = static_cast<Index>(rp.sessions.size());
  const auto sol = solve_routing(rp, coupling);
  r.routing_status = sol.status;
  if (!sol.ok()) {
    r.feasible = false;
    r.message = "routing " + std::string(to_string(sol.status)) + ": " + sol.message;
  } else {
    const auto rep = check_feasibility(rp, sol);
    r.routing_verified = rep.pass();
    r.routing_worst_residual = rep.worst();
    r.routing_report = rep.to_json();
    r.p_dc = sol.p_fso_dc;
    r.p_hap = sol.p_fso_hap;
  }
  r.beams_ok = rf.ok;
  r.min_sinr_ratio = rf.min_sinr_ratio;
  if (!rf.ok) {
    r.feasible = false;
    r.message += (r.message.empty() ? "" : "; ") + rf.message;
  }
  r.p_rf = rf.p_rf;
  if (r.feasible)
    r.pc = r.p_dc + sc.cfg.omega * (r.p_hap + r.p_rf);
  else
    r.pc = r.p_dc = r.p_hap = r.p_rf = std::numeric_limits<double>::quiet_NaN();
  return r;
}

inline SlotResult run_slot(const Scenario& sc, const CachePlacement& z_now, const CachePlacement& z_next,
                           const SlotInputs& in, Phase phase, Index episode, Index slot,
                           Coupling coupling = Coupling::multicast) {
  return run_slot(sc, z_now, z_next, in, solve_rf(sc, in, phase, episode, slot), coupling);
}

// ---------------------------------------------------------------------------
// Environment for training

class CachingEnvironment : public Environment {
 public:
  CachingEnvironment(const Scenario& sc, Coupling coupling, Phase phase = Phase::train)
      : sc_(sc), coupling_(coupling), phase_(phase) {}

  Index state_size() const override { return sc_.state_size(); }
  Index action_size() const override { return sc_.action_size(); }

  Eigen::VectorXd reset(Index episode) override {
    episode_ = sc_.cfg.train_episodes > 0 ? episode % sc_.cfg.train_episodes : episode;
    t_ = 0;
    z_ = CachePlacement(sc_.num_haps(), sc_.num_contents());
    in_ = slot_inputs(sc_, phase_, episode_, t_);
    return state();
  }

  Step step(const Eigen::VectorXd& action) override {
    const auto z_next = proc_act(action, sc_.num_haps(), sc_.num_contents(), sc_.cfg.n_sto);
    if (sc_.cfg.train_episodes > 0) {
      // Episodes recur, so identical slots are solved once.
      std::string key(reinterpret_cast<const char*>(z_.flat().data()), z_.flat().size());
      key.append(reinterpret_cast<const char*>(z_next.flat().data()), z_next.flat().size());
      auto& slot = memo_[{episode_, t_}];
      auto it = slot.find(key);
      if (it == slot.end()) {
        auto rf = rf_.find({episode_, t_});
        if (rf == rf_.end()) rf = rf_.emplace(std::make_pair(episode_, t_), solve_rf(sc_, in_, phase_, episode_, t_)).first;
        it = slot.emplace(key, run_slot(sc_, z_, z_next, in_, rf->second, coupling_)).first;
      }
      last_ = it->second;
    } else {
      last_ = run_slot(sc_, z_, z_next, in_, phase_, episode_, t_, coupling_);
    }
    z_ = z_next;
    ++t_;
    in_ = slot_inputs(sc_, phase_, episode_, t_);
    return {state(), last_.pc, last_.feasible};
  }

  const SlotResult& last() const { return last_; }

 private:
  Eigen::VectorXd state() const { return sc_.policy_state(z_, in_.alpha, t_); }

  const Scenario& sc_;
  Coupling coupling_;
  Phase phase_;
  Index episode_ = 0;
  Index t_ = 0;
  CachePlacement z_;
  SlotInputs in_;
  SlotResult last_;
  std::map<std::pair<Index, Index>, RfOutcome> rf_;
  std::map<std::pair<Index, Index>, std::map<std::string, SlotResult>> memo_;
};

// ---------------------------------------------------------------------------
// Methods

enum class Method { proposed, b1, b2, b3, b4 };

inline const std::vector<Method>& all_methods() {
  static const std::vector<Method> m = {Method::proposed, Method::b1, Method::b2, Method::b3, Method::b4};
  return m;
}

inline std::string to_string(Method m) {
  switch (m) {
    case Method::proposed: return "proposed";
    case Method::b1: return "B1";
    case Method::b2: return "B2";
    case Method::b3: return "B3";
    case Method::b4: return "B4";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  for (Method m : all_methods())
    if (to_string(m) == s) return m;
  throw std::invalid_argument("unknown method: " + s);
}

inline bool uses_policy(Method m) { return m == Method::proposed || m == Method::b1; }
inline Coupling coupling_of(Method m) { return m == Method::b1 ? Coupling::unicast : Coupling::multicast; }

/// Top n_sto contents per HAP by the upcoming slot's request count; ties and
/// spare room go to contents already cached, so nothing unrequested is
/// fetched.
inline CachePlacement popular_placement(const Scenario& sc, const CachePlacement& z_now, const RequestMatrix& upcoming) {
  const Index K = sc.num_haps(), C = sc.num_contents();
  CachePlacement z(K, C);
  for (Index k = 0; k < K; ++k) {
    std::vector<Index> count(static_cast<std::size_t>(C), 0);
    for (Index u : sc.topo.hap_users[static_cast<std::size_t>(k)])
      for (Index c = 0; c < C; ++c) count[static_cast<std::size_t>(c)] += upcoming(u, c);
    std::vector<Index> order(static_cast<std::size_t>(C));
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
      const auto ca = count[static_cast<std::size_t>(a)], cb = count[static_cast<std::size_t>(b)];
      if (ca != cb) return ca > cb;
      return z_now(k, a) > z_now(k, b);
    });
    Index kept = 0;
    for (Index c : order) {
      if (kept >= sc.cfg.n_sto) break;
      if (count[static_cast<std::size_t>(c)] > 0 || z_now(k, c)) {
        z(k, c) = 1;
        ++kept;
      }
    }
  }
  return z;
}

/// Uniformly random n_sto-subset per HAP, drawn once per episode.
inline CachePlacement random_placement(const Scenario& sc, Index episode) {
  auto rng = stream({sc.cfg.seed, stream_tag::baseline, 3, static_cast<std::uint64_t>(episode)});
  CachePlacement z(sc.num_haps(), sc.num_contents());
  for (Index k = 0; k < sc.num_haps(); ++k) {
    std::vector<Index> order(static_cast<std::size_t>(sc.num_contents()));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (Index i = 0; i < std::min(sc.cfg.n_sto, sc.num_contents()); ++i) z(k, order[static_cast<std::size_t>(i)]) = 1;
  }
  return z;
}

// ---------------------------------------------------------------------------
// Run records

struct SlotRecord {
  Index episode = 0;
  Index slot = 0;
  CachePlacement z_next;
  std::vector<Index> requests;  // content per user
  SlotResult result;
  double reward = 0.0;
};

struct RunRecord {
  std::string method;
  std::string axis;
  double value = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t config_hash = 0;
  double omega = 1.0;
  Index n_sto = 0;
  std::vector<SlotRecord> slots;
  std::vector<double> learning_curve;
  double wall_clock_s = 0.0;

  double mean_pc() const { return mean_of([](const SlotResult& r) { return r.pc; }); }
  double mean_p_dc() const { return mean_of([](const SlotResult& r) { return r.p_dc; }); }
  double mean_p_hap() const { return mean_of([](const SlotResult& r) { return r.p_hap; }); }
  double mean_p_rf() const { return mean_of([](const SlotResult& r) { return r.p_rf; }); }
  double feasible_rate() const {
    if (slots.empty()) return 0.0;
    double n = 0.0;
    for (const auto& s : slots) n += s.result.feasible ? 1.0 : 0.0;
    return n / static_cast<double>(slots.size());
  }

  /// Digest of everything except wall-clock time.
  std::uint64_t digest() const {
    Fnv1a h;
    h.text(method);
    h.number(static_cast<std::int64_t>(config_hash));
    for (const auto& s : slots) {
      h.bytes(s.z_next.flat().data(), s.z_next.flat().size());
      for (Index c : s.requests) h.number(static_cast<std::int64_t>(c));
      h.numbers(std::vector<double>{s.result.pc, s.result.p_dc, s.result.p_hap, s.result.p_rf, s.reward});
      h.number(static_cast<std::int64_t>(s.result.fso_digest));
      h.number(static_cast<std::int64_t>(s.result.rf_digest));
    }
    h.numbers(learning_curve);
    return h.value();
  }

  nlohmann::json to_json() const {
    nlohmann::json j = {{"method", method},
                        {"axis", axis},
                        {"value", value},
                        {"seed", seed},
                        {"config_hash", hex64(config_hash)},
                        {"omega", omega},
                        {"n_sto", n_sto},
                        {"learning_curve", learning_curve},
                        {"wall_clock_s", wall_clock_s},
                        {"digest", hex64(digest())}};
    auto num = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
    auto& arr = j["slots"] = nlohmann::json::array();
    for (const auto& s : slots) {
      std::vector<std::vector<int>> z;
      for (Index k = 0; k < s.z_next.rows(); ++k) {
        z.emplace_back();
        for (Index c = 0; c < s.z_next.cols(); ++c) z.back().push_back(s.z_next(k, c));
      }
      const auto& r = s.result;
      arr.push_back({{"episode", s.episode},
                     {"slot", s.slot},
                     {"z_next", z},
                     {"requests", s.requests},
                     {"fso_digest", hex64(r.fso_digest)},
                     {"rf_digest", hex64(r.rf_digest)},
                     {"sessions", r.sessions},
                     {"routing_status", to_string(r.routing_status)},
                     {"routing_verified", r.routing_verified},
                     {"routing_worst_residual", r.routing_worst_residual},
                     {"routing_report", r.routing_report},
                     {"min_sinr_ratio", num(r.min_sinr_ratio)},
                     {"feasible", r.feasible},
                     {"message", r.message},
                     {"pc", num(r.pc)},
                     {"p_dc", num(r.p_dc)},
                     {"p_hap", num(r.p_hap)},
                     {"p_rf", num(r.p_rf)},
                     {"reward", num(s.reward)}});
    }
    return j;
  }

  static std::string csv_header() { return "method,axis,value,seed,slot,pc,p_dc,p_hap,p_rf,feasible"; }

  /// One line per slot; `slot` counts across evaluation episodes.
  std::string csv_rows() const {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const auto& r = slots[i].result;
      os << method << ',' << axis << ',' << value << ',' << seed << ',' << i << ',' << r.pc << ',' << r.p_dc << ','
         << r.p_hap << ',' << r.p_rf << ',' << (r.feasible ? 1 : 0) << '\n';
    }
    return os.str();
  }

 private:
  template <class F>
  double mean_of(F f) const {
    double s = 0.0, n = 0.0;
    for (const auto& x : slots)
      if (x.result.feasible) {
        s += f(x.result);
        n += 1.0;
      }
    return n > 0.0 ? s / n : std::numeric_limits<double>::quiet_NaN();
  }
};

// ---------------------------------------------------------------------------
// Training and evaluation

/// PPO policy trained on the scenario's training episodes.
inline TrainResult train_policy(const Scenario& sc, Coupling coupling) {
  const std::uint64_t tag = coupling == Coupling::multicast ? 0 : 1;
  auto init = stream({sc.cfg.seed, stream_tag::init, tag});
  Policy p = Policy::make(sc.state_size(), sc.action_size(), sc.cfg.ppo, init);
  auto rng = stream({sc.cfg.seed, stream_tag::policy, tag});
  CachingEnvironment env(sc, coupling, Phase::train);
  return train(env, std::move(p), sc.cfg.ppo, rng);
}

/// Greedy evaluation over the scenario's evaluation episodes. `rf_cache`,
/// when given, memoizes the beamforming outcome per (episode, slot).
inline RunRecord evaluate(const Scenario& sc, Method method, const Policy* policy,
                          std::map<std::pair<Index, Index>, RfOutcome>* rf_cache = nullptr) {
  require(!uses_policy(method) || policy != nullptr, "evaluate: method needs a trained policy");
  const auto start = std::chrono::steady_clock::now();
  RunRecord rec;
  rec.method = to_string(method);
  rec.seed = sc.cfg.seed;
  rec.config_hash = sc.cfg.hash();
  rec.omega = sc.cfg.omega;
  rec.n_sto = sc.cfg.n_sto;
  const Index K = sc.num_haps(), C = sc.num_contents(), T = sc.cfg.ppo.horizon;
  for (Index e = 0; e < sc.cfg.eval_episodes; ++e) {
    CachePlacement z(K, C);
    const CachePlacement fixed = method == Method::b3 ? random_placement(sc, e) : CachePlacement(K, C);
    SlotInputs in = slot_inputs(sc, Phase::eval, e, 0);
    for (Index t = 0; t < T; ++t) {
      SlotInputs next = slot_inputs(sc, Phase::eval, e, t + 1);
      CachePlacement z_next(K, C);
      switch (method) {
        case Method::proposed:
        case Method::b1:
          z_next = proc_act(greedy_action(*policy, sc.policy_state(z, in.alpha, t)), K, C, sc.cfg.n_sto);
          break;
        case Method::b2: z_next = popular_placement(sc, z, next.alpha); break;
        case Method::b3: z_next = fixed; break;
        case Method::b4: break;
      }
      RfOutcome rf;
      if (rf_cache) {
        auto it = rf_cache->find({e, t});
        if (it == rf_cache->end()) it = rf_cache->emplace(std::make_pair(e, t), solve_rf(sc, in, Phase::eval, e, t)).first;
        rf = it->second;
      } else {
        rf = solve_rf(sc, in, Phase::eval, e, t);
      }
      SlotRecord sr;
      sr.episode = e;
      sr.slot = t;
      sr.z_next = z_next;
      for (Index u = 0; u < in.alpha.rows(); ++u)
        for (Index c = 0; c < C; ++c)
          if (in.alpha(u, c)) sr.requests.push_back(c);
      sr.result = run_slot(sc, z, z_next, in, rf, coupling_of(method));
      sr.reward = -sr.result.pc;
      rec.slots.push_back(std::move(sr));
      z = z_next;
      in = std::move(next);
    }
  }
  rec.wall_clock_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

/// All five methods on one scenario. Policies are trained here.
inline std::vector<RunRecord> run_all_methods(const Scenario& sc, const std::vector<Method>& methods = all_methods()) {
  std::map<std::pair<Index, Index>, RfOutcome> rf_cache;
  std::optional<TrainResult> proposed, unicast;
  auto need = [&](Method m) { return std::find(methods.begin(), methods.end(), m) != methods.end(); };
  if (need(Method::proposed) || (need(Method::b1) && !sc.cfg.b1_trains_unicast)) proposed = train_policy(sc, Coupling::multicast);
  if (need(Method::b1) && sc.cfg.b1_trains_unicast) unicast = train_policy(sc, Coupling::unicast);
  std::vector<RunRecord> out;
  for (Method m : methods) {
    const TrainResult* tr = nullptr;
    if (m == Method::proposed) tr = &*proposed;
    if (m == Method::b1) tr = sc.cfg.b1_trains_unicast ? &*unicast : &*proposed;
    auto rec = evaluate(sc, m, tr ? &tr->policy : nullptr, &rf_cache);
    if (tr) rec.learning_curve = tr->curve;
    out.push_back(std::move(rec));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Verification of stored records

struct VerifyReport {
  std::vector<std::string> failures;
  Index slots_checked = 0;
  bool pass() const { return failures.empty(); }
};

inline VerifyReport verify_record(const nlohmann::json& rec, double rel_tol = 1e-9) {
  VerifyReport rep;
  const double omega = rec.at("omega").get<double>();
  const Index n_sto = rec.at("n_sto").get<Index>();
  for (const auto& s : rec.at("slots")) {
    ++rep.slots_checked;
    const std::string where = "episode " + std::to_string(s.at("episode").get<Index>()) + " slot " +
                              std::to_string(s.at("slot").get<Index>());
    for (const auto& row : s.at("z_next")) {
      Index sum = 0;
      for (const auto& b : row) sum += b.get<Index>();
      if (sum > n_sto) rep.failures.push_back(where + ": cache capacity exceeded");
    }
    if (!s.at("feasible").get<bool>()) continue;
    const double pc = s.at("pc").get<double>();
    const double recomputed = s.at("p_dc").get<double>() + omega * (s.at("p_hap").get<double>() + s.at("p_rf").get<double>());
    if (std::abs(pc - recomputed) > rel_tol * std::max(1.0, std::abs(pc)))
      rep.failures.push_back(where + ": pc does not match its components");
    if (std::abs(s.at("reward").get<double>() + pc) > rel_tol * std::max(1.0, std::abs(pc)))
      rep.failures.push_back(where + ": reward is not -pc");
    if (!s.at("routing_verified").get<bool>()) rep.failures.push_back(where + ": routing residuals above tolerance");
    if (s.at("min_sinr_ratio").is_number() && s.at("min_sinr_ratio").get<double>() < 1.0 - 1e-6)
      rep.failures.push_back(where + ": SINR below target");
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Sweeps and reporting

struct CellSummary {
  std::string method;
  std::string axis;
  double value = 0.0;
  std::uint64_t seed = 0;
  double pc = 0.0;
  double p_dc = 0.0;
  double p_hap = 0.0;
  double p_rf = 0.0;
  double feasible_rate = 0.0;
  std::string error;

  static std::string csv_header() { return "method,axis,value,seed,mean_pc,mean_p_dc,mean_p_hap,mean_p_rf,feasible_rate,error"; }
  std::string csv_row() const {
    std::ostringstream os;
    os.precision(17);
    os << method << ',' << axis << ',' << value << ',' << seed << ',' << pc << ',' << p_dc << ',' << p_hap << ','
       << p_rf << ',' << feasible_rate << ',' << error;
    return os.str();
  }
};

inline CellSummary summarize(const RunRecord& r) {
  return {r.method, r.axis, r.value, r.seed, r.mean_pc(), r.mean_p_dc(), r.mean_p_hap(), r.mean_p_rf(), r.feasible_rate(), ""};
}

inline std::filesystem::path results_dir(const std::string& override_dir = "") {
  if (!override_dir.empty()) return override_dir;
  if (const char* env = std::getenv("HAPCACHE_RESULTS"); env && *env) return env;
  return "results";
}

inline void write_atomically(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp);
    require(f.good(), "cannot open output file");
    f << content;
  }
  std::filesystem::rename(tmp, path);
}

/// Runs every (value, seed) cell of one axis; a failing cell is recorded and
/// the sweep continues. Records go to `dir` when it is not empty.
inline std::vector<CellSummary> sweep(const ScenarioConfig& base, const std::string& axis, const std::vector<double>& values,
                                      const std::vector<std::uint64_t>& seeds, const std::filesystem::path& dir = {},
                                      const std::vector<Method>& methods = all_methods(),
                                      const std::function<void(const std::string&)>& progress = {}) {
  require(!seeds.empty() && !values.empty(), "sweep: need at least one value and one seed");
  std::vector<CellSummary> out;
  for (double v : values)
    for (std::uint64_t seed : seeds) {
      ScenarioConfig cfg = base;
      cfg.set_axis(axis, v);
      cfg.seed = seed;
      std::ostringstream tag;
      tag << axis << '_' << v << "_seed" << seed;
      try {
        const Scenario sc(cfg);
        auto recs = run_all_methods(sc, methods);
        std::string rows;
        for (auto& r : recs) {
          r.axis = axis;
          r.value = v;
          out.push_back(summarize(r));
          rows += r.csv_rows();
          if (!dir.empty()) write_atomically(dir / "runs" / (r.method + "_" + tag.str() + ".json"), r.to_json().dump(1));
        }
        if (!dir.empty()) write_atomically(dir / "cells" / (tag.str() + ".csv"), rows);
      } catch (const std::exception& e) {
        for (Method m : methods) {
          CellSummary c{to_string(m), axis, v, seed, std::numeric_limits<double>::quiet_NaN(), 0, 0, 0, 0.0, e.what()};
          std::replace(c.error.begin(), c.error.end(), ',', ';');
          out.push_back(c);
        }
      }
      if (progress) progress(tag.str());
    }
  if (!dir.empty()) {
    std::string s = CellSummary::csv_header() + "\n";
    for (const auto& c : out) s += c.csv_row() + "\n";
    write_atomically(dir / ("summary_" + axis + ".csv"), s);
  }
  return out;
}

/// Mean of `pc` per (method, value) over seeds, skipping failed cells.
inline std::map<std::string, std::map<double, double>> mean_by_method(const std::vector<CellSummary>& cells) {
  std::map<std::string, std::map<double, std::pair<double, int>>> acc;
  for (const auto& c : cells)
    if (std::isfinite(c.pc)) {
      auto& a = acc[c.method][c.value];
      a.first += c.pc;
      a.second += 1;
    }
  std::map<std::string, std::map<double, double>> out;
  for (const auto& [m, row] : acc)
    for (const auto& [v, a] : row) out[m][v] = a.first / a.second;
  return out;
}

inline std::vector<CellSummary> read_summary_csv(const std::filesystem::path& path) {
  std::ifstream f(path);
  require(f.good(), "cannot open summary file");
  std::string line;
  std::getline(f, line);
  std::vector<CellSummary> out;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cols.push_back(cell);
    if (cols.size() < 9) continue;
    CellSummary c;
    c.method = cols[0];
    c.axis = cols[1];
    c.value = std::stod(cols[2]);
    c.seed = std::stoull(cols[3]);
    auto num = [](const std::string& s) {
      try {
        return std::stod(s);
      } catch (...) {
        return std::numeric_limits<double>::quiet_NaN();
      }
    };
    c.pc = num(cols[4]);
    c.p_dc = num(cols[5]);
    c.p_hap = num(cols[6]);
    c.p_rf = num(cols[7]);
    c.feasible_rate = num(cols[8]);
    if (cols.size() > 9) c.error = cols[9];
    out.push_back(c);
  }
  return out;
}

namespace svg {

inline std::string fmt(double x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

inline const char* color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b"};
  return palette[i % 6];
}

/// Grouped bars: one group per axis value, one bar per series. Log scale when
/// the values span more than three decades.
inline std::string grouped_bars(const std::string& title, const std::string& xlabel,
                                const std::map<std::string, std::map<double, double>>& series) {
  std::vector<double> xs;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (const auto& [name, row] : series)
    for (const auto& [x, y] : row) {
      if (std::find(xs.begin(), xs.end(), x) == xs.end()) xs.push_back(x);
      if (y > 0.0) {
        lo = std::min(lo, y);
        hi = std::max(hi, y);
      }
    }
  std::sort(xs.begin(), xs.end());
  const double W = 720, H = 420, L = 70, R = 130, Tm = 40, B = 60;
  const bool log = hi > 0.0 && lo < hi && hi / lo > 1e3;
  auto scale = [&](double y) {
    if (!(y > 0.0) || hi <= 0.0) return 0.0;
    if (log) return (std::log10(y) - std::log10(lo) + 0.3) / (std::log10(hi) - std::log10(lo) + 0.3);
    return y / hi;
  };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n"
     << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\" font-size=\"13\">" << xlabel
     << "</text>\n"
     << "<text x=\"16\" y=\"" << H / 2 << "\" font-size=\"13\" transform=\"rotate(-90 16 " << H / 2
     << ")\" text-anchor=\"middle\">mean power cost (W)" << (log ? ", log" : "") << "</text>\n";
  const double gw = (W - L - R) / std::max<std::size_t>(xs.size(), 1);
  const double bw = gw * 0.8 / std::max<std::size_t>(series.size(), 1);
  std::size_t si = 0;
  for (const auto& [name, row] : series) {
    for (std::size_t xi = 0; xi < xs.size(); ++xi) {
      auto it = row.find(xs[xi]);
      if (it == row.end()) continue;
      const double h = scale(it->second) * (H - Tm - B);
      const double x = L + gw * static_cast<double>(xi) + gw * 0.1 + bw * static_cast<double>(si);
      os << "<rect x=\"" << x << "\" y=\"" << H - B - h << "\" width=\"" << bw << "\" height=\"" << h << "\" fill=\""
         << color(si) << "\"><title>" << name << " " << fmt(xs[xi]) << ": " << fmt(it->second) << "</title></rect>\n";
    }
    os << "<rect x=\"" << W - R + 15 << "\" y=\"" << Tm + 20 * si << "\" width=\"12\" height=\"12\" fill=\"" << color(si)
       << "\"/><text x=\"" << W - R + 32 << "\" y=\"" << Tm + 20 * si + 11 << "\" font-size=\"12\">" << name << "</text>\n";
    ++si;
  }
  for (std::size_t xi = 0; xi < xs.size(); ++xi)
    os << "<text x=\"" << L + gw * (static_cast<double>(xi) + 0.5) << "\" y=\"" << H - B + 18
       << "\" text-anchor=\"middle\" font-size=\"12\">" << fmt(xs[xi]) << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

/// Line plot of one or more curves against their index.
inline std::string curves(const std::string& title, const std::map<std::string, std::vector<double>>& lines) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t n = 1;
  for (const auto& [name, ys] : lines) {
    n = std::max(n, ys.size());
    for (double y : ys)
      if (std::isfinite(y)) {
        lo = std::min(lo, y);
        hi = std::max(hi, y);
      }
  }
  if (!(hi > lo)) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double W = 720, H = 420, L = 80, R = 130, Tm = 40, B = 50;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << title << "</text>\n"
     << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n"
     << "<text x=\"" << (L + W - R) / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"13\">iteration</text>\n"
     << "<text x=\"" << L - 5 << "\" y=\"" << Tm + 5 << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(hi) << "</text>\n"
     << "<text x=\"" << L - 5 << "\" y=\"" << H - B << "\" text-anchor=\"end\" font-size=\"11\">" << fmt(lo) << "</text>\n";
  std::size_t si = 0;
  for (const auto& [name, ys] : lines) {
    os << "<polyline fill=\"none\" stroke=\"" << color(si) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < ys.size(); ++i) {
      if (!std::isfinite(ys[i])) continue;
      const double x = L + (W - L - R) * static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(n - 1, 1));
      const double y = H - B - (H - Tm - B) * (ys[i] - lo) / (hi - lo);
      os << x << ',' << y << ' ';
    }
    os << "\"/>\n<text x=\"" << W - R + 15 << "\" y=\"" << Tm + 20 * si + 11 << "\" font-size=\"12\" fill=\"" << color(si)
       << "\">" << name << "</text>\n";
    ++si;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace svg

/// Writes one grouped-bar plot per axis found in the summaries.
inline std::vector<std::filesystem::path> write_plots(const std::vector<CellSummary>& cells, const std::filesystem::path& dir) {
  std::map<std::string, std::vector<CellSummary>> by_axis;
  for (const auto& c : cells) by_axis[c.axis].push_back(c);
  std::vector<std::filesystem::path> out;
  for (const auto& [axis, rows] : by_axis) {
    const auto path = dir / ("pc_vs_" + axis + ".svg");
    write_atomically(path, svg::grouped_bars("Average power cost vs " + axis, axis, mean_by_method(rows)));
    out.push_back(path);
  }
  return out;
}

}  // namespace hapcache

#endif  // HAPCACHE_HARNESS_HPP
