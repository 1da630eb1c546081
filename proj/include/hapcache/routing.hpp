#ifndef HAPCACHE_ROUTING_HPP
#define HAPCACHE_ROUTING_HPP

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "hapcache/channel.hpp"
#include "hapcache/conic.hpp"
#include "hapcache/topology.hpp"
#include "hapcache/traffic.hpp"
#include "json.hpp"

namespace hapcache {

enum class Coupling { multicast, unicast };

struct RoutingProblem {
  const NetworkTopology* topology = nullptr;
  std::vector<MulticastSession> sessions;
  std::vector<double> g;  // per link
  FsoParams fso;
  double omega = 1.0;
  double mu_cac = 10e6;
  double mu_acc = 4e6;
  /// Optional explicit per-link rate caps in bits/s (empty = none).
  std::vector<double> rate_cap;
  /// Each HAP shares one slot budget between its incoming and outgoing links.
  bool half_duplex = true;

  const NetworkTopology& topo() const { return *topology; }
  double link_weight(Index l) const { return topo().from_dc(l) ? 1.0 : omega; }
  double rate_unit() const { return std::max(mu_cac, mu_acc); }
  double demand(const MulticastSession& s, std::size_t j) const { return j < s.dest_cac.size() ? mu_cac : mu_acc; }
};

enum class RoutingStatus { optimal, infeasible, unreachable, numerical_error };

inline const char* to_string(RoutingStatus s) {
  switch (s) {
    case RoutingStatus::optimal: return "optimal";
    case RoutingStatus::infeasible: return "infeasible";
    case RoutingStatus::unreachable: return "unreachable";
    case RoutingStatus::numerical_error: return "numerical_error";
  }
  return "?";
}

struct RoutingSolution {
  RoutingStatus status = RoutingStatus::optimal;
  std::string message;
  Coupling coupling = Coupling::multicast;
  /// e[s][j][l]: conceptual flow of session s towards its j-th destination
  /// (caching destinations first), bits/s.
  std::vector<std::vector<std::vector<double>>> e;
  std::vector<std::vector<double>> eta_cac;  // [s][l]
  std::vector<std::vector<double>> eta_acc;  // [s][l]
  std::vector<double> tau;
  std::vector<double> gamma;
  std::vector<double> p_tilde;
  double objective = 0.0;
  double p_fso_dc = 0.0;
  double p_fso_hap = 0.0;
  int newton_steps = 0;

  bool ok() const { return status == RoutingStatus::optimal; }

  nlohmann::json to_json(const NetworkTopology& topo) const {
    nlohmann::json j = {{"status", to_string(status)}, {"objective", objective},
                        {"p_fso_dc", p_fso_dc},       {"p_fso_hap", p_fso_hap}};
    if (!message.empty()) j["message"] = message;
    auto& links = j["links"] = nlohmann::json::array();
    for (std::size_t l = 0; l < tau.size(); ++l) {
      if (gamma[l] == 0.0) continue;
      links.push_back({{"link", l}, {"from", topo.node_name(topo.links[l].from)},
                       {"to", topo.node_name(topo.links[l].to)}, {"tau", tau[l]},
                       {"gamma", gamma[l]}, {"p_tilde", p_tilde[l]}});
    }
    return j;
  }
};

namespace detail {

inline bool link_usable(const RoutingProblem& p, Index l) {
  const auto li = static_cast<std::size_t>(l);
  const double g = p.g[li];
  if (!(g > 0.0)) return false;
  if (std::isfinite(p.fso.p_max_w) && std::sqrt(g) * p.fso.p_max_w <= 1.0) return false;
  if (!p.rate_cap.empty() && !(p.rate_cap[li] > 0.0)) return false;
  return true;
}

// Links that may carry flow from the sources of `s` to `dest`: never out of
// the destination, never into a source.
inline std::vector<bool> allowed_links(const RoutingProblem& p, const MulticastSession& s, Index dest,
                                       bool respect_usability) {
  const auto& t = p.topo();
  const auto L = static_cast<std::size_t>(t.num_links());
  std::vector<bool> is_src(static_cast<std::size_t>(t.num_nodes()), false);
  for (Index n : s.sources) is_src[static_cast<std::size_t>(n)] = true;
  std::vector<bool> ok(L, false);
  for (std::size_t l = 0; l < L; ++l) {
    const auto& k = t.links[l];
    ok[l] = k.from != dest && !is_src[static_cast<std::size_t>(k.to)] &&
            (!respect_usability || link_usable(p, static_cast<Index>(l)));
  }
  // Keep only links on some source -> destination path, so every kept link
  // can carry strictly positive flow.
  const auto N = static_cast<std::size_t>(t.num_nodes());
  std::vector<bool> fwd(N, false), bwd(N, false);
  std::deque<Index> queue;
  for (Index n : s.sources) {
    fwd[static_cast<std::size_t>(n)] = true;
    queue.push_back(n);
  }
  while (!queue.empty()) {
    const Index n = queue.front();
    queue.pop_front();
    for (Index l : t.out_links[static_cast<std::size_t>(n)]) {
      const auto to = static_cast<std::size_t>(t.links[static_cast<std::size_t>(l)].to);
      if (ok[static_cast<std::size_t>(l)] && !fwd[to]) {
        fwd[to] = true;
        queue.push_back(static_cast<Index>(to));
      }
    }
  }
  bwd[static_cast<std::size_t>(dest)] = true;
  queue.push_back(dest);
  while (!queue.empty()) {
    const Index n = queue.front();
    queue.pop_front();
    for (Index l : t.in_links[static_cast<std::size_t>(n)]) {
      const auto from = static_cast<std::size_t>(t.links[static_cast<std::size_t>(l)].from);
      if (ok[static_cast<std::size_t>(l)] && !bwd[from]) {
        bwd[from] = true;
        queue.push_back(static_cast<Index>(from));
      }
    }
  }
  for (std::size_t l = 0; l < L; ++l)
    ok[l] = ok[l] && fwd[static_cast<std::size_t>(t.links[l].from)] && bwd[static_cast<std::size_t>(t.links[l].to)];
  return ok;
}

struct VarMap {
  std::vector<Index> gamma, tau, phat;
  std::vector<std::vector<Index>> eta_cac, eta_acc;
  std::vector<std::vector<std::vector<Index>>> e;
};

}  // namespace detail

/// Solves the per-slot backhaul power minimization with the given coupling
/// between conceptual and actual flows.
inline RoutingSolution solve_routing(const RoutingProblem& p, Coupling coupling = Coupling::multicast,
                                     const conic::Options& options = {}) {
  require(p.topology != nullptr, "routing: missing topology");
  const auto& t = p.topo();
  const Index L = t.num_links();
  const auto Ls = static_cast<std::size_t>(L);
  require(static_cast<Index>(p.g.size()) == L, "routing: one gain per link");
  require(p.rate_cap.empty() || static_cast<Index>(p.rate_cap.size()) == L, "routing: one rate cap per link");
  require(p.omega >= 0.0 && p.mu_cac > 0.0 && p.mu_acc > 0.0, "routing: invalid weights or rates");

  RoutingSolution sol;
  sol.coupling = coupling;
  const auto S = p.sessions.size();
  sol.e.resize(S);
  sol.eta_cac.assign(S, std::vector<double>(Ls, 0.0));
  sol.eta_acc.assign(S, std::vector<double>(Ls, 0.0));
  sol.tau.assign(Ls, 0.0);
  sol.gamma.assign(Ls, 0.0);
  sol.p_tilde.assign(Ls, 0.0);

  const double R = p.rate_unit();
  std::vector<std::vector<std::vector<bool>>> allowed(S);
  for (std::size_t s = 0; s < S; ++s) {
    const auto& ses = p.sessions[s];
    require(!ses.sources.empty(), "routing: session without sources");
    const auto dests = ses.destinations();
    sol.e[s].assign(dests.size(), std::vector<double>(Ls, 0.0));
    for (Index d : dests) {
      require(t.is_hap(d), "routing: destinations must be HAPs");
      auto ok = detail::allowed_links(p, ses, d, true);
      const auto& in = t.in_links[static_cast<std::size_t>(d)];
      if (std::none_of(in.begin(), in.end(), [&](Index l) { return ok[static_cast<std::size_t>(l)]; })) {
        const auto graph = detail::allowed_links(p, ses, d, false);
        const bool reachable =
            std::any_of(in.begin(), in.end(), [&](Index l) { return graph[static_cast<std::size_t>(l)]; });
        sol.status = reachable ? RoutingStatus::infeasible : RoutingStatus::unreachable;
        sol.message = "content " + std::to_string(ses.content) + " cannot reach " + t.node_name(d);
        return sol;
      }
      allowed[s].push_back(std::move(ok));
    }
  }

  conic::Program prog;
  detail::VarMap v;
  v.gamma.assign(Ls, -1);
  v.tau.assign(Ls, -1);
  v.phat.assign(Ls, -1);
  v.eta_cac.assign(S, std::vector<Index>(Ls, -1));
  v.eta_acc.assign(S, std::vector<Index>(Ls, -1));
  v.e.resize(S);

  std::vector<double> gamma_bound(Ls, 0.0);
  std::vector<bool> used(Ls, false);
  for (std::size_t s = 0; s < S; ++s) {
    const auto& ses = p.sessions[s];
    const std::size_t nd = ses.dest_cac.size() + ses.dest_acc.size();
    v.e[s].assign(nd, std::vector<Index>(Ls, -1));
    for (std::size_t j = 0; j < nd; ++j) {
      const double cap = 2.0 * p.demand(ses, j) / R;
      for (std::size_t l = 0; l < Ls; ++l) {
        if (!allowed[s][j][l]) continue;
        const Index x = prog.add_variable(0.0);
        v.e[s][j][l] = x;
        prog.inequalities.push_back(conic::LinearForm().add(x, 1.0));
        prog.inequalities.push_back(conic::LinearForm(cap).add(x, -1.0));
        used[l] = true;
      }
    }
    for (std::size_t l = 0; l < Ls; ++l) {
      for (int cls = 0; cls < 2; ++cls) {
        const std::size_t j0 = cls == 0 ? 0 : ses.dest_cac.size();
        const std::size_t j1 = cls == 0 ? ses.dest_cac.size() : nd;
        std::vector<Index> members;
        for (std::size_t j = j0; j < j1; ++j)
          if (v.e[s][j][l] >= 0) members.push_back(v.e[s][j][l]);
        if (members.empty()) continue;
        const double mu = (cls == 0 ? p.mu_cac : p.mu_acc) / R;
        const double bound = 2.0 * mu * (coupling == Coupling::unicast ? static_cast<double>(members.size()) : 1.0);
        const Index eta = prog.add_variable(0.0);
        (cls == 0 ? v.eta_cac : v.eta_acc)[s][l] = eta;
        gamma_bound[l] += bound;
        prog.inequalities.push_back(conic::LinearForm(bound).add(eta, -1.0));
        if (coupling == Coupling::multicast) {
          for (Index x : members) prog.inequalities.push_back(conic::LinearForm().add(eta, 1.0).add(x, -1.0));
        } else {
          conic::LinearForm f;
          f.add(eta, 1.0);
          for (Index x : members) f.add(x, -1.0);
          prog.inequalities.push_back(f);
        }
      }
    }
  }

  // Time fractions are carried as tau / a with a = ln2 R / B, so the cone
  // (a gamma, tau, p) becomes (gamma, tau / a, p / a) with all entries O(1).
  const double a = std::numbers::ln2 * R / p.fso.bandwidth_hz;
  for (std::size_t l = 0; l < Ls; ++l) {
    if (!used[l]) continue;
    const double g = p.g[l];
    const Index gam = prog.add_variable(0.0);
    const Index tau = prog.add_variable(0.0);
    v.gamma[l] = gam;
    v.tau[l] = tau;
    conic::LinearForm sum;
    sum.add(gam, 1.0);
    for (std::size_t s = 0; s < S; ++s) {
      if (v.eta_cac[s][l] >= 0) sum.add(v.eta_cac[s][l], -1.0);
      if (v.eta_acc[s][l] >= 0) sum.add(v.eta_acc[s][l], -1.0);
    }
    prog.inequalities.push_back(sum);
    prog.inequalities.push_back(conic::LinearForm(gamma_bound[l] + 1.0).add(gam, -1.0));
    prog.inequalities.push_back(conic::LinearForm().add(tau, 1.0));
    prog.inequalities.push_back(conic::LinearForm(1.0).add(tau, -a));
    if (std::isfinite(p.fso.p_max_w)) {
      // tau exp(a gamma / tau) / sqrt(g) <= tau p_max  <=>  a gamma <= tau ln(sqrt(g) p_max)
      prog.inequalities.push_back(
          conic::LinearForm().add(tau, std::log(std::sqrt(g) * p.fso.p_max_w)).add(gam, -1.0));
      const double per_tau =
          p.fso.bandwidth_hz / (2.0 * std::numbers::ln2 * R) * std::log1p(g * p.fso.p_max_w * p.fso.p_max_w);
      prog.inequalities.push_back(conic::LinearForm().add(tau, a * per_tau).add(gam, -1.0));
    }
    if (!p.rate_cap.empty() && std::isfinite(p.rate_cap[l]))
      prog.inequalities.push_back(conic::LinearForm(p.rate_cap[l] / R).add(gam, -1.0));
    const double w = p.link_weight(static_cast<Index>(l));
    if (w > 0.0) {
      const Index ph = prog.add_variable(w * a / std::sqrt(g));
      v.phat[l] = ph;
      prog.exp_cones.push_back(
          {conic::LinearForm().add(gam, 1.0), conic::LinearForm().add(tau, 1.0), conic::LinearForm().add(ph, 1.0)});
    }
  }

  // Scheduling budgets.
  for (Index n = 0; n < t.num_nodes(); ++n) {
    auto budget = [&](std::vector<Index> ids) {
      conic::LinearForm f(1.0);
      bool any = false;
      for (Index l : ids)
        if (v.tau[static_cast<std::size_t>(l)] >= 0) {
          f.add(v.tau[static_cast<std::size_t>(l)], -a);
          any = true;
        }
      if (any) prog.inequalities.push_back(f);
    };
    const auto& out = t.out_links[static_cast<std::size_t>(n)];
    const auto& in = t.in_links[static_cast<std::size_t>(n)];
    if (t.is_hap(n) && p.half_duplex) {
      std::vector<Index> both = in;
      both.insert(both.end(), out.begin(), out.end());
      budget(both);
    } else {
      budget(out);
      if (t.is_hap(n)) budget(in);
    }
  }

  // Demand, conservation and source supply per conceptual flow.
  for (std::size_t s = 0; s < S; ++s) {
    const auto& ses = p.sessions[s];
    const auto dests = ses.destinations();
    std::vector<bool> is_src(static_cast<std::size_t>(t.num_nodes()), false);
    for (Index n : ses.sources) is_src[static_cast<std::size_t>(n)] = true;
    for (std::size_t j = 0; j < dests.size(); ++j) {
      const double mu = p.demand(ses, j) / R;
      const auto& ev = v.e[s][j];
      conic::LinearForm qos(-mu);
      for (Index l : t.in_links[static_cast<std::size_t>(dests[j])])
        if (ev[static_cast<std::size_t>(l)] >= 0) qos.add(ev[static_cast<std::size_t>(l)], 1.0);
      prog.inequalities.push_back(qos);
      conic::LinearForm supply(-mu);
      for (Index src : ses.sources)
        for (Index l : t.out_links[static_cast<std::size_t>(src)])
          if (ev[static_cast<std::size_t>(l)] >= 0) supply.add(ev[static_cast<std::size_t>(l)], 1.0);
      prog.inequalities.push_back(supply);
      for (Index n = 0; n < t.num_nodes(); ++n) {
        if (is_src[static_cast<std::size_t>(n)] || n == dests[j]) continue;
        conic::LinearForm bal;
        for (Index l : t.in_links[static_cast<std::size_t>(n)])
          if (ev[static_cast<std::size_t>(l)] >= 0) bal.add(ev[static_cast<std::size_t>(l)], 1.0);
        for (Index l : t.out_links[static_cast<std::size_t>(n)])
          if (ev[static_cast<std::size_t>(l)] >= 0) bal.add(ev[static_cast<std::size_t>(l)], -1.0);
        if (!bal.terms.empty()) prog.equalities.push_back(bal);
      }
    }
  }

  if (prog.num_vars == 0) return sol;

  const conic::Result res = conic::solve(prog, options);
  sol.newton_steps = res.newton_steps;
  if (res.status == conic::Status::infeasible) {
    sol.status = RoutingStatus::infeasible;
    sol.message = "demand exceeds link capacity or scheduling budget";
    return sol;
  }
  if (res.status != conic::Status::optimal) {
    sol.status = RoutingStatus::numerical_error;
    sol.message = "solver did not converge";
    return sol;
  }

  const auto& x = res.x;
  auto val = [&](Index i) { return i >= 0 ? std::max(0.0, x[i]) : 0.0; };
  for (std::size_t s = 0; s < S; ++s) {
    const auto& ses = p.sessions[s];
    for (std::size_t j = 0; j < v.e[s].size(); ++j)
      for (std::size_t l = 0; l < Ls; ++l) sol.e[s][j][l] = val(v.e[s][j][l]) * R;
    // Actual flows are tightened to exactly what the coupling requires.
    for (std::size_t l = 0; l < Ls; ++l) {
      for (std::size_t j = 0; j < v.e[s].size(); ++j) {
        auto& eta = j < ses.dest_cac.size() ? sol.eta_cac[s][l] : sol.eta_acc[s][l];
        eta = coupling == Coupling::multicast ? std::max(eta, sol.e[s][j][l]) : eta + sol.e[s][j][l];
      }
    }
  }
  const double zero_rate = 1e-9 * p.mu_acc;
  for (std::size_t l = 0; l < Ls; ++l) {
    double gam = 0.0;
    for (std::size_t s = 0; s < S; ++s) gam += sol.eta_cac[s][l] + sol.eta_acc[s][l];
    if (gam <= zero_rate || v.tau[l] < 0) {
      for (std::size_t s = 0; s < S; ++s) {
        sol.eta_cac[s][l] = sol.eta_acc[s][l] = 0.0;
        for (auto& ej : sol.e[s]) ej[l] = 0.0;
      }
      continue;
    }
    sol.gamma[l] = gam;
    sol.tau[l] = std::min(1.0, a * val(v.tau[l]));
    sol.p_tilde[l] = approx_link_power(gam, sol.tau[l], p.g[l], p.fso);
    if (t.from_dc(static_cast<Index>(l)))
      sol.p_fso_dc += sol.p_tilde[l];
    else
      sol.p_fso_hap += sol.p_tilde[l];
  }
  sol.objective = sol.p_fso_dc + p.omega * sol.p_fso_hap;
  return sol;
}

inline RoutingSolution solve_unicast_routing(const RoutingProblem& p, const conic::Options& options = {}) {
  return solve_routing(p, Coupling::unicast, options);
}

/// Largest violation per constraint family, in units of the problem's rate
/// unit for flows and raw units for time fractions.
struct FeasibilityReport {
  std::map<std::string, double> residual;
  double tol = 1e-6;

  bool pass() const {
    return std::all_of(residual.begin(), residual.end(), [&](const auto& kv) { return kv.second <= tol; });
  }
  bool family_pass(const std::string& f) const {
    auto it = residual.find(f);
    return it == residual.end() || it->second <= tol;
  }
  double worst() const {
    double w = 0.0;
    for (const auto& [k, r] : residual) w = std::max(w, r);
    return w;
  }
  nlohmann::json to_json() const {
    nlohmann::json j = residual;
    j["tol"] = tol;
    j["pass"] = pass();
    return j;
  }
};

/// Recomputes every constraint family directly from the solution arrays.
inline FeasibilityReport check_feasibility(const RoutingProblem& p, const RoutingSolution& sol, double tol = 1e-6) {
  FeasibilityReport rep;
  rep.tol = tol;
  for (const char* f : {"nonnegativity", "qos", "conservation", "coupling", "link_rate", "capacity", "scheduling",
                        "power_cap", "power_value"})
    rep.residual[f] = 0.0;
  auto bump = [&](const char* f, double r) { rep.residual[f] = std::max(rep.residual[f], r); };

  const auto& t = p.topo();
  const auto Ls = static_cast<std::size_t>(t.num_links());
  const double R = p.rate_unit();
  const auto S = p.sessions.size();
  const bool shapes_ok = sol.tau.size() == Ls && sol.gamma.size() == Ls && sol.p_tilde.size() == Ls &&
                         sol.e.size() == S && sol.eta_cac.size() == S && sol.eta_acc.size() == S;
  if (!shapes_ok) {
    rep.residual["shape"] = std::numeric_limits<double>::infinity();
    return rep;
  }
  const double zero_rate = 1e-9 * p.mu_acc;

  for (std::size_t l = 0; l < Ls; ++l) {
    bump("nonnegativity", std::max({-sol.tau[l], -sol.gamma[l] / R, -sol.p_tilde[l]}));
    bump("scheduling", sol.tau[l] - 1.0);
    double sum_eta = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
      bump("nonnegativity", std::max(-sol.eta_cac[s][l], -sol.eta_acc[s][l]) / R);
      sum_eta += sol.eta_cac[s][l] + sol.eta_acc[s][l];
    }
    bump("link_rate", (sum_eta - sol.gamma[l]) / R);
    const double g = p.g[l];
    const bool active = sol.gamma[l] > zero_rate;
    if (active && sol.tau[l] <= 0.0) bump("capacity", std::numeric_limits<double>::infinity());
    if (!p.rate_cap.empty()) bump("capacity", (sol.gamma[l] - p.rate_cap[l]) / R);
    if (std::isfinite(p.fso.p_max_w) && active) {
      const double cap = p.fso.bandwidth_hz * sol.tau[l] / (2.0 * std::numbers::ln2) *
                         std::log1p(g * p.fso.p_max_w * p.fso.p_max_w);
      bump("capacity", (sol.gamma[l] - cap) / R);
      bump("power_cap", (sol.p_tilde[l] - sol.tau[l] * p.fso.p_max_w) / p.fso.p_max_w);
    }
    const double expect = active ? sol.tau[l] * std::exp(sol.gamma[l] * std::numbers::ln2 / (p.fso.bandwidth_hz * sol.tau[l])) / std::sqrt(g) : 0.0;
    bump("power_value", std::abs(sol.p_tilde[l] - expect) / std::max(1e-300, std::max(std::abs(expect), 1e-12)));
  }

  for (Index n = 0; n < t.num_nodes(); ++n) {
    double out = 0.0, in = 0.0;
    for (Index l : t.out_links[static_cast<std::size_t>(n)]) out += sol.tau[static_cast<std::size_t>(l)];
    for (Index l : t.in_links[static_cast<std::size_t>(n)]) in += sol.tau[static_cast<std::size_t>(l)];
    if (t.is_hap(n) && p.half_duplex)
      bump("scheduling", in + out - 1.0);
    else
      bump("scheduling", std::max(out, t.is_hap(n) ? in : 0.0) - 1.0);
  }

  for (std::size_t s = 0; s < S; ++s) {
    const auto& ses = p.sessions[s];
    const auto dests = ses.destinations();
    if (sol.e[s].size() != dests.size()) {
      rep.residual["shape"] = std::numeric_limits<double>::infinity();
      continue;
    }
    std::vector<bool> is_src(static_cast<std::size_t>(t.num_nodes()), false);
    for (Index n : ses.sources) is_src[static_cast<std::size_t>(n)] = true;
    for (std::size_t j = 0; j < dests.size(); ++j) {
      const auto& e = sol.e[s][j];
      const double mu = j < ses.dest_cac.size() ? p.mu_cac : p.mu_acc;
      for (std::size_t l = 0; l < Ls; ++l) {
        bump("nonnegativity", -e[l] / R);
        const double eta = j < ses.dest_cac.size() ? sol.eta_cac[s][l] : sol.eta_acc[s][l];
        bump("coupling", (e[l] - eta) / R);
      }
      // Net inflow, so circulations through the destination earn nothing.
      double net = 0.0, supply = 0.0;
      for (Index l : t.in_links[static_cast<std::size_t>(dests[j])]) net += e[static_cast<std::size_t>(l)];
      for (Index l : t.out_links[static_cast<std::size_t>(dests[j])]) net -= e[static_cast<std::size_t>(l)];
      bump("qos", (mu - net) / R);
      for (Index src : ses.sources) {
        for (Index l : t.out_links[static_cast<std::size_t>(src)]) supply += e[static_cast<std::size_t>(l)];
        for (Index l : t.in_links[static_cast<std::size_t>(src)]) supply -= e[static_cast<std::size_t>(l)];
      }
      bump("qos", (mu - supply) / R);
      for (Index n = 0; n < t.num_nodes(); ++n) {
        if (is_src[static_cast<std::size_t>(n)] || n == dests[j]) continue;
        double bal = 0.0;
        for (Index l : t.in_links[static_cast<std::size_t>(n)]) bal += e[static_cast<std::size_t>(l)];
        for (Index l : t.out_links[static_cast<std::size_t>(n)]) bal -= e[static_cast<std::size_t>(l)];
        bump("conservation", std::abs(bal) / R);
      }
    }
    if (sol.coupling == Coupling::unicast) {
      for (std::size_t l = 0; l < Ls; ++l) {
        double cac = 0.0, acc = 0.0;
        for (std::size_t j = 0; j < dests.size(); ++j) (j < ses.dest_cac.size() ? cac : acc) += sol.e[s][j][l];
        bump("coupling", std::max(cac - sol.eta_cac[s][l], acc - sol.eta_acc[s][l]) / R);
      }
    }
  }
  return rep;
}

}  // namespace hapcache

#endif  // HAPCACHE_ROUTING_HPP
