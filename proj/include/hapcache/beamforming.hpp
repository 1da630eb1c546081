#ifndef HAPCACHE_BEAMFORMING_HPP
#define HAPCACHE_BEAMFORMING_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hapcache/conic.hpp"
#include "hapcache/core.hpp"
#include "json.hpp"

namespace hapcache {

struct BeamGroup {
  Index content = 0;
  std::vector<Index> users;  // global user ids
  double delta = 1.0;        // SINR target
};

/// Multigroup multicast beamforming, one independent block per HAP.
struct BeamformingProblem {
  Index antennas = 6;
  double noise_power = 1e-13;
  double omega = 1.0;
  std::vector<std::vector<BeamGroup>> groups;  // [hap][group]
  std::vector<Eigen::VectorXcd> channels;      // [user], from the serving HAP

  void validate() const {
    require(antennas >= 1 && noise_power > 0.0 && omega >= 0.0, "beamforming: invalid parameters");
    for (const auto& hap : groups)
      for (const auto& g : hap) {
        require(!g.users.empty(), "beamforming: empty group");
        require(g.delta > 0.0, "beamforming: SINR target must be positive");
        for (Index u : g.users)
          require(u >= 0 && u < static_cast<Index>(channels.size()) && channels[static_cast<std::size_t>(u)].size() == antennas,
                  "beamforming: channel missing or wrong length");
      }
  }
};

enum class BeamStatus { optimal, infeasible, randomization_failed, numerical_error };

inline const char* to_string(BeamStatus s) {
  switch (s) {
    case BeamStatus::optimal: return "optimal";
    case BeamStatus::infeasible: return "infeasible";
    case BeamStatus::randomization_failed: return "randomization_failed";
    case BeamStatus::numerical_error: return "numerical_error";
  }
  return "?";
}

struct HapSdp {
  BeamStatus status = BeamStatus::optimal;
  std::vector<Eigen::MatrixXcd> w;  // per group, watts
  double relaxed_power = 0.0;       // sum of traces
  double lower_bound = 0.0;         // certified lower bound on the relaxed optimum
};

struct SdpSolution {
  std::vector<HapSdp> haps;

  bool ok() const {
    return std::all_of(haps.begin(), haps.end(), [](const HapSdp& h) { return h.status == BeamStatus::optimal; });
  }
  double relaxed_power() const {
    double s = 0.0;
    for (const auto& h : haps) s += h.relaxed_power;
    return s;
  }
  double lower_bound() const {
    double s = 0.0;
    for (const auto& h : haps) s += h.lower_bound;
    return s;
  }
};

struct HapBeams {
  BeamStatus status = BeamStatus::optimal;
  std::vector<Eigen::VectorXcd> w;  // per group
  bool rank_one = true;
  bool power_controlled = false;
  double power = 0.0;
};

struct BeamVectors {
  std::vector<HapBeams> haps;
  std::vector<double> sinr;  // per user; NaN for users not served
  double p_rf = 0.0;

  bool ok() const {
    return std::all_of(haps.begin(), haps.end(), [](const HapBeams& h) { return h.status == BeamStatus::optimal; });
  }

  nlohmann::json to_json(const BeamformingProblem& p) const {
    nlohmann::json j = {{"p_rf", p_rf}};
    auto& groups = j["groups"] = nlohmann::json::array();
    for (std::size_t k = 0; k < haps.size(); ++k)
      for (std::size_t g = 0; g < haps[k].w.size(); ++g)
        groups.push_back({{"hap", k}, {"content", p.groups[k][g].content}, {"power", haps[k].w[g].squaredNorm()},
                          {"users", p.groups[k][g].users}});
    auto& s = j["sinr"] = nlohmann::json::array();
    for (double x : sinr) s.push_back(std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr));
    return j;
  }
};

/// SINR of every user served by the given per-HAP group beams.
inline std::vector<double> compute_sinr(const BeamformingProblem& p, const std::vector<std::vector<Eigen::VectorXcd>>& beams) {
  std::vector<double> out(p.channels.size(), std::numeric_limits<double>::quiet_NaN());
  for (std::size_t k = 0; k < p.groups.size(); ++k) {
    const auto& groups = p.groups[k];
    for (std::size_t c = 0; c < groups.size(); ++c)
      for (Index u : groups[c].users) {
        const auto& h = p.channels[static_cast<std::size_t>(u)];
        double signal = 0.0, interference = 0.0;
        for (std::size_t l = 0; l < groups.size(); ++l) {
          const double gain = std::norm(beams[k][l].dot(h));  // |w^H h|^2
          (l == c ? signal : interference) += gain;
        }
        out[static_cast<std::size_t>(u)] = signal / (interference + p.noise_power);
      }
  }
  return out;
}

namespace detail {

// Hermitian M x M matrix from M^2 reals: diagonal, then (re, im) of each
// strictly-upper entry in row-major order.
struct HermitianLayout {
  Index m = 0;
  Index size() const { return m * m; }

  Eigen::MatrixXcd assemble(const Eigen::VectorXd& x, Index offset) const {
    Eigen::MatrixXcd w(m, m);
    Index idx = offset;
    for (Index i = 0; i < m; ++i) w(i, i) = x[idx++];
    for (Index i = 0; i < m; ++i)
      for (Index j = i + 1; j < m; ++j) {
        w(i, j) = Complex(x[idx], x[idx + 1]);
        w(j, i) = std::conj(w(i, j));
        idx += 2;
      }
    return w;
  }

  // Coefficients of tr(W H) for Hermitian H.
  std::vector<double> trace_coefficients(const Eigen::MatrixXcd& h) const {
    std::vector<double> c;
    c.reserve(static_cast<std::size_t>(size()));
    for (Index i = 0; i < m; ++i) c.push_back(h(i, i).real());
    for (Index i = 0; i < m; ++i)
      for (Index j = i + 1; j < m; ++j) {
        c.push_back(2.0 * h(i, j).real());
        c.push_back(2.0 * h(i, j).imag());
      }
    return c;
  }

  // [Re W, -Im W; Im W, Re W] >= 0, one basis matrix per parameter.
  conic::MatrixInequality embedding(Index offset) const {
    conic::MatrixInequality mi;
    mi.constant = Eigen::MatrixXd::Zero(2 * m, 2 * m);
    Index idx = offset;
    for (Index i = 0; i < m; ++i) {
      Eigen::MatrixXd f = Eigen::MatrixXd::Zero(2 * m, 2 * m);
      f(i, i) = f(m + i, m + i) = 1.0;
      mi.terms.emplace_back(idx++, f);
    }
    for (Index i = 0; i < m; ++i)
      for (Index j = i + 1; j < m; ++j) {
        Eigen::MatrixXd re = Eigen::MatrixXd::Zero(2 * m, 2 * m);
        re(i, j) = re(j, i) = re(m + i, m + j) = re(m + j, m + i) = 1.0;
        mi.terms.emplace_back(idx++, re);
        Eigen::MatrixXd im = Eigen::MatrixXd::Zero(2 * m, 2 * m);
        im(i, m + j) = im(m + j, i) = -1.0;
        im(j, m + i) = im(m + i, j) = 1.0;
        mi.terms.emplace_back(idx++, im);
      }
    return mi;
  }
};

// Smallest common scale making every SINR constraint hold, or nullopt when
// some user is interference limited.
inline std::optional<double> common_scale(const BeamformingProblem& p, std::size_t k,
                                          const std::vector<Eigen::VectorXcd>& w) {
  const auto& groups = p.groups[k];
  double alpha = 0.0;
  for (std::size_t c = 0; c < groups.size(); ++c)
    for (Index u : groups[c].users) {
      const auto& h = p.channels[static_cast<std::size_t>(u)];
      double s = 0.0, i = 0.0;
      for (std::size_t l = 0; l < groups.size(); ++l) (l == c ? s : i) += std::norm(w[l].dot(h));
      const double margin = s - groups[c].delta * i;
      if (!(margin > 0.0)) return std::nullopt;
      alpha = std::max(alpha, groups[c].delta * p.noise_power / margin);
    }
  return alpha;
}

// Per-group power control on fixed directions: a small linear program.
inline std::optional<std::vector<Eigen::VectorXcd>> power_control(const BeamformingProblem& p, std::size_t k,
                                                                  const std::vector<Eigen::VectorXcd>& dirs) {
  const auto& groups = p.groups[k];
  conic::Program prog;
  std::vector<Index> q;
  double ref = 0.0;
  for (const auto& g : groups)
    for (Index u : g.users) ref = std::max(ref, p.channels[static_cast<std::size_t>(u)].squaredNorm());
  const double unit = p.noise_power / ref;  // power unit
  for (std::size_t c = 0; c < groups.size(); ++c) {
    q.push_back(prog.add_variable(1.0, 1.0));
    prog.inequalities.push_back(conic::LinearForm().add(q.back(), 1.0));
  }
  for (std::size_t c = 0; c < groups.size(); ++c)
    for (Index u : groups[c].users) {
      const auto& h = p.channels[static_cast<std::size_t>(u)];
      conic::LinearForm f(-groups[c].delta);
      for (std::size_t l = 0; l < groups.size(); ++l) {
        const double gain = std::norm(dirs[l].dot(h)) * unit / p.noise_power;
        f.add(q[l], l == c ? gain : -groups[c].delta * gain);
      }
      prog.inequalities.push_back(f);
    }
  const auto res = conic::solve(prog);
  if (res.status != conic::Status::optimal) return std::nullopt;
  std::vector<Eigen::VectorXcd> out;
  for (std::size_t c = 0; c < groups.size(); ++c) out.push_back(dirs[c] * std::sqrt(std::max(0.0, res.x[q[c]]) * unit));
  auto alpha = common_scale(p, k, out);
  if (!alpha) return std::nullopt;
  for (auto& w : out) w *= std::sqrt(std::max(1.0, *alpha));
  return out;
}

}  // namespace detail

struct SdpOptions {
  double gap_tolerance = 1e-10;
};

/// SDP relaxation per HAP: min sum tr(W_c) s.t. tr(W_c H_i)/delta_c >=
/// sigma^2 + sum_{l != c} tr(W_l H_i), W_c >= 0. The weight omega scales the
/// objective only, so it does not change the minimizer.
inline SdpSolution solve_sdp(const BeamformingProblem& p, const SdpOptions& sopt = {}) {
  p.validate();
  SdpSolution out;
  const detail::HermitianLayout layout{p.antennas};
  for (const auto& groups : p.groups) {
    HapSdp hs;
    if (groups.empty()) {
      out.haps.push_back(hs);
      continue;
    }
    double ref = 0.0;
    Index count = 0;
    for (const auto& g : groups)
      for (Index u : g.users) {
        ref += p.channels[static_cast<std::size_t>(u)].squaredNorm();
        ++count;
      }
    ref /= static_cast<double>(count);
    const double unit = p.noise_power / ref;  // W is solved in units of sigma^2 / mean |h|^2

    conic::Program prog;
    std::vector<Index> offset;
    for (std::size_t c = 0; c < groups.size(); ++c) {
      offset.push_back(prog.num_vars);
      for (Index i = 0; i < layout.size(); ++i) prog.add_variable(i < p.antennas ? 1.0 : 0.0);
      prog.matrix_inequalities.push_back(layout.embedding(offset.back()));
    }
    for (std::size_t c = 0; c < groups.size(); ++c)
      for (Index u : groups[c].users) {
        const auto& h = p.channels[static_cast<std::size_t>(u)];
        const Eigen::MatrixXcd hh = h * h.adjoint() / ref;
        const auto coeff = layout.trace_coefficients(hh);
        conic::LinearForm f(-1.0);
        for (std::size_t l = 0; l < groups.size(); ++l) {
          const double scale = l == c ? 1.0 / groups[c].delta : -1.0;
          for (Index i = 0; i < layout.size(); ++i)
            if (coeff[static_cast<std::size_t>(i)] != 0.0) f.add(offset[l] + i, scale * coeff[static_cast<std::size_t>(i)]);
        }
        prog.inequalities.push_back(f);
      }
    conic::Options opt;
    opt.gap_tolerance = sopt.gap_tolerance;
    const auto res = conic::solve(prog, opt);
    if (res.status != conic::Status::optimal) {
      hs.status = res.status == conic::Status::infeasible ? BeamStatus::infeasible : BeamStatus::numerical_error;
      out.haps.push_back(hs);
      continue;
    }
    for (std::size_t c = 0; c < groups.size(); ++c) {
      hs.w.push_back(layout.assemble(res.x, offset[c]) * unit);
      hs.relaxed_power += hs.w.back().trace().real();
    }
    hs.lower_bound = std::max(0.0, (res.objective - res.gap_bound) * unit);
    out.haps.push_back(hs);
  }
  return out;
}

struct ExtractOptions {
  double rank_one_tolerance = 1e-6;
  Index candidates = 100;
  /// When no randomized candidate survives common scaling, retry the best
  /// directions with per-group power control.
  bool power_control_fallback = true;
};

inline BeamVectors extract_beams(const SdpSolution& sdp, const BeamformingProblem& p, Rng& rng,
                                 const ExtractOptions& eo = {}) {
  require(sdp.haps.size() == p.groups.size(), "beamforming: solution shape mismatch");
  BeamVectors out;
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  for (std::size_t k = 0; k < p.groups.size(); ++k) {
    HapBeams hb;
    const auto& hs = sdp.haps[k];
    const auto& groups = p.groups[k];
    if (hs.status != BeamStatus::optimal) {
      hb.status = hs.status;
      hb.w.assign(groups.size(), Eigen::VectorXcd::Zero(p.antennas));
      out.haps.push_back(hb);
      continue;
    }
    std::vector<Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>> eig;
    for (const auto& w : hs.w) {
      eig.emplace_back(w);
      const auto& ev = eig.back().eigenvalues();
      const double l1 = ev[p.antennas - 1];
      const double l2 = p.antennas > 1 ? std::max(0.0, ev[p.antennas - 2]) : 0.0;
      if (!(l1 > 0.0) || l2 > eo.rank_one_tolerance * l1) hb.rank_one = false;
    }
    if (hb.rank_one) {
      for (const auto& e : eig)
        hb.w.push_back(std::sqrt(e.eigenvalues()[p.antennas - 1]) * e.eigenvectors().col(p.antennas - 1));
      auto alpha = detail::common_scale(p, k, hb.w);
      if (!alpha) {
        hb.status = BeamStatus::numerical_error;
      } else {
        for (auto& w : hb.w) w *= std::sqrt(std::max(1.0, *alpha));
      }
    } else {
      // Gaussian randomization: w_c = U_c L_c^1/2 r, r ~ CN(0, I).
      std::vector<Eigen::MatrixXcd> shape;
      for (const auto& e : eig)
        shape.push_back(e.eigenvectors() * e.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal());
      double best = std::numeric_limits<double>::infinity();
      std::vector<Eigen::VectorXcd> best_dirs;
      for (Index n = 0; n < eo.candidates; ++n) {
        std::vector<Eigen::VectorXcd> cand;
        for (const auto& s : shape) {
          Eigen::VectorXcd r(p.antennas);
          for (Index i = 0; i < p.antennas; ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            r[i] = Complex(re, im);
          }
          cand.push_back(s * r);
        }
        if (best_dirs.empty()) best_dirs = cand;
        auto alpha = detail::common_scale(p, k, cand);
        if (!alpha) continue;
        double power = 0.0;
        for (const auto& w : cand) power += w.squaredNorm();
        power *= *alpha;
        if (power < best) {
          best = power;
          hb.w = cand;
          for (auto& w : hb.w) w *= std::sqrt(*alpha);
        }
      }
      if (hb.w.empty() && eo.power_control_fallback) {
        if (auto pc = detail::power_control(p, k, best_dirs)) {
          hb.w = *pc;
          hb.power_controlled = true;
        }
      }
      if (hb.w.empty()) {
        hb.status = BeamStatus::randomization_failed;
        hb.w.assign(groups.size(), Eigen::VectorXcd::Zero(p.antennas));
      }
    }
    for (const auto& w : hb.w) hb.power += w.squaredNorm();
    out.haps.push_back(hb);
  }
  std::vector<std::vector<Eigen::VectorXcd>> beams;
  for (const auto& h : out.haps) {
    beams.push_back(h.w);
    out.p_rf += h.power;
  }
  out.sinr = compute_sinr(p, beams);
  return out;
}

}  // namespace hapcache

#endif  // HAPCACHE_BEAMFORMING_HPP
