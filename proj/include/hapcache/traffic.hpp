#ifndef HAPCACHE_TRAFFIC_HPP
#define HAPCACHE_TRAFFIC_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "hapcache/core.hpp"
#include "hapcache/topology.hpp"

namespace hapcache {

using CachePlacement = BinaryMatrix;  // K x C
using RequestMatrix = BinaryMatrix;   // U x C

struct Catalog {
  Index num_contents = 30;
  double mu_cac = 10e6;
  double mu_acc = 4e6;
  std::vector<double> zipf_skews;              // one per HAP
  std::vector<std::vector<Index>> popularity;  // popularity[k][rank] = content

  void validate(Index num_haps) const {
    require(num_contents >= 1, "catalog: need at least one content");
    require(mu_cac > 0.0 && mu_acc > 0.0, "catalog: rates must be positive");
    require(static_cast<Index>(zipf_skews.size()) == num_haps && static_cast<Index>(popularity.size()) == num_haps,
            "catalog: one skew and one ranking per HAP");
    for (double s : zipf_skews) require(s > 0.0, "catalog: skew must be positive");
    for (const auto& p : popularity) require(static_cast<Index>(p.size()) == num_contents, "catalog: bad ranking");
  }
};

/// Skews drawn uniformly from [skew_min, skew_max]; each HAP ranks the
/// catalog in its own shuffled order.
inline Catalog make_catalog(Index num_haps, Index num_contents, double mu_cac, double mu_acc, Rng& rng,
                            double skew_min = 0.5, double skew_max = 4.0) {
  require(skew_min > 0.0 && skew_max >= skew_min, "catalog: invalid skew range");
  Catalog cat;
  cat.num_contents = num_contents;
  cat.mu_cac = mu_cac;
  cat.mu_acc = mu_acc;
  std::uniform_real_distribution<double> skew(skew_min, skew_max);
  for (Index k = 0; k < num_haps; ++k) {
    cat.zipf_skews.push_back(skew(rng));
    std::vector<Index> order(static_cast<std::size_t>(num_contents));
    std::iota(order.begin(), order.end(), Index{0});
    std::shuffle(order.begin(), order.end(), rng);
    cat.popularity.push_back(std::move(order));
  }
  cat.validate(num_haps);
  return cat;
}

/// Zipf probabilities over ranks 1..C.
inline std::vector<double> zipf_weights(Index num_contents, double skew) {
  std::vector<double> w(static_cast<std::size_t>(num_contents));
  for (Index r = 0; r < num_contents; ++r) w[static_cast<std::size_t>(r)] = std::pow(static_cast<double>(r + 1), -skew);
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= s;
  return w;
}

inline RequestMatrix sample_requests(const Catalog& cat, const NetworkTopology& topo, Rng& rng) {
  RequestMatrix alpha(topo.num_users(), cat.num_contents);
  std::vector<std::discrete_distribution<Index>> dists;
  for (Index k = 0; k < topo.num_haps(); ++k) {
    const auto w = zipf_weights(cat.num_contents, cat.zipf_skews[static_cast<std::size_t>(k)]);
    dists.emplace_back(w.begin(), w.end());
  }
  for (Index u = 0; u < topo.num_users(); ++u) {
    const Index k = topo.users[static_cast<std::size_t>(u)].hap;
    const Index rank = dists[static_cast<std::size_t>(k)](rng);
    alpha(u, cat.popularity[static_cast<std::size_t>(k)][static_cast<std::size_t>(rank)]) = 1;
  }
  return alpha;
}

/// K x C row-major rate matrix.
struct RateMatrix {
  Index rows = 0;
  Index cols = 0;
  std::vector<double> data;

  RateMatrix() = default;
  RateMatrix(Index r, Index c) : rows(r), cols(c), data(static_cast<std::size_t>(r * c), 0.0) {}
  double operator()(Index r, Index c) const { return data[static_cast<std::size_t>(r * cols + c)]; }
  double& operator()(Index r, Index c) { return data[static_cast<std::size_t>(r * cols + c)]; }
};

inline RateMatrix caching_demand(const CachePlacement& z_now, const CachePlacement& z_next, const Catalog& cat) {
  require(z_now.rows() == z_next.rows() && z_now.cols() == z_next.cols(), "caching demand: shape mismatch");
  RateMatrix f(z_now.rows(), z_now.cols());
  for (Index k = 0; k < f.rows; ++k)
    for (Index c = 0; c < f.cols; ++c)
      if (z_next(k, c) > z_now(k, c)) f(k, c) = cat.mu_cac;
  return f;
}

struct AccessDemand {
  RateMatrix beta;
  RateMatrix f_acc;
};

inline AccessDemand access_demand(const CachePlacement& z, const RequestMatrix& alpha, const Catalog& cat,
                                  const NetworkTopology& topo) {
  require(alpha.rows() == topo.num_users() && alpha.cols() == cat.num_contents, "access demand: request shape");
  require(z.rows() == topo.num_haps() && z.cols() == cat.num_contents, "access demand: placement shape");
  AccessDemand d{RateMatrix(z.rows(), z.cols()), RateMatrix(z.rows(), z.cols())};
  for (Index u = 0; u < alpha.rows(); ++u) {
    require(alpha.row_sum(u) == 1, "access demand: each user requests exactly one content");
    const Index k = topo.users[static_cast<std::size_t>(u)].hap;
    require(k >= 0 && k < topo.num_haps(), "access demand: user with unknown serving HAP");
    for (Index c = 0; c < alpha.cols(); ++c)
      if (alpha(u, c)) d.beta(k, c) = cat.mu_acc;
  }
  for (Index k = 0; k < z.rows(); ++k)
    for (Index c = 0; c < z.cols(); ++c) d.f_acc(k, c) = z(k, c) ? 0.0 : d.beta(k, c);
  return d;
}

struct DemandProfile {
  RateMatrix beta;
  RateMatrix f_cac;
  RateMatrix f_acc;
};

struct MulticastSession {
  Index content = 0;
  std::vector<Index> sources;   // node ids
  std::vector<Index> dest_cac;  // HAP ids, rate mu_cac
  std::vector<Index> dest_acc;  // HAP ids, rate mu_acc

  std::vector<Index> destinations() const {
    std::vector<Index> d = dest_cac;
    d.insert(d.end(), dest_acc.begin(), dest_acc.end());
    return d;
  }
};

/// Sessions for every content with backhaul demand. Ties (mu_cac == mu_acc)
/// go to the caching set.
inline std::vector<MulticastSession> build_sessions(const CachePlacement& z, const DemandProfile& demand,
                                                    const NetworkTopology& topo) {
  std::vector<MulticastSession> out;
  for (Index c = 0; c < z.cols(); ++c) {
    MulticastSession s;
    s.content = c;
    for (Index k = 0; k < z.rows(); ++k) {
      const double need = std::max(demand.f_cac(k, c), demand.f_acc(k, c));
      if (need <= 0.0) continue;
      if (z(k, c) && demand.f_cac(k, c) <= 0.0)
        throw std::logic_error("sessions: access demand on a cache hit");
      if (demand.f_cac(k, c) > 0.0 && demand.f_cac(k, c) >= demand.f_acc(k, c))
        s.dest_cac.push_back(k);
      else
        s.dest_acc.push_back(k);
    }
    if (s.dest_cac.empty() && s.dest_acc.empty()) continue;
    for (Index k = 0; k < z.rows(); ++k)
      if (z(k, c)) s.sources.push_back(k);
    for (Index d = 0; d < topo.num_dcs(); ++d) s.sources.push_back(topo.dc_node(d));
    auto is_source = [&](Index k) { return std::find(s.sources.begin(), s.sources.end(), k) != s.sources.end(); };
    std::erase_if(s.dest_cac, is_source);
    std::erase_if(s.dest_acc, is_source);
    if (s.dest_cac.empty() && s.dest_acc.empty()) continue;
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace hapcache

#endif  // HAPCACHE_TRAFFIC_HPP
