#ifndef HAPCACHE_TOPOLOGY_HPP
#define HAPCACHE_TOPOLOGY_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hapcache/core.hpp"
#include "json.hpp"

namespace hapcache {

struct TopologyConfig {
  Index num_haps = 7;
  Index num_dcs = 2;
  Index num_users = 105;
  double coverage_radius_m = 15e3;
  double spacing_min_m = 40e3;
  double spacing_max_m = 60e3;
  double altitude_m = 20e3;
  /// Ground sites (x, y) of the data centers; empty means one site beside each
  /// of the first D lattice positions.
  std::vector<Eigen::Vector2d> dc_sites;
};

struct Link {
  Index from = 0;
  Index to = 0;
  double distance_m = 0.0;
  double transmission_distance_m = 0.0;
};

struct DataCenter {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Index hap = 0;
};

struct User {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Index hap = 0;
};

/// Static geometry and the directed backhaul graph. Node ids: HAPs are
/// 0..K-1, data centers are K..K+D-1. Link order: the D feeder links first,
/// then every ordered HAP pair.
class NetworkTopology {
 public:
  std::vector<Eigen::Vector3d> haps;
  std::vector<DataCenter> dcs;
  std::vector<User> users;
  std::vector<Link> links;
  std::vector<std::vector<Index>> in_links;
  std::vector<std::vector<Index>> out_links;
  std::vector<std::vector<Index>> hap_users;

  Index num_haps() const { return static_cast<Index>(haps.size()); }
  Index num_dcs() const { return static_cast<Index>(dcs.size()); }
  Index num_users() const { return static_cast<Index>(users.size()); }
  Index num_links() const { return static_cast<Index>(links.size()); }
  Index num_nodes() const { return num_haps() + num_dcs(); }

  bool is_hap(Index node) const { return node >= 0 && node < num_haps(); }
  bool is_dc(Index node) const { return node >= num_haps() && node < num_nodes(); }
  Index dc_node(Index d) const { return num_haps() + d; }

  /// True when the link leaves a data center (charged at weight 1).
  bool from_dc(Index link) const { return is_dc(links[static_cast<std::size_t>(link)].from); }

  /// A bare graph for routing experiments: no geometry beyond what the
  /// caller provides. Node ids follow the same HAP-then-DC convention.
  static NetworkTopology from_links(Index num_haps, Index num_dcs, std::vector<Link> links) {
    NetworkTopology t;
    t.haps.assign(static_cast<std::size_t>(num_haps), Eigen::Vector3d::Zero());
    t.dcs.assign(static_cast<std::size_t>(num_dcs), DataCenter{});
    t.links = std::move(links);
    t.hap_users.assign(static_cast<std::size_t>(num_haps), {});
    t.index_links();
    for (const auto& l : t.links) {
      require(l.from >= 0 && l.from < t.num_nodes() && l.to >= 0 && l.to < t.num_nodes() && l.from != l.to,
              "topology: link endpoint out of range");
      require(l.distance_m > 0.0, "topology: link distance must be positive");
    }
    for (Index d = 0; d < num_dcs; ++d) {
      const auto& out = t.out_links[static_cast<std::size_t>(t.dc_node(d))];
      if (!out.empty()) t.dcs[static_cast<std::size_t>(d)].hap = t.links[static_cast<std::size_t>(out.front())].to;
    }
    return t;
  }

  void index_links() {
    in_links.assign(static_cast<std::size_t>(num_nodes()), {});
    out_links.assign(static_cast<std::size_t>(num_nodes()), {});
    for (Index l = 0; l < num_links(); ++l) {
      const auto& link = links[static_cast<std::size_t>(l)];
      out_links[static_cast<std::size_t>(link.from)].push_back(l);
      in_links[static_cast<std::size_t>(link.to)].push_back(l);
    }
  }

  Eigen::Vector3d node_position(Index node) const {
    return is_hap(node) ? haps[static_cast<std::size_t>(node)]
                        : dcs[static_cast<std::size_t>(node - num_haps())].position;
  }

  std::string node_name(Index node) const {
    return is_hap(node) ? "hap" + std::to_string(node) : "dc" + std::to_string(node - num_haps());
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    auto& nodes = j["nodes"] = nlohmann::json::array();
    for (Index n = 0; n < num_nodes(); ++n) {
      const auto p = node_position(n);
      nlohmann::json row = {{"id", n}, {"name", node_name(n)}, {"kind", is_hap(n) ? "hap" : "dc"},
                            {"x_m", p.x()}, {"y_m", p.y()}, {"z_m", p.z()}};
      if (is_dc(n)) row["feeds_hap"] = dcs[static_cast<std::size_t>(n - num_haps())].hap;
      if (is_hap(n)) row["users"] = hap_users[static_cast<std::size_t>(n)].size();
      nodes.push_back(row);
    }
    auto& lt = j["links"] = nlohmann::json::array();
    for (Index l = 0; l < num_links(); ++l) {
      const auto& k = links[static_cast<std::size_t>(l)];
      lt.push_back({{"id", l}, {"from", node_name(k.from)}, {"to", node_name(k.to)},
                    {"distance_m", k.distance_m}, {"transmission_distance_m", k.transmission_distance_m}});
    }
    auto& ut = j["users"] = nlohmann::json::array();
    for (Index u = 0; u < num_users(); ++u) {
      const auto& usr = users[static_cast<std::size_t>(u)];
      ut.push_back({{"id", u}, {"hap", usr.hap}, {"x_m", usr.position.x()}, {"y_m", usr.position.y()}});
    }
    return j;
  }
};

namespace detail {

// Hexagonal spiral on a unit lattice: centre, then rings outward.
inline std::vector<Eigen::Vector2d> hex_spiral(Index count) {
  static constexpr int dq[6] = {1, 1, 0, -1, -1, 0};
  static constexpr int dr[6] = {0, -1, -1, 0, 1, 1};
  std::vector<Eigen::Vector2d> out;
  auto emit = [&](int q, int r) {
    if (static_cast<Index>(out.size()) < count) out.emplace_back(q + r / 2.0, r * std::numbers::sqrt3 / 2.0);
  };
  emit(0, 0);
  for (int ring = 1; static_cast<Index>(out.size()) < count; ++ring) {
    int q = dq[4] * ring, r = dr[4] * ring;
    for (int side = 0; side < 6; ++side)
      for (int step = 0; step < ring; ++step) {
        emit(q, r);
        q += dq[side];
        r += dr[side];
      }
  }
  return out;
}

}  // namespace detail

/// Hexagonal HAP lattice with one spacing drawn from [spacing_min, spacing_max],
/// data centers bound to the nearest unbound HAP, and users split evenly over
/// HAPs and placed uniformly in each coverage disc.
inline NetworkTopology build_topology(const TopologyConfig& cfg, Rng& rng) {
  require(cfg.num_haps >= 1, "topology: need at least one HAP");
  require(cfg.num_dcs >= 0, "topology: negative data-center count");
  require(cfg.num_dcs <= cfg.num_haps, "topology: more data centers than HAPs");
  require(cfg.num_users >= 0, "topology: negative user count");
  require(cfg.coverage_radius_m > 0.0, "topology: coverage radius must be positive");
  require(cfg.spacing_min_m > 0.0 && cfg.spacing_max_m >= cfg.spacing_min_m, "topology: invalid HAP spacing range");
  require(2.0 * cfg.coverage_radius_m < cfg.spacing_min_m, "topology: coverage discs would overlap");
  require(cfg.altitude_m > 0.0, "topology: altitude must be positive");
  require(cfg.dc_sites.empty() || static_cast<Index>(cfg.dc_sites.size()) == cfg.num_dcs,
          "topology: dc_sites must list one site per data center");

  NetworkTopology t;
  std::uniform_real_distribution<double> spacing_dist(cfg.spacing_min_m, cfg.spacing_max_m);
  const double spacing = spacing_dist(rng);
  const auto lattice = detail::hex_spiral(cfg.num_haps);
  for (const auto& p : lattice) t.haps.emplace_back(spacing * p.x(), spacing * p.y(), cfg.altitude_m);

  std::vector<bool> taken(static_cast<std::size_t>(cfg.num_haps), false);
  for (Index d = 0; d < cfg.num_dcs; ++d) {
    Eigen::Vector2d site = cfg.dc_sites.empty()
                               ? Eigen::Vector2d(spacing * lattice[static_cast<std::size_t>(d)].x() + cfg.coverage_radius_m / 3.0,
                                                 spacing * lattice[static_cast<std::size_t>(d)].y())
                               : cfg.dc_sites[static_cast<std::size_t>(d)];
    Index best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < cfg.num_haps; ++k) {
      if (taken[static_cast<std::size_t>(k)]) continue;
      const double dist = (t.haps[static_cast<std::size_t>(k)].head<2>() - site).norm();
      if (dist < best_dist) {
        best_dist = dist;
        best = k;
      }
    }
    taken[static_cast<std::size_t>(best)] = true;
    t.dcs.push_back({Eigen::Vector3d(site.x(), site.y(), 0.0), best});
  }

  t.hap_users.assign(static_cast<std::size_t>(cfg.num_haps), {});
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (Index u = 0; u < cfg.num_users; ++u) {
    const Index k = u % cfg.num_haps;
    const double r = cfg.coverage_radius_m * std::sqrt(unit(rng));
    const double a = 2.0 * std::numbers::pi * unit(rng);
    const auto& h = t.haps[static_cast<std::size_t>(k)];
    t.users.push_back({Eigen::Vector3d(h.x() + r * std::cos(a), h.y() + r * std::sin(a), 0.0), k});
    t.hap_users[static_cast<std::size_t>(k)].push_back(u);
  }

  const Index K = cfg.num_haps;
  for (Index d = 0; d < cfg.num_dcs; ++d) {
    const auto& dc = t.dcs[static_cast<std::size_t>(d)];
    const double dist = (dc.position - t.haps[static_cast<std::size_t>(dc.hap)]).norm();
    t.links.push_back({K + d, dc.hap, dist, dist});
  }
  for (Index i = 0; i < K; ++i)
    for (Index j = 0; j < K; ++j) {
      if (i == j) continue;
      const double dist = (t.haps[static_cast<std::size_t>(i)] - t.haps[static_cast<std::size_t>(j)]).norm();
      t.links.push_back({i, j, dist, dist});
    }
  t.index_links();
  return t;
}

}  // namespace hapcache

#endif  // HAPCACHE_TOPOLOGY_HPP
