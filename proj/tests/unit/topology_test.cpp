#include <gtest/gtest.h>

#include "hapcache/topology.hpp"

namespace hapcache {
namespace {

NetworkTopology make(Index k, Index d, Index u, std::uint64_t seed = 7) {
  TopologyConfig cfg;
  cfg.num_haps = k;
  cfg.num_dcs = d;
  cfg.num_users = u;
  Rng rng = stream({seed, stream_tag::topology});
  return build_topology(cfg, rng);
}

TEST(Topology, LinkCountFormula) {
  EXPECT_EQ(make(7, 2, 105).num_links(), 44);
  EXPECT_EQ(make(1, 0, 3).num_links(), 0);
  EXPECT_EQ(make(2, 1, 4).num_links(), 3);
}

TEST(Topology, Invariants) {
  const auto t = make(7, 2, 105);
  Index out_total = 0;
  for (Index n = 0; n < t.num_nodes(); ++n) {
    out_total += static_cast<Index>(t.out_links[static_cast<std::size_t>(n)].size());
    for (Index l : t.out_links[static_cast<std::size_t>(n)]) EXPECT_EQ(t.links[static_cast<std::size_t>(l)].from, n);
    for (Index l : t.in_links[static_cast<std::size_t>(n)]) EXPECT_EQ(t.links[static_cast<std::size_t>(l)].to, n);
  }
  EXPECT_EQ(out_total, t.num_links());
  for (Index d = 0; d < t.num_dcs(); ++d) {
    EXPECT_EQ(t.out_links[static_cast<std::size_t>(t.dc_node(d))].size(), 1u);
    EXPECT_TRUE(t.in_links[static_cast<std::size_t>(t.dc_node(d))].empty());
  }
  EXPECT_NE(t.dcs[0].hap, t.dcs[1].hap);
  for (const auto& l : t.links) {
    EXPECT_GT(l.distance_m, 0.0);
    EXPECT_EQ(l.distance_m, l.transmission_distance_m);
  }
  std::vector<int> seen(static_cast<std::size_t>(t.num_users()), 0);
  for (const auto& users : t.hap_users)
    for (Index u : users) ++seen[static_cast<std::size_t>(u)];
  for (int s : seen) EXPECT_EQ(s, 1);
  for (const auto& u : t.users) {
    const auto& h = t.haps[static_cast<std::size_t>(u.hap)];
    EXPECT_LE((u.position.head<2>() - h.head<2>()).norm(), 15e3);
  }
}

TEST(Topology, AdjacentSpacingInRange) {
  const auto t = make(7, 2, 0);
  double nearest = 1e300;
  for (Index k = 1; k < t.num_haps(); ++k) nearest = std::min(nearest, (t.haps[0] - t.haps[static_cast<std::size_t>(k)]).norm());
  EXPECT_GE(nearest, 40e3);
  EXPECT_LE(nearest, 60e3);
  for (Index k = 1; k < t.num_haps(); ++k)
    EXPECT_NEAR((t.haps[0] - t.haps[static_cast<std::size_t>(k)]).norm(), nearest, 1e-6);
}

TEST(Topology, Reproducible) {
  const auto a = make(4, 2, 20, 99), b = make(4, 2, 20, 99);
  ASSERT_EQ(a.num_links(), b.num_links());
  for (Index l = 0; l < a.num_links(); ++l)
    EXPECT_EQ(a.links[static_cast<std::size_t>(l)].distance_m, b.links[static_cast<std::size_t>(l)].distance_m);
  for (Index u = 0; u < a.num_users(); ++u)
    EXPECT_EQ(a.users[static_cast<std::size_t>(u)].position, b.users[static_cast<std::size_t>(u)].position);
}

TEST(Topology, RejectsBadConfig) {
  TopologyConfig cfg;
  Rng rng(1);
  cfg.num_haps = 1;
  cfg.num_dcs = 2;
  EXPECT_THROW(build_topology(cfg, rng), std::invalid_argument);
  cfg.num_dcs = 0;
  cfg.coverage_radius_m = 0.0;
  EXPECT_THROW(build_topology(cfg, rng), std::invalid_argument);
  cfg.coverage_radius_m = 15e3;
  cfg.spacing_min_m = -1.0;
  EXPECT_THROW(build_topology(cfg, rng), std::invalid_argument);
}

TEST(Topology, JsonHasTables) {
  const auto j = make(2, 1, 4).to_json();
  EXPECT_EQ(j["nodes"].size(), 3u);
  EXPECT_EQ(j["links"].size(), 3u);
  EXPECT_EQ(j["users"].size(), 4u);
}

}  // namespace
}  // namespace hapcache
