#include <gtest/gtest.h>

#include <filesystem>

#include "hapcache/harness.hpp"

using namespace hapcache;

namespace {

ScenarioConfig tiny() {
  auto c = ScenarioConfig::desk();
  c.ppo.horizon = 3;
  c.ppo.iter_max = 1;
  c.ppo.iter_mb = 1;
  c.ppo.hidden = {4};
  c.eval_episodes = 1;
  return c;
}

CachePlacement full(Index k, Index c) {
  CachePlacement z(k, c);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < c; ++j) z(i, j) = 1;
  return z;
}

nlohmann::json one_slot_record(double pc) {
  return {{"omega", 1.0},
          {"n_sto", 2},
          {"slots",
           {{{"episode", 0},
             {"slot", 0},
             {"z_next", {{1, 1, 0}}},
             {"feasible", true},
             {"pc", pc},
             {"p_dc", 2.0},
             {"p_hap", 3.0},
             {"p_rf", 4.0},
             {"reward", -pc},
             {"routing_verified", true},
             {"min_sinr_ratio", 1.0}}}}};
}

}  // namespace

TEST(Harness, ZeroWeightCostIsDataCenterSide) {
  auto cfg = tiny();
  cfg.omega = 0.0;
  const Scenario sc(cfg);
  const auto in = slot_inputs(sc, Phase::eval, 0, 0);
  const CachePlacement z(sc.num_haps(), sc.num_contents());
  const auto r = run_slot(sc, z, z, in, Phase::eval, 0, 0);
  ASSERT_TRUE(r.feasible) << r.message;
  EXPECT_GT(r.p_dc, 0.0);
  EXPECT_EQ(r.pc, r.p_dc);
}

TEST(Harness, FullCacheWithoutUpdatesCostsOnlyBeamforming) {
  auto cfg = tiny();
  cfg.n_sto = cfg.num_contents;
  cfg.omega = 1.7;
  const Scenario sc(cfg);
  const auto in = slot_inputs(sc, Phase::eval, 0, 1);
  const auto z = full(sc.num_haps(), sc.num_contents());
  const auto r = run_slot(sc, z, z, in, Phase::eval, 0, 1);
  ASSERT_TRUE(r.feasible) << r.message;
  EXPECT_EQ(r.sessions, 0);
  EXPECT_EQ(r.p_dc, 0.0);
  EXPECT_EQ(r.p_hap, 0.0);
  EXPECT_GT(r.p_rf, 0.0);
  EXPECT_DOUBLE_EQ(r.pc, 1.7 * r.p_rf);
}

TEST(Harness, CostArithmeticIsChecked) {
  EXPECT_TRUE(verify_record(one_slot_record(9.0)).pass());
  const auto bad = verify_record(one_slot_record(8.0));
  ASSERT_FALSE(bad.pass());
  EXPECT_NE(bad.failures.front().find("pc does not match"), std::string::npos);
}

TEST(Harness, VerifierFlagsCapacityAndSinr) {
  auto j = one_slot_record(9.0);
  j["slots"][0]["z_next"] = {{1, 1, 1}};
  j["slots"][0]["min_sinr_ratio"] = 0.99;
  const auto rep = verify_record(j);
  EXPECT_EQ(rep.failures.size(), 2u);
}

TEST(Harness, RandomPlacementFillsCapacity) {
  const Scenario sc(tiny());
  for (Index e = 0; e < 20; ++e) {
    const auto z = random_placement(sc, e);
    for (Index k = 0; k < sc.num_haps(); ++k) EXPECT_EQ(z.row_sum(k), sc.cfg.n_sto);
  }
  EXPECT_EQ(random_placement(sc, 3), random_placement(sc, 3));
}

TEST(Harness, PopularPlacementWithRoomForEverything) {
  auto cfg = tiny();
  cfg.n_sto = cfg.num_contents;
  const Scenario sc(cfg);
  const auto in = slot_inputs(sc, Phase::eval, 0, 0);
  const CachePlacement empty(sc.num_haps(), sc.num_contents());
  const auto z = popular_placement(sc, empty, in.alpha);
  for (Index k = 0; k < sc.num_haps(); ++k)
    for (Index c = 0; c < sc.num_contents(); ++c) {
      bool requested = false;
      for (Index u : sc.topo.hap_users[static_cast<std::size_t>(k)]) requested = requested || in.alpha(u, c);
      EXPECT_EQ(z(k, c) == 1, requested) << k << ' ' << c;
    }
  // Already cached contents stay when there is room.
  const auto kept = popular_placement(sc, full(sc.num_haps(), sc.num_contents()), in.alpha);
  EXPECT_EQ(kept, full(sc.num_haps(), sc.num_contents()));
}

TEST(Harness, PopularPlacementRespectsCapacity) {
  const Scenario sc(tiny());
  for (Index t = 0; t < 5; ++t) {
    const auto in = slot_inputs(sc, Phase::eval, 1, t);
    const auto z = popular_placement(sc, CachePlacement(sc.num_haps(), sc.num_contents()), in.alpha);
    for (Index k = 0; k < sc.num_haps(); ++k) EXPECT_LE(z.row_sum(k), sc.cfg.n_sto);
  }
}

TEST(Harness, EvaluationIsReproducible) {
  const Scenario a(tiny()), b(tiny());
  const auto ra = evaluate(a, Method::b2, nullptr);
  const auto rb = evaluate(b, Method::b2, nullptr);
  EXPECT_EQ(ra.digest(), rb.digest());
  EXPECT_EQ(ra.slots.size(), 3u);
  auto other = tiny();
  other.seed = 2;
  EXPECT_NE(evaluate(Scenario(other), Method::b2, nullptr).digest(), ra.digest());
}

TEST(Harness, StoredRecordsVerify) {
  const Scenario sc(tiny());
  const auto rec = evaluate(sc, Method::b3, nullptr);
  const auto rep = verify_record(nlohmann::json::parse(rec.to_json().dump()));
  EXPECT_TRUE(rep.pass()) << (rep.failures.empty() ? "" : rep.failures.front());
  EXPECT_EQ(rep.slots_checked, 3);
}

TEST(Harness, EnvironmentStepsThroughSlots) {
  const Scenario sc(tiny());
  CachingEnvironment env(sc, Coupling::multicast);
  const auto s0 = env.reset(0);
  ASSERT_EQ(s0.size(), sc.state_size());
  EXPECT_EQ(s0.head(sc.action_size()).sum(), 0.0);
  const auto st = env.step(Eigen::VectorXd::Ones(sc.action_size()));
  ASSERT_TRUE(st.feasible) << env.last().message;
  // proc_act keeps the first n_sto contents of every HAP.
  EXPECT_EQ(st.next_state.head(sc.action_size()).sum(), static_cast<double>(sc.num_haps() * sc.cfg.n_sto));
  EXPECT_EQ(st.cost, env.last().pc);
}

TEST(Harness, PolicyStateCarriesSlotFraction) {
  auto cfg = tiny();
  const Scenario with(cfg);
  const auto in = slot_inputs(with, Phase::eval, 0, 0);
  const CachePlacement z(with.num_haps(), with.num_contents());
  const auto s = with.policy_state(z, in.alpha, 2);
  ASSERT_EQ(s.size(), 2 * with.action_size() + 1);
  EXPECT_DOUBLE_EQ(s[s.size() - 1], 2.0 / 3.0);
  cfg.ppo.time_feature = false;
  const Scenario without(cfg);
  EXPECT_EQ(without.policy_state(z, in.alpha, 2), s.head(2 * with.action_size()));
  EXPECT_EQ(without.state_size(), 2 * without.action_size());
}

TEST(Harness, SingleCellSweepGivesOneRowPerMethod) {
  const auto dir = std::filesystem::temp_directory_path() / "hapcache_sweep_test";
  std::filesystem::remove_all(dir);
  const auto cells = sweep(tiny(), "users", {6}, {1}, dir);
  ASSERT_EQ(cells.size(), 5u);
  for (const auto& c : cells) {
    EXPECT_TRUE(c.error.empty()) << c.error;
    EXPECT_EQ(c.value, 6.0);
  }
  const auto back = read_summary_csv(dir / "summary_users.csv");
  ASSERT_EQ(back.size(), 5u);
  EXPECT_EQ(back[2].method, "B2");
  EXPECT_DOUBLE_EQ(back[2].pc, cells[2].pc);
  EXPECT_TRUE(std::filesystem::exists(dir / "runs" / "B4_users_6_seed1.json"));
  std::filesystem::remove_all(dir);
}

TEST(Harness, SweepRecordsFailedCells) {
  const auto cells = sweep(tiny(), "n_sto", {-1}, {1}, {}, {Method::b4});
  ASSERT_EQ(cells.size(), 1u);
  EXPECT_FALSE(cells[0].error.empty());
  EXPECT_TRUE(std::isnan(cells[0].pc));
}

TEST(Harness, ConfigJsonRoundTrip) {
  auto c = ScenarioConfig::full();
  c.omega = 0.5;
  c.fso.visibility_km = 4.0;
  c.ppo.lr_actor = 1e-3;
  const auto back = ScenarioConfig::from_json(c.to_json());
  EXPECT_EQ(back.hash(), c.hash());
  const auto overlay = ScenarioConfig::from_json({{"profile", "desk"}, {"n_sto", 3}});
  EXPECT_EQ(overlay.n_sto, 3);
  EXPECT_EQ(overlay.num_contents, ScenarioConfig::desk().num_contents);
  EXPECT_THROW(ScenarioConfig::from_json({{"profile", "nope"}}), std::invalid_argument);
  auto axis = c;
  EXPECT_THROW(axis.set_axis("nope", 1.0), std::invalid_argument);
}

TEST(Harness, MethodNames) {
  for (Method m : all_methods()) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_THROW(parse_method("B9"), std::invalid_argument);
}
