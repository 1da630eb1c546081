#include <cmath>

#include <gtest/gtest.h>

#include "hapcache/conic.hpp"

namespace hapcache::conic {
namespace {

TEST(Conic, LinearLowerBound) {
  Program p;
  Index x = p.add_variable(1.0);
  p.inequalities.push_back(LinearForm(-1.0).add(x, 1.0));  // x >= 1
  p.inequalities.push_back(LinearForm(5.0).add(x, -1.0));  // x <= 5
  Result r = solve(p);
  ASSERT_EQ(r.status, Status::optimal);
  EXPECT_NEAR(r.x[x], 1.0, 1e-8);
  EXPECT_LE(r.objective - r.gap_bound, 1.0 + 1e-12);
}

TEST(Conic, ExponentialEpigraph) {
  // min z  s.t. (1, 1, z) in K_exp  ->  z = e
  Program p;
  Index z = p.add_variable(1.0);
  p.exp_cones.push_back({LinearForm(1.0), LinearForm(1.0), LinearForm().add(z, 1.0)});
  Result r = solve(p);
  ASSERT_EQ(r.status, Status::optimal);
  EXPECT_NEAR(r.x[z], std::exp(1.0), 1e-8);
}

TEST(Conic, PerspectiveOptimumIsInteriorWhenRateIsLow) {
  // min w  s.t.  tau exp(c g / tau) <= w, 0 <= tau <= 1 ; minimizer tau = c g.
  for (double cg : {0.25, 0.5, 2.0}) {
    Program p;
    Index tau = p.add_variable(0.0);
    Index w = p.add_variable(1.0);
    p.exp_cones.push_back({LinearForm(cg), LinearForm().add(tau, 1.0), LinearForm().add(w, 1.0)});
    p.inequalities.push_back(LinearForm().add(tau, 1.0));
    p.inequalities.push_back(LinearForm(1.0).add(tau, -1.0));
    Result r = solve(p);
    ASSERT_EQ(r.status, Status::optimal);
    const double ts = std::min(1.0, cg);
    EXPECT_NEAR(r.objective, ts * std::exp(cg / ts), 1e-7 * r.objective) << cg;
  }
}

TEST(Conic, SemidefiniteTrace) {
  // min tr X, X PSD 2x2, X00 >= 1, X11 >= 2 -> 3
  Program p;
  Index a = p.add_variable(1.0), b = p.add_variable(0.0), c = p.add_variable(1.0);
  MatrixInequality m;
  m.constant = Eigen::MatrixXd::Zero(2, 2);
  Eigen::MatrixXd ea = Eigen::MatrixXd::Zero(2, 2), eb = ea, ec = ea;
  ea(0, 0) = 1;
  eb(0, 1) = eb(1, 0) = 1;
  ec(1, 1) = 1;
  m.terms = {{a, ea}, {b, eb}, {c, ec}};
  p.matrix_inequalities.push_back(m);
  p.inequalities.push_back(LinearForm(-1.0).add(a, 1.0));
  p.inequalities.push_back(LinearForm(-2.0).add(c, 1.0));
  Result r = solve(p);
  ASSERT_EQ(r.status, Status::optimal);
  EXPECT_NEAR(r.objective, 3.0, 1e-7);
}

TEST(Conic, DetectsInfeasibility) {
  Program p;
  Index x = p.add_variable(1.0);
  p.inequalities.push_back(LinearForm(-1.0).add(x, 1.0));  // x >= 1
  p.inequalities.push_back(LinearForm(0.0).add(x, -1.0));  // x <= 0
  EXPECT_EQ(solve(p).status, Status::infeasible);
}

TEST(Conic, EmptyInteriorIsSolvedOnTheBoundary) {
  Program p;
  Index x = p.add_variable(1.0), y = p.add_variable(1.0);
  p.inequalities.push_back(LinearForm(-1.0).add(x, 1.0));  // x >= 1
  p.inequalities.push_back(LinearForm(1.0).add(x, -1.0));  // x <= 1
  p.inequalities.push_back(LinearForm().add(y, 1.0));
  p.equalities.push_back(LinearForm(-3.0).add(x, 1.0).add(y, 1.0));  // x + y = 3
  Result r = solve(p);
  ASSERT_EQ(r.status, Status::optimal);
  EXPECT_NEAR(r.x[x], 1.0, 1e-7);
  EXPECT_NEAR(r.x[x] + r.x[y], 3.0, 1e-9);
  EXPECT_GT(r.relaxation, 0.0);
}

TEST(Conic, InconsistentEqualities) {
  Program p;
  Index x = p.add_variable(1.0);
  p.equalities.push_back(LinearForm(-1.0).add(x, 1.0));
  p.equalities.push_back(LinearForm(-2.0).add(x, 1.0));
  EXPECT_EQ(solve(p).status, Status::infeasible);
}

}  // namespace
}  // namespace hapcache::conic
