#include <cmath>
#include <numbers>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/multiprecision/cpp_bin_float.hpp>
#include <gtest/gtest.h>

#include "hapcache/channel.hpp"

namespace hapcache {
namespace {

using boost::multiprecision::cpp_bin_float_50;

TEST(Channel, KruseBranches) {
  EXPECT_EQ(kruse_coefficient(60.0), 1.6);
  EXPECT_EQ(kruse_coefficient(10.0), 1.3);
  EXPECT_EQ(kruse_coefficient(1.0), 0.585);
  EXPECT_EQ(kruse_coefficient(50.0), 1.3);
  EXPECT_EQ(kruse_coefficient(6.0), 1.3);
  EXPECT_THROW(kruse_coefficient(0.0), std::invalid_argument);
}

TEST(Channel, AttenuationMatchesHighPrecision) {
  FsoParams p;
  EXPECT_EQ(attenuation(0.0, p), 1.0);
  EXPECT_GT(attenuation(1000.0, p), attenuation(2000.0, p));
  cpp_bin_float_50 ratio = cpp_bin_float_50(1550) / 550;
  cpp_bin_float_50 expo = -(cpp_bin_float_50("0.0009") / 60) * pow(ratio, cpp_bin_float_50("1.6")) * 1000;
  const double oracle = static_cast<double>(exp(expo));
  EXPECT_NEAR(attenuation(1000.0, p), oracle, 1e-15 * oracle);
}

TEST(Channel, TurbulenceQuantile) {
  FsoParams p;
  EXPECT_LT(turbulence_quantile(1e-300, p), 1e-50);
  p.weibull_phi = 1.0;
  EXPECT_NEAR(turbulence_quantile(1.0 - std::exp(-1.0), p), p.weibull_scale, 1e-12);
}

TEST(Channel, TurbulenceDensityAndMean) {
  FsoParams p;
  boost::math::quadrature::tanh_sinh<double> ts;
  const double mass = ts.integrate([&](double h) { return turbulence_pdf(h, p); }, 0.0, std::numeric_limits<double>::infinity());
  EXPECT_NEAR(mass, 1.0, 1e-6);
  const double mean = ts.integrate([&](double h) { return h * turbulence_pdf(h, p); }, 0.0, std::numeric_limits<double>::infinity());
  Rng rng(11);
  double acc = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) acc += sample_turbulence(p, rng);
  EXPECT_NEAR(acc / n, mean, 0.01 * mean);
}

TEST(Channel, PointingDensityAndSupport) {
  FsoParams p;
  const double ups = 50e3;
  const double hmax = pointing_max(p, ups);
  EXPECT_DOUBLE_EQ(hmax, 0.16 / (2.0 * 1.6e-3 * 2.5e9));
  boost::math::quadrature::tanh_sinh<double> ts;
  EXPECT_NEAR(ts.integrate([&](double h) { return pointing_pdf(h, p, ups); }, 0.0, hmax), 1.0, 1e-6);
  Rng rng(4);
  for (int i = 0; i < 10000; ++i) {
    const double h = sample_pointing(p, ups, rng);
    EXPECT_GE(h, 0.0);
    EXPECT_LT(h, hmax);
  }
  EXPECT_NEAR(pointing_quantile(1.0 - 1e-15, p, ups), hmax, 1e-12 * hmax);
}

TEST(Channel, CompositeGain) {
  TopologyConfig cfg;
  cfg.num_haps = 3;
  cfg.num_dcs = 1;
  cfg.num_users = 0;
  Rng rng(8);
  const auto topo = build_topology(cfg, rng);
  FsoParams p;
  const auto s = sample_fso(topo, p, rng);
  ASSERT_EQ(static_cast<Index>(s.size()), topo.num_links());
  for (const auto& st : s) {
    EXPECT_EQ(st.h, st.h_al * st.h_at * st.h_pl);
    const double g = std::numbers::e * 0.36 * st.h * st.h / (2.0 * std::numbers::pi * p.noise_variance);
    EXPECT_NEAR(st.g, g, 1e-14 * g);
    EXPECT_GT(st.h_al, 0.0);
    EXPECT_LE(st.h_al, 1.0);
  }
}

TEST(Channel, RatePowerRoundTrip) {
  FsoParams p;
  Rng rng(21);
  std::uniform_real_distribution<double> lg(-2.0, 8.0), ut(0.01, 1.0), lr(3.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const double g = std::pow(10.0, lg(rng)), tau = ut(rng), gamma = std::pow(10.0, lr(rng));
    const double pw = *fso_power_for_rate(gamma, tau, g, p);
    EXPECT_NEAR(fso_rate_for_power(pw, tau, g, p), gamma, 1e-9 * gamma);
  }
  EXPECT_EQ(*fso_power_for_rate(0.0, 0.5, 1.0, p), 0.0);
  EXPECT_FALSE(fso_power_for_rate(1.0, 0.0, 1.0, p).has_value());
}

TEST(Channel, LongerActivityNeedsLessPowerAtHighSnr) {
  FsoParams p;
  const double g = 1e4, gamma = 2.0 * p.bandwidth_hz;
  EXPECT_LT(*fso_power_for_rate(gamma, 1.0, g, p), *fso_power_for_rate(gamma, 0.5, g, p));
}

TEST(Channel, PerspectiveApproximation) {
  FsoParams p;
  EXPECT_EQ(approx_link_power(0.0, 0.5, 1.0, p), 0.0);
  EXPECT_EQ(approx_link_power(1.0, 0.0, 1.0, p), 0.0);
  const double g = 1.0, tau = 0.7, gamma = 8.0 * p.bandwidth_hz;
  const double exact = *fso_power_for_rate(gamma, tau, g, p);
  ASSERT_GE(g * (exact / tau) * (exact / tau), 100.0);
  EXPECT_NEAR(approx_link_power(gamma, tau, g, p), exact, 0.01 * exact);
}

TEST(Channel, PerspectiveMidpointConvex) {
  FsoParams p;
  Rng rng(2);
  std::uniform_real_distribution<double> ut(0.05, 1.0), ur(0.0, 3.0);
  for (int i = 0; i < 2000; ++i) {
    const double t1 = ut(rng), t2 = ut(rng), g1 = ur(rng) * p.bandwidth_hz, g2 = ur(rng) * p.bandwidth_hz;
    const double mid = approx_link_power(0.5 * (g1 + g2), 0.5 * (t1 + t2), 1.0, p);
    const double avg = 0.5 * (approx_link_power(g1, t1, 1.0, p) + approx_link_power(g2, t2, 1.0, p));
    EXPECT_LE(mid, avg * (1 + 1e-12));
  }
}

TEST(Channel, RicianPowerNormalization) {
  RfParams p;
  Eigen::VectorXcd los = steering_vector(Eigen::Vector3d(1.0, 2.0, -3.0), p.antennas);
  Rng rng(6);
  const double gain = 1e-9;
  double acc = 0.0;
  const int n = 40000;
  for (int i = 0; i < n; ++i) acc += rician_vector(los, p.rician_k, gain, rng).squaredNorm();
  EXPECT_NEAR(acc / n, static_cast<double>(p.antennas) * gain, 0.02 * p.antennas * gain);
  const auto h = rician_vector(los, std::numeric_limits<double>::infinity(), 4.0, rng);
  for (Index i = 0; i < h.size(); ++i) EXPECT_NEAR(std::abs(h[i]), 2.0, 1e-12);
}

TEST(Channel, NoiseAndTarget) {
  RfParams p;
  EXPECT_NEAR(p.noise_power(), 1.380649e-23 * 290.0 * 10e6 * std::pow(10.0, 0.7), 1e-30);
  EXPECT_NEAR(p.sinr_target(4e6), std::pow(2.0, 0.4) - 1.0, 1e-15);
}

}  // namespace
}  // namespace hapcache
