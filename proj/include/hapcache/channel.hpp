#ifndef HAPCACHE_CHANNEL_HPP
#define HAPCACHE_CHANNEL_HPP

#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "hapcache/core.hpp"
#include "hapcache/topology.hpp"

namespace hapcache {

struct FsoParams {
  double visibility_km = 60.0;
  double wavelength_nm = 1550.0;
  double responsivity = 0.6;       // A/W
  double noise_variance = 1e-14;   // optical receiver noise variance
  double weibull_phi = 3.21;       // exponentiated-Weibull shape (power)
  double weibull_varsigma = 1.25;  // exponentiated-Weibull shape
  double weibull_scale = 0.94;
  double pointing_sigma_rad = 20e-3;
  double beamwidth_rad = 40e-3;
  double aperture_radius_m = 0.4;
  double bandwidth_hz = 10e9;
  /// Transmit power cap in W; infinity disables the cap.
  double p_max_w = std::numeric_limits<double>::infinity();

  void validate() const {
    require(visibility_km > 0 && wavelength_nm > 0 && responsivity > 0 && noise_variance > 0,
            "fso: parameters must be positive");
    require(weibull_phi > 0 && weibull_varsigma > 0 && weibull_scale > 0, "fso: invalid Weibull parameters");
    require(pointing_sigma_rad > 0 && beamwidth_rad > 0 && aperture_radius_m > 0, "fso: invalid pointing parameters");
    require(bandwidth_hz > 0 && p_max_w > 0, "fso: bandwidth and p_max must be positive");
  }
};

/// Kruse visibility exponent.
inline double kruse_coefficient(double visibility_km) {
  require(visibility_km > 0.0, "kruse: visibility must be positive");
  if (visibility_km > 50.0) return 1.6;
  if (visibility_km >= 6.0) return 1.3;
  return 0.585 * std::cbrt(visibility_km);
}

/// Deterministic atmospheric attenuation over d metres.
inline double attenuation(double distance_m, const FsoParams& p) {
  require(distance_m >= 0.0, "attenuation: negative distance");
  const double kappa = kruse_coefficient(p.visibility_km);
  return std::exp(-(0.0009 / p.visibility_km) * std::pow(p.wavelength_nm / 550.0, kappa) * distance_m);
}

// Exponentiated Weibull: F(h) = [1 - exp(-(h/eps)^vs)]^phi.
inline double turbulence_pdf(double h, const FsoParams& p) {
  if (h <= 0.0) return 0.0;
  const double phi = p.weibull_phi, vs = p.weibull_varsigma, eps = p.weibull_scale;
  const double y = std::pow(h / eps, vs);
  const double e = std::exp(-y);
  return phi * vs / eps * std::pow(h / eps, vs - 1.0) * e * std::pow(-std::expm1(-y), phi - 1.0);
}

inline double turbulence_quantile(double u, const FsoParams& p) {
  return p.weibull_scale *
         std::pow(-std::log1p(-std::pow(u, 1.0 / p.weibull_phi)), 1.0 / p.weibull_varsigma);
}

inline double sample_turbulence(const FsoParams& p, Rng& rng) { return turbulence_quantile(uniform_open(rng), p); }

/// Upper end of the pointing-loss support for a link of length upsilon.
inline double pointing_max(const FsoParams& p, double upsilon_m) {
  const double th = p.beamwidth_rad;
  return p.aperture_radius_m * p.aperture_radius_m / (2.0 * th * th * upsilon_m * upsilon_m);
}

// Power-law density on [0, h_max) with exponent theta^2/sigma0^2 - 1, which
// integrates to one.
inline double pointing_pdf(double h, const FsoParams& p, double upsilon_m) {
  const double hmax = pointing_max(p, upsilon_m);
  if (h < 0.0 || h >= hmax) return 0.0;
  const double k = p.beamwidth_rad * p.beamwidth_rad / (p.pointing_sigma_rad * p.pointing_sigma_rad);
  return k / hmax * std::pow(h / hmax, k - 1.0);
}

inline double pointing_quantile(double u, const FsoParams& p, double upsilon_m) {
  const double k = p.beamwidth_rad * p.beamwidth_rad / (p.pointing_sigma_rad * p.pointing_sigma_rad);
  return pointing_max(p, upsilon_m) * std::pow(u, 1.0 / k);
}

inline double sample_pointing(const FsoParams& p, double upsilon_m, Rng& rng) {
  require(upsilon_m > 0.0, "pointing: link distance must be positive");
  double h = pointing_quantile(uniform_open(rng), p, upsilon_m);
  const double hmax = pointing_max(p, upsilon_m);
  if (h >= hmax) h = std::nextafter(hmax, 0.0);
  return h;
}

/// g = e * responsivity^2 * h^2 / (2 pi sigma^2)
inline double link_gain_factor(double h, const FsoParams& p) {
  return std::numbers::e * p.responsivity * p.responsivity * h * h / (2.0 * std::numbers::pi * p.noise_variance);
}

struct FsoLinkState {
  double h_al = 1.0;
  double h_at = 1.0;
  double h_pl = 0.0;
  double h = 0.0;
  double g = 0.0;
};

inline std::vector<FsoLinkState> sample_fso(const NetworkTopology& topo, const FsoParams& p, Rng& rng) {
  std::vector<FsoLinkState> out;
  out.reserve(topo.links.size());
  for (const auto& l : topo.links) {
    FsoLinkState s;
    s.h_al = attenuation(l.distance_m, p);
    s.h_at = sample_turbulence(p, rng);
    s.h_pl = sample_pointing(p, l.transmission_distance_m, rng);
    s.h = s.h_al * s.h_at * s.h_pl;
    s.g = link_gain_factor(s.h, p);
    out.push_back(s);
  }
  return out;
}

/// Average transmit power over the slot needed to carry gamma bits/s when the
/// link is active for a fraction tau. nullopt when gamma > 0 and tau = 0.
inline std::optional<double> fso_power_for_rate(double gamma, double tau, double g, const FsoParams& p) {
  require(gamma >= 0.0 && tau >= 0.0 && tau <= 1.0, "fso power: rate/time fraction out of range");
  if (gamma == 0.0) return 0.0;
  if (tau == 0.0) return std::nullopt;
  require(g > 0.0, "fso power: link gain must be positive");
  const double x = 2.0 * std::numbers::ln2 * gamma / (p.bandwidth_hz * tau);
  return std::sqrt(tau * tau / g * std::expm1(x));
}

/// Inverse of fso_power_for_rate at fixed (tau, g).
inline double fso_rate_for_power(double power, double tau, double g, const FsoParams& p) {
  if (tau == 0.0 || power == 0.0) return 0.0;
  return tau * p.bandwidth_hz / (2.0 * std::numbers::ln2) * std::log1p(g * (power / tau) * (power / tau));
}

/// High-SNR perspective power tau * exp(gamma ln2 / (B tau)) / sqrt(g).
inline double approx_link_power(double gamma, double tau, double g, const FsoParams& p) {
  if (tau <= 0.0 || gamma <= 0.0) return 0.0;
  return tau * std::exp(gamma * std::numbers::ln2 / (p.bandwidth_hz * tau)) / std::sqrt(g);
}

/// Rate the link can carry at full power p_max during fraction tau.
inline double capacity_cap(double tau, double g, const FsoParams& p) {
  if (!std::isfinite(p.p_max_w)) return std::numeric_limits<double>::infinity();
  return p.bandwidth_hz * tau / (2.0 * std::numbers::ln2) * std::log1p(g * p.p_max_w * p.p_max_w);
}

struct RfParams {
  Index antennas = 6;
  double carrier_hz = 2e9;
  double rician_k = 5.0;
  double bandwidth_hz = 10e6;
  double noise_figure_db = 7.0;
  /// Overrides the thermal noise estimate when positive.
  double noise_power_w = 0.0;

  double noise_power() const {
    if (noise_power_w > 0.0) return noise_power_w;
    constexpr double boltzmann = 1.380649e-23;
    return boltzmann * 290.0 * bandwidth_hz * std::pow(10.0, noise_figure_db / 10.0);
  }

  /// SINR target that supports `rate` bits/s over the RF bandwidth.
  double sinr_target(double rate) const { return std::exp2(rate / bandwidth_hz) - 1.0; }
};

/// Channel vectors from each user's serving HAP.
struct RfChannelState {
  std::vector<Eigen::VectorXcd> user_channel;
};

inline double free_space_gain(double distance_m, double carrier_hz) {
  constexpr double c = 299792458.0;
  const double a = c / (4.0 * std::numbers::pi * carrier_hz * distance_m);
  return a * a;
}

/// Half-wavelength uniform linear array along the x axis.
inline Eigen::VectorXcd steering_vector(const Eigen::Vector3d& direction, Index antennas) {
  const double cos_angle = direction.normalized().x();
  Eigen::VectorXcd a(antennas);
  for (Index m = 0; m < antennas; ++m) a[m] = std::polar(1.0, std::numbers::pi * static_cast<double>(m) * cos_angle);
  return a;
}

inline Eigen::VectorXcd rician_vector(const Eigen::VectorXcd& los, double k_factor, double path_gain, Rng& rng) {
  const Index m = los.size();
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  Eigen::VectorXcd h(m);
  if (std::isinf(k_factor)) {
    h = los;
  } else {
    const double a = std::sqrt(k_factor / (k_factor + 1.0));
    const double b = std::sqrt(1.0 / (k_factor + 1.0));
    for (Index i = 0; i < m; ++i) {
      const double re = normal(rng);
      const double im = normal(rng);
      h[i] = a * los[i] + b * Complex(re, im);
    }
  }
  return std::sqrt(path_gain) * h;
}

inline RfChannelState sample_rf(const NetworkTopology& topo, const RfParams& p, Rng& rng) {
  require(p.antennas >= 1, "rf: need at least one antenna");
  RfChannelState s;
  s.user_channel.reserve(topo.users.size());
  for (const auto& u : topo.users) {
    const Eigen::Vector3d dir = u.position - topo.haps[static_cast<std::size_t>(u.hap)];
    const double d = dir.norm();
    s.user_channel.push_back(rician_vector(steering_vector(dir, p.antennas), p.rician_k, free_space_gain(d, p.carrier_hz), rng));
  }
  return s;
}

/// Per-slot channel snapshot.
struct ChannelSnapshot {
  std::vector<FsoLinkState> fso;
  RfChannelState rf;

  std::uint64_t fso_digest() const {
    Fnv1a h;
    for (const auto& s : fso) h.numbers(std::vector<double>{s.h_al, s.h_at, s.h_pl, s.g});
    return h.value();
  }
  std::uint64_t rf_digest() const {
    Fnv1a h;
    for (const auto& v : rf.user_channel)
      for (Index i = 0; i < v.size(); ++i) {
        h.number(v[i].real());
        h.number(v[i].imag());
      }
    return h.value();
  }
};

}  // namespace hapcache

#endif  // HAPCACHE_CHANNEL_HPP
