#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "scau/bands.hpp"
#include "scau/filters.hpp"
#include "scau/frame.hpp"

namespace scau {

// --- modulated pair (nonlinear dependence lemma) ---------------------------

struct Lemma1Params {
  double omega0 = 0.0;  // normalized frequency, 0 < omega0 < 1/2
  double kappa = 1.0;   // frequency multiplier > 0
  double sigma_ex = 1.0;
  double sigma_ey = 1.0;
  Eigen::Index n = 0;
  std::uint64_t seed = 0;

  void validate() const {
    if (omega0 <= 0.0 || omega0 >= 0.5)
      throw std::invalid_argument("Lemma1Params: need 0 < omega0 < 1/2");
    if (kappa <= 0.0) throw std::invalid_argument("Lemma1Params: kappa must be positive");
    if (n < 4) throw std::invalid_argument("Lemma1Params: n too small");
  }
};

// x(n) = cos(2 pi omega0 (n-1)) + e_x, y(n) = cos(2 pi kappa omega0 n) cos(2 pi omega0 n) + e_y.
inline Eigen::MatrixXd gen_lemma1(const Lemma1Params& prm) {
  prm.validate();
  std::mt19937_64 rng(prm.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double two_pi = 2.0 * std::numbers::pi;
  Eigen::MatrixXd out(2, prm.n);
  for (Eigen::Index t = 0; t < prm.n; ++t) {
    const double n = static_cast<double>(t);
    out(0, t) = std::cos(two_pi * prm.omega0 * (n - 1.0)) + prm.sigma_ex * gauss(rng);
    out(1, t) = std::cos(two_pi * prm.kappa * prm.omega0 * n) *
                    std::cos(two_pi * prm.omega0 * n) +
                prm.sigma_ey * gauss(rng);
  }
  return out;
}

// --- deterministic covariance integrals ------------------------------------

struct CovarianceTriple {
  double lag11 = 0.0;  // cov(x(n-1), y(n-1))
  double lag12 = 0.0;  // cov(x(n-1), y(n-2))
  double lag20 = 0.0;  // cov(x(n-2), y(n))
};

namespace detail {

// (1/2pi) * integral over [0, 2pi] of cos(c v + phase) dv.
inline double cos_integral(double c, double phase) {
  const double two_pi = 2.0 * std::numbers::pi;
  if (std::abs(c) < 1e-14) return std::cos(phase);
  return (std::sin(two_pi * c + phase) - std::sin(phase)) / (two_pi * c);
}

}  // namespace detail

// Product-to-sum expansion of the three covariance integrands. These match the
// quadrature below to machine precision; the published expressions do not (they
// carry transcription errors) and are kept separately for reporting.
inline CovarianceTriple lemma1_cov_closed(double omega0, double kappa) {
  const double a = 2.0 * std::numbers::pi * kappa * omega0;
  const double b = 2.0 * std::numbers::pi * omega0;
  using detail::cos_integral;
  CovarianceTriple c;
  c.lag11 = 0.5 * cos_integral(a, 0.0) + 0.25 * cos_integral(a + 2 * b, 0.0) +
            0.25 * cos_integral(a - 2 * b, 0.0);
  c.lag12 = 0.5 * std::cos(b) * cos_integral(a, 0.0) + 0.25 * cos_integral(a + 2 * b, -b) +
            0.25 * cos_integral(a - 2 * b, b);
  c.lag20 = 0.5 * std::cos(b) * cos_integral(a, -2.0 * a) +
            0.25 * cos_integral(a + 2 * b, -2.0 * a - 3.0 * b) +
            0.25 * cos_integral(a - 2 * b, -2.0 * a + 3.0 * b);
  return c;
}

// Composite Simpson quadrature of the covariance integrands over one cycle.
inline CovarianceTriple lemma1_cov_quadrature(double omega0, double kappa,
                                              int panels = 1 << 14) {
  const double two_pi = 2.0 * std::numbers::pi;
  auto f11 = [&](double v) {
    const double c = std::cos(two_pi * omega0 * v);
    return std::cos(two_pi * kappa * omega0 * v) * c * c;
  };
  auto f12 = [&](double v) {
    return std::cos(two_pi * kappa * omega0 * v) * std::cos(two_pi * omega0 * v) *
           std::cos(two_pi * omega0 * (v - 1.0));
  };
  auto f20 = [&](double v) {
    return std::cos(two_pi * kappa * omega0 * (v - 2.0)) *
           std::cos(two_pi * omega0 * (v - 2.0)) * std::cos(two_pi * omega0 * (v - 1.0));
  };
  auto simpson = [&](auto&& f) {
    const double h = two_pi / panels;
    double s = f(0.0) + f(two_pi);
    for (int i = 1; i < panels; ++i) s += f(h * i) * (i % 2 ? 4.0 : 2.0);
    return s * h / 3.0 / two_pi;
  };
  return {simpson(f11), simpson(f12), simpson(f20)};
}

// The expressions exactly as published. Singular at kappa = 2 (and kappa -> 0).
inline CovarianceTriple lemma1_cov_printed(double omega0, double kappa) {
  const double pi = std::numbers::pi;
  const double pi2 = pi * pi;
  const double w = omega0;
  const double k = kappa;
  if (std::abs(k - 2.0) < 1e-9 || k < 1e-9)
    throw std::domain_error("lemma1_cov_printed: singular at kappa = 2 or kappa -> 0");
  CovarianceTriple c;
  c.lag11 = std::sin(2 * pi2 * w * (k - 2)) / (16 * pi2 * w * (k - 2)) +
            std::sin(2 * pi2 * w * (k + 2)) / (16 * pi2 * w * (k + 2)) +
            std::sin(2 * pi2 * k * w) / (8 * pi2 * w * (k + 2));
  c.lag12 = std::sin(4 * pi2 * w * (k - 2) + 2 * pi * w) / (16 * pi2 * w * (k - 2)) +
            std::sin(4 * pi2 * w * (k + 2) - 2 * pi * w) / (16 * pi2 * w * (k + 2)) +
            std::sin(4 * pi * w * (pi * k + 0.5)) / (16 * pi2 * w * k) +
            std::sin(4 * pi * w * (pi * k - 0.5)) / (16 * pi2 * w * k) +
            std::sin(pi * w) * std::cos(pi * w) / (2 * pi2 * w * (k * k - 4));
  c.lag20 = std::sin(4 * pi * w * (pi * (k - 2) - (k - 1))) / (16 * pi2 * w * (k - 2)) +
            std::sin(4 * pi * w * (pi * (k + 2) - (k + 1))) / (16 * pi2 * w * (k + 2)) +
            std::sin(4 * pi * w * (pi * k + (k - 1))) / (16 * pi2 * w) +
            std::sin(4 * pi * w * (pi * k - (k - 1))) / (16 * pi2 * w) +
            std::sin(4 * pi * w * (k - 1)) * (k - 1) / (8 * pi2 * w * k * (k - 2)) +
            std::sin(4 * pi * w * (k + 1)) * (k + 1) / (8 * pi2 * w * k * (k + 2));
  return c;
}

// --- AR(2) spectral-peak parametrization -----------------------------------

struct Ar2Params {
  double omega_star = 0.0;  // normalized resonating frequency
  double tau = 0.0;         // bandwidth parameter
  double phi1 = 0.0;
  double phi2 = 0.0;
};

inline Ar2Params ar2_from_peak(double omega_star, double tau) {
  if (omega_star <= 0.0 || omega_star >= 0.5)
    throw std::invalid_argument("ar2_from_peak: need 0 < omega* < 1/2");
  if (!std::isfinite(tau)) throw std::invalid_argument("ar2_from_peak: tau must be finite");
  Ar2Params p;
  p.omega_star = omega_star;
  p.tau = tau;
  const double r = 1.0 / (1.0 + std::exp(-tau));  // pole modulus, < 1
  p.phi1 = 2.0 * r * std::cos(2.0 * std::numbers::pi * omega_star);
  p.phi2 = -r * r;
  return p;
}

// --- lag-1 cross-correlation of two coupled AR(2) series -------------------

struct CrossCorrResult {
  double rho0 = 0.0;       // achieved contemporaneous correlation
  double rho_ab_1 = 0.0;   // analytic corr(x_A(n), x_B(n-1))
  double rho_ba_1 = 0.0;   // analytic corr(x_A(n-1), x_B(n))
  double sim_rho0 = 0.0;
  double sim_rho_ab_1 = 0.0;
  double sim_rho_ba_1 = 0.0;
  double innovation_corr = 0.0;
};

// Closed forms. The square-root factor in the published expression is taken on
// the branch sqrt(phi2A phi2B) = -sqrt(|phi2A| |phi2B|): both phi2 are
// negative, and only this branch reduces to the AR(2) autocorrelation
// phi1 / (1 - phi2) when A = B.
inline double rho_ab1_closed(const Ar2Params& a, const Ar2Params& b, double rho0) {
  return rho0 * (a.phi1 + a.phi2 * b.phi1) / (1.0 - a.phi2 * b.phi2);
}

inline double rho_ba1_closed(const Ar2Params& a, const Ar2Params& b, double rho0) {
  return rho0 * (b.phi1 + b.phi2 * a.phi1) / (1.0 - a.phi2 * b.phi2);
}

namespace detail {

struct SimCorr {
  double rho0, rho_ab_1, rho_ba_1;
};

inline SimCorr simulate_ar2_pair(const Ar2Params& a, const Ar2Params& b, double innov_corr,
                                 Eigen::Index n, std::uint64_t seed,
                                 Eigen::Index burnin = 20000) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double cr = std::sqrt(std::max(0.0, 1.0 - innov_corr * innov_corr));
  const Eigen::Index total = n + burnin;
  std::vector<double> xa(total, 0.0), xb(total, 0.0);
  for (Eigen::Index t = 2; t < total; ++t) {
    const double z1 = gauss(rng);
    const double z2 = gauss(rng);
    xa[t] = a.phi1 * xa[t - 1] + a.phi2 * xa[t - 2] + z1;
    xb[t] = b.phi1 * xb[t - 1] + b.phi2 * xb[t - 2] + innov_corr * z1 + cr * z2;
  }
  double sa = 0.0, sb = 0.0, sab = 0.0, sab1 = 0.0, sba1 = 0.0;
  for (Eigen::Index t = burnin + 1; t < total; ++t) {
    sa += xa[t] * xa[t];
    sb += xb[t] * xb[t];
    sab += xa[t] * xb[t];
    sab1 += xa[t] * xb[t - 1];
    sba1 += xa[t - 1] * xb[t];
  }
  const double norm = std::sqrt(sa * sb);
  return {sab / norm, sab1 / norm, sba1 / norm};
}

}  // namespace detail

// Analytic formulas plus a simulation check. The innovation correlation that
// induces the requested rho0 is found by bisection against short calibration
// runs, then the final estimates come from one long run.
inline CrossCorrResult cross_corr_lag1(const Ar2Params& a, const Ar2Params& b, double rho0,
                                       Eigen::Index n = 100000, std::uint64_t seed = 1) {
  if (std::abs(rho0) > 1.0) throw std::invalid_argument("cross_corr_lag1: |rho0| > 1");
  double lo = -1.0, hi = 1.0;
  const Eigen::Index n_cal = std::min<Eigen::Index>(n, 60000);
  for (int it = 0; it < 18; ++it) {
    const double mid = 0.5 * (lo + hi);
    const auto s = detail::simulate_ar2_pair(a, b, mid, n_cal, seed + 1000 + it);
    (s.rho0 < rho0 ? lo : hi) = mid;
  }
  const double r = 0.5 * (lo + hi);

  const auto s = detail::simulate_ar2_pair(a, b, r, n, seed);
  CrossCorrResult out;
  out.innovation_corr = r;
  out.sim_rho0 = s.rho0;
  out.sim_rho_ab_1 = s.rho_ab_1;
  out.sim_rho_ba_1 = s.rho_ba_1;
  out.rho0 = s.rho0;
  out.rho_ab_1 = rho_ab1_closed(a, b, s.rho0);
  out.rho_ba_1 = rho_ba1_closed(a, b, s.rho0);
  return out;
}

// --- synthetic cross-frequency modulation networks -------------------------

struct ModulationLink {
  int src_channel = 0;
  int src_band = 0;
  int dst_channel = 0;
  int dst_band = 0;
  double gain = 0.0;
  int lag = 1;
  // Carrier frequency in Hz; non-positive means the target band centre. Any
  // carrier inside the target band defines a valid modulation; only a carrier
  // at (dst.f_a - src.f_a) leaves a dependency that stays frequency-aligned
  // after both bands are mapped to the common interval, so that choice is the
  // one a mapped-domain fit can recover.
  double carrier = -1.0;
};

struct ModulatedNetwork {
  TimeSeriesFrame frame;
  std::vector<ModulationLink> truth;
};

// Channels are sums of band-limited AR(2) components; each link adds the
// lagged product of the source component with a carrier inside the target
// band (default: the band centre) to the target component.
inline ModulatedNetwork gen_modulated_network(int channels, const BandScheme& scheme,
                                              const std::vector<ModulationLink>& links,
                                              Eigen::Index n, std::uint64_t seed,
                                              double component_tau = 3.0) {
  if (channels < 1) throw std::invalid_argument("gen_modulated_network: need >= 1 channel");
  scheme.validate();
  const int nb = static_cast<int>(scheme.bands.size());
  for (const auto& l : links) {
    if (l.src_channel < 0 || l.src_channel >= channels || l.dst_channel < 0 ||
        l.dst_channel >= channels || l.src_band < 0 || l.src_band >= nb || l.dst_band < 0 ||
        l.dst_band >= nb)
      throw std::invalid_argument("gen_modulated_network: link references unknown node");
    const auto& dst_band = scheme.bands[l.dst_band];
    const double f_src = scheme.bands[l.src_band].center();
    const double f_car = l.carrier > 0.0 ? l.carrier : dst_band.center();
    if (f_car < dst_band.f_a || f_car > dst_band.f_b)
      throw std::invalid_argument("gen_modulated_network: carrier outside the target band");
    if (f_car + f_src >= scheme.fs / 2.0)
      throw std::invalid_argument("gen_modulated_network: product frequency outside Nyquist");
  }

  const Eigen::Index burnin = 2000;
  const Eigen::Index total = n + burnin;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  // base components, unit variance
  std::vector<std::vector<double>> comp(static_cast<std::size_t>(channels) * nb);
  for (int c = 0; c < channels; ++c)
    for (int b = 0; b < nb; ++b) {
      const auto& band = scheme.bands[b];
      const Ar2Params p = ar2_from_peak(band.center() / scheme.fs, component_tau);
      std::vector<double> x(total, 0.0);
      for (Eigen::Index t = 2; t < total; ++t)
        x[t] = p.phi1 * x[t - 1] + p.phi2 * x[t - 2] + gauss(rng);
      double var = 0.0;
      for (Eigen::Index t = burnin; t < total; ++t) var += x[t] * x[t];
      const double sd = std::sqrt(var / static_cast<double>(n));
      for (auto& v : x) v /= sd;
      comp[static_cast<std::size_t>(c) * nb + b] = std::move(x);
    }

  for (const auto& l : links) {
    const auto& src = comp[static_cast<std::size_t>(l.src_channel) * nb + l.src_band];
    auto& dst = comp[static_cast<std::size_t>(l.dst_channel) * nb + l.dst_band];
    const auto& band = scheme.bands[l.dst_band];
    const double f_car = l.carrier > 0.0 ? l.carrier : band.center();
    const double w_car = 2.0 * std::numbers::pi * f_car / scheme.fs;
    std::vector<double> prod(total, 0.0);
    for (Eigen::Index t = l.lag; t < total; ++t)
      prod[t] = src[t - l.lag] * std::cos(w_car * static_cast<double>(t));
    double var = 0.0;
    for (Eigen::Index t = burnin; t < total; ++t) var += prod[t] * prod[t];
    const double sd = std::sqrt(var / static_cast<double>(n));
    if (sd > 0.0)
      for (Eigen::Index t = 0; t < total; ++t) dst[t] += l.gain * prod[t] / sd;
  }

  ModulatedNetwork out;
  out.truth = links;
  std::vector<std::string> labels;
  for (int c = 0; c < channels; ++c) labels.push_back("ch" + std::to_string(c + 1));
  Eigen::MatrixXd data = Eigen::MatrixXd::Zero(channels, n);
  for (int c = 0; c < channels; ++c)
    for (int b = 0; b < nb; ++b)
      for (Eigen::Index t = 0; t < n; ++t)
        data(c, t) += comp[static_cast<std::size_t>(c) * nb + b][t + burnin];
  out.frame = TimeSeriesFrame(scheme.fs, std::move(labels), std::move(data));
  return out;
}

}  // namespace scau
