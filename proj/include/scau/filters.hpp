#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "scau/frame.hpp"

#include <nlohmann/json.hpp>

namespace scau {

enum class FilterKind { lowpass, bandpass };

// Cascade Butterworth filter request: cutoff(s), sampling rate, per-stage order
// and stage count. `prewarp_constant` scales the tan() prewarp (2 is the
// standard bilinear value). `paper_literal` selects the zero-free pole-scaling
// recursion instead of the bilinear design; it is provided for comparison only.
struct FilterSpec {
  FilterKind kind = FilterKind::lowpass;
  double f_c1 = 0.0;  // cutoff (lowpass) or lower cutoff (bandpass), Hz
  double f_c2 = 0.0;  // upper cutoff (bandpass only), Hz
  double f_s = 0.0;
  int order = 3;
  int stages = 3;
  double prewarp_constant = 2.0;
  bool paper_literal = false;

  void validate() const {
    if (f_s <= 0.0) throw std::invalid_argument("FilterSpec: f_s must be positive");
    if (order < 1) throw std::invalid_argument("FilterSpec: order must be >= 1");
    if (stages < 1) throw std::invalid_argument("FilterSpec: stages must be >= 1");
    if (kind == FilterKind::lowpass) {
      if (f_c1 <= 0.0 || f_c1 >= f_s / 2.0)
        throw std::invalid_argument("FilterSpec: lowpass cutoff must satisfy 0 < f_c < f_s/2");
    } else {
      if (f_c1 <= 0.0 || f_c2 >= f_s / 2.0 || f_c1 >= f_c2)
        throw std::invalid_argument("FilterSpec: bandpass cutoffs must satisfy 0 < f_c1 < f_c2 < f_s/2");
      if (f_c2 - f_c1 < f_s / 1000.0)
        throw std::invalid_argument("FilterSpec: degenerate bandwidth (f_c2 - f_c1 < f_s/1000)");
    }
  }
};

// One designed stage, repeated `stages` times in cascade. b holds the
// numerator with the normalization gain folded in; a[0] == 1.
struct FilterDesign {
  FilterSpec spec;
  std::vector<double> b;
  std::vector<double> a;
  double gain = 1.0;  // normalization gain (already folded into b)
  std::vector<std::complex<double>> poles;  // digital poles, one stage
  bool stable = false;

  int stage_order() const { return static_cast<int>(a.size()) - 1; }

  // Closed-form response of the full cascade at frequency f_hz.
  std::complex<double> response(double f_hz) const {
    const std::complex<double> w = std::polar(1.0, -2.0 * std::numbers::pi * f_hz / spec.f_s);
    std::complex<double> num{0.0, 0.0}, den{0.0, 0.0};
    std::complex<double> wk{1.0, 0.0};
    for (std::size_t k = 0; k < std::max(a.size(), b.size()); ++k) {
      if (k < b.size()) num += b[k] * wk;
      if (k < a.size()) den += a[k] * wk;
      wk *= w;
    }
    return std::pow(num / den, spec.stages);
  }
};

// Per-stage delay lines for the transposed direct form II recursion.
struct FilterState {
  std::vector<std::vector<double>> z;  // stages x max(|a|,|b|)-1

  explicit FilterState(const FilterDesign& d)
      : z(d.spec.stages,
          std::vector<double>(std::max(d.a.size(), d.b.size()) - 1, 0.0)) {}

  double step(const FilterDesign& d, double x) {
    for (auto& stage : z) {
      const std::size_t m = stage.size();
      const double y = (0 < d.b.size() ? d.b[0] : 0.0) * x + (m > 0 ? stage[0] : 0.0);
      for (std::size_t k = 0; k + 1 < m; ++k) {
        stage[k] = stage[k + 1];
        if (k + 1 < d.b.size()) stage[k] += d.b[k + 1] * x;
        if (k + 1 < d.a.size()) stage[k] -= d.a[k + 1] * y;
      }
      if (m > 0) {
        stage[m - 1] = 0.0;
        if (m < d.b.size()) stage[m - 1] += d.b[m] * x;
        if (m < d.a.size()) stage[m - 1] -= d.a[m] * y;
      }
      x = y;
    }
    return x;
  }
};

namespace detail {

inline std::vector<std::complex<double>> butter_prototype_poles(int order) {
  std::vector<std::complex<double>> p;
  p.reserve(order);
  for (int k = 1; k <= order; ++k) {
    const double theta = std::numbers::pi * (2.0 * k + order - 1.0) / (2.0 * order);
    p.push_back(std::polar(1.0, theta));  // left half plane for k = 1..N
  }
  return p;
}

// Expand prod(x - r_i) into real coefficients, ascending powers of x.
inline std::vector<double> poly_from_roots(const std::vector<std::complex<double>>& roots) {
  std::vector<std::complex<double>> c{1.0};
  for (const auto& r : roots) {
    std::vector<std::complex<double>> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i + 1] += c[i];
      next[i] -= r * c[i];
    }
    c = std::move(next);
  }
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;
}

inline std::complex<double> bilinear(const std::complex<double>& s) {
  return (2.0 + s) / (2.0 - s);
}

// Polynomial in z^-1 whose roots in z are `zroots`: prod(1 - z_i z^-1).
inline std::vector<double> denom_from_digital_roots(const std::vector<std::complex<double>>& zroots) {
  std::vector<std::complex<double>> c{1.0};
  for (const auto& r : zroots) {
    std::vector<std::complex<double>> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= r * c[i];
    }
    c = std::move(next);
  }
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;
}

inline FilterDesign design_paper_literal(const FilterSpec& spec) {
  // Zero-free recursion H(z^-1) = k_o / prod(z^-1 - w_o p_i) with
  // w_o = 4 tan(pi f_c / f_s) and analog prototype poles p.
  const double wo = 4.0 * std::tan(std::numbers::pi * spec.f_c1 / spec.f_s);
  const auto proto = butter_prototype_poles(spec.order);
  std::vector<std::complex<double>> uroots(proto.size());
  for (std::size_t i = 0; i < proto.size(); ++i) uroots[i] = wo * proto[i];
  // prod(u - r_i) with u = z^-1; a_k is the coefficient of z^-k.
  auto a = poly_from_roots(uroots);
  const double ko = std::pow(wo, static_cast<double>(proto.size()));
  const double a0 = a[0];
  FilterDesign d;
  d.spec = spec;
  d.a = a;
  for (auto& v : d.a) v /= a0;
  d.gain = ko / a0;
  d.b = {d.gain};
  d.poles.resize(uroots.size());
  bool stable = true;
  for (std::size_t i = 0; i < uroots.size(); ++i) {
    d.poles[i] = 1.0 / uroots[i];  // pole in z
    if (std::abs(d.poles[i]) >= 1.0) stable = false;
  }
  d.stable = stable;
  return d;
}

}  // namespace detail

inline FilterDesign design_lowpass(const FilterSpec& spec) {
  if (spec.kind != FilterKind::lowpass)
    throw std::invalid_argument("design_lowpass: spec.kind must be lowpass");
  spec.validate();
  if (spec.paper_literal) return detail::design_paper_literal(spec);

  const double wc = spec.prewarp_constant * std::tan(std::numbers::pi * spec.f_c1 / spec.f_s);
  const auto proto = detail::butter_prototype_poles(spec.order);
  std::vector<std::complex<double>> zpoles(proto.size());
  for (std::size_t i = 0; i < proto.size(); ++i) zpoles[i] = detail::bilinear(wc * proto[i]);
  std::vector<std::complex<double>> zzeros(proto.size(), std::complex<double>(-1.0, 0.0));

  FilterDesign d;
  d.spec = spec;
  d.a = detail::denom_from_digital_roots(zpoles);
  d.b = detail::denom_from_digital_roots(zzeros);
  d.poles = zpoles;
  d.stable = std::all_of(zpoles.begin(), zpoles.end(),
                         [](const auto& p) { return std::abs(p) < 1.0; });
  // Unit gain at DC.
  double num = 0.0, den = 0.0;
  for (double v : d.b) num += v;
  for (double v : d.a) den += v;
  d.gain = den / num;
  for (auto& v : d.b) v *= d.gain;
  return d;
}

inline FilterDesign design_bandpass(const FilterSpec& spec) {
  if (spec.kind != FilterKind::bandpass)
    throw std::invalid_argument("design_bandpass: spec.kind must be bandpass");
  spec.validate();

  const double w1 = spec.prewarp_constant * std::tan(std::numbers::pi * spec.f_c1 / spec.f_s);
  const double w2 = spec.prewarp_constant * std::tan(std::numbers::pi * spec.f_c2 / spec.f_s);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;

  const auto proto = detail::butter_prototype_poles(spec.order);
  std::vector<std::complex<double>> spoles;
  spoles.reserve(2 * proto.size());
  for (const auto& q : proto) {
    // Lowpass-to-bandpass transform: s^2 - bw q s + w0^2 = 0.
    const std::complex<double> half = 0.5 * bw * q;
    const std::complex<double> disc = std::sqrt(half * half - w0 * w0);
    spoles.push_back(half + disc);
    spoles.push_back(half - disc);
  }
  std::vector<std::complex<double>> zpoles(spoles.size());
  for (std::size_t i = 0; i < spoles.size(); ++i) zpoles[i] = detail::bilinear(spoles[i]);
  // N analog zeros at s=0 map to z=1; the remaining N land at z=-1.
  std::vector<std::complex<double>> zzeros;
  for (int i = 0; i < spec.order; ++i) zzeros.emplace_back(1.0, 0.0);
  for (int i = 0; i < spec.order; ++i) zzeros.emplace_back(-1.0, 0.0);

  FilterDesign d;
  d.spec = spec;
  d.a = detail::denom_from_digital_roots(zpoles);
  d.b = detail::denom_from_digital_roots(zzeros);
  d.poles = zpoles;
  d.stable = std::all_of(zpoles.begin(), zpoles.end(),
                         [](const auto& p) { return std::abs(p) < 1.0; });
  // Unit gain at the geometric band center, measured per stage.
  const double fcenter = std::sqrt(spec.f_c1 * spec.f_c2);
  const std::complex<double> w = std::polar(1.0, -2.0 * std::numbers::pi * fcenter / spec.f_s);
  std::complex<double> num{0.0, 0.0}, den{0.0, 0.0}, wk{1.0, 0.0};
  for (std::size_t k = 0; k < std::max(d.a.size(), d.b.size()); ++k) {
    if (k < d.b.size()) num += d.b[k] * wk;
    if (k < d.a.size()) den += d.a[k] * wk;
    wk *= w;
  }
  d.gain = std::abs(den / num);
  for (auto& v : d.b) v *= d.gain;
  return d;
}

inline FilterDesign design(const FilterSpec& spec) {
  return spec.kind == FilterKind::lowpass ? design_lowpass(spec) : design_bandpass(spec);
}

inline std::vector<double> apply(const FilterDesign& d, const std::vector<double>& x) {
  if (!d.stable) throw std::domain_error("apply: filter design is unstable");
  FilterState state(d);
  std::vector<double> y(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    if (!std::isfinite(x[n]))
      throw std::domain_error("apply: non-finite sample at index " + std::to_string(n));
    y[n] = state.step(d, x[n]);
  }
  return y;
}

inline TimeSeriesFrame apply(const FilterDesign& d, const TimeSeriesFrame& x) {
  if (x.samples() == 0) throw std::invalid_argument("apply: empty input");
  x.check_finite("apply");
  TimeSeriesFrame out = x;
  for (Eigen::Index c = 0; c < x.channels(); ++c) {
    FilterState state(d);
    for (Eigen::Index n = 0; n < x.samples(); ++n)
      out.data(c, n) = state.step(d, x.data(c, n));
  }
  return out;
}

// Warm-up samples downstream consumers should discard before estimation.
inline Eigen::Index warmup_samples(double f_s, double f_c) {
  return static_cast<Eigen::Index>(std::max(3.0 * f_s / f_c, 200.0));
}

inline void to_json(nlohmann::json& j, const FilterDesign& d) {
  j = nlohmann::json{{"kind", d.spec.kind == FilterKind::lowpass ? "lowpass" : "bandpass"},
                     {"f_c1", d.spec.f_c1},
                     {"f_c2", d.spec.f_c2},
                     {"f_s", d.spec.f_s},
                     {"order", d.spec.order},
                     {"stages", d.spec.stages},
                     {"prewarp_constant", d.spec.prewarp_constant},
                     {"paper_literal", d.spec.paper_literal},
                     {"a", d.a},
                     {"b", d.b},
                     {"k_o", d.gain}};
}

inline void from_json(const nlohmann::json& j, FilterSpec& s) {
  s.kind = j.at("kind").get<std::string>() == "bandpass" ? FilterKind::bandpass : FilterKind::lowpass;
  if (j.contains("f_c")) s.f_c1 = j.at("f_c").get<double>();
  if (j.contains("f_c1")) s.f_c1 = j.at("f_c1").get<double>();
  if (j.contains("f_c2")) s.f_c2 = j.at("f_c2").get<double>();
  s.f_s = j.at("f_s").get<double>();
  s.order = j.value("order", 3);
  s.stages = j.value("stages", 3);
  s.prewarp_constant = j.value("prewarp_constant", 2.0);
  s.paper_literal = j.value("paper_literal", false);
}

}  // namespace scau
