#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "scau/filters.hpp"
#include "scau/frame.hpp"

#include <nlohmann/json.hpp>

namespace scau {

// Half-open subband [f_a, f_b).
struct SubbandDef {
  std::string label;
  double f_a = 0.0;
  double f_b = 0.0;

  double width() const { return f_b - f_a; }
  double center() const { return 0.5 * (f_a + f_b); }
};

struct BandScheme {
  double fs = 0.0;
  std::vector<SubbandDef> bands;

  void validate() const {
    if (bands.empty()) throw std::invalid_argument("BandScheme: empty band list");
    double prev_edge = bands.front().f_a;
    if (prev_edge != 0.0 && bands.front().f_a < 0.0)
      throw std::invalid_argument("BandScheme: negative lower edge");
    for (std::size_t i = 0; i < bands.size(); ++i) {
      const auto& b = bands[i];
      if (b.f_a >= b.f_b) throw std::invalid_argument("BandScheme: band '" + b.label + "' has f_a >= f_b");
      if (i > 0 && b.f_a != bands[i - 1].f_b)
        throw std::invalid_argument("BandScheme: bands must be contiguous at '" + b.label + "'");
      // Narrowness needed by the mapping stage; the DC-anchored band is exempt.
      if (b.f_a > 0.0 && b.f_b > 3.0 * b.f_a)
        throw std::invalid_argument("BandScheme: band '" + b.label + "' violates f_b <= 3 f_a");
    }
    if (bands.back().f_b >= fs / 2.0)
      throw std::invalid_argument("BandScheme: top edge must be below Nyquist");
  }
};

// The 12 contiguous 4 Hz divisions: delta, theta, alpha, beta1..beta5, gamma1..gamma4.
inline BandScheme default_scheme(double fs) {
  if (fs < 96.0)
    throw std::invalid_argument("default_scheme: f_s must be >= 96 Hz for a 48 Hz top edge");
  static const char* names[12] = {"delta", "theta", "alpha", "beta1",  "beta2",  "beta3",
                                  "beta4", "beta5", "gamma1", "gamma2", "gamma3", "gamma4"};
  BandScheme s;
  s.fs = fs;
  for (int i = 0; i < 12; ++i)
    s.bands.push_back({names[i], 4.0 * i, 4.0 * (i + 1)});
  s.validate();
  return s;
}

struct BandDecomposition {
  BandScheme scheme;
  std::vector<std::string> channel_labels;
  // outer index: band, inner: channels x samples
  std::vector<Eigen::MatrixXd> series;
};

// delta uses a lowpass at its upper edge; every other band a bandpass [f_a, f_b].
inline BandDecomposition decompose(const TimeSeriesFrame& x, const BandScheme& scheme,
                                   int order = 3, int stages = 3) {
  if (x.fs != scheme.fs)
    throw std::invalid_argument("decompose: frame and scheme sampling rates differ");
  scheme.validate();
  x.check_finite("decompose");

  BandDecomposition out;
  out.scheme = scheme;
  out.channel_labels = x.labels;
  out.series.reserve(scheme.bands.size());
  for (const auto& band : scheme.bands) {
    FilterSpec spec;
    spec.f_s = scheme.fs;
    spec.order = order;
    spec.stages = stages;
    if (band.f_a == 0.0) {
      spec.kind = FilterKind::lowpass;
      spec.f_c1 = band.f_b;
    } else {
      spec.kind = FilterKind::bandpass;
      spec.f_c1 = band.f_a;
      spec.f_c2 = band.f_b;
    }
    const FilterDesign d = design(spec);
    Eigen::MatrixXd filtered(x.channels(), x.samples());
    for (Eigen::Index c = 0; c < x.channels(); ++c) {
      FilterState state(d);
      for (Eigen::Index n = 0; n < x.samples(); ++n)
        filtered(c, n) = state.step(d, x.data(c, n));
    }
    out.series.push_back(std::move(filtered));
  }
  return out;
}

inline void to_json(nlohmann::json& j, const SubbandDef& b) {
  j = nlohmann::json{{"label", b.label}, {"f_a", b.f_a}, {"f_b", b.f_b}};
}

inline void from_json(const nlohmann::json& j, SubbandDef& b) {
  j.at("label").get_to(b.label);
  j.at("f_a").get_to(b.f_a);
  j.at("f_b").get_to(b.f_b);
}

inline void to_json(nlohmann::json& j, const BandScheme& s) {
  j = nlohmann::json{{"f_s", s.fs}, {"bands", s.bands}};
}

inline void from_json(const nlohmann::json& j, BandScheme& s) {
  j.at("f_s").get_to(s.fs);
  j.at("bands").get_to(s.bands);
}

}  // namespace scau
