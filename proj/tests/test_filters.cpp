#include <catch2/catch_amalgamated.hpp>

#include <numbers>
#include <random>

#include "scau/filters.hpp"
#include "test_util.hpp"

using namespace scau;

namespace {

FilterSpec lp_spec(double fc, double fs, int order = 3, int stages = 3) {
  FilterSpec s;
  s.kind = FilterKind::lowpass;
  s.f_c1 = fc;
  s.f_s = fs;
  s.order = order;
  s.stages = stages;
  return s;
}

FilterSpec bp_spec(double f1, double f2, double fs, int order = 3, int stages = 3) {
  FilterSpec s;
  s.kind = FilterKind::bandpass;
  s.f_c1 = f1;
  s.f_c2 = f2;
  s.f_s = fs;
  s.order = order;
  s.stages = stages;
  return s;
}

std::vector<double> sine(double f, double fs, std::size_t n, double amp = 1.0) {
  std::vector<double> y(n);
  for (std::size_t t = 0; t < n; ++t)
    y[t] = amp * std::sin(2.0 * std::numbers::pi * f * static_cast<double>(t) / fs);
  return y;
}

double measured_gain(const FilterDesign& d, double f, std::size_t n = 20000,
                     std::size_t discard = 5000) {
  const auto y = scau::apply(d, sine(f, d.spec.f_s, n));
  return testutil::tone_amplitude(y, f, d.spec.f_s, discard);
}

}  // namespace

TEST_CASE("lowpass design has unit DC gain and is stable", "[filters]") {
  const auto d = design_lowpass(lp_spec(4.0, 200.0));
  CHECK(d.stable);
  CHECK(std::abs(d.response(0.0)) == Catch::Approx(1.0).margin(1e-9));
  for (const auto& p : d.poles) CHECK(std::abs(p) < 1.0);
}

TEST_CASE("lowpass cutoff sits near -3 dB per stage", "[filters]") {
  const auto d = design_lowpass(lp_spec(4.0, 200.0));
  const double cascade = measured_gain(d, 4.0);
  const double per_stage = std::pow(cascade, 1.0 / 3.0);
  CHECK(per_stage >= 0.5);
  CHECK(per_stage <= 0.8);
}

TEST_CASE("three-stage attenuation at one octave stacks", "[filters]") {
  const auto d3 = design_lowpass(lp_spec(4.0, 200.0, 3, 3));
  const auto d1 = design_lowpass(lp_spec(4.0, 200.0, 3, 1));
  const double db3 = -20.0 * std::log10(std::abs(d3.response(8.0)));
  const double db1 = -20.0 * std::log10(std::abs(d1.response(8.0)));
  CHECK(db3 >= 3.0 * db1 - 1.0);
}

TEST_CASE("lowpass magnitude is monotone non-increasing", "[filters]") {
  const auto d = design_lowpass(lp_spec(4.0, 200.0));
  double prev = std::abs(d.response(0.0));
  for (double f = 0.5; f <= 100.0; f += 0.5) {
    const double mag = std::abs(d.response(f));
    CHECK(mag <= prev + 1e-9);
    prev = mag;
  }
}

TEST_CASE("lowpass rejects invalid specs", "[filters]") {
  CHECK_THROWS_AS(design_lowpass(lp_spec(100.0, 200.0)), std::invalid_argument);
  CHECK_THROWS_AS(design_lowpass(lp_spec(120.0, 200.0)), std::invalid_argument);
  CHECK_THROWS_AS(design_lowpass(lp_spec(4.0, 200.0, 0)), std::invalid_argument);
}

TEST_CASE("bandpass center gain and stop band", "[filters]") {
  const auto d = design_bandpass(bp_spec(16.0, 20.0, 200.0));
  CHECK(d.stable);
  const double center = std::sqrt(16.0 * 20.0);
  CHECK(measured_gain(d, center) == Catch::Approx(1.0).margin(0.05));
  CHECK(std::abs(d.response(8.0)) < 0.05);
  CHECK(std::abs(d.response(40.0)) < 0.05);
}

TEST_CASE("bandpass edges sit near -3 dB per stage", "[filters]") {
  const auto d = design_bandpass(bp_spec(16.0, 20.0, 200.0, 3, 1));
  for (const double f : {16.0, 20.0}) {
    const double mag = std::abs(d.response(f));
    CHECK(mag >= 0.55);
    CHECK(mag <= 0.85);
  }
}

TEST_CASE("bandpass rejects degenerate bandwidth", "[filters]") {
  CHECK_THROWS_AS(design_bandpass(bp_spec(16.0, 16.0, 200.0)), std::invalid_argument);
  CHECK_THROWS_AS(design_bandpass(bp_spec(16.0, 16.1, 200.0)), std::invalid_argument);
  CHECK_THROWS_AS(design_bandpass(bp_spec(20.0, 16.0, 200.0)), std::invalid_argument);
}

TEST_CASE("apply maps zero to zero and preserves length", "[filters]") {
  const auto d = design_lowpass(lp_spec(4.0, 200.0));
  const std::vector<double> zeros(1000, 0.0);
  const auto y = scau::apply(d, zeros);
  REQUIRE(y.size() == zeros.size());
  for (double v : y) CHECK(v == 0.0);
}

TEST_CASE("lowpass passband and stopband amplitudes", "[filters]") {
  const auto d = design_lowpass(lp_spec(4.0, 200.0));
  CHECK(measured_gain(d, 2.0) == Catch::Approx(1.0).margin(0.05));
  CHECK(measured_gain(d, 50.0) < 1e-4);
}

TEST_CASE("apply rejects non-finite samples naming the location", "[filters]") {
  const auto d = design_lowpass(lp_spec(4.0, 200.0));
  Eigen::MatrixXd data = Eigen::MatrixXd::Zero(2, 50);
  data(1, 7) = std::numeric_limits<double>::quiet_NaN();
  const TimeSeriesFrame frame(200.0, {"a", "b"}, data);
  CHECK_THROWS_WITH(scau::apply(d, frame), Catch::Matchers::ContainsSubstring("b") &&
                                         Catch::Matchers::ContainsSubstring("7"));
}

TEST_CASE("filtering is linear", "[filters]") {
  const auto d = design_bandpass(bp_spec(8.0, 12.0, 200.0));
  std::mt19937_64 rng(11);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> coef(-2.0, 2.0);
  std::vector<double> x(500), y(500), z(500);
  const double a = coef(rng), b = coef(rng);
  for (std::size_t t = 0; t < x.size(); ++t) {
    x[t] = gauss(rng);
    y[t] = gauss(rng);
    z[t] = a * x[t] + b * y[t];
  }
  const auto fx = scau::apply(d, x), fy = scau::apply(d, y), fz = scau::apply(d, z);
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double want = a * fx[t] + b * fy[t];
    num += std::abs(fz[t] - want);
    den += std::abs(want);
  }
  CHECK(num / den < 1e-9);
}

TEST_CASE("filtering is causal", "[filters]") {
  const auto d = design_lowpass(lp_spec(4.0, 200.0));
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  std::vector<double> x(400);
  for (auto& v : x) v = gauss(rng);
  auto x2 = x;
  for (std::size_t t = 300; t < x2.size(); ++t) x2[t] += 10.0 * gauss(rng);
  const auto y1 = scau::apply(d, x);
  const auto y2 = scau::apply(d, x2);
  for (std::size_t t = 0; t < 300; ++t) CHECK(y1[t] == y2[t]);
}

TEST_CASE("sweep-measured response matches the closed form", "[filters]") {
  for (const auto& d : {design_lowpass(lp_spec(4.0, 200.0)),
                        design_bandpass(bp_spec(16.0, 20.0, 200.0))}) {
    for (double f = 1.0; f <= 60.0; f += 3.7) {
      const double measured = measured_gain(d, f, 40000, 10000);
      CHECK(measured == Catch::Approx(std::abs(d.response(f))).margin(1e-3));
    }
  }
}

TEST_CASE("paper-literal recursion is flagged unstable and refused", "[filters]") {
  auto s = lp_spec(4.0, 200.0);
  s.paper_literal = true;
  const auto d = design_lowpass(s);
  CHECK_FALSE(d.stable);
  CHECK_THROWS_AS(scau::apply(d, std::vector<double>(10, 1.0)), std::domain_error);
}

TEST_CASE("prewarp constant is configurable", "[filters]") {
  auto s4 = lp_spec(4.0, 200.0);
  s4.prewarp_constant = 4.0;
  const auto d2 = design_lowpass(lp_spec(4.0, 200.0));
  const auto d4 = design_lowpass(s4);
  CHECK(d4.stable);
  // the factor-4 prewarp moves the cutoff; both stay unit-gain at DC
  CHECK(std::abs(d4.response(0.0)) == Catch::Approx(1.0).margin(1e-9));
  CHECK(std::abs(d4.response(4.0)) != Catch::Approx(std::abs(d2.response(4.0))).margin(1e-6));
}

TEST_CASE("filter spec JSON round trip", "[filters]") {
  nlohmann::json j;
  to_json(j, design_bandpass(bp_spec(16.0, 20.0, 200.0)));
  const FilterSpec back = j.get<FilterSpec>();
  CHECK(back.kind == FilterKind::bandpass);
  CHECK(back.f_c1 == 16.0);
  CHECK(back.f_c2 == 20.0);
  CHECK(back.f_s == 200.0);
  CHECK(back.order == 3);
  CHECK(back.stages == 3);
  CHECK(j.contains("a"));
  CHECK(j.contains("k_o"));
}
