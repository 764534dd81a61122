#pragma once

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace scau {

struct BootstrapSummary {
  std::string edge;
  double mean = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  int B = 0;
  std::uint64_t seed = 0;
};

// Percentile bootstrap of the mean over subjects. Replicate r draws from a
// substream keyed by (seed, r) so parallel evaluation stays reproducible.
inline BootstrapSummary bootstrap_mean(const std::vector<double>& subject_values, int B,
                                       double level, std::uint64_t seed,
                                       const std::string& edge = "") {
  if (subject_values.size() < 2)
    throw std::invalid_argument("bootstrap_mean: need at least 2 subjects");
  if (B < 100) throw std::invalid_argument("bootstrap_mean: B must be >= 100");
  if (level <= 0.0 || level >= 1.0) throw std::invalid_argument("bootstrap_mean: bad level");

  const std::size_t n = subject_values.size();
  double total = 0.0;
  for (double v : subject_values) total += v;

  std::vector<double> stats(B);
  for (int r = 0; r < B; ++r) {
    std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(sq);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += subject_values[pick(rng)];
    stats[r] = s / static_cast<double>(n);
  }
  std::sort(stats.begin(), stats.end());
  auto percentile = [&](double q) {
    const double pos = q * (B - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min<std::size_t>(lo + 1, B - 1);
    const double frac = pos - static_cast<double>(lo);
    return stats[lo] * (1.0 - frac) + stats[hi] * frac;
  };

  BootstrapSummary out;
  out.edge = edge;
  out.mean = total / static_cast<double>(n);
  out.ci_low = percentile(0.5 * (1.0 - level));
  out.ci_high = percentile(1.0 - 0.5 * (1.0 - level));
  out.B = B;
  out.seed = seed;
  return out;
}

}  // namespace scau
