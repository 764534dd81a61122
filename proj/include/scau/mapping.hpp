#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "scau/bands.hpp"
#include "scau/filters.hpp"

namespace scau {

struct MappingConfig {
  double f_i = 0.0;  // intermediate frequency, Hz; 0 -> 0.1 * f_s
  double f_s = 0.0;
  bool gain_normalization = true;
  int filter_order = 3;
  int filter_stages = 3;

  double intermediate() const { return f_i > 0.0 ? f_i : 0.1 * f_s; }

  void validate(double max_band_width) const {
    if (f_s <= 0.0) throw std::invalid_argument("MappingConfig: f_s must be positive");
    const double fi = intermediate();
    if (fi + max_band_width > f_s / 2.0)
      throw std::invalid_argument("MappingConfig: f_i + band width exceeds Nyquist");
    if (fi < 0.05 * f_s)
      throw std::invalid_argument("MappingConfig: f_i must be >= 0.05 f_s");
  }
};

// Per (channel, band) mapped series, all confined to [f_i - 4, f_i].
// Row layout: channel-major, row = channel * bands + band.
struct MappedTensor {
  std::vector<std::string> channel_labels;
  std::vector<std::string> band_labels;
  double fs = 0.0;
  double fi = 0.0;
  Eigen::MatrixXd values;  // (channels * bands) x time

  Eigen::Index channels() const { return static_cast<Eigen::Index>(channel_labels.size()); }
  Eigen::Index bands() const { return static_cast<Eigen::Index>(band_labels.size()); }
  Eigen::Index samples() const { return values.cols(); }
  Eigen::Index row(Eigen::Index channel, Eigen::Index band) const {
    return channel * bands() + band;
  }
  std::string node_label(Eigen::Index r) const {
    return band_labels[r % bands()] + "@" + channel_labels[r / bands()];
  }
};

// Translate one band-limited series to [f_i - (f_b - f_a), f_i].
// Two heterodyne products with sideband-selecting filters; the DC-anchored
// band skips the first product stage.
inline std::vector<double> map_band(const std::vector<double>& x_band, const SubbandDef& band,
                                    const MappingConfig& cfg) {
  cfg.validate(band.width());
  const double fi = cfg.intermediate();
  const double width = band.width();
  const double two_pi = 2.0 * std::numbers::pi;

  std::vector<double> stage1;
  if (band.f_a > 0.0) {
    stage1.resize(x_band.size());
    const double w_a = two_pi * band.f_a / cfg.f_s;
    for (std::size_t n = 0; n < x_band.size(); ++n)
      stage1[n] = x_band[n] * std::cos(w_a * static_cast<double>(n));
    // Keep [0, width]; reject the image at 2 f_a. Cutoff midway between the
    // wanted and image edges, never above f_a.
    const double cutoff = std::min(band.f_a, width + 0.5 * (band.f_a - width));
    FilterSpec lp;
    lp.kind = FilterKind::lowpass;
    lp.f_c1 = cutoff;
    lp.f_s = cfg.f_s;
    lp.order = cfg.filter_order;
    lp.stages = cfg.filter_stages;
    stage1 = scau::apply(design_lowpass(lp), stage1);
  } else {
    stage1 = x_band;
  }

  std::vector<double> stage2(stage1.size());
  const double w_i = two_pi * fi / cfg.f_s;
  for (std::size_t n = 0; n < stage1.size(); ++n)
    stage2[n] = stage1[n] * std::cos(w_i * static_cast<double>(n));

  FilterSpec bp;
  bp.kind = FilterKind::bandpass;
  bp.f_c1 = fi - width;
  bp.f_c2 = fi;
  bp.f_s = cfg.f_s;
  bp.order = cfg.filter_order;
  bp.stages = cfg.filter_stages;
  std::vector<double> out = scau::apply(design_bandpass(bp), stage2);

  if (cfg.gain_normalization) {
    // Each cosine product halves the in-band amplitude.
    const double g = band.f_a > 0.0 ? 4.0 : 2.0;
    for (auto& v : out) v *= g;
  }
  return out;
}

inline MappedTensor map_all(const BandDecomposition& bands_out, const MappingConfig& cfg,
                            Eigen::Index warmup = 500) {
  const Eigen::Index nb = static_cast<Eigen::Index>(bands_out.scheme.bands.size());
  const Eigen::Index m = static_cast<Eigen::Index>(bands_out.channel_labels.size());
  if (bands_out.series.size() != static_cast<std::size_t>(nb))
    throw std::invalid_argument("map_all: decomposition band count mismatch");
  const Eigen::Index len = bands_out.series.empty() ? 0 : bands_out.series[0].cols();
  for (const auto& s : bands_out.series)
    if (s.cols() != len || s.rows() != m)
      throw std::invalid_argument("map_all: mismatched series lengths");
  if (warmup >= len) throw std::invalid_argument("map_all: warm-up exceeds series length");

  MappedTensor t;
  t.channel_labels = bands_out.channel_labels;
  for (const auto& b : bands_out.scheme.bands) t.band_labels.push_back(b.label);
  t.fs = cfg.f_s;
  t.fi = cfg.intermediate();
  t.values.resize(m * nb, len - warmup);

  std::vector<double> buf(static_cast<std::size_t>(len));
  for (Eigen::Index c = 0; c < m; ++c) {
    for (Eigen::Index b = 0; b < nb; ++b) {
      for (Eigen::Index n = 0; n < len; ++n) buf[n] = bands_out.series[b](c, n);
      const std::vector<double> mapped = map_band(buf, bands_out.scheme.bands[b], cfg);
      for (Eigen::Index n = warmup; n < len; ++n)
        t.values(c * nb + b, n - warmup) = mapped[n];
    }
  }
  return t;
}

// --- little-endian binary container ---------------------------------------
// layout: magic "SCAUMAP1", u32 channels, u32 bands, u64 samples,
//         f64 f_s, f64 f_i, labels (u32 length + bytes, channels then bands),
//         body: f64 row-major (row = channel*bands+band).

inline void write_mapped(const MappedTensor& t, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_mapped: cannot open " + path);
  out.write("SCAUMAP1", 8);
  auto put_u32 = [&](std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
  auto put_u64 = [&](std::uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  auto put_f64 = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
  auto put_str = [&](const std::string& s) {
    put_u32(static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  };
  put_u32(static_cast<std::uint32_t>(t.channels()));
  put_u32(static_cast<std::uint32_t>(t.bands()));
  put_u64(static_cast<std::uint64_t>(t.samples()));
  put_f64(t.fs);
  put_f64(t.fi);
  for (const auto& s : t.channel_labels) put_str(s);
  for (const auto& s : t.band_labels) put_str(s);
  for (Eigen::Index r = 0; r < t.values.rows(); ++r)
    for (Eigen::Index n = 0; n < t.values.cols(); ++n) put_f64(t.values(r, n));
  if (!out) throw std::runtime_error("write_mapped: write failed for " + path);
}

inline MappedTensor read_mapped(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_mapped: cannot open " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "SCAUMAP1", 8) != 0)
    throw std::runtime_error("read_mapped: bad magic in " + path);
  auto get_u32 = [&]() { std::uint32_t v; in.read(reinterpret_cast<char*>(&v), 4); return v; };
  auto get_u64 = [&]() { std::uint64_t v; in.read(reinterpret_cast<char*>(&v), 8); return v; };
  auto get_f64 = [&]() { double v; in.read(reinterpret_cast<char*>(&v), 8); return v; };
  auto get_str = [&]() {
    const std::uint32_t len = get_u32();
    std::string s(len, '\0');
    in.read(s.data(), len);
    return s;
  };
  MappedTensor t;
  const std::uint32_t m = get_u32();
  const std::uint32_t nb = get_u32();
  const std::uint64_t len = get_u64();
  t.fs = get_f64();
  t.fi = get_f64();
  for (std::uint32_t i = 0; i < m; ++i) t.channel_labels.push_back(get_str());
  for (std::uint32_t i = 0; i < nb; ++i) t.band_labels.push_back(get_str());
  t.values.resize(static_cast<Eigen::Index>(m) * nb, static_cast<Eigen::Index>(len));
  for (Eigen::Index r = 0; r < t.values.rows(); ++r)
    for (Eigen::Index n = 0; n < t.values.cols(); ++n) t.values(r, n) = get_f64();
  if (!in) throw std::runtime_error("read_mapped: truncated file " + path);
  return t;
}

}  // namespace scau
