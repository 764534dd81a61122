#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scau/bands.hpp"
#include "scau/lassle.hpp"
#include "scau/varfit.hpp"

namespace scau {

enum class PdcNormalization {
  row,       // denominator sums over the second index for a fixed first index
  classical  // column normalization of A-bar
};

// Partial directed coherence evaluated on a uniform grid over [0, 1/2].
// values[g](i, j) holds pi_{i -> j} (source i, target j) at grid(g).
struct PdcSpectrum {
  std::vector<Eigen::MatrixXd> Phi;  // coefficient orientation: (target, source)
  std::vector<std::string> labels;
  PdcNormalization normalization = PdcNormalization::row;
  Eigen::VectorXd grid;
  std::vector<Eigen::MatrixXd> values;

  // A carries the source-first orientation A(i, j) = delta_ij - sum_l
  // phi_{i -> j}^(l) e^{-i 2 pi f l}, hence the transpose of the stored
  // coefficient matrices. Row normalization makes each source's squared
  // outflow sum to one.
  Eigen::MatrixXd eval(double f) const {
    const Eigen::Index k = Phi.empty() ? 0 : Phi[0].rows();
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Identity(k, k);
    for (std::size_t l = 0; l < Phi.size(); ++l) {
      const std::complex<double> e =
          std::polar(1.0, -2.0 * std::numbers::pi * f * static_cast<double>(l + 1));
      A -= Phi[l].transpose().cast<std::complex<double>>() * e;
    }
    Eigen::MatrixXd out(k, k);
    if (normalization == PdcNormalization::row) {
      for (Eigen::Index i = 0; i < k; ++i) {
        const double denom = std::sqrt(A.row(i).cwiseAbs2().sum());
        for (Eigen::Index j = 0; j < k; ++j) out(i, j) = std::abs(A(i, j)) / denom;
      }
    } else {
      for (Eigen::Index j = 0; j < k; ++j) {
        const double denom = std::sqrt(A.col(j).cwiseAbs2().sum());
        for (Eigen::Index i = 0; i < k; ++i) out(i, j) = std::abs(A(i, j)) / denom;
      }
    }
    return out;
  }
};

namespace detail {

inline PdcSpectrum pdc_from_phi(std::vector<Eigen::MatrixXd> Phi, std::vector<std::string> labels,
                                int grid_size, PdcNormalization norm) {
  if (grid_size < 2) throw std::invalid_argument("pdc: grid_size must be >= 2");
  PdcSpectrum s;
  s.Phi = std::move(Phi);
  s.labels = std::move(labels);
  s.normalization = norm;
  s.grid.resize(grid_size);
  s.values.reserve(grid_size);
  for (int g = 0; g < grid_size; ++g) {
    s.grid(g) = 0.5 * static_cast<double>(g) / (grid_size - 1);
    s.values.push_back(s.eval(s.grid(g)));
  }
  return s;
}

}  // namespace detail

inline PdcSpectrum pdc(const VarFit& fit, int grid_size = 512,
                       PdcNormalization norm = PdcNormalization::row) {
  std::vector<std::string> labels = fit.labels;
  if (labels.empty())
    for (int i = 0; i < fit.m; ++i) labels.push_back("ch" + std::to_string(i));
  return detail::pdc_from_phi(fit.Phi, std::move(labels), grid_size, norm);
}

inline PdcSpectrum pdc(const ScauFit& fit, int grid_size = 512,
                       PdcNormalization norm = PdcNormalization::row) {
  std::vector<std::string> labels;
  for (Eigen::Index r = 0; r < fit.nodes(); ++r) labels.push_back(fit.node_label(r));
  return detail::pdc_from_phi(fit.Phi, std::move(labels), grid_size, norm);
}

struct FlowMatrix {
  std::vector<std::string> labels;
  Eigen::MatrixXd I;  // I(i, j): flow on the ordered pair (i, j)
};

// Trapezoidal integral of pi^2 over the normalized band [f0, f1].
inline FlowMatrix band_flow(const PdcSpectrum& spec, double f0, double f1, int grid_size = 512) {
  if (f0 < 0.0 || f1 > 0.5 + 1e-12 || f0 >= f1)
    throw std::invalid_argument("band_flow: band must satisfy 0 <= f0 < f1 <= 1/2");
  const Eigen::Index k = spec.Phi.empty() ? 0 : spec.Phi[0].rows();
  FlowMatrix out;
  out.labels = spec.labels;
  out.I = Eigen::MatrixXd::Zero(k, k);
  const double h = (f1 - f0) / (grid_size - 1);
  for (int g = 0; g < grid_size; ++g) {
    const double w = (g == 0 || g == grid_size - 1) ? 0.5 * h : h;
    const Eigen::MatrixXd pi = spec.eval(f0 + h * g);
    out.I += w * pi.cwiseAbs2();
  }
  return out;
}

inline FlowMatrix full_flow(const PdcSpectrum& spec, int grid_size = 512) {
  return band_flow(spec, 0.0, 0.5, grid_size);
}

// Band flow for a channel-level VAR spectrum, with the band given in Hz.
inline FlowMatrix band_flow_hz(const PdcSpectrum& spec, const SubbandDef& band, double fs,
                               int grid_size = 512) {
  if (band.f_b > fs / 2.0)
    throw std::invalid_argument("band_flow_hz: band outside [0, f_s/2]");
  return band_flow(spec, band.f_a / fs, band.f_b / fs, grid_size);
}

// c = I_task - I_rest, per edge.
inline FlowMatrix relative_connectivity(const FlowMatrix& task, const FlowMatrix& rest) {
  if (task.labels != rest.labels)
    throw std::invalid_argument("relative_connectivity: node sets differ");
  FlowMatrix c;
  c.labels = task.labels;
  c.I = task.I - rest.I;
  return c;
}

enum class AggregationLevel { C2C, F2C, C2F, FC2FC };
enum class AggregationStat { mean, sum };

struct ContrastNetwork {
  bool band_resolved = false;  // true when nodes are (channel, band) pairs
  std::vector<std::string> channels;
  std::vector<std::string> bands;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  Eigen::MatrixXd c_a;  // relative connectivity for task A
  Eigen::MatrixXd c_b;  // relative connectivity for task B
  Eigen::MatrixXd d;    // contrast, 100 * |c_a - c_b|
  std::string level = "FC2FC";
};

// d = 100 |c_a - c_b|, elementwise. Symmetric in its arguments.
inline ContrastNetwork contrast(const FlowMatrix& c_a, const FlowMatrix& c_b,
                                std::vector<std::string> channels,
                                std::vector<std::string> bands) {
  if (c_a.labels != c_b.labels) throw std::invalid_argument("contrast: node sets differ");
  ContrastNetwork net;
  net.band_resolved = !bands.empty();
  net.channels = std::move(channels);
  net.bands = std::move(bands);
  net.row_labels = c_a.labels;
  net.col_labels = c_a.labels;
  net.c_a = c_a.I;
  net.c_b = c_b.I;
  net.d = 100.0 * (c_a.I - c_b.I).cwiseAbs();
  net.level = net.band_resolved ? "FC2FC" : "C2C";
  return net;
}

inline ContrastNetwork aggregate(const ContrastNetwork& net, AggregationLevel level,
                                 AggregationStat stat = AggregationStat::mean) {
  if (level == AggregationLevel::FC2FC) return net;
  if (!net.band_resolved)
    throw std::invalid_argument("aggregate: band-level aggregation of a channel-only network");
  const Eigen::Index m = static_cast<Eigen::Index>(net.channels.size());
  const Eigen::Index nb = static_cast<Eigen::Index>(net.bands.size());
  auto collapse = [&](const Eigen::MatrixXd& src, Eigen::MatrixXd& dst, auto row_of,
                      auto col_of, Eigen::Index rows, Eigen::Index cols) {
    dst = Eigen::MatrixXd::Zero(rows, cols);
    Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(rows, cols);
    for (Eigen::Index a = 0; a < src.rows(); ++a)
      for (Eigen::Index b = 0; b < src.cols(); ++b) {
        dst(row_of(a), col_of(b)) += src(a, b);
        counts(row_of(a), col_of(b)) += 1.0;
      }
    if (stat == AggregationStat::mean) dst = dst.cwiseQuotient(counts);
  };

  ContrastNetwork out;
  out.band_resolved = false;
  out.channels = net.channels;
  out.bands = net.bands;
  auto ch_of = [&](Eigen::Index r) { return r / nb; };
  auto band_of = [&](Eigen::Index r) { return r % nb; };
  switch (level) {
    case AggregationLevel::C2C:
      out.level = "C2C";
      out.row_labels = net.channels;
      out.col_labels = net.channels;
      collapse(net.d, out.d, ch_of, ch_of, m, m);
      collapse(net.c_a, out.c_a, ch_of, ch_of, m, m);
      collapse(net.c_b, out.c_b, ch_of, ch_of, m, m);
      break;
    case AggregationLevel::F2C:
      out.level = "F2C";
      out.row_labels = net.bands;
      out.col_labels = net.channels;
      collapse(net.d, out.d, band_of, ch_of, nb, m);
      collapse(net.c_a, out.c_a, band_of, ch_of, nb, m);
      collapse(net.c_b, out.c_b, band_of, ch_of, nb, m);
      break;
    case AggregationLevel::C2F:
      out.level = "C2F";
      out.row_labels = net.channels;
      out.col_labels = net.bands;
      collapse(net.d, out.d, ch_of, band_of, m, nb);
      collapse(net.c_a, out.c_a, ch_of, band_of, m, nb);
      collapse(net.c_b, out.c_b, ch_of, band_of, m, nb);
      break;
    default:
      break;
  }
  return out;
}

struct SummaryEdge {
  std::string source;
  std::string target;
  double d = 0.0;
};

inline std::vector<SummaryEdge> summary_network(const ContrastNetwork& net,
                                                double threshold_frac = 0.8) {
  if (threshold_frac <= 0.0 || threshold_frac > 1.0)
    throw std::invalid_argument("summary_network: threshold must be in (0, 1]");
  if (net.d.size() == 0) throw std::invalid_argument("summary_network: empty network");
  const double dmax = net.d.maxCoeff();
  std::vector<SummaryEdge> edges;
  for (Eigen::Index i = 0; i < net.d.rows(); ++i)
    for (Eigen::Index j = 0; j < net.d.cols(); ++j)
      if (net.d(i, j) >= threshold_frac * dmax)
        edges.push_back({net.row_labels[i], net.col_labels[j], net.d(i, j)});
  return edges;
}

// --- exports ---------------------------------------------------------------

inline nlohmann::json flow_to_json(const FlowMatrix& fm) {
  std::vector<std::vector<double>> rows(fm.I.rows());
  for (Eigen::Index i = 0; i < fm.I.rows(); ++i) {
    rows[i].resize(fm.I.cols());
    for (Eigen::Index j = 0; j < fm.I.cols(); ++j) rows[i][j] = fm.I(i, j);
  }
  return nlohmann::json{{"labels", fm.labels}, {"I", rows}};
}

inline FlowMatrix flow_from_json(const nlohmann::json& j) {
  FlowMatrix fm;
  fm.labels = j.at("labels").get<std::vector<std::string>>();
  const auto rows = j.at("I").get<std::vector<std::vector<double>>>();
  fm.I.resize(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      fm.I(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  return fm;
}

inline nlohmann::json network_to_json(const ContrastNetwork& net) {
  nlohmann::json edges = nlohmann::json::array();
  for (Eigen::Index i = 0; i < net.d.rows(); ++i)
    for (Eigen::Index j = 0; j < net.d.cols(); ++j)
      edges.push_back({{"source", net.row_labels[i]},
                       {"target", net.col_labels[j]},
                       {"c_a", net.c_a(i, j)},
                       {"c_b", net.c_b(i, j)},
                       {"d", net.d(i, j)}});
  return nlohmann::json{{"level", net.level},
                        {"channels", net.channels},
                        {"bands", net.bands},
                        {"rows", net.row_labels},
                        {"cols", net.col_labels},
                        {"edges", edges}};
}

inline ContrastNetwork network_from_json(const nlohmann::json& j) {
  ContrastNetwork net;
  net.level = j.at("level").get<std::string>();
  net.channels = j.value("channels", std::vector<std::string>{});
  net.bands = j.value("bands", std::vector<std::string>{});
  net.row_labels = j.at("rows").get<std::vector<std::string>>();
  net.col_labels = j.at("cols").get<std::vector<std::string>>();
  net.band_resolved = net.level == "FC2FC" && !net.bands.empty();
  const Eigen::Index r = static_cast<Eigen::Index>(net.row_labels.size());
  const Eigen::Index c = static_cast<Eigen::Index>(net.col_labels.size());
  net.c_a = Eigen::MatrixXd::Zero(r, c);
  net.c_b = Eigen::MatrixXd::Zero(r, c);
  net.d = Eigen::MatrixXd::Zero(r, c);
  auto index_of = [](const std::vector<std::string>& v, const std::string& s) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] == s) return static_cast<Eigen::Index>(i);
    throw std::invalid_argument("network_from_json: unknown node '" + s + "'");
  };
  for (const auto& e : j.at("edges")) {
    const Eigen::Index i = index_of(net.row_labels, e.at("source").get<std::string>());
    const Eigen::Index k = index_of(net.col_labels, e.at("target").get<std::string>());
    net.c_a(i, k) = e.at("c_a").get<double>();
    net.c_b(i, k) = e.at("c_b").get<double>();
    net.d(i, k) = e.at("d").get<double>();
  }
  return net;
}

inline std::string network_to_csv(const ContrastNetwork& net) {
  std::ostringstream os;
  os.precision(17);
  os << "source,target,c_a,c_b,d\n";
  for (Eigen::Index i = 0; i < net.d.rows(); ++i)
    for (Eigen::Index j = 0; j < net.d.cols(); ++j)
      os << net.row_labels[i] << ',' << net.col_labels[j] << ',' << net.c_a(i, j) << ','
         << net.c_b(i, j) << ',' << net.d(i, j) << '\n';
  return os.str();
}

inline std::string network_to_dot(const ContrastNetwork& net, double threshold_frac = 0.0) {
  const double dmax = net.d.size() ? net.d.maxCoeff() : 0.0;
  std::ostringstream os;
  os.precision(4);
  os << "digraph scau {\n";
  for (Eigen::Index i = 0; i < net.d.rows(); ++i)
    for (Eigen::Index j = 0; j < net.d.cols(); ++j)
      if (net.d(i, j) >= threshold_frac * dmax && net.row_labels[i] != net.col_labels[j])
        os << "  \"" << net.row_labels[i] << "\" -> \"" << net.col_labels[j] << "\" [label=\""
           << net.d(i, j) << "\"];\n";
  os << "}\n";
  return os.str();
}

}  // namespace scau
