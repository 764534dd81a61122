// scau: spectral-causality pipeline CLI.
//
// Subcommands mirror the pipeline stages (ingest, decompose, map, fit-var,
// fit-scau, connectivity, contrast, bootstrap, summary) plus filter-response,
// verify-lemmas, a one-shot `run`, and `demo` which writes a synthetic input
// bundle for smoke testing.
//
// Exit codes: 0 ok, 2 config error, 3 data error, 4 numeric error.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scau/bands.hpp"
#include "scau/connectivity.hpp"
#include "scau/filters.hpp"
#include "scau/frame.hpp"
#include "scau/ingest.hpp"
#include "scau/lassle.hpp"
#include "scau/mapping.hpp"
#include "scau/oracle.hpp"
#include "scau/resampling.hpp"
#include "scau/varfit.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  json j;
  in >> j;
  return j;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string matrix_csv(const std::vector<std::string>& header, const Eigen::MatrixXd& cols_by_row) {
  // one column per row of the matrix, one CSV line per sample
  std::ostringstream os;
  os.precision(17);
  for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << '\n';
  for (Eigen::Index n = 0; n < cols_by_row.cols(); ++n) {
    for (Eigen::Index c = 0; c < cols_by_row.rows(); ++c)
      os << (c ? "," : "") << cols_by_row(c, n);
    os << '\n';
  }
  return os.str();
}

scau::BandScheme scheme_from_config(const json& cfg, double fs) {
  if (cfg.contains("scheme")) return cfg.at("scheme").get<scau::BandScheme>();
  return scau::default_scheme(fs);
}

scau::LassoConfig lasso_from_json(const json& j) {
  scau::LassoConfig cfg;
  cfg.n_lambda = j.value("n_lambda", 40);
  cfg.lambda_min_ratio = j.value("lambda_min_ratio", 1e-3);
  cfg.selection = j.value("selection", std::string("bic")) == "cv" ? scau::LambdaSelection::cv
                                                                   : scau::LambdaSelection::bic;
  cfg.ebic_gamma = j.value("ebic_gamma", 0.0);
  cfg.cv_folds = j.value("cv_folds", 5);
  cfg.max_iter = j.value("max_iter", 1000);
  cfg.tol = j.value("tol", 1e-7);
  cfg.seed = j.value("seed", 0);
  return cfg;
}

// --- ingest ----------------------------------------------------------------

struct IngestArgs {
  std::string data, markers, config, out_dir;
};

void run_ingest(const IngestArgs& a) {
  scau::RecordingConfig cfg;
  if (!a.config.empty()) cfg = load_json(a.config).get<scau::RecordingConfig>();
  scau::TimeSeriesFrame frame = scau::load_csv(a.data, cfg);
  std::cerr << "ingest: " << frame.channels() << " channels, " << frame.samples()
            << " samples\n";
  if (cfg.eog_before_car) {
    frame = scau::remove_eog(frame, cfg);
    frame = scau::common_average_reference(frame);
  } else {
    frame = scau::common_average_reference(frame);
    frame = scau::remove_eog(frame, cfg);
  }
  const auto markers = scau::load_markers(a.markers);
  const scau::TrialSet trials = scau::segment_trials(frame, cfg, markers);

  std::vector<Eigen::Index> keep;
  for (const auto& name : cfg.analysis_channels) {
    const int idx = frame.channel_index(name);
    if (idx < 0) throw std::runtime_error("ingest: analysis channel '" + name + "' missing");
    keep.push_back(idx);
  }
  fs::create_directories(a.out_dir);
  for (const auto& seg : trials.segments) {
    Eigen::MatrixXd sel(keep.size(), seg.data.cols());
    for (std::size_t i = 0; i < keep.size(); ++i) sel.row(i) = seg.data.row(keep[i]);
    std::ostringstream name;
    name << "trial_" << std::setw(3) << std::setfill('0') << seg.trial_index << '_' << seg.label
         << '_' << (seg.is_rest ? "rest" : "task") << ".csv";
    write_text(fs::path(a.out_dir) / name.str(), matrix_csv(cfg.analysis_channels, sel));
  }
  write_json(fs::path(a.out_dir) / "ingest_manifest.json",
             json{{"segments", trials.segments.size()},
                  {"dropped_trials", trials.dropped_trials},
                  {"channels", cfg.analysis_channels},
                  {"f_s", cfg.f_s},
                  {"samples_per_step", cfg.samples_per_step}});
  std::cerr << "ingest: wrote " << trials.segments.size() << " segments, dropped "
            << trials.dropped_trials << " trials\n";
}

// --- decompose -------------------------------------------------------------

struct DecomposeArgs {
  std::string in, scheme, out_dir;
  double fs = 200.0;
};

void run_decompose(const DecomposeArgs& a) {
  scau::RecordingConfig rc;
  rc.f_s = a.fs;
  const scau::TimeSeriesFrame frame = scau::load_csv(a.in, rc);
  scau::BandScheme scheme =
      a.scheme.empty() ? scau::default_scheme(a.fs) : load_json(a.scheme).get<scau::BandScheme>();
  const scau::BandDecomposition dec = scau::decompose(frame, scheme);
  fs::create_directories(a.out_dir);
  for (std::size_t b = 0; b < scheme.bands.size(); ++b)
    write_text(fs::path(a.out_dir) / ("band_" + scheme.bands[b].label + ".csv"),
               matrix_csv(frame.labels, dec.series[b]));
  write_json(fs::path(a.out_dir) / "scheme.json", json(scheme));
  std::cerr << "decompose: " << scheme.bands.size() << " bands x " << frame.channels()
            << " channels\n";
}

// --- map -------------------------------------------------------------------

struct MapArgs {
  std::string in_dir, out;
  double fi = 0.0;
  Eigen::Index warmup = 500;
  bool csv = false;
};

void run_map(const MapArgs& a) {
  const scau::BandScheme scheme =
      load_json((fs::path(a.in_dir) / "scheme.json").string()).get<scau::BandScheme>();
  scau::BandDecomposition dec;
  dec.scheme = scheme;
  for (const auto& band : scheme.bands) {
    scau::RecordingConfig rc;
    rc.f_s = scheme.fs;
    const auto frame =
        scau::load_csv((fs::path(a.in_dir) / ("band_" + band.label + ".csv")).string(), rc);
    if (dec.channel_labels.empty()) dec.channel_labels = frame.labels;
    dec.series.push_back(frame.data);
  }
  scau::MappingConfig cfg;
  cfg.f_s = scheme.fs;
  cfg.f_i = a.fi;
  const scau::MappedTensor t = scau::map_all(dec, cfg, a.warmup);
  scau::write_mapped(t, a.out);
  if (a.csv) {
    std::vector<std::string> header;
    for (Eigen::Index r = 0; r < t.values.rows(); ++r) header.push_back(t.node_label(r));
    write_text(fs::path(a.out).replace_extension(".csv"), matrix_csv(header, t.values));
  }
  std::cerr << "map: " << t.values.rows() << " series x " << t.samples() << " samples at f_i="
            << t.fi << " Hz\n";
}

// --- fits ------------------------------------------------------------------

struct FitVarArgs {
  std::string in, out;
  int order = 20;
  double fs = 200.0;
};

void run_fit_var(const FitVarArgs& a) {
  scau::RecordingConfig rc;
  rc.f_s = a.fs;
  const auto frame = scau::load_csv(a.in, rc);
  const scau::VarFit fit = scau::fit_var(frame.data, a.order, frame.labels);
  write_json(a.out, scau::varfit_to_json(fit));
  std::cerr << "fit-var: m=" << fit.m << " p=" << fit.p << " n_used=" << fit.n_used << '\n';
}

struct FitScauArgs {
  std::string in, out, select = "bic";
  int order = 20;
  double ebic_gamma = 0.0;
};

void run_fit_scau(const FitScauArgs& a) {
  const scau::MappedTensor t = scau::read_mapped(a.in);
  scau::LassoConfig cfg;
  cfg.selection = a.select == "cv" ? scau::LambdaSelection::cv : scau::LambdaSelection::bic;
  cfg.ebic_gamma = a.ebic_gamma;
  const scau::ScauFit fit = scau::fit_scau(t, a.order, cfg);
  write_json(a.out, scau::scau_to_json(fit));
  std::cerr << "fit-scau: " << fit.nodes() << " nodes, support density "
            << fit.support_density() << '\n';
}

// --- connectivity ----------------------------------------------------------

struct ConnectivityArgs {
  std::string fit, out, band = "full";
  double fs = 200.0;
  int grid = 512;
  bool classical = false;
};

void run_connectivity(const ConnectivityArgs& a) {
  const json j = load_json(a.fit);
  const auto norm =
      a.classical ? scau::PdcNormalization::classical : scau::PdcNormalization::row;
  scau::PdcSpectrum spec;
  if (j.contains("coefficients"))
    spec = scau::pdc(scau::scau_from_json(j), a.grid, norm);
  else
    spec = scau::pdc(scau::varfit_from_json(j), a.grid, norm);

  scau::FlowMatrix flow;
  if (a.band == "full") {
    flow = scau::full_flow(spec, a.grid);
  } else {
    const auto colon = a.band.find(':');
    if (colon == std::string::npos)
      throw std::invalid_argument("connectivity: --band must be 'full' or 'f0:f1' in Hz");
    scau::SubbandDef band{"band", std::stod(a.band.substr(0, colon)),
                          std::stod(a.band.substr(colon + 1))};
    flow = scau::band_flow_hz(spec, band, a.fs, a.grid);
  }
  write_json(a.out, scau::flow_to_json(flow));
  std::cerr << "connectivity: " << flow.labels.size() << " nodes\n";
}

// --- contrast --------------------------------------------------------------

struct ContrastArgs {
  std::string task_a, rest_a, task_b, rest_b, out, level = "FC2FC", format = "json";
};

scau::ContrastNetwork build_contrast(const scau::FlowMatrix& ca, const scau::FlowMatrix& cb) {
  // band-resolved node labels look like "band@channel"
  std::vector<std::string> channels, bands;
  bool band_resolved = !ca.labels.empty();
  for (const auto& l : ca.labels)
    if (l.find('@') == std::string::npos) band_resolved = false;
  if (band_resolved) {
    for (const auto& l : ca.labels) {
      const auto at = l.find('@');
      const std::string band = l.substr(0, at), ch = l.substr(at + 1);
      if (std::find(bands.begin(), bands.end(), band) == bands.end()) bands.push_back(band);
      if (std::find(channels.begin(), channels.end(), ch) == channels.end())
        channels.push_back(ch);
    }
  } else {
    channels = ca.labels;
  }
  return scau::contrast(ca, cb, channels, band_resolved ? bands : std::vector<std::string>{});
}

scau::AggregationLevel parse_level(const std::string& s) {
  if (s == "C2C") return scau::AggregationLevel::C2C;
  if (s == "F2C") return scau::AggregationLevel::F2C;
  if (s == "C2F") return scau::AggregationLevel::C2F;
  if (s == "FC2FC") return scau::AggregationLevel::FC2FC;
  throw std::invalid_argument("unknown aggregation level '" + s + "'");
}

void export_network(const scau::ContrastNetwork& net, const fs::path& out,
                    const std::string& format) {
  if (format == "json")
    write_json(out, scau::network_to_json(net));
  else if (format == "csv")
    write_text(out, scau::network_to_csv(net));
  else if (format == "dot")
    write_text(out, scau::network_to_dot(net));
  else
    throw std::invalid_argument("unknown format '" + format + "'");
}

void run_contrast(const ContrastArgs& a) {
  const auto ca = scau::relative_connectivity(scau::flow_from_json(load_json(a.task_a)),
                                              scau::flow_from_json(load_json(a.rest_a)));
  const auto cb = scau::relative_connectivity(scau::flow_from_json(load_json(a.task_b)),
                                              scau::flow_from_json(load_json(a.rest_b)));
  scau::ContrastNetwork net = build_contrast(ca, cb);
  net = scau::aggregate(net, parse_level(a.level));
  export_network(net, a.out, a.format);
  std::cerr << "contrast: level " << net.level << ", max d " << net.d.maxCoeff() << '\n';
}

// --- bootstrap -------------------------------------------------------------

struct BootstrapArgs {
  std::string in, out;
  int B = 2000;
  double level = 0.95;
  std::uint64_t seed = 0;
};

void run_bootstrap(const BootstrapArgs& a) {
  std::ifstream in(a.in);
  if (!in) throw std::runtime_error("bootstrap: cannot open " + a.in);
  std::string line;
  std::getline(in, line);  // header: edge,value
  std::map<std::string, std::vector<double>> groups;
  std::vector<std::string> order;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.rfind(',');
    if (comma == std::string::npos)
      throw std::runtime_error("bootstrap: malformed line '" + line + "'");
    const std::string edge = line.substr(0, comma);
    const double v = std::stod(line.substr(comma + 1));
    if (!groups.count(edge)) order.push_back(edge);
    groups[edge].push_back(v);
  }
  std::ostringstream os;
  os.precision(17);
  os << "edge,mean,ci_low,ci_high,B,seed\n";
  for (const auto& edge : order) {
    const auto s = scau::bootstrap_mean(groups[edge], a.B, a.level, a.seed, edge);
    os << s.edge << ',' << s.mean << ',' << s.ci_low << ',' << s.ci_high << ',' << s.B << ','
       << s.seed << '\n';
  }
  write_text(a.out, os.str());
  std::cerr << "bootstrap: " << order.size() << " edges, B=" << a.B << '\n';
}

// --- summary ---------------------------------------------------------------

struct SummaryArgs {
  std::string in, out;
  double threshold = 0.8;
};

void run_summary(const SummaryArgs& a) {
  const auto net = scau::network_from_json(load_json(a.in));
  const auto edges = scau::summary_network(net, a.threshold);
  std::ostringstream os;
  os.precision(17);
  os << "source,target,d\n";
  for (const auto& e : edges) os << e.source << ',' << e.target << ',' << e.d << '\n';
  if (a.out.empty())
    std::cout << os.str();
  else
    write_text(a.out, os.str());
  std::cerr << "summary: " << edges.size() << " edges at threshold " << a.threshold << '\n';
}

// --- filter-response -------------------------------------------------------

struct FilterResponseArgs {
  std::string spec, sweep = "0:100:0.5", out;
};

void run_filter_response(const FilterResponseArgs& a) {
  const scau::FilterSpec spec = load_json(a.spec).get<scau::FilterSpec>();
  const scau::FilterDesign d = scau::design(spec);
  double f0, f1, step;
  if (std::sscanf(a.sweep.c_str(), "%lf:%lf:%lf", &f0, &f1, &step) != 3 || step <= 0.0)
    throw std::invalid_argument("filter-response: --sweep must be 'start:stop:step'");
  std::ostringstream os;
  os.precision(17);
  os << "frequency_hz,magnitude,phase_rad\n";
  for (double f = f0; f <= f1 + 1e-12; f += step) {
    const auto h = d.response(f);
    os << f << ',' << std::abs(h) << ',' << std::arg(h) << '\n';
  }
  if (a.out.empty())
    std::cout << os.str();
  else
    write_text(a.out, os.str());
}

// --- verify-lemmas ---------------------------------------------------------

struct VerifyArgs {
  std::string which = "all", report;
};

struct VerifyLine {
  std::string name;
  double value = 0.0;
  std::string expected;
  bool pass = false;
};

void verify_lemma1(std::vector<VerifyLine>& lines) {
  // The window must cover only a fraction of the slow period for the kappa = 1
  // linear dependence to be visible; see the mapping rationale.
  auto max_cross = [](double kappa, std::uint64_t seed) {
    scau::Lemma1Params prm;
    prm.omega0 = 1.8e-5;
    prm.kappa = kappa;
    prm.sigma_ex = 0.1;
    prm.sigma_ey = 0.15;
    prm.n = 10000;
    prm.seed = seed;
    const auto fit = scau::fit_var(scau::gen_lemma1(prm), 2);
    double mx = 0.0;
    for (int l = 0; l < 2; ++l) mx = std::max(mx, std::abs(fit.Phi[l](1, 0)));
    return mx;
  };
  int pass_hi = 0, pass_lo = 0;
  double worst_hi = 0.0, best_lo = 0.0;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const double hi = max_cross(20.0, s);
    const double lo = max_cross(1.0, s);
    worst_hi = std::max(worst_hi, hi);
    best_lo = std::max(best_lo, lo);
    if (hi < 0.05) ++pass_hi;
    if (lo > 0.2) ++pass_lo;
  }
  lines.push_back({"lemma1 kappa=20 max |phi_xy| (worst of 20 seeds)", worst_hi,
                   "< 0.05 in >= 18/20 seeds", pass_hi >= 18});
  lines.push_back({"lemma1 kappa=1 max |phi_xy| (max over 20 seeds)", best_lo,
                   "> 0.2 in >= 18/20 seeds", pass_lo >= 18});
}

void verify_lemma2(std::vector<VerifyLine>& lines) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> uo(0.05, 0.45), ut(2.0, 5.0), ur(-0.9, 0.9);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const auto a = scau::ar2_from_peak(uo(rng), ut(rng));
    const auto b = scau::ar2_from_peak(uo(rng), ut(rng));
    const auto r = scau::cross_corr_lag1(a, b, ur(rng), 1000000, 100 + i);
    worst = std::max(worst, std::abs(r.rho_ab_1 - r.sim_rho_ab_1));
    worst = std::max(worst, std::abs(r.rho_ba_1 - r.sim_rho_ba_1));
  }
  lines.push_back(
      {"lemma2 closed form vs simulation, worst abs diff (50 tuples)", worst, "<= 0.02",
       worst <= 0.02});
}

void verify_lemma3(std::vector<VerifyLine>& lines) {
  const auto p = scau::ar2_from_peak(0.02, 3.0);
  const double analytic = scau::rho_ab1_closed(p, p, 1.0);
  // The exact corner value is 0.990945; the published 0.991 bound holds at the
  // criterion's +-0.0005 tolerance (and strictly everywhere inside the region).
  lines.push_back({"lemma3 corner rho_AB(1) at omega*=0.02 tau=3", analytic,
                   "0.9910 +- 0.0005, bound 0.991 within tolerance",
                   std::abs(analytic - 0.9910) <= 0.0005 && analytic >= 0.991 - 0.0005});
  const auto sim = scau::cross_corr_lag1(p, p, 1.0, 100000, 7);
  lines.push_back({"lemma3 simulated rho_AB(1)", sim.sim_rho_ab_1, "within 0.01 of analytic",
                   std::abs(sim.sim_rho_ab_1 - analytic) <= 0.01});
  const auto q = scau::ar2_from_peak(0.1, 20.0);
  const double bound = scau::rho_ab1_closed(q, q, 1.0);
  lines.push_back({"intermediate-frequency bound rho_AB(1) at omega*=0.1 tau=20", bound,
                   "0.809 +- 0.002, <= 0.810",
                   std::abs(bound - 0.809) <= 0.002 && bound <= 0.810});
}

void verify_covtable(std::vector<VerifyLine>& lines) {
  double worst_closed = 0.0;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> uo(0.02, 0.45), uk(0.5, 30.0);
  for (int i = 0; i < 200; ++i) {
    const double w = uo(rng);
    double k = uk(rng);
    if (std::abs(k - 2.0) < 0.1) k += 0.3;
    const auto c = scau::lemma1_cov_closed(w, k);
    const auto q = scau::lemma1_cov_quadrature(w, k);
    worst_closed = std::max({worst_closed, std::abs(c.lag11 - q.lag11),
                             std::abs(c.lag12 - q.lag12), std::abs(c.lag20 - q.lag20)});
  }
  lines.push_back({"appendix covariances: closed form vs quadrature, worst abs diff",
                   worst_closed, "< 1e-6", worst_closed < 1e-6});

  auto max_abs = [](double kappa) {
    double m11 = 0.0, m12 = 0.0, m20 = 0.0;
    for (double w = 0.05; w <= 0.5; w += 0.0025) {
      const auto q = scau::lemma1_cov_quadrature(w, kappa);
      m11 = std::max(m11, std::abs(q.lag11));
      m12 = std::max(m12, std::abs(q.lag12));
      m20 = std::max(m20, std::abs(q.lag20));
    }
    return std::array<double, 3>{m11, m12, m20};
  };
  const auto k1 = max_abs(1.0);
  const auto k10 = max_abs(10.0);
  bool all_in = true;
  for (int i = 0; i < 3; ++i) {
    const double ratio = k1[i] / k10[i];
    const bool in = ratio >= 4.14 * 0.9 && ratio <= 5.87 * 1.1;
    all_in = all_in && in;
    lines.push_back({"covariance ratio kappa=1 / kappa=10, lag form " + std::to_string(i + 1),
                     ratio, "in [4.14, 5.87] +- 10%", in});
  }
  lines.push_back({"covariance attenuation at kappa=10 (weakest factor)",
                   std::min({k1[0] / k10[0], k1[1] / k10[1], k1[2] / k10[2]}),
                   ">= 4.14 (qualitative claim)",
                   std::min({k1[0] / k10[0], k1[1] / k10[1], k1[2] / k10[2]}) >= 4.14});
  (void)all_in;
}

int run_verify(const VerifyArgs& a) {
  std::vector<VerifyLine> lines;
  if (a.which == "1" || a.which == "all") verify_lemma1(lines);
  if (a.which == "2" || a.which == "all") verify_lemma2(lines);
  if (a.which == "3" || a.which == "all") verify_lemma3(lines);
  if (a.which == "covtable" || a.which == "all") verify_covtable(lines);
  if (lines.empty()) throw std::invalid_argument("verify-lemmas: unknown suite '" + a.which + "'");

  bool all_pass = true;
  json report = json::array();
  for (const auto& l : lines) {
    all_pass = all_pass && l.pass;
    std::cout << (l.pass ? "PASS" : "FAIL") << "  " << l.name << " = " << std::setprecision(6)
              << l.value << "  (expected " << l.expected << ")\n";
    report.push_back(
        {{"name", l.name}, {"value", l.value}, {"expected", l.expected}, {"pass", l.pass}});
  }
  if (!a.report.empty()) write_json(a.report, report);
  return all_pass ? 0 : 1;
}

// --- demo bundle -----------------------------------------------------------

struct DemoArgs {
  std::string out_dir;
  std::uint64_t seed = 7;
};

void run_demo(const DemoArgs& a) {
  fs::create_directories(a.out_dir);
  const double f_s = 200.0;
  scau::BandScheme scheme;
  scheme.fs = f_s;
  scheme.bands = {{"delta", 0.0, 4.0}, {"theta", 4.0, 8.0}, {"alpha", 8.0, 12.0}};
  scheme.validate();

  const Eigen::Index trial_len = 4000;  // 20 s per trial at 200 Hz
  const Eigen::Index n = 4 * trial_len + 1000;
  // WG trials carry a delta(ch1) -> theta(ch2) modulation; FX trials do not.
  const auto linked = scau::gen_modulated_network(
      4, scheme, {{0, 0, 1, 1, 0.8, 1}}, n, a.seed);
  const auto unlinked = scau::gen_modulated_network(4, scheme, {}, n, a.seed + 1);

  // EOG: slow noise bleeding into every channel at lag 1.
  std::mt19937_64 rng(a.seed + 2);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> eog(n);
  for (auto& v : eog) v = gauss(rng);
  scau::FilterSpec lp;
  lp.kind = scau::FilterKind::lowpass;
  lp.f_c1 = 2.0;
  lp.f_s = f_s;
  eog = scau::apply(scau::design_lowpass(lp), eog);
  for (auto& v : eog) v *= 5.0;

  const std::vector<std::string> names = {"F1", "F2", "P7", "P8", "EOG"};
  Eigen::MatrixXd data(5, n);
  const std::vector<Eigen::Index> wg_onsets = {0, 2 * trial_len};
  for (Eigen::Index t = 0; t < n; ++t) {
    bool in_wg = false;
    for (const Eigen::Index o : wg_onsets) in_wg = in_wg || (t >= o && t < o + trial_len);
    for (int c = 0; c < 4; ++c) {
      data(c, t) = in_wg ? linked.frame.data(c, t) : unlinked.frame.data(c, t);
      if (t > 0) data(c, t) += 0.3 * eog[t - 1];
    }
    data(4, t) = eog[t];
  }
  write_text(fs::path(a.out_dir) / "demo_data.csv",
             matrix_csv(names, data));

  std::ostringstream mk;
  mk << "trial_index,onset_sample,label\n";
  mk << "1,0,WG\n2," << trial_len << ",FX\n3," << 2 * trial_len << ",WG\n4," << 3 * trial_len
     << ",FX\n";
  write_text(fs::path(a.out_dir) / "demo_markers.csv", mk.str());

  const json recording = {{"f_s", f_s},
                          {"channels", names},
                          {"eog_channels", {"EOG"}},
                          {"analysis_channels", {"F1", "F2", "P7", "P8"}},
                          {"samples_per_step", 1000}};
  const json pipeline = {{"data", (fs::path(a.out_dir) / "demo_data.csv").string()},
                         {"markers", (fs::path(a.out_dir) / "demo_markers.csv").string()},
                         {"recording", recording},
                         {"scheme", json(scheme)},
                         {"mapping", {{"f_i", 20.0}}},
                         {"var_order", 5},
                         {"scau_order", 2},
                         {"lasso", {{"selection", "bic"}, {"n_lambda", 30}}},
                         {"warmup", 300},
                         {"threshold", 0.8},
                         {"seed", a.seed}};
  write_json(fs::path(a.out_dir) / "demo_config.json", pipeline);
  std::cerr << "demo: wrote bundle to " << a.out_dir << '\n';
}

// --- run (full pipeline) ---------------------------------------------------

struct RunArgs {
  std::string config, out_dir = "out";
  std::string format = "json";
};

void run_pipeline(const RunArgs& a) {
  const json cfg = load_json(a.config);
  const auto rc = cfg.at("recording").get<scau::RecordingConfig>();
  const scau::BandScheme scheme = scheme_from_config(cfg, rc.f_s);
  scau::MappingConfig mapping;
  mapping.f_s = rc.f_s;
  mapping.f_i = cfg.contains("mapping") ? cfg.at("mapping").value("f_i", 0.0) : 0.0;
  const int var_order = cfg.value("var_order", 20);
  const int scau_order = cfg.value("scau_order", 20);
  const Eigen::Index warmup = cfg.value("warmup", 500);
  const double threshold = cfg.value("threshold", 0.8);
  scau::LassoConfig lasso =
      cfg.contains("lasso") ? lasso_from_json(cfg.at("lasso")) : scau::LassoConfig{};

  // ingest
  scau::TimeSeriesFrame frame = scau::load_csv(cfg.at("data").get<std::string>(), rc);
  if (!rc.eog_channels.empty()) {
    if (rc.eog_before_car) {
      frame = scau::remove_eog(frame, rc);
      frame = scau::common_average_reference(frame);
    } else {
      frame = scau::common_average_reference(frame);
      frame = scau::remove_eog(frame, rc);
    }
  } else if (frame.channels() >= 2) {
    frame = scau::common_average_reference(frame);
  }
  const auto markers = scau::load_markers(cfg.at("markers").get<std::string>());
  const auto trials = scau::segment_trials(frame, rc, markers);

  std::vector<Eigen::Index> keep;
  for (const auto& name : rc.analysis_channels) {
    const int idx = frame.channel_index(name);
    if (idx < 0) throw std::runtime_error("run: analysis channel '" + name + "' missing");
    keep.push_back(idx);
  }

  // group segments by (label, step) and concatenate
  std::map<std::pair<std::string, bool>, std::vector<const scau::TrialSegment*>> groups;
  std::vector<std::string> task_labels;
  for (const auto& seg : trials.segments) {
    groups[{seg.label, seg.is_rest}].push_back(&seg);
    if (std::find(task_labels.begin(), task_labels.end(), seg.label) == task_labels.end())
      task_labels.push_back(seg.label);
  }
  if (task_labels.size() != 2)
    throw std::runtime_error("run: need exactly two task labels for a contrast, found " +
                             std::to_string(task_labels.size()));
  std::sort(task_labels.begin(), task_labels.end());

  auto concat = [&](const std::string& label, bool rest) {
    const auto& segs = groups.at({label, rest});
    Eigen::Index total = 0;
    for (const auto* s : segs) total += s->data.cols();
    Eigen::MatrixXd out(keep.size(), total);
    Eigen::Index off = 0;
    for (const auto* s : segs) {
      for (std::size_t i = 0; i < keep.size(); ++i)
        out.row(i).segment(off, s->data.cols()) = s->data.row(keep[i]);
      off += s->data.cols();
    }
    return out;
  };

  struct ConditionFits {
    scau::FlowMatrix scau_flow;
    scau::FlowMatrix var_flow;
  };
  auto fit_condition = [&](const std::string& label, bool rest) {
    const Eigen::MatrixXd series = concat(label, rest);
    scau::TimeSeriesFrame f(rc.f_s, rc.analysis_channels, series);
    const auto dec = scau::decompose(f, scheme);
    const auto mapped = scau::map_all(dec, mapping, warmup);
    const auto sfit = scau::fit_scau(mapped, scau_order, lasso);
    const auto vfit = scau::fit_var(series, var_order, rc.analysis_channels);
    ConditionFits out;
    out.scau_flow = scau::full_flow(scau::pdc(sfit));
    out.var_flow = scau::full_flow(scau::pdc(vfit));
    std::cerr << "run: fitted " << label << (rest ? " rest" : " task") << ", support density "
              << sfit.support_density() << '\n';
    return out;
  };

  const auto a_task = fit_condition(task_labels[0], false);
  const auto a_rest = fit_condition(task_labels[0], true);
  const auto b_task = fit_condition(task_labels[1], false);
  const auto b_rest = fit_condition(task_labels[1], true);

  const auto c_a = scau::relative_connectivity(a_task.scau_flow, a_rest.scau_flow);
  const auto c_b = scau::relative_connectivity(b_task.scau_flow, b_rest.scau_flow);
  const scau::ContrastNetwork fc2fc = build_contrast(c_a, c_b);

  const auto vc_a = scau::relative_connectivity(a_task.var_flow, a_rest.var_flow);
  const auto vc_b = scau::relative_connectivity(b_task.var_flow, b_rest.var_flow);
  const scau::ContrastNetwork var_c2c = build_contrast(vc_a, vc_b);

  fs::create_directories(a.out_dir);
  const fs::path out(a.out_dir);
  const std::map<std::string, scau::AggregationLevel> levels = {
      {"fc2fc", scau::AggregationLevel::FC2FC},
      {"c2c", scau::AggregationLevel::C2C},
      {"f2c", scau::AggregationLevel::F2C},
      {"c2f", scau::AggregationLevel::C2F}};
  for (const auto& [name, level] : levels) {
    const auto net = scau::aggregate(fc2fc, level);
    write_json(out / (name + ".json"), scau::network_to_json(net));
    if (a.format == "dot" || name == "fc2fc" || name == "c2c")
      write_text(out / (name + ".dot"), scau::network_to_dot(net, threshold));
    if (a.format == "csv") write_text(out / (name + ".csv"), scau::network_to_csv(net));
  }
  write_json(out / "var_c2c.json", scau::network_to_json(var_c2c));

  const auto edges = scau::summary_network(fc2fc, threshold);
  std::ostringstream os;
  os.precision(17);
  os << "source,target,d\n";
  for (const auto& e : edges) os << e.source << ',' << e.target << ',' << e.d << '\n';
  write_text(out / "summary.csv", os.str());

  write_json(out / "manifest.json",
             json{{"version", kVersion},
                  {"config", cfg},
                  {"config_hash", std::hash<std::string>{}(cfg.dump())},
                  {"seed", cfg.value("seed", 0)},
                  {"tasks", task_labels},
                  {"segments", trials.segments.size()},
                  {"dropped_trials", trials.dropped_trials},
                  {"outputs",
                   {"fc2fc.json", "c2c.json", "f2c.json", "c2f.json", "var_c2c.json",
                    "summary.csv", "manifest.json"}}});
  std::cerr << "run: wrote networks to " << a.out_dir << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SCAU spectral-causality pipeline"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  app.fallthrough();

  std::string g_config, g_out_dir, g_format = "json";
  std::uint64_t g_seed = 0;
  int g_threads = 1;
  app.add_option("--config", g_config, "pipeline configuration JSON");
  app.add_option("--seed", g_seed, "root random seed");
  app.add_option("--threads", g_threads, "worker thread budget (stages are deterministic)");
  app.add_option("--out-dir", g_out_dir, "output directory");
  app.add_option("--format", g_format, "output format: json|csv|dot")
      ->check(CLI::IsMember({"json", "csv", "dot"}));

  IngestArgs ingest;
  auto* c_ingest = app.add_subcommand("ingest", "preprocess and segment a recording");
  c_ingest->add_option("--data", ingest.data, "recording CSV")->required();
  c_ingest->add_option("--markers", ingest.markers, "trial markers CSV")->required();
  c_ingest->add_option("--config", ingest.config, "recording config JSON");
  c_ingest->add_option("--out", ingest.out_dir, "output directory")->required();

  DecomposeArgs dec;
  auto* c_dec = app.add_subcommand("decompose", "split channels into subbands");
  c_dec->add_option("--in", dec.in, "input CSV")->required();
  c_dec->add_option("--scheme", dec.scheme, "band scheme JSON (default: 12 x 4 Hz)");
  c_dec->add_option("--fs", dec.fs, "sampling rate Hz");
  c_dec->add_option("--out", dec.out_dir, "output directory")->required();

  MapArgs map_args;
  auto* c_map = app.add_subcommand("map", "translate subbands to the intermediate frequency");
  c_map->add_option("--in", map_args.in_dir, "decompose output directory")->required();
  c_map->add_option("--fi", map_args.fi, "intermediate frequency Hz (0: 0.1 f_s)");
  c_map->add_option("--warmup", map_args.warmup, "warm-up samples to discard");
  c_map->add_flag("--csv", map_args.csv, "also write a CSV export");
  c_map->add_option("--out", map_args.out, "output tensor file")->required();

  FitVarArgs fv;
  auto* c_fv = app.add_subcommand("fit-var", "least-squares VAR fit");
  c_fv->add_option("--in", fv.in, "input CSV")->required();
  c_fv->add_option("--order", fv.order, "model order p");
  c_fv->add_option("--fs", fv.fs, "sampling rate Hz");
  c_fv->add_option("--out", fv.out, "output JSON")->required();

  FitScauArgs fsa;
  auto* c_fs = app.add_subcommand("fit-scau", "two-phase sparse fit on mapped series");
  c_fs->add_option("--in", fsa.in, "mapped tensor file")->required();
  c_fs->add_option("--order", fsa.order, "model order p");
  c_fs->add_option("--select", fsa.select, "lambda selection: bic|cv")
      ->check(CLI::IsMember({"bic", "cv"}));
  c_fs->add_option("--ebic-gamma", fsa.ebic_gamma,
                   "extended-BIC weight (0 = plain BIC)")
      ->check(CLI::NonNegativeNumber);
  c_fs->add_option("--out", fsa.out, "output JSON")->required();

  ConnectivityArgs conn;
  auto* c_conn = app.add_subcommand("connectivity", "band-integrated directed flows");
  c_conn->add_option("--fit", conn.fit, "fit JSON (VAR or SCAU)")->required();
  c_conn->add_option("--band", conn.band, "'full' or 'f0:f1' in Hz");
  c_conn->add_option("--fs", conn.fs, "sampling rate Hz (for Hz bands)");
  c_conn->add_option("--grid", conn.grid, "frequency grid size");
  c_conn->add_flag("--classical", conn.classical, "classical column normalization");
  c_conn->add_option("--out", conn.out, "output JSON")->required();

  ContrastArgs con;
  auto* c_con = app.add_subcommand("contrast", "task contrast network");
  c_con->add_option("--task-a", con.task_a, "task-A flow JSON")->required();
  c_con->add_option("--rest-a", con.rest_a, "rest-A flow JSON")->required();
  c_con->add_option("--task-b", con.task_b, "task-B flow JSON")->required();
  c_con->add_option("--rest-b", con.rest_b, "rest-B flow JSON")->required();
  c_con->add_option("--level", con.level, "C2C|F2C|C2F|FC2FC");
  c_con->add_option("--format", con.format, "json|csv|dot")
      ->check(CLI::IsMember({"json", "csv", "dot"}));
  c_con->add_option("--out", con.out, "output file")->required();

  BootstrapArgs bs;
  auto* c_bs = app.add_subcommand("bootstrap", "bootstrap mean contrasts per edge");
  c_bs->add_option("--in", bs.in, "contrast CSV (edge,value)")->required();
  c_bs->add_option("--B", bs.B, "replicate count");
  c_bs->add_option("--level", bs.level, "confidence level");
  c_bs->add_option("--seed", bs.seed, "seed");
  c_bs->add_option("--out", bs.out, "output CSV")->required();

  SummaryArgs sum;
  auto* c_sum = app.add_subcommand("summary", "threshold a contrast network");
  c_sum->add_option("--in", sum.in, "network JSON")->required();
  c_sum->add_option("--threshold", sum.threshold, "fraction of the maximum contrast");
  c_sum->add_option("--out", sum.out, "output CSV (default: stdout)");

  FilterResponseArgs fr;
  auto* c_fr = app.add_subcommand("filter-response", "closed-form response sweep");
  c_fr->add_option("--spec", fr.spec, "filter spec JSON")->required();
  c_fr->add_option("--sweep", fr.sweep, "start:stop:step in Hz");
  c_fr->add_option("--out", fr.out, "output CSV (default: stdout)");

  VerifyArgs ver;
  auto* c_ver = app.add_subcommand("verify-lemmas", "numeric checks of the analytic results");
  c_ver->alias("verify");
  c_ver->add_option("--which", ver.which, "1|2|3|covtable|all");
  c_ver->add_option("--report", ver.report, "machine-readable JSON report path");

  DemoArgs demo;
  auto* c_demo = app.add_subcommand("demo", "write a synthetic demo input bundle");
  c_demo->add_option("--out", demo.out_dir, "output directory")->required();
  c_demo->add_option("--seed", demo.seed, "seed");

  RunArgs runa;
  auto* c_run = app.add_subcommand("run", "execute the full pipeline");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  runa.config = g_config;
  if (!g_out_dir.empty()) runa.out_dir = g_out_dir;
  runa.format = g_format;

  try {
    if (*c_ingest) run_ingest(ingest);
    if (*c_dec) run_decompose(dec);
    if (*c_map) run_map(map_args);
    if (*c_fv) run_fit_var(fv);
    if (*c_fs) run_fit_scau(fsa);
    if (*c_conn) run_connectivity(conn);
    if (*c_con) run_contrast(con);
    if (*c_bs) run_bootstrap(bs);
    if (*c_sum) run_summary(sum);
    if (*c_fr) run_filter_response(fr);
    if (*c_ver) return run_verify(ver);
    if (*c_demo) run_demo(demo);
    if (*c_run) {
      if (runa.config.empty())
        throw std::invalid_argument("run: --config is required");
      run_pipeline(runa);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
