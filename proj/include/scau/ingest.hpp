#pragma once

#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scau/frame.hpp"

#include <nlohmann/json.hpp>

namespace scau {

struct RecordingConfig {
  double f_s = 200.0;
  std::vector<std::string> channels;      // expected channel names (empty: take header as-is)
  std::vector<std::string> eog_channels;  // optional
  int eog_lag_count = 2;
  std::vector<std::string> analysis_channels = {"F1", "F2", "P7", "P8"};
  double instruction_s = 2.0;
  double task_s = 10.0;
  double stop_s = 1.0;
  double rest_start_s = 13.0;  // earliest rest second of the 13-15 s range
  Eigen::Index samples_per_step = 1000;
  bool eog_before_car = true;

  void validate() const {
    if (f_s <= 0.0) throw std::invalid_argument("RecordingConfig: f_s must be positive");
    if (samples_per_step > static_cast<Eigen::Index>(task_s * f_s))
      throw std::invalid_argument("RecordingConfig: samples_per_step exceeds task window");
  }
};

struct TrialMarker {
  int trial_index = 0;
  Eigen::Index onset_sample = 0;
  std::string label;  // WG or FX
};

struct TrialSegment {
  int trial_index = 0;
  std::string label;
  bool is_rest = false;
  Eigen::MatrixXd data;  // channels x samples_per_step
};

struct TrialSet {
  std::vector<std::string> channel_labels;
  double fs = 0.0;
  std::vector<TrialSegment> segments;
  int dropped_trials = 0;
};

inline TimeSeriesFrame load_csv(const std::string& path, const RecordingConfig& cfg) {
  cfg.validate();
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line.empty())
    throw std::runtime_error("load_csv: empty file " + path);

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      while (!tok.empty() && (tok.back() == '\r' || tok.back() == ' ')) tok.pop_back();
      header.push_back(tok);
    }
  }
  for (const auto& want : cfg.channels)
    if (std::find(header.begin(), header.end(), want) == header.end())
      throw std::runtime_error("load_csv: required channel '" + want + "' missing from header");

  std::vector<std::vector<double>> rows;
  Eigen::Index row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string tok;
    std::vector<double> row;
    std::size_t col = 0;
    while (std::getline(ss, tok, ',')) {
      ++col;
      char* end = nullptr;
      const double v = std::strtod(tok.c_str(), &end);
      if (end == tok.c_str() || !std::isfinite(v))
        throw std::runtime_error("load_csv: non-numeric or non-finite cell at row " +
                                 std::to_string(row_no) + ", column " + std::to_string(col) +
                                 " ('" + tok + "')");
      row.push_back(v);
    }
    if (row.size() != header.size())
      throw std::runtime_error("load_csv: row " + std::to_string(row_no) +
                               " has wrong column count");
    rows.push_back(std::move(row));
  }
  Eigen::MatrixXd data(header.size(), rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < header.size(); ++c)
      data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(r)) = rows[r][c];
  return TimeSeriesFrame(cfg.f_s, header, std::move(data));
}

inline std::vector<TrialMarker> load_markers(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_markers: cannot open " + path);
  std::vector<TrialMarker> out;
  std::string line;
  std::getline(in, line);  // header: trial_index,onset_sample,label
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string a, b, c;
    std::getline(ss, a, ',');
    std::getline(ss, b, ',');
    std::getline(ss, c, ',');
    while (!c.empty() && (c.back() == '\r' || c.back() == ' ')) c.pop_back();
    out.push_back({std::stoi(a), static_cast<Eigen::Index>(std::stoll(b)), c});
  }
  return out;
}

// Replace each non-EOG channel by its residual after least-squares regression
// on EOG lags 0..L.
inline TimeSeriesFrame remove_eog(const TimeSeriesFrame& frame, const RecordingConfig& cfg) {
  if (cfg.eog_channels.empty()) {
    std::cerr << "remove_eog: no EOG channels configured, passing through\n";
    return frame;
  }
  std::vector<int> eog_idx;
  for (const auto& name : cfg.eog_channels) {
    const int idx = frame.channel_index(name);
    if (idx < 0) throw std::invalid_argument("remove_eog: EOG channel '" + name + "' not found");
    eog_idx.push_back(idx);
  }
  const int L = cfg.eog_lag_count;
  const Eigen::Index n = frame.samples();
  const Eigen::Index n_eff = n - L;
  const Eigen::Index k = static_cast<Eigen::Index>(eog_idx.size()) * (L + 1);

  Eigen::MatrixXd X(n_eff, k);
  for (std::size_t e = 0; e < eog_idx.size(); ++e) {
    const auto row = frame.data.row(eog_idx[e]);
    const double sd = std::sqrt((row.array() - row.mean()).square().mean());
    if (sd < 1e-12)
      throw std::domain_error("remove_eog: EOG channel '" + cfg.eog_channels[e] +
                              "' has zero variance");
    for (int l = 0; l <= L; ++l)
      for (Eigen::Index t = 0; t < n_eff; ++t)
        X(t, static_cast<Eigen::Index>(e) * (L + 1) + l) = frame.data(eog_idx[e], t + L - l);
  }

  TimeSeriesFrame out = frame;
  const auto qr = X.colPivHouseholderQr();
  for (Eigen::Index c = 0; c < frame.channels(); ++c) {
    if (std::find(eog_idx.begin(), eog_idx.end(), static_cast<int>(c)) != eog_idx.end())
      continue;
    const Eigen::VectorXd y = frame.data.row(c).segment(L, n_eff).transpose();
    const Eigen::VectorXd beta = qr.solve(y);
    const Eigen::VectorXd resid = y - X * beta;
    for (Eigen::Index t = 0; t < n_eff; ++t) out.data(c, t + L) = resid(t);
    // leading L samples keep their original values (no full lag context)
  }
  return out;
}

// Subtract the per-sample mean across all channels.
inline TimeSeriesFrame common_average_reference(const TimeSeriesFrame& frame) {
  if (frame.channels() < 2)
    throw std::invalid_argument("common_average_reference: need >= 2 channels");
  TimeSeriesFrame out = frame;
  const Eigen::RowVectorXd mean = frame.data.colwise().mean();
  out.data.rowwise() -= mean;
  return out;
}

// Task window skips the instruction; rest window starts at the configured rest
// second. Both are truncated to samples_per_step samples. Trials running past
// the recording end are dropped and counted.
inline TrialSet segment_trials(const TimeSeriesFrame& frame, const RecordingConfig& cfg,
                               const std::vector<TrialMarker>& markers) {
  cfg.validate();
  TrialSet out;
  out.channel_labels = frame.labels;
  out.fs = frame.fs;
  const Eigen::Index task_start = static_cast<Eigen::Index>(cfg.instruction_s * cfg.f_s);
  const Eigen::Index rest_start = static_cast<Eigen::Index>(cfg.rest_start_s * cfg.f_s);
  for (const auto& mk : markers) {
    const Eigen::Index t0 = mk.onset_sample + task_start;
    const Eigen::Index r0 = mk.onset_sample + rest_start;
    if (r0 + cfg.samples_per_step > frame.samples()) {
      ++out.dropped_trials;
      std::cerr << "segment_trials: trial " << mk.trial_index << " extends past recording end, dropped\n";
      continue;
    }
    out.segments.push_back(
        {mk.trial_index, mk.label, false, frame.data.middleCols(t0, cfg.samples_per_step)});
    out.segments.push_back(
        {mk.trial_index, mk.label, true, frame.data.middleCols(r0, cfg.samples_per_step)});
  }
  return out;
}

inline void from_json(const nlohmann::json& j, RecordingConfig& c) {
  c.f_s = j.value("f_s", 200.0);
  c.channels = j.value("channels", std::vector<std::string>{});
  c.eog_channels = j.value("eog_channels", std::vector<std::string>{});
  c.eog_lag_count = j.value("eog_lag_count", 2);
  c.analysis_channels =
      j.value("analysis_channels", std::vector<std::string>{"F1", "F2", "P7", "P8"});
  c.instruction_s = j.value("instruction_s", 2.0);
  c.task_s = j.value("task_s", 10.0);
  c.stop_s = j.value("stop_s", 1.0);
  c.rest_start_s = j.value("rest_start_s", 13.0);
  c.samples_per_step = j.value("samples_per_step", Eigen::Index{1000});
  c.eog_before_car = j.value("eog_before_car", true);
}

}  // namespace scau
