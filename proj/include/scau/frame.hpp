#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace scau {

// Multichannel uniformly sampled signal. Rows are channels, columns are samples.
struct TimeSeriesFrame {
  double fs = 0.0;
  std::vector<std::string> labels;
  Eigen::MatrixXd data;  // channels x samples

  TimeSeriesFrame() = default;
  TimeSeriesFrame(double fs_, std::vector<std::string> labels_, Eigen::MatrixXd data_)
      : fs(fs_), labels(std::move(labels_)), data(std::move(data_)) {
    if (static_cast<Eigen::Index>(labels.size()) != data.rows())
      throw std::invalid_argument("TimeSeriesFrame: label count does not match channel count");
  }

  Eigen::Index channels() const { return data.rows(); }
  Eigen::Index samples() const { return data.cols(); }

  int channel_index(const std::string& name) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == name) return static_cast<int>(i);
    return -1;
  }

  void check_finite(const char* where) const {
    for (Eigen::Index c = 0; c < data.rows(); ++c)
      for (Eigen::Index n = 0; n < data.cols(); ++n)
        if (!std::isfinite(data(c, n)))
          throw std::domain_error(std::string(where) + ": non-finite sample in channel '" +
                                  (c < static_cast<Eigen::Index>(labels.size()) ? labels[c]
                                                                                : std::to_string(c)) +
                                  "' at index " + std::to_string(n));
  }
};

}  // namespace scau
