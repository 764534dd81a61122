#pragma once

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <boost/math/distributions/normal.hpp>

#include <nlohmann/json.hpp>

#include "scau/frame.hpp"

namespace scau {

// Estimated VAR(p): Phi[l](i, j) is the lag-(l+1) coefficient of source j in
// the equation of target i.
struct VarFit {
  int p = 0;
  int m = 0;
  std::vector<Eigen::MatrixXd> Phi;
  std::vector<Eigen::MatrixXd> std_err;
  Eigen::MatrixXd Sigma;
  Eigen::Index n_used = 0;
  std::vector<std::string> labels;
};

namespace detail {

// Lagged design: row t covers lags 1..p, columns ordered lag-major
// [lag1: ch0..chm-1, lag2: ...].
inline Eigen::MatrixXd lagged_design(const Eigen::MatrixXd& y, int p) {
  const Eigen::Index m = y.rows();
  const Eigen::Index n = y.cols();
  Eigen::MatrixXd X(n - p, m * p);
  for (Eigen::Index t = p; t < n; ++t)
    for (int l = 0; l < p; ++l)
      for (Eigen::Index c = 0; c < m; ++c)
        X(t - p, l * m + c) = y(c, t - 1 - l);
  return X;
}

}  // namespace detail

inline VarFit fit_var(const Eigen::MatrixXd& series, int p,
                      std::vector<std::string> labels = {},
                      double cond_threshold = 1e10) {
  const Eigen::Index m = series.rows();
  const Eigen::Index n = series.cols();
  if (p < 1) throw std::invalid_argument("fit_var: order must be >= 1");
  if (n <= m * p + m) throw std::invalid_argument("fit_var: series too short for order");

  Eigen::MatrixXd y = series;
  for (Eigen::Index c = 0; c < m; ++c) y.row(c).array() -= y.row(c).mean();

  const Eigen::MatrixXd X = detail::lagged_design(y, p);
  const Eigen::MatrixXd Y = y.rightCols(n - p).transpose();  // (n-p) x m
  const Eigen::Index n_eff = X.rows();
  const Eigen::Index k = X.cols();

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  const Eigen::VectorXd rdiag = qr.matrixR().topLeftCorner(k, k).diagonal().cwiseAbs();
  const double cond = rdiag.maxCoeff() / std::max(rdiag.minCoeff(), 1e-300);
  if (cond > cond_threshold)
    throw std::domain_error("fit_var: design condition number " + std::to_string(cond) +
                            " exceeds threshold " + std::to_string(cond_threshold));

  const Eigen::MatrixXd B = qr.solve(Y);  // k x m, column per equation
  const Eigen::MatrixXd resid = Y - X * B;
  const Eigen::Index dof = n_eff - k;
  if (dof <= 0) throw std::invalid_argument("fit_var: no residual degrees of freedom");

  const Eigen::MatrixXd XtX_inv =
      (X.transpose() * X).ldlt().solve(Eigen::MatrixXd::Identity(k, k));

  VarFit fit;
  fit.p = p;
  fit.m = static_cast<int>(m);
  fit.n_used = n_eff;
  fit.labels = std::move(labels);
  fit.Sigma = resid.transpose() * resid / static_cast<double>(dof);
  fit.Phi.assign(p, Eigen::MatrixXd::Zero(m, m));
  fit.std_err.assign(p, Eigen::MatrixXd::Zero(m, m));
  for (Eigen::Index i = 0; i < m; ++i) {
    const double sigma2 = resid.col(i).squaredNorm() / static_cast<double>(dof);
    for (int l = 0; l < p; ++l)
      for (Eigen::Index j = 0; j < m; ++j) {
        fit.Phi[l](i, j) = B(l * m + j, i);
        fit.std_err[l](i, j) = std::sqrt(sigma2 * XtX_inv(l * m + j, l * m + j));
      }
  }
  return fit;
}

inline double companion_spectral_radius(const std::vector<Eigen::MatrixXd>& Phi) {
  if (Phi.empty()) return 0.0;
  const Eigen::Index m = Phi[0].rows();
  const int p = static_cast<int>(Phi.size());
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(m * p, m * p);
  for (int l = 0; l < p; ++l) comp.block(0, l * m, m, m) = Phi[l];
  if (p > 1)
    comp.block(m, 0, m * (p - 1), m * (p - 1)) =
        Eigen::MatrixXd::Identity(m * (p - 1), m * (p - 1));
  return comp.eigenvalues().cwiseAbs().maxCoeff();
}

inline Eigen::MatrixXd simulate_var(const std::vector<Eigen::MatrixXd>& Phi,
                                    const Eigen::MatrixXd& Sigma, Eigen::Index n,
                                    std::uint64_t seed, Eigen::Index burnin = -1) {
  if (Phi.empty()) throw std::invalid_argument("simulate_var: no coefficient matrices");
  const Eigen::Index m = Phi[0].rows();
  const int p = static_cast<int>(Phi.size());
  const double radius = companion_spectral_radius(Phi);
  if (radius >= 1.0)
    throw std::domain_error("simulate_var: unstable specification, spectral radius " +
                            std::to_string(radius));
  if (burnin < 0) burnin = 10 * p;

  const Eigen::MatrixXd L = Eigen::LLT<Eigen::MatrixXd>(Sigma).matrixL();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(m, n + burnin + p);
  Eigen::VectorXd z(m);
  for (Eigen::Index t = p; t < x.cols(); ++t) {
    for (Eigen::Index c = 0; c < m; ++c) z(c) = gauss(rng);
    Eigen::VectorXd v = L * z;
    for (int l = 0; l < p; ++l) v += Phi[l] * x.col(t - 1 - l);
    x.col(t) = v;
  }
  return x.rightCols(n);
}

namespace detail {

inline nlohmann::json tensor_to_json(const std::vector<Eigen::MatrixXd>& t) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& M : t) {
    std::vector<std::vector<double>> rows(M.rows());
    for (Eigen::Index i = 0; i < M.rows(); ++i) {
      rows[i].resize(M.cols());
      for (Eigen::Index j = 0; j < M.cols(); ++j) rows[i][j] = M(i, j);
    }
    out.push_back(rows);
  }
  return out;
}

inline std::vector<Eigen::MatrixXd> tensor_from_json(const nlohmann::json& j) {
  std::vector<Eigen::MatrixXd> out;
  for (const auto& jm : j) {
    const auto rows = jm.get<std::vector<std::vector<double>>>();
    Eigen::MatrixXd M(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t r = 0; r < rows.size(); ++r)
      for (std::size_t c = 0; c < rows[r].size(); ++c)
        M(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    out.push_back(std::move(M));
  }
  return out;
}

}  // namespace detail

inline nlohmann::json varfit_to_json(const VarFit& fit) {
  return nlohmann::json{{"order", fit.p},
                        {"m", fit.m},
                        {"labels", fit.labels},
                        {"n_used", fit.n_used},
                        {"phi", detail::tensor_to_json(fit.Phi)},
                        {"std_err", detail::tensor_to_json(fit.std_err)},
                        {"sigma", detail::tensor_to_json({fit.Sigma})[0]}};
}

inline VarFit varfit_from_json(const nlohmann::json& j) {
  VarFit fit;
  fit.p = j.at("order").get<int>();
  fit.m = j.at("m").get<int>();
  fit.labels = j.value("labels", std::vector<std::string>{});
  fit.n_used = j.value("n_used", 0);
  fit.Phi = detail::tensor_from_json(j.at("phi"));
  if (j.contains("std_err")) fit.std_err = detail::tensor_from_json(j.at("std_err"));
  if (j.contains("sigma")) fit.Sigma = detail::tensor_from_json(nlohmann::json::array({j.at("sigma")}))[0];
  return fit;
}

// Entry (i, j): source j Granger-causes target i at level alpha, Bonferroni
// corrected across the p lags.
inline Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> granger_matrix(const VarFit& fit,
                                                                          double alpha) {
  if (alpha <= 0.0 || alpha >= 1.0) throw std::invalid_argument("granger_matrix: bad alpha");
  const boost::math::normal_distribution<double> norm;
  const double zcrit = boost::math::quantile(norm, 1.0 - alpha / (2.0 * fit.p));
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> out(fit.m, fit.m);
  out.setConstant(false);
  for (int i = 0; i < fit.m; ++i)
    for (int j = 0; j < fit.m; ++j)
      for (int l = 0; l < fit.p; ++l)
        if (std::abs(fit.Phi[l](i, j)) > zcrit * fit.std_err[l](i, j)) {
          out(i, j) = true;
          break;
        }
  return out;
}

}  // namespace scau
