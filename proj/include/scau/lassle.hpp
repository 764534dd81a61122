#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scau/mapping.hpp"
#include "scau/varfit.hpp"

namespace scau {

enum class LambdaSelection { bic, cv };

struct LassoConfig {
  std::vector<double> lambda_grid;  // descending; empty -> geometric auto grid
  int n_lambda = 40;
  double lambda_min_ratio = 1e-3;
  LambdaSelection selection = LambdaSelection::bic;
  // Extended-BIC weight (Chen & Chen 2008): adds 2*gamma*dof*log(#regressors)
  // to the BIC score. Zero recovers the plain BIC; positive values counter the
  // optional-stopping optimism of scoring every support on the lambda path.
  double ebic_gamma = 0.0;
  int cv_folds = 5;
  int max_iter = 1000;
  double tol = 1e-7;
  std::uint64_t seed = 0;

  void validate() const {
    if (tol <= 0.0) throw std::invalid_argument("LassoConfig: tol must be positive");
    if (!(ebic_gamma >= 0.0))
      throw std::invalid_argument("LassoConfig: ebic_gamma must be non-negative");
    if (!lambda_grid.empty())
      for (std::size_t i = 1; i < lambda_grid.size(); ++i)
        if (lambda_grid[i] >= lambda_grid[i - 1] || lambda_grid[i] <= 0.0)
          throw std::invalid_argument("LassoConfig: grid must be positive and descending");
  }
};

struct LassoPathPoint {
  double lambda = 0.0;
  Eigen::VectorXd coef;
  int n_iter = 0;
};

namespace detail {

// One coordinate-descent solve at fixed lambda using precomputed second
// moments G = X'X/n and b = X'y/n; X columns are assumed to have unit second
// moment, y centered. Minimizes (1/2n)||y - Xw||^2 + lambda ||w||_1. The
// running gradient g = G w is updated in place so a full sweep costs O(k^2)
// instead of O(n k).
inline int lasso_cd(const Eigen::MatrixXd& G, const Eigen::VectorXd& b, Eigen::VectorXd& g,
                    Eigen::VectorXd& w, double lambda, int max_iter, double tol) {
  const Eigen::Index k = b.size();
  int it = 0;
  for (; it < max_iter; ++it) {
    double max_change = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      const double wj = w(j);
      const double rho = b(j) - g(j) + G(j, j) * wj;
      const double wnew = std::copysign(std::max(std::abs(rho) - lambda, 0.0), rho);
      if (wnew != wj) {
        g += G.col(j) * (wnew - wj);
        w(j) = wnew;
        max_change = std::max(max_change, std::abs(wnew - wj));
      }
    }
    if (max_change < tol) break;
  }
  return it + 1;
}

}  // namespace detail

// Warm-started coordinate-descent path. Columns are standardized internally;
// coefficients are reported in the original units. Zero-variance columns are
// dropped (coefficient pinned to zero) and recorded in `dropped`.
inline std::vector<LassoPathPoint> lasso_path(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                              const LassoConfig& cfg,
                                              std::vector<int>* dropped = nullptr) {
  cfg.validate();
  const Eigen::Index n = X.rows();
  const Eigen::Index k = X.cols();
  if (n != y.size()) throw std::invalid_argument("lasso_path: X/y size mismatch");
  if (!X.allFinite() || !y.allFinite())
    throw std::invalid_argument("lasso_path: non-finite design or response");

  Eigen::VectorXd yc = y.array() - y.mean();
  Eigen::MatrixXd Xs(n, k);
  Eigen::VectorXd scale(k);
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::VectorXd col = X.col(j).array() - X.col(j).mean();
    const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n));
    if (sd < 1e-12) {
      scale(j) = 0.0;
      Xs.col(j).setZero();
      if (dropped) dropped->push_back(static_cast<int>(j));
    } else {
      scale(j) = sd;
      Xs.col(j) = col / sd;
    }
  }

  std::vector<double> grid = cfg.lambda_grid;
  if (grid.empty()) {
    double lam_max = 0.0;
    for (Eigen::Index j = 0; j < k; ++j)
      lam_max = std::max(lam_max, std::abs(Xs.col(j).dot(yc)) / static_cast<double>(n));
    if (lam_max <= 0.0) lam_max = 1.0;
    const double lam_min = lam_max * cfg.lambda_min_ratio;
    for (int i = 0; i < cfg.n_lambda; ++i) {
      const double f = cfg.n_lambda == 1 ? 0.0 : static_cast<double>(i) / (cfg.n_lambda - 1);
      grid.push_back(lam_max * std::pow(lam_min / lam_max, f));
    }
  }

  const Eigen::MatrixXd G = Xs.transpose() * Xs / static_cast<double>(n);
  const Eigen::VectorXd b = Xs.transpose() * yc / static_cast<double>(n);

  std::vector<LassoPathPoint> path;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd g = Eigen::VectorXd::Zero(k);
  for (double lambda : grid) {
    LassoPathPoint pt;
    pt.lambda = lambda;
    pt.n_iter = detail::lasso_cd(G, b, g, w, lambda, cfg.max_iter, cfg.tol);
    pt.coef = Eigen::VectorXd::Zero(k);
    for (Eigen::Index j = 0; j < k; ++j)
      if (scale(j) > 0.0) pt.coef(j) = w(j) / scale(j);
    path.push_back(std::move(pt));
  }
  return path;
}

// SCAU fit over (channel, band) nodes; Phi[l](target_row, source_row) with
// row = channel * bands + band. Coefficients are zero off the selected support.
struct ScauFit {
  int p = 0;
  int m = 0;
  std::vector<std::string> channel_labels;
  std::vector<std::string> band_labels;
  std::vector<Eigen::MatrixXd> Phi;
  std::vector<Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>> support;
  std::vector<Eigen::MatrixXd> std_err;  // on-support entries only
  Eigen::MatrixXd Sigma;
  Eigen::VectorXd lambda_used;  // per equation
  Eigen::Index n_used = 0;

  Eigen::Index nodes() const { return static_cast<Eigen::Index>(channel_labels.size()) *
                                      static_cast<Eigen::Index>(band_labels.size()); }
  double support_density() const {
    Eigen::Index nz = 0, total = 0;
    for (const auto& s : support) {
      nz += s.count();
      total += s.size();
    }
    return total == 0 ? 0.0 : static_cast<double>(nz) / static_cast<double>(total);
  }
  std::string node_label(Eigen::Index r) const {
    const Eigen::Index nb = static_cast<Eigen::Index>(band_labels.size());
    return band_labels[r % nb] + "@" + channel_labels[r / nb];
  }
};

namespace detail {

struct EquationSelection {
  std::vector<Eigen::Index> support;
  double lambda = 0.0;
};

inline double bic_score(double rss, Eigen::Index n, Eigen::Index dof, Eigen::Index k,
                        double ebic_gamma) {
  return static_cast<double>(n) * std::log(std::max(rss / static_cast<double>(n), 1e-300)) +
         static_cast<double>(dof) * std::log(static_cast<double>(n)) +
         2.0 * ebic_gamma * static_cast<double>(dof) * std::log(static_cast<double>(k));
}

inline EquationSelection select_support(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                                        const LassoConfig& cfg) {
  const Eigen::Index n = X.rows();
  const auto path = lasso_path(X, y, cfg);
  const Eigen::VectorXd yc = y.array() - y.mean();

  EquationSelection best;
  double best_score = std::numeric_limits<double>::infinity();

  if (cfg.selection == LambdaSelection::bic) {
    for (const auto& pt : path) {
      std::vector<Eigen::Index> sup;
      for (Eigen::Index j = 0; j < pt.coef.size(); ++j)
        if (pt.coef(j) != 0.0) sup.push_back(j);
      if (static_cast<Eigen::Index>(sup.size()) >= n / 3) continue;
      double rss;
      if (sup.empty()) {
        rss = yc.squaredNorm();
      } else {
        Eigen::MatrixXd Xsup(n, sup.size());
        for (std::size_t s = 0; s < sup.size(); ++s)
          Xsup.col(s) = X.col(sup[s]).array() - X.col(sup[s]).mean();
        const Eigen::VectorXd b = Xsup.colPivHouseholderQr().solve(yc);
        rss = (yc - Xsup * b).squaredNorm();
      }
      const double score =
          bic_score(rss, n, static_cast<Eigen::Index>(sup.size()), X.cols(), cfg.ebic_gamma);
      if (score < best_score) {
        best_score = score;
        best.support = sup;
        best.lambda = pt.lambda;
      }
    }
  } else {
    // K-fold CV on contiguous blocks (time order preserved inside folds).
    std::vector<double> cv_err(path.size(), 0.0);
    const int K = std::max(cfg.cv_folds, 2);
    for (int fold = 0; fold < K; ++fold) {
      const Eigen::Index lo = n * fold / K, hi = n * (fold + 1) / K;
      const Eigen::Index ntr = n - (hi - lo);
      Eigen::MatrixXd Xtr(ntr, X.cols());
      Eigen::VectorXd ytr(ntr);
      Eigen::Index r = 0;
      for (Eigen::Index t = 0; t < n; ++t)
        if (t < lo || t >= hi) {
          Xtr.row(r) = X.row(t);
          ytr(r++) = y(t);
        }
      const auto fold_path = lasso_path(Xtr, ytr, cfg);
      for (std::size_t i = 0; i < fold_path.size() && i < path.size(); ++i) {
        const double icpt = ytr.mean();
        for (Eigen::Index t = lo; t < hi; ++t) {
          double pred = icpt;
          for (Eigen::Index j = 0; j < X.cols(); ++j)
            pred += fold_path[i].coef(j) * (X(t, j) - Xtr.col(j).mean());
          cv_err[i] += (y(t) - pred) * (y(t) - pred);
        }
      }
    }
    for (std::size_t i = 0; i < path.size(); ++i) {
      std::vector<Eigen::Index> sup;
      for (Eigen::Index j = 0; j < path[i].coef.size(); ++j)
        if (path[i].coef(j) != 0.0) sup.push_back(j);
      if (static_cast<Eigen::Index>(sup.size()) >= n / 3) continue;
      if (cv_err[i] < best_score) {
        best_score = cv_err[i];
        best.support = sup;
        best.lambda = path[i].lambda;
      }
    }
  }
  if (!std::isfinite(best_score) && best_score > 0.0)
    throw std::domain_error(
        "fit_scau: no lambda on the grid keeps the support below n/3; "
        "increase lambda or supply more data");
  return best;
}

}  // namespace detail

inline ScauFit fit_scau(const MappedTensor& Z, int p, const LassoConfig& cfg) {
  cfg.validate();
  const Eigen::Index nodes = Z.values.rows();
  const Eigen::Index n = Z.values.cols();
  if (n <= p + 10) throw std::invalid_argument("fit_scau: series too short");

  Eigen::MatrixXd y = Z.values;
  for (Eigen::Index r = 0; r < nodes; ++r) y.row(r).array() -= y.row(r).mean();

  const Eigen::MatrixXd X = detail::lagged_design(y, p);
  const Eigen::MatrixXd Y = y.rightCols(n - p).transpose();
  const Eigen::Index n_eff = X.rows();

  ScauFit fit;
  fit.p = p;
  fit.m = static_cast<int>(Z.channels());
  fit.channel_labels = Z.channel_labels;
  fit.band_labels = Z.band_labels;
  fit.n_used = n_eff;
  fit.Phi.assign(p, Eigen::MatrixXd::Zero(nodes, nodes));
  fit.support.assign(p, Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(
                            nodes, nodes, false));
  fit.std_err.assign(p, Eigen::MatrixXd::Zero(nodes, nodes));
  fit.lambda_used = Eigen::VectorXd::Zero(nodes);
  Eigen::MatrixXd resid(n_eff, nodes);

  for (Eigen::Index i = 0; i < nodes; ++i) {
    const Eigen::VectorXd yi = Y.col(i);
    const auto sel = detail::select_support(X, yi, cfg);
    if (static_cast<Eigen::Index>(sel.support.size()) >= n_eff / 3)
      throw std::domain_error("fit_scau: selected support exceeds n/3 for equation " +
                              std::to_string(i) + "; increase lambda or supply more data");
    fit.lambda_used(i) = sel.lambda;
    if (sel.support.empty()) {
      resid.col(i) = yi.array() - yi.mean();
      continue;
    }
    Eigen::MatrixXd Xsup(n_eff, sel.support.size());
    for (std::size_t s = 0; s < sel.support.size(); ++s) Xsup.col(s) = X.col(sel.support[s]);
    const Eigen::VectorXd yc = yi.array() - yi.mean();
    Eigen::MatrixXd Xc = Xsup;
    for (Eigen::Index s = 0; s < Xc.cols(); ++s) Xc.col(s).array() -= Xc.col(s).mean();
    const Eigen::VectorXd b = Xc.colPivHouseholderQr().solve(yc);
    const Eigen::VectorXd r = yc - Xc * b;
    resid.col(i) = r;
    const Eigen::Index dof = n_eff - static_cast<Eigen::Index>(sel.support.size()) - 1;
    const double sigma2 = r.squaredNorm() / static_cast<double>(std::max<Eigen::Index>(dof, 1));
    const Eigen::MatrixXd cov =
        sigma2 * (Xc.transpose() * Xc)
                     .ldlt()
                     .solve(Eigen::MatrixXd::Identity(Xc.cols(), Xc.cols()));
    for (std::size_t s = 0; s < sel.support.size(); ++s) {
      const Eigen::Index col = sel.support[s];
      const int l = static_cast<int>(col / nodes);
      const Eigen::Index src = col % nodes;
      fit.Phi[l](i, src) = b(static_cast<Eigen::Index>(s));
      fit.support[l](i, src) = true;
      fit.std_err[l](i, src) = std::sqrt(std::max(cov(s, s), 0.0));
    }
  }
  fit.Sigma = resid.transpose() * resid / static_cast<double>(n_eff);
  return fit;
}

// Sparse triplet JSON: (target_channel, target_band, source_channel,
// source_band, lag, value, se).
inline nlohmann::json scau_to_json(const ScauFit& fit) {
  const Eigen::Index nb = static_cast<Eigen::Index>(fit.band_labels.size());
  nlohmann::json entries = nlohmann::json::array();
  for (int l = 0; l < fit.p; ++l)
    for (Eigen::Index i = 0; i < fit.Phi[l].rows(); ++i)
      for (Eigen::Index j = 0; j < fit.Phi[l].cols(); ++j)
        if (fit.support[l](i, j))
          entries.push_back({{"i", fit.channel_labels[i / nb]},
                             {"psi_i", fit.band_labels[i % nb]},
                             {"j", fit.channel_labels[j / nb]},
                             {"psi_j", fit.band_labels[j % nb]},
                             {"lag", l + 1},
                             {"value", fit.Phi[l](i, j)},
                             {"se", fit.std_err[l](i, j)}});
  return nlohmann::json{{"order", fit.p},
                        {"channels", fit.channel_labels},
                        {"bands", fit.band_labels},
                        {"n_used", fit.n_used},
                        {"support_density", fit.support_density()},
                        {"coefficients", entries}};
}

inline ScauFit scau_from_json(const nlohmann::json& j) {
  ScauFit fit;
  fit.p = j.at("order").get<int>();
  fit.channel_labels = j.at("channels").get<std::vector<std::string>>();
  fit.band_labels = j.at("bands").get<std::vector<std::string>>();
  fit.m = static_cast<int>(fit.channel_labels.size());
  fit.n_used = j.value("n_used", 0);
  const Eigen::Index nodes = fit.nodes();
  const Eigen::Index nb = static_cast<Eigen::Index>(fit.band_labels.size());
  fit.Phi.assign(fit.p, Eigen::MatrixXd::Zero(nodes, nodes));
  fit.support.assign(fit.p, Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(
                                nodes, nodes, false));
  fit.std_err.assign(fit.p, Eigen::MatrixXd::Zero(nodes, nodes));
  fit.lambda_used = Eigen::VectorXd::Zero(nodes);
  auto index_of = [](const std::vector<std::string>& v, const std::string& s) {
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] == s) return static_cast<Eigen::Index>(i);
    throw std::invalid_argument("scau_from_json: unknown label '" + s + "'");
  };
  for (const auto& e : j.at("coefficients")) {
    const Eigen::Index i = index_of(fit.channel_labels, e.at("i").get<std::string>()) * nb +
                           index_of(fit.band_labels, e.at("psi_i").get<std::string>());
    const Eigen::Index s = index_of(fit.channel_labels, e.at("j").get<std::string>()) * nb +
                           index_of(fit.band_labels, e.at("psi_j").get<std::string>());
    const int l = e.at("lag").get<int>() - 1;
    fit.Phi[l](i, s) = e.at("value").get<double>();
    fit.support[l](i, s) = true;
    fit.std_err[l](i, s) = e.value("se", 0.0);
  }
  return fit;
}

}  // namespace scau
