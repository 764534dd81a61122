#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "scau/lassle.hpp"

using namespace scau;

namespace {

// Mapped tensor wrapper around an arbitrary node x time matrix.
MappedTensor wrap_tensor(const Eigen::MatrixXd& values,
                         std::vector<std::string> channels,
                         std::vector<std::string> bands) {
  MappedTensor t;
  t.channel_labels = std::move(channels);
  t.band_labels = std::move(bands);
  t.fs = 200.0;
  t.fi = 20.0;
  t.values = values;
  return t;
}

double lasso_objective(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                       const Eigen::VectorXd& w, double lambda) {
  // objective in the standardized coordinates used by the solver
  const Eigen::Index n = X.rows();
  Eigen::VectorXd yc = y.array() - y.mean();
  Eigen::VectorXd pred = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd ws = w;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    Eigen::VectorXd col = X.col(j).array() - X.col(j).mean();
    const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n));
    pred += col * w(j);
    ws(j) = w(j) * sd;
  }
  return 0.5 * (yc - pred).squaredNorm() / static_cast<double>(n) +
         lambda * ws.cwiseAbs().sum();
}

}  // namespace

TEST_CASE("orthonormal design reduces the solution to soft thresholding", "[lassle]") {
  // Columns from a scaled DFT-like basis: exactly orthogonal, unit second moment.
  const Eigen::Index n = 64;
  Eigen::MatrixXd X(n, 3);
  for (Eigen::Index t = 0; t < n; ++t) {
    const double u = 2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(n);
    X(t, 0) = std::sqrt(2.0) * std::cos(u);
    X(t, 1) = std::sqrt(2.0) * std::cos(2.0 * u);
    X(t, 2) = std::sqrt(2.0) * std::sin(3.0 * u);
  }
  const Eigen::Vector3d beta(1.0, -0.3, 0.05);
  const Eigen::VectorXd y = X * beta;

  LassoConfig cfg;
  cfg.lambda_grid = {0.1};
  const auto path = lasso_path(X, y, cfg);
  REQUIRE(path.size() == 1);
  // soft-threshold oracle per coordinate
  CHECK(path[0].coef(0) == Catch::Approx(0.9).margin(1e-5));
  CHECK(path[0].coef(1) == Catch::Approx(-0.2).margin(1e-5));
  CHECK(path[0].coef(2) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("the solution satisfies the KKT conditions", "[lassle]") {
  std::mt19937_64 rng(17);
  std::normal_distribution<double> gauss;
  const Eigen::Index n = 400, k = 8;
  Eigen::MatrixXd X(n, k);
  Eigen::VectorXd y(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index j = 0; j < k; ++j) X(t, j) = gauss(rng);
    y(t) = 0.8 * X(t, 0) - 0.5 * X(t, 3) + 0.3 * gauss(rng);
  }
  const double lambda = 0.05;
  LassoConfig cfg;
  cfg.lambda_grid = {lambda};
  cfg.tol = 1e-10;
  cfg.max_iter = 10000;
  const auto path = lasso_path(X, y, cfg);

  // reconstruct the standardized problem and check stationarity
  Eigen::VectorXd yc = y.array() - y.mean();
  for (Eigen::Index j = 0; j < k; ++j) {
    Eigen::VectorXd col = X.col(j).array() - X.col(j).mean();
    const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(n));
    col /= sd;
    // residual of the full fit
    Eigen::VectorXd r = yc;
    for (Eigen::Index jj = 0; jj < k; ++jj) {
      Eigen::VectorXd cc = X.col(jj).array() - X.col(jj).mean();
      r -= cc * path[0].coef(jj);
    }
    const double grad = col.dot(r) / static_cast<double>(n);
    const double w_std = path[0].coef(j) * sd;
    if (w_std == 0.0) {
      CHECK(std::abs(grad) <= lambda + 1e-6);
    } else {
      CHECK(grad == Catch::Approx(lambda * (w_std > 0 ? 1.0 : -1.0)).margin(1e-6));
    }
  }
}

TEST_CASE("more iterations never increase the objective", "[lassle]") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> gauss;
  const Eigen::Index n = 200, k = 12;
  Eigen::MatrixXd X(n, k);
  Eigen::VectorXd y(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (Eigen::Index j = 0; j < k; ++j) X(t, j) = gauss(rng);
    y(t) = X(t, 1) - X(t, 5) + gauss(rng);
  }
  const double lambda = 0.02;
  double prev = std::numeric_limits<double>::infinity();
  for (int iters : {1, 2, 5, 20, 200}) {
    LassoConfig cfg;
    cfg.lambda_grid = {lambda};
    cfg.max_iter = iters;
    cfg.tol = 1e-300;  // effectively run max_iter full sweeps
    const auto path = lasso_path(X, y, cfg);
    const double obj = lasso_objective(X, y, path[0].coef, lambda);
    CHECK(obj <= prev + 1e-12);
    prev = obj;
  }
}

TEST_CASE("config validation rejects bad grids and tolerances", "[lassle]") {
  LassoConfig cfg;
  cfg.tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.tol = 1e-7;
  cfg.lambda_grid = {0.1, 0.2};  // ascending
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.lambda_grid = {0.2, -0.1};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.lambda_grid = {0.2, 0.1};
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("zero-variance columns are dropped and pinned to zero", "[lassle]") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> gauss;
  const Eigen::Index n = 100;
  Eigen::MatrixXd X(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    X(t, 0) = gauss(rng);
    X(t, 1) = 2.5;  // constant
    X(t, 2) = gauss(rng);
    y(t) = X(t, 0) + 0.1 * gauss(rng);
  }
  LassoConfig cfg;
  cfg.lambda_grid = {0.01};
  std::vector<int> dropped;
  const auto path = lasso_path(X, y, cfg, &dropped);
  REQUIRE(dropped == std::vector<int>{1});
  CHECK(path[0].coef(1) == 0.0);
  CHECK(path[0].coef(0) == Catch::Approx(1.0).margin(0.05));
}

TEST_CASE("non-finite inputs are rejected", "[lassle]") {
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(10, 2);
  Eigen::VectorXd y = Eigen::VectorXd::Random(10);
  X(4, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(lasso_path(X, y, LassoConfig{}), std::invalid_argument);
}

TEST_CASE("fit_scau recovers a sparse cross-node structure", "[lassle]") {
  // 4 nodes (2 channels x 2 bands), diagonal 0.4 plus one cross edge
  std::vector<Eigen::MatrixXd> Phi{Eigen::MatrixXd::Zero(4, 4)};
  Phi[0].diagonal().setConstant(0.4);
  Phi[0](2, 0) = 0.35;  // node 0 drives node 2
  const auto y = simulate_var(Phi, Eigen::MatrixXd::Identity(4, 4), 4000, 11);
  const MappedTensor Z = wrap_tensor(y, {"c1", "c2"}, {"b1", "b2"});

  LassoConfig cfg;
  const ScauFit fit = fit_scau(Z, 2, cfg);
  REQUIRE(fit.p == 2);
  REQUIRE(fit.nodes() == 4);
  for (int i = 0; i < 4; ++i) {
    CHECK(fit.support[0](i, i));
    CHECK(fit.Phi[0](i, i) == Catch::Approx(0.4).margin(0.08));
    CHECK(fit.std_err[0](i, i) > 0.0);
  }
  CHECK(fit.support[0](2, 0));
  CHECK(fit.Phi[0](2, 0) == Catch::Approx(0.35).margin(0.08));
  // the structure stays sparse: well under half the possible entries
  CHECK(fit.support_density() < 0.5);
  CHECK(fit.lambda_used.minCoeff() > 0.0);
  CHECK(fit.node_label(0) == "b1@c1");
  CHECK(fit.node_label(3) == "b2@c2");
}

TEST_CASE("off-support coefficients are exactly zero", "[lassle]") {
  std::vector<Eigen::MatrixXd> Phi{0.3 * Eigen::MatrixXd::Identity(3, 3)};
  const auto y = simulate_var(Phi, Eigen::MatrixXd::Identity(3, 3), 2000, 5);
  MappedTensor Z = wrap_tensor(y, {"c1", "c2", "c3"}, {"b1"});
  const ScauFit fit = fit_scau(Z, 1, LassoConfig{});
  for (Eigen::Index i = 0; i < 3; ++i)
    for (Eigen::Index j = 0; j < 3; ++j)
      if (!fit.support[0](i, j)) {
        CHECK(fit.Phi[0](i, j) == 0.0);
        CHECK(fit.std_err[0](i, j) == 0.0);
      }
}

TEST_CASE("a grid with no admissible lambda raises the support-cap error", "[lassle]") {
  // 6 nodes, order 2 -> 12 regressors; with n_eff = 38 the cap n/3 = 12 is hit
  // by the fully dense solution that a vanishing lambda produces.
  std::mt19937_64 rng(41);
  std::normal_distribution<double> gauss;
  Eigen::MatrixXd y(6, 40);
  for (Eigen::Index r = 0; r < 6; ++r)
    for (Eigen::Index t = 0; t < 40; ++t) y(r, t) = gauss(rng);
  MappedTensor Z = wrap_tensor(y, {"c1", "c2", "c3"}, {"b1", "b2"});
  LassoConfig cfg;
  cfg.lambda_grid = {1e-12};
  CHECK_THROWS_WITH(fit_scau(Z, 2, cfg),
                    Catch::Matchers::ContainsSubstring("increase lambda"));
}

TEST_CASE("cv selection also finds the sparse truth", "[lassle]") {
  std::vector<Eigen::MatrixXd> Phi{Eigen::MatrixXd::Zero(3, 3)};
  Phi[0].diagonal().setConstant(0.5);
  Phi[0](1, 0) = 0.4;
  const auto y = simulate_var(Phi, Eigen::MatrixXd::Identity(3, 3), 3000, 19);
  MappedTensor Z = wrap_tensor(y, {"c1", "c2", "c3"}, {"b1"});
  LassoConfig cfg;
  cfg.selection = LambdaSelection::cv;
  const ScauFit fit = fit_scau(Z, 1, cfg);
  CHECK(fit.support[0](1, 0));
  CHECK(fit.Phi[0](1, 0) == Catch::Approx(0.4).margin(0.08));
}

TEST_CASE("scau JSON round trip preserves the sparse fit", "[lassle]") {
  std::vector<Eigen::MatrixXd> Phi{Eigen::MatrixXd::Zero(4, 4)};
  Phi[0].diagonal().setConstant(0.4);
  Phi[0](3, 1) = 0.3;
  const auto y = simulate_var(Phi, Eigen::MatrixXd::Identity(4, 4), 3000, 23);
  MappedTensor Z = wrap_tensor(y, {"c1", "c2"}, {"b1", "b2"});
  const ScauFit fit = fit_scau(Z, 2, LassoConfig{});
  const nlohmann::json j = scau_to_json(fit);
  CHECK(j.at("order") == 2);
  CHECK(j.at("channels").size() == 2);
  const ScauFit back = scau_from_json(j);
  CHECK(back.p == fit.p);
  CHECK(back.channel_labels == fit.channel_labels);
  CHECK(back.band_labels == fit.band_labels);
  for (int l = 0; l < fit.p; ++l) {
    CHECK((back.Phi[l] - fit.Phi[l]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.support[l].cast<int>() - fit.support[l].cast<int>()).cwiseAbs().maxCoeff() == 0);
    CHECK((back.std_err[l] - fit.std_err[l]).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("extended BIC is validated and never densifies the support", "[lassle]") {
  LassoConfig bad;
  bad.ebic_gamma = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  std::vector<Eigen::MatrixXd> Phi{Eigen::MatrixXd::Zero(6, 6)};
  Phi[0].diagonal().setConstant(0.35);
  Phi[0](2, 5) = 0.4;
  const auto y = simulate_var(Phi, Eigen::MatrixXd::Identity(6, 6), 800, 31);
  const MappedTensor Z = wrap_tensor(y, {"c1", "c2", "c3"}, {"b1", "b2"});

  LassoConfig plain, ext;
  ext.ebic_gamma = 1.0;
  const ScauFit f0 = fit_scau(Z, 1, plain);
  const ScauFit f1 = fit_scau(Z, 1, ext);
  // the extra penalty can only shrink the selected support
  CHECK(f1.support_density() <= f0.support_density());
  // the strong planted term survives the harsher selection
  CHECK(f1.support[0](2, 5));
  CHECK(f1.Phi[0](2, 5) == Catch::Approx(0.4).margin(0.1));
}
