#include <catch2/catch_amalgamated.hpp>

#include "scau/connectivity.hpp"
#include "scau/filters.hpp"
#include "scau/lassle.hpp"
#include "scau/varfit.hpp"

using namespace scau;

// These tests pin the JSON field names that the command-line tool (and any
// downstream consumer) relies on when reading artifacts back from disk.

namespace {

ScauFit small_scau_fit() {
  std::vector<Eigen::MatrixXd> Phi{Eigen::MatrixXd::Zero(2, 2)};
  Phi[0].diagonal().setConstant(0.4);
  const auto y = simulate_var(Phi, Eigen::MatrixXd::Identity(2, 2), 1500, 3);
  MappedTensor Z;
  Z.channel_labels = {"F1", "F2"};
  Z.band_labels = {"delta"};
  Z.fs = 200.0;
  Z.fi = 20.0;
  Z.values = y;
  return fit_scau(Z, 1, LassoConfig{});
}

}  // namespace

TEST_CASE("sparse and dense fit documents are distinguishable", "[cli_io]") {
  const nlohmann::json sparse = scau_to_json(small_scau_fit());
  CHECK(sparse.contains("coefficients"));

  const auto y = simulate_var({0.3 * Eigen::MatrixXd::Identity(2, 2)},
                              Eigen::MatrixXd::Identity(2, 2), 1000, 5);
  const nlohmann::json dense = varfit_to_json(fit_var(y, 1, {"F1", "F2"}));
  // the CLI keys model autodetection off this field
  CHECK_FALSE(dense.contains("coefficients"));
  CHECK(dense.contains("phi"));
}

TEST_CASE("sparse fit document schema", "[cli_io]") {
  const nlohmann::json j = scau_to_json(small_scau_fit());
  for (const char* key : {"order", "channels", "bands", "n_used", "support_density"})
    CHECK(j.contains(key));
  REQUIRE(j.at("coefficients").is_array());
  REQUIRE_FALSE(j.at("coefficients").empty());
  const auto& e = j.at("coefficients").front();
  for (const char* key : {"i", "psi_i", "j", "psi_j", "lag", "value", "se"})
    CHECK(e.contains(key));
  CHECK(e.at("lag").get<int>() >= 1);  // lags are one-based on disk
}

TEST_CASE("dense fit document schema", "[cli_io]") {
  const auto y = simulate_var({0.3 * Eigen::MatrixXd::Identity(2, 2)},
                              Eigen::MatrixXd::Identity(2, 2), 1000, 7);
  const nlohmann::json j = varfit_to_json(fit_var(y, 1, {"F1", "F2"}));
  for (const char* key : {"order", "m", "labels", "n_used", "phi", "std_err", "sigma"})
    CHECK(j.contains(key));
  CHECK(j.at("phi").is_array());
  CHECK(j.at("phi").size() == 1);          // one matrix per lag
  CHECK(j.at("phi")[0].size() == 2);       // rows
  CHECK(j.at("phi")[0][0].size() == 2);    // columns
}

TEST_CASE("network document schema", "[cli_io]") {
  FlowMatrix ca, cb;
  ca.labels = cb.labels = {"delta@F1", "delta@F2"};
  ca.I = Eigen::MatrixXd::Constant(2, 2, 0.2);
  cb.I = Eigen::MatrixXd::Constant(2, 2, 0.1);
  const nlohmann::json j = network_to_json(contrast(ca, cb, {"F1", "F2"}, {"delta"}));
  for (const char* key : {"level", "channels", "bands", "rows", "cols", "edges"})
    CHECK(j.contains(key));
  const auto& e = j.at("edges").front();
  for (const char* key : {"source", "target", "c_a", "c_b", "d"}) CHECK(e.contains(key));
  CHECK(j.at("level") == "FC2FC");
}

TEST_CASE("flow document schema", "[cli_io]") {
  FlowMatrix fm;
  fm.labels = {"a", "b"};
  fm.I = Eigen::MatrixXd::Identity(2, 2) * 0.5;
  const nlohmann::json j = flow_to_json(fm);
  CHECK(j.contains("labels"));
  CHECK(j.contains("I"));
  CHECK(j.at("I").size() == 2);
}

TEST_CASE("filter spec JSON accepts the single-cutoff alias", "[cli_io]") {
  const nlohmann::json j = {{"kind", "lowpass"}, {"f_c", 4.0}, {"f_s", 200.0}};
  const FilterSpec s = j.get<FilterSpec>();
  CHECK(s.f_c1 == 4.0);
  CHECK(s.order == 3);
  CHECK(s.stages == 3);
  CHECK(s.prewarp_constant == 2.0);
  CHECK_FALSE(s.paper_literal);
}

TEST_CASE("serialized doubles survive a text round trip bit-exactly", "[cli_io]") {
  FlowMatrix fm;
  fm.labels = {"a", "b"};
  fm.I.resize(2, 2);
  fm.I << 1.0 / 3.0, 0.1, -2.0e-17, 3.141592653589793;
  const std::string text = flow_to_json(fm).dump(2);
  const FlowMatrix back = flow_from_json(nlohmann::json::parse(text));
  CHECK((back.I - fm.I).cwiseAbs().maxCoeff() == 0.0);
  // and the text itself is stable across a second pass
  CHECK(flow_to_json(back).dump(2) == text);
}

TEST_CASE("network CSV uses full precision", "[cli_io]") {
  ContrastNetwork net;
  net.row_labels = {"a"};
  net.col_labels = {"a"};
  net.c_a = Eigen::MatrixXd::Constant(1, 1, 1.0 / 3.0);
  net.c_b = Eigen::MatrixXd::Constant(1, 1, 0.0);
  net.d = Eigen::MatrixXd::Constant(1, 1, 100.0 / 3.0);
  const std::string csv = network_to_csv(net);
  CHECK(csv.find("0.33333333333333331") != std::string::npos);
}
