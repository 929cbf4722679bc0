#include <doctest.h>

#include <filesystem>
#include <numbers>
#include <set>

#include "oracle.hpp"
#include "shadowphase/eigensolver.hpp"
#include "shadowphase/features.hpp"
#include "shadowphase/hamiltonians.hpp"

using namespace shadowphase;

TEST_CASE("chain observable sets") {
  CHECK(annni_observables(3).size() == 9);
  CHECK(annni_observables(12).size() == 63);
  const ObservableSet s = annni_observables(4);
  REQUIRE(s.size() == 15);
  const std::vector<std::string> head{"xx_1_2", "yy_1_2", "zz_1_2", "xx_2_3"};
  CHECK(std::vector<std::string>(s.names.begin(), s.names.begin() + 4) == head);
  CHECK(s.names[9] == "xx_1_3");
  CHECK(s.names[14] == "zz_2_4");
  CHECK(s.observables[14].str() == "IZIZ");
  CHECK(s.locality == 2);
  CHECK(s.budget_count == 15);
  for (const auto& p : s.observables) CHECK(p.weight() == 2);
  CHECK_THROWS_AS(annni_observables(2), FeatureError);
  CHECK(annni_observables(7).names == annni_observables(7).names);
}

TEST_CASE("ladder quadrant sets") {
  const ObservableSet s4 = kh_quadrant_observables(4);
  CHECK(s4.size() == 48);
  CHECK(s4.budget_count == 18);
  const ObservableSet s6 = kh_quadrant_observables(6);
  CHECK(s6.size() == 78);
  CHECK(s6.budget_count == 30);
  std::set<std::string> unique(s6.names.begin(), s6.names.end());
  CHECK(unique.size() == s6.size());
  for (const auto& p : s6.observables) CHECK(p.weight() == 2);
  CHECK_THROWS(kh_quadrant_observables(5));
}

TEST_CASE("plaquette string") {
  const PauliString p = plaquette_observable(6, 1);
  CHECK(p.weight() == 6);
  int counts[4] = {0, 0, 0, 0};
  for (Pauli l : p.labels()) ++counts[static_cast<int>(l)];
  CHECK(counts[1] == 2);
  CHECK(counts[2] == 2);
  CHECK(counts[3] == 2);
  // Rungs 1..3 of leg 1 are sites 0..2, of leg 2 sites 6..8.
  CHECK(p.str() == "YZXIIIXZYIII");
  CHECK_THROWS_AS(plaquette_observable(6, 5), FeatureError);
  CHECK_NOTHROW(plaquette_observable(6, 4));

  const oracle::Mat P = oracle::string_op(p.str());
  CHECK((P * P - oracle::Mat::Identity(P.rows(), P.cols())).norm() < 1e-12);
}

TEST_CASE("plaquette commutes with the ladder Hamiltonian at the Kitaev points") {
  const PauliString p = plaquette_observable(4, 1);
  const oracle::Mat P = oracle::string_op(p.str());
  for (double phi : {std::numbers::pi / 2, 1.5 * std::numbers::pi}) {
    const oracle::Mat H = oracle::kitaev_heisenberg(4, phi);
    CHECK((H * P - P * H).norm() < 1e-10);
  }
  const oracle::Mat H = oracle::kitaev_heisenberg(4, std::numbers::pi);
  CHECK((H * P - P * H).norm() > 1e-3);
}

TEST_CASE("plaquette flux is order unity in the spin liquid and small in the ferromagnet") {
  const PauliString p = plaquette_observable(6, 1);
  const double fk = ground_pauli_expectation(ground_space(build_kitaev_heisenberg({6, 1.5 * std::numbers::pi})), p);
  const double fm = ground_pauli_expectation(ground_space(build_kitaev_heisenberg({6, std::numbers::pi})), p);
  CHECK(std::abs(fk) > 0.9);
  CHECK(std::abs(fm) < 0.1);
}

TEST_CASE("ferromagnetic corner has strong zz correlations") {
  const GroundSpace gs = ground_space(build_annni({12, 0.1, 0.1}));
  const ObservableSet s = annni_observables(12);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s.names[i].starts_with("zz")) CHECK(ground_pauli_expectation(gs, s.observables[i]) >= 0.8);
  }
}

TEST_CASE("rung correlators are negative in the rung-singlet phase") {
  const GroundSpace gs = ground_space(build_kitaev_heisenberg({6, 0.0}));
  const ObservableSet s = kh_quadrant_observables(6);
  int rungs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const auto sup = s.observables[i].support();
    if (sup[1] - sup[0] == 6) {
      ++rungs;
      CHECK(ground_pauli_expectation(gs, s.observables[i]) < 0.0);
    }
  }
  CHECK(rungs == 18);
}

TEST_CASE("feature matrix assembly") {
  const ObservableSet s = annni_observables(3);
  std::vector<FeatureRow> rows;
  rows.push_back({{0.5, 0.1}, std::vector<double>(9, 0.25), std::vector<double>(9, 0.2), 7, 100});
  rows.push_back({{0.0, 0.3}, std::vector<double>(9, -0.125), {}, 8, 100});
  CHECK_THROWS_AS(assemble_feature_matrix(s, {"k", "g"}, rows, 3, 0.1), FeatureError);
  rows[1].exact = std::vector<double>(9, 0.0);
  const FeatureMatrix fm = assemble_feature_matrix(s, {"k", "g"}, rows, 3, 0.1);
  CHECK(fm.row_count() == 2);
  CHECK(fm.column_count() == 9);
  CHECK(fm.rows[0].params == std::vector<double>{0.0, 0.3});
  CHECK(fm.has_exact());

  std::vector<FeatureRow> single{{{0.1, 0.1}, std::vector<double>(9, 0.0), {}, 1, 1}};
  CHECK(assemble_feature_matrix(s, {"k", "g"}, single, 3, 0.1).row_count() == 1);
  CHECK_THROWS_AS(assemble_feature_matrix(s, {"k", "g"}, {}, 3, 0.1), FeatureError);
  std::vector<FeatureRow> bad{{{0.1, 0.1}, std::vector<double>(8, 0.0), {}, 1, 1}};
  CHECK_THROWS_AS(assemble_feature_matrix(s, {"k", "g"}, bad, 3, 0.1), FeatureError);

  const std::string csv = feature_csv(fm);
  CHECK(csv.starts_with("k,g,xx_1_2,yy_1_2,zz_1_2,"));
  CHECK(csv.find("\n0,0.3,-0.125,") != std::string::npos);

  const auto dir = std::filesystem::temp_directory_path() / "shadowphase_features_test";
  std::filesystem::remove_all(dir);
  write_feature_files(dir, fm);
  const FeatureMatrix back = read_feature_files(dir);
  CHECK(back.columns == fm.columns);
  CHECK(back.param_names == fm.param_names);
  REQUIRE(back.row_count() == 2);
  CHECK(back.rows[1].values == fm.rows[1].values);
  CHECK(back.rows[1].exact == fm.rows[1].exact);
  CHECK(back.rows[1].seed == 7);
  CHECK(feature_csv(back) == csv);
  std::filesystem::remove_all(dir);
}

TEST_CASE("double formatting round trips") {
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(-2.0) == "-2");
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
}
