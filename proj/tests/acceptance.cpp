// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.
//
// Usage: acceptance [--only N]... [--known-failure N]... [--scratch DIR]
// The exit status is nonzero when a criterion fails that was not declared a
// known failure; known failures still print FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "oracle.hpp"
#include "shadowphase/pipeline.hpp"

using namespace shadowphase;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path g_scratch = fs::temp_directory_path() / "shadowphase_acceptance";

// Shared expensive runs, computed on first use.
struct Runs {
  std::optional<AnnniSweep> annni_full;
  std::optional<KhSweep> kh;

  const AnnniSweep& annni() {
    if (!annni_full) {
      SweepConfig cfg;
      annni_full = run_annni_sweep(cfg);
    }
    return *annni_full;
  }
  const KhSweep& ladder() {
    if (!kh) {
      SweepConfig cfg;
      cfg.model = "kh";
      kh = run_kh_sweep(cfg);
    }
    return *kh;
  }
} runs;

// 1 -------------------------------------------------------------------------

Outcome shadow_unbiasedness() {
  const int n = 3;
  const std::int64_t T = 100000;
  std::vector<std::string> strings;
  const char labels[] = {'I', 'X', 'Y', 'Z'};
  for (int a = 0; a < 4; ++a)
    for (int b = 0; b < 4; ++b)
      for (int c = 0; c < 4; ++c) {
        const std::string s{labels[a], labels[b], labels[c]};
        const auto w = std::count_if(s.begin(), s.end(), [](char ch) { return ch != 'I'; });
        if (w >= 1 && w <= 2) strings.push_back(s);
      }

  std::mt19937_64 rng(2024);
  std::normal_distribution<double> gauss;
  int checked = 0, failed = 0;
  double worst = 0.0;
  for (int st = 0; st < 20; ++st) {
    Eigen::VectorXcd v(8);
    for (int i = 0; i < 8; ++i) v(i) = {gauss(rng), gauss(rng)};
    v.normalize();
    std::vector<cplx> amps(v.data(), v.data() + 8);
    const ShadowEnsemble ens = sample_snapshots(StateSource(StateVector(n, amps)), T, 1000 + st);

    for (const auto& s : strings) {
      // Per-snapshot terms, evaluated directly from the decoded snapshots.
      double sum = 0.0, sum_sq = 0.0;
      for (std::size_t m = 0; m < ens.size(); ++m) {
        const Snapshot snap = ens.at(m);
        double term = 1.0;
        for (int q = 0; q < n; ++q) {
          if (s[static_cast<std::size_t>(q)] == 'I') continue;
          if (to_char(snap.bases[static_cast<std::size_t>(q)]) != s[static_cast<std::size_t>(q)]) {
            term = 0.0;
            break;
          }
          term *= snap.outcomes[static_cast<std::size_t>(q)] ? -3.0 : 3.0;
        }
        sum += term;
        sum_sq += term * term;
      }
      const double mean = sum / static_cast<double>(T);
      const double var = (sum_sq / static_cast<double>(T) - mean * mean) * T / (T - 1.0);
      const double se = std::sqrt(var / static_cast<double>(T));
      const double exact = (v.adjoint() * oracle::string_op(s) * v)(0, 0).real();
      const double z = std::abs(mean - exact) / se;
      worst = std::max(worst, z);
      ++checked;
      if (z > 4.0) ++failed;
      if (std::abs(estimate_pauli(ens, PauliString::parse(s)) - mean) > 1e-12) ++failed;
    }
  }
  return {failed == 0, fmt("%d state/observable pairs, worst deviation %.2f standard errors", checked, worst)};
}

// 2 -------------------------------------------------------------------------

Outcome budget_arithmetic() {
  const auto a = snapshot_budget(63, 2, 0.1);
  const auto b = snapshot_budget(30, 2, 0.1);
  return {a == 14916 && b == 12245, fmt("budget(63)=%lld budget(30)=%lld", static_cast<long long>(a),
                                        static_cast<long long>(b))};
}

// 3 -------------------------------------------------------------------------

Outcome failure_proportion_n8() {
  SweepConfig cfg;
  cfg.failure.sizes = {8};
  cfg.failure.trials = 100;
  const auto series = run_failure_experiment(cfg);
  const FailureSeries& s = series.at(0);
  double mean = 0.0;
  int small = 0;
  const double limit = 2.0 / 63.0;
  for (double r : s.rho) {
    mean += r / static_cast<double>(s.rho.size());
    small += r <= limit + 1e-15;
  }
  return {mean < 0.05 && small >= 90,
          fmt("T=%lld, mean rho_fail=%.5f, %d/100 trials with rho_fail <= 2/63",
              static_cast<long long>(s.budget), mean, small)};
}

// 4 -------------------------------------------------------------------------

// Phase boundaries of the chain in the model's own units (g is half the
// field of the Pauli-normalized convention).
double ising_line(double k) {
  if (k <= 0.0) return 0.5;
  return 0.5 * ((1.0 - k) / k) * (1.0 - std::sqrt((1.0 - 3.0 * k + 4.0 * k * k) / (1.0 - k)));
}
double kt_line(double k) { return 0.5 * 1.05 * std::sqrt((k - 0.5) * (k - 0.1)); }
double pe_line(double k) { return 0.5 * 1.05 * (k - 0.5); }

std::string annni_region(double k, double g) {
  if (k < 0.5) return g < ising_line(k) ? "ferromagnetic" : "paramagnetic";
  if (k == 0.5) return "";
  if (g > kt_line(k)) return "paramagnetic";
  if (g < pe_line(k)) return "antiphase";
  return "floating";
}

double boundary_distance(double k, double g) {
  static const std::vector<std::pair<double, double>> curve = [] {
    std::vector<std::pair<double, double>> c;
    const int steps = 4000;
    for (int i = 0; i < steps; ++i) {
      const double k1 = 0.5 * i / steps;
      c.emplace_back(k1, ising_line(k1));
    }
    for (int i = 0; i <= steps; ++i) {
      const double k2 = 0.5 + 0.5 * i / steps;
      c.emplace_back(k2, kt_line(k2));
      c.emplace_back(k2, pe_line(k2));
    }
    return c;
  }();
  double best = 1e300;
  for (auto [ck, cg] : curve) best = std::min(best, std::hypot(k - ck, g - cg));
  return best;
}

Outcome annni_phase_diagram() {
  SweepConfig cfg;
  const AnnniSweep& sweep = runs.annni();
  PhaseMap map;
  try {
    map = classify_annni(sweep.features, cfg);
  } catch (const std::exception& e) {
    return {false, std::string("full budget: ") + e.what()};
  }
  std::map<std::string, std::pair<int, int>> tally;  // region -> (deep points, agreeing)
  for (std::size_t i = 0; i < map.points.size(); ++i) {
    const double k = map.points[i][0], g = map.points[i][1];
    const std::string region = annni_region(k, g);
    if (region.empty() || region == "floating" || boundary_distance(k, g) <= 0.15) continue;
    auto& t = tally[region];
    ++t.first;
    t.second += map.labels[i] == region;
  }
  bool ok = tally.size() == 3;
  std::string detail;
  for (const auto& [region, t] : tally) {
    const double frac = static_cast<double>(t.second) / t.first;
    ok = ok && frac >= 0.9;
    detail += fmt("%s %d/%d, ", region.c_str(), t.second, t.first);
  }

  SweepConfig smoke;
  smoke.budget_override = 2000;
  bool smoke_ok = true;
  try {
    classify_annni(run_annni_sweep(smoke).features, smoke);
  } catch (const std::exception& e) {
    smoke_ok = false;
    detail += std::string("smoke: ") + e.what() + ", ";
  }
  detail += smoke_ok ? "smoke T=2000 anchors separated" : "smoke anchors collided";
  return {ok && smoke_ok, "deep-region agreement " + detail};
}

// 5 -------------------------------------------------------------------------

Outcome plaquette_sweep() {
  const KhSweep& kh = runs.ladder();
  double worst = 0.0, at_pi = 0.0, at_1_5pi = 0.0;
  for (const auto& p : kh.plaquette) {
    worst = std::max(worst, std::abs(p.estimate - p.exact));
    if (std::abs(p.phi - std::numbers::pi) < 1e-9) at_pi = p.exact;
    if (std::abs(p.phi - 1.5 * std::numbers::pi) < 1e-9) at_1_5pi = p.exact;
  }
  const double ratio = std::abs(at_1_5pi) / std::max(std::abs(at_pi), 1e-300);
  return {worst <= 0.1 && ratio >= 3.0 && kh.plaquette.size() == 100,
          fmt("%zu points, %d rounds, max |estimate - exact| = %.4f, |W(1.5pi)| = %.4f, |W(pi)| = %.2e",
              kh.plaquette.size(), kh.plaquette_rounds, worst, std::abs(at_1_5pi), std::abs(at_pi))};
}

// 6 -------------------------------------------------------------------------

Outcome kh_classification() {
  SweepConfig cfg;
  cfg.model = "kh";
  const KhSweep& kh = runs.ladder();
  std::vector<double> plaq;
  for (const auto& p : kh.plaquette) plaq.push_back(p.estimate);
  PhaseMap map;
  try {
    map = classify_kh(kh.features, plaq, cfg);
  } catch (const std::exception& e) {
    return {false, e.what()};
  }
  std::optional<double> st_rs, zz_fm;
  for (const auto& t : detect_transitions(map)) {
    if (t.from == "ST" && t.to == "RS") st_rs = t.at / std::numbers::pi;
    if (t.from == "ZZ" && t.to == "FM") zz_fm = t.at / std::numbers::pi;
  }
  const bool ok = st_rs && zz_fm && std::abs(*st_rs - 1.7) <= 0.05 && std::abs(*zz_fm - 0.8) <= 0.12;
  return {ok, fmt("anchors in four clusters, ST->RS at %.3f pi, ZZ->FM at %.3f pi", st_rs.value_or(NAN),
                  zz_fm.value_or(NAN))};
}

// 7 -------------------------------------------------------------------------

Eigen::MatrixXd kh_ordered_oracle(std::vector<double>* phis = nullptr) {
  const KhSweep& kh = runs.ladder();
  SweepConfig cfg;
  FeatureMatrix ordered = kh.features;
  ordered.rows.clear();
  for (std::size_t i = 0; i < kh.plaquette.size(); ++i) {
    if (std::abs(kh.plaquette[i].exact) < cfg.plaquette_threshold) {
      ordered.rows.push_back(kh.features.rows[i]);
      if (phis) phis->push_back(kh.features.rows[i].params[0]);
    }
  }
  return feature_values(ordered, true);
}

Outcome elbow_recovery() {
  const Eigen::MatrixXd kh = kh_ordered_oracle();
  const auto kh_curve = elbow_curve(kh, 10, 1);
  const int kh_elbow = elbow_point(kh_curve);
  const auto an_curve = elbow_curve(feature_values(runs.annni().features, true), 10, 1);
  const double d4 = second_difference(an_curve, 4);
  const double d5 = second_difference(an_curve, 5);
  const double d6 = second_difference(an_curve, 6);
  return {kh_elbow == 4 && d4 > d5 && d4 > d6,
          fmt("ladder elbow at k=%d (d2=%.1f, d4=%.1f); chain d4=%.1f d5=%.1f d6=%.1f", kh_elbow,
              second_difference(kh_curve, 2), second_difference(kh_curve, 4), d4, d5, d6)};
}

// 8 -------------------------------------------------------------------------

Outcome h0_persistence_checks() {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> gauss;
  const double centres[3][2] = {{0.0, 0.0}, {40.0, 0.0}, {15.0, 35.0}};
  Eigen::MatrixXd X(150, 2);
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 50; ++i) X.row(50 * c + i) << centres[c][0] + gauss(rng), centres[c][1] + gauss(rng);
  const PersistenceDiagram d = h0_persistence(X);
  // All deaths in decreasing order, the essential class first.
  std::vector<double> deaths;
  for (const auto& p : d.pairs) deaths.push_back(p.death);
  std::sort(deaths.rbegin(), deaths.rend());
  const double fourth = deaths.at(3);
  const auto persistent = std::count_if(deaths.begin(), deaths.end(), [&](double x) { return x >= 5.0 * fourth; });
  const bool births_zero = std::all_of(d.pairs.begin(), d.pairs.end(), [](const auto& p) { return p.birth == 0.0; });

  // Kruskal with union-find on integer points, where every distance is
  // exactly representable up to the final square root.
  Eigen::MatrixXd P(50, 3);
  std::uniform_int_distribution<int> coord(0, 999);
  for (Eigen::Index i = 0; i < P.rows(); ++i) P.row(i) << coord(rng), coord(rng), coord(rng);
  struct Edge {
    double w;
    int a, b;
  };
  std::vector<Edge> edges;
  for (int a = 0; a < 50; ++a)
    for (int b = a + 1; b < 50; ++b) {
      double s = 0.0;
      for (int j = 0; j < 3; ++j) s += (P(a, j) - P(b, j)) * (P(a, j) - P(b, j));
      edges.push_back({std::sqrt(s), a, b});
    }
  std::sort(edges.begin(), edges.end(), [](const Edge& x, const Edge& y) { return x.w < y.w; });
  std::vector<int> parent(50);
  for (int i = 0; i < 50; ++i) parent[static_cast<std::size_t>(i)] = i;
  std::function<int(int)> find = [&](int x) {
    auto& p = parent[static_cast<std::size_t>(x)];
    return p == x ? x : p = find(p);
  };
  std::vector<double> mst;
  for (const Edge& e : edges) {
    const int ra = find(e.a), rb = find(e.b);
    if (ra != rb) {
      parent[static_cast<std::size_t>(ra)] = rb;
      mst.push_back(e.w);
    }
  }
  const auto lib = h0_persistence(P).finite_deaths();
  const bool mst_exact = lib == mst;
  return {persistent == 3 && births_zero && mst_exact && d.pairs.size() == 150,
          fmt("%lld classes outlive 5x the 4th largest death (%.3f); MST equivalence %s",
              static_cast<long long>(persistent), fourth, mst_exact ? "exact" : "BROKEN")};
}

// 9 -------------------------------------------------------------------------

Outcome pca_checks() {
  std::vector<double> phis;
  const Eigen::MatrixXd X = kh_ordered_oracle(&phis);
  const PcaResult two = pca(X, 2);
  const bool ordered = two.explained_variance_ratio(0) >= two.explained_variance_ratio(1);

  const Eigen::MatrixXd centered = X.rowwise() - X.colwise().mean();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered);
  const Eigen::VectorXd s = svd.singularValues();
  int rank = 0;
  while (rank < s.size() && s(rank) > 1e-10 * s(0)) ++rank;
  const PcaResult full = pca(X, rank);
  const double residual = (reconstruct(full) - X).cwiseAbs().maxCoeff();

  // Groups by the known phase windows, in units of pi.
  auto group = [](double phi) -> int {
    const double p = phi / std::numbers::pi;
    if (p < 0.48 || p >= 1.7) return 0;   // RS
    if (p >= 1.57) return 1;              // ST
    if (p >= 0.53 && p < 1.37) return 2;  // ZZ and FM together
    return -1;
  };
  Eigen::MatrixXd centroid = Eigen::MatrixXd::Zero(3, 2);
  Eigen::Vector3d spread = Eigen::Vector3d::Zero();
  Eigen::Vector3i count = Eigen::Vector3i::Zero();
  for (std::size_t i = 0; i < phis.size(); ++i) {
    const int gidx = group(phis[i]);
    if (gidx < 0) continue;
    centroid.row(gidx) += two.projections.row(static_cast<Eigen::Index>(i));
    ++count(gidx);
  }
  for (int gidx = 0; gidx < 3; ++gidx) centroid.row(gidx) /= std::max(1, count(gidx));
  for (std::size_t i = 0; i < phis.size(); ++i) {
    const int gidx = group(phis[i]);
    if (gidx < 0) continue;
    spread(gidx) += (two.projections.row(static_cast<Eigen::Index>(i)) - centroid.row(gidx)).squaredNorm();
  }
  for (int gidx = 0; gidx < 3; ++gidx) spread(gidx) = std::sqrt(spread(gidx) / std::max(1, count(gidx)));
  // Two groups are distinct when their centroids lie further apart than twice
  // the spread of the difference between one point from each group.
  bool distinct = count.minCoeff() > 0;
  double worst_margin = 1e300, worst_sum_margin = 1e300;
  for (int a = 0; a < 3; ++a)
    for (int b = a + 1; b < 3; ++b) {
      const double dist = (centroid.row(a) - centroid.row(b)).norm();
      const double margin = dist / (2.0 * std::hypot(spread(a), spread(b)));
      worst_margin = std::min(worst_margin, margin);
      worst_sum_margin = std::min(worst_sum_margin, dist / (2.0 * (spread(a) + spread(b))));
      distinct = distinct && margin > 1.0;
    }
  return {ordered && residual < 1e-8 && distinct,
          fmt("ratios %.3f >= %.3f, rank %d residual %.1e, closest RS/ST/FM-group centroids %.2fx apart "
              "relative to 2 combined sigma (%.2fx relative to 2 summed sigma)",
              two.explained_variance_ratio(0), two.explained_variance_ratio(1), rank, residual, worst_margin,
              worst_sum_margin)};
}

// 10 ------------------------------------------------------------------------

Outcome determinism() {
  SweepConfig smoke;
  smoke.budget_override = 2000;
  std::vector<fs::path> dirs{g_scratch / "smoke_a", g_scratch / "smoke_b"};
  for (const auto& dir : dirs) {
    fs::remove_all(dir);
    const AnnniSweep s = run_annni_sweep(smoke);
    write_annni_sweep(dir, smoke, s);
    write_phase_map(dir, classify_annni(s.features, smoke));
  }
  int compared = 0;
  for (const auto& entry : fs::directory_iterator(dirs[0])) {
    if (entry.path().extension() != ".csv") continue;
    ++compared;
    if (read_text_file(entry.path()) != read_text_file(dirs[1] / entry.path().filename())) {
      return {false, "differs: " + entry.path().filename().string()};
    }
  }
  return {compared >= 4, fmt("%d CSV files byte-identical across reruns", compared)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only, known;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--only") {
      only.insert(std::stoi(argv[i + 1]));
    } else if (flag == "--known-failure") {
      known.insert(std::stoi(argv[i + 1]));
    } else if (flag == "--scratch") {
      g_scratch = argv[i + 1];
    } else {
      std::fprintf(stderr, "unknown flag %s\n", flag.c_str());
      return 2;
    }
  }

  const std::vector<std::pair<const char*, Outcome (*)()>> criteria{
      {"shadow unbiasedness", shadow_unbiasedness},
      {"budget arithmetic", budget_arithmetic},
      {"failure proportion at N=8", failure_proportion_n8},
      {"ANNNI phase diagram", annni_phase_diagram},
      {"plaquette sweep", plaquette_sweep},
      {"KH classification", kh_classification},
      {"elbow recovery", elbow_recovery},
      {"H0 persistence", h0_persistence_checks},
      {"PCA", pca_checks},
      {"determinism", determinism},
  };

  int unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2d %s: %s (%.1fs)%s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, o.detail.c_str(),
                secs, !o.pass && known.count(id) ? " [known failure]" : "");
    std::fflush(stdout);
    if (!o.pass && !known.count(id)) ++unexpected;
  }
  fs::remove_all(g_scratch);
  return unexpected == 0 ? 0 : 1;
}
