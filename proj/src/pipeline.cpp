#include "shadowphase/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numbers>
#include <thread>

#include "shadowphase/eigensolver.hpp"
#include "shadowphase/hamiltonians.hpp"

namespace shadowphase {

namespace {

constexpr double kPi = std::numbers::pi;

std::string describe_point(const std::vector<std::string>& names,
                           const std::vector<double>& values) {
  std::string s = "(";
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (i > 0) s += ", ";
    s += names[i] + "=" + format_double(values[i]);
  }
  return s + ")";
}

std::int64_t budget_for(const SweepConfig& cfg, const ObservableSet& set) {
  if (cfg.budget_override) return *cfg.budget_override;
  return snapshot_budget(set.budget_count, set.locality, cfg.epsilon);
}

// Estimates and oracle values of every observable in `set` for one ground space.
FeatureRow estimate_row(const GroundSpace& gs, const ObservableSet& set,
                        std::int64_t T, std::uint64_t seed, double epsilon,
                        std::vector<EstimateReport>& reports) {
  const ShadowEnsemble ens = sample_snapshots(StateSource(gs), T, seed);
  FeatureRow row;
  row.seed = seed;
  row.budget = T;
  reports.clear();
  for (const PauliString& P : set.observables) {
    const double est = estimate_pauli(ens, P);
    const double exact = ground_pauli_expectation(gs, P);
    row.values.push_back(est);
    row.exact.push_back(exact);
    reports.push_back({P, est, exact, epsilon});
  }
  return row;
}

std::size_t nearest_point(const std::vector<std::vector<double>>& points,
                          const std::vector<double>& target,
                          const std::vector<std::size_t>& candidates) {
  std::size_t best = candidates.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i : candidates) {
    double d = 0.0;
    for (std::size_t c = 0; c < target.size(); ++c) {
      d += (points[i][c] - target[c]) * (points[i][c] - target[c]);
    }
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

struct Anchor {
  std::string code;
  std::vector<double> at;
};

// Clusters the selected rows and names every cluster after the anchor that
// falls into it.
void cluster_and_name(const Eigen::MatrixXd& X, const std::vector<std::size_t>& rows,
                      const std::vector<Anchor>& anchors, const SweepConfig& cfg,
                      PhaseMap& map) {
  const int k = cfg.resolved_clusters();
  if (static_cast<std::size_t>(k) != anchors.size()) {
    throw PipelineError("phase naming needs " + std::to_string(anchors.size()) +
                        " clusters, configuration asks for " + std::to_string(k));
  }
  if (rows.size() < anchors.size()) {
    throw PipelineError("too few points left to cluster");
  }
  Eigen::MatrixXd sub(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    sub.row(static_cast<Eigen::Index>(i)) = X.row(static_cast<Eigen::Index>(rows[i]));
  }
  const Clustering c = kmeans(sub, k, cfg.seed);
  map.inertia = c.inertia;

  std::vector<std::string> names(static_cast<std::size_t>(k));
  std::vector<std::size_t> local(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) local[i] = i;
  std::vector<std::vector<double>> pts;
  for (std::size_t r : rows) pts.push_back(map.points[r]);
  for (const Anchor& a : anchors) {
    const std::size_t i = nearest_point(pts, a.at, local);
    const auto cluster = static_cast<std::size_t>(c.labels[i]);
    if (!names[cluster].empty()) {
      throw PipelineError("anchors " + names[cluster] + " and " + a.code +
                          " fall into the same cluster");
    }
    names[cluster] = a.code;
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    map.labels[rows[i]] = names[static_cast<std::size_t>(c.labels[i])];
  }
}

PhaseMap base_map(const FeatureMatrix& fm, const SweepConfig& cfg) {
  PhaseMap map;
  map.model = to_string(fm.model);
  map.param_names = fm.param_names;
  for (const FeatureRow& r : fm.rows) map.points.push_back(r.params);
  map.labels.assign(fm.rows.size(), "");
  map.config_hash = hex64(fnv1a(config_to_json(cfg)));
  map.features_hash = hex64(fnv1a(feature_csv(fm, cfg.use_oracle)));
  map.seed = cfg.seed;
  return map;
}

}  // namespace

std::vector<double> Range::values() const {
  std::vector<double> v;
  const int div = endpoint ? points - 1 : points;
  for (int i = 0; i < points; ++i) v.push_back(min + (max - min) * i / div);
  return v;
}

int SweepConfig::resolved_size() const {
  if (size > 0) return size;
  return model == "kh" ? 6 : 12;
}

int SweepConfig::resolved_clusters() const {
  if (clusters > 0) return clusters;
  return model == "kh" ? 4 : 3;
}

void SweepConfig::validate() const {
  if (model != "annni" && model != "kh") {
    throw PipelineError("model must be \"annni\" or \"kh\", got \"" + model + "\"");
  }
  if (!(epsilon > 0.0)) throw PipelineError("epsilon must be positive");
  if (budget_override && *budget_override < 1) {
    throw PipelineError("budget override must be at least 1");
  }
  auto check_range = [](const Range& r, const char* name, double lo, double hi) {
    if (r.points < 2) throw PipelineError(std::string(name) + ": resolution must be at least 2");
    if (!(r.min >= lo) || !(r.max <= hi) || !(r.min < r.max)) {
      throw PipelineError(std::string(name) + ": range outside model validity");
    }
  };
  if (model == "annni") {
    shadowphase::validate(AnnniParams{resolved_size(), 0.0, 0.0});
    if (resolved_size() < 3) throw PipelineError("ANNNI sweeps need N >= 3");
    check_range(k, "k", 0.0, std::numeric_limits<double>::infinity());
    check_range(g, "g", 0.0, std::numeric_limits<double>::infinity());
  } else {
    shadowphase::validate(KhParams{resolved_size(), 0.0});
    check_range(phi_pi, "phi", 0.0, 2.0);
    if (phi_pi.endpoint && phi_pi.max >= 2.0) {
      throw PipelineError("phi: 2pi is excluded; set endpoint to false");
    }
    if (plaquette_rounds < 1) throw PipelineError("plaquette_rounds must be at least 1");
    if (!(plaquette_threshold >= 0.0)) throw PipelineError("plaquette_threshold must be >= 0");
    plaquette_observable(resolved_size(), plaquette_offset);
  }
  if (k_max < 1) throw PipelineError("k_max must be at least 1");
  if (pca_components < 1) throw PipelineError("pca_components must be at least 1");
  if (failure.trials < 1) throw PipelineError("failure trials must be at least 1");
  for (int n : failure.sizes) shadowphase::validate(AnnniParams{n, failure.k, failure.g});
  if (threads < 0) throw PipelineError("threads must be >= 0");
}

std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = kDigits[v & 0xf];
  return s;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(base) ^ a) ^ b);
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SHADOWPHASE_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body) {
  const auto workers = std::min<std::size_t>(count, static_cast<std::size_t>(std::max(1, threads)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex mu;
  std::size_t error_index = count;
  std::exception_ptr error;
  auto work = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (i < error_index) {
          error_index = i;
          error = std::current_exception();
        }
        failed = true;
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(work);
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

AnnniSweep run_annni_sweep(const SweepConfig& cfg) {
  cfg.validate();
  if (cfg.model != "annni") throw PipelineError("annni sweep needs model \"annni\"");
  const int N = cfg.resolved_size();
  const ObservableSet set = annni_observables(N);
  const std::int64_t T = budget_for(cfg, set);
  const std::vector<std::string> names{"k", "g"};

  std::vector<std::vector<double>> grid;
  for (double k : cfg.k.values()) {
    for (double g : cfg.g.values()) grid.push_back({k, g});
  }
  std::vector<FeatureRow> rows(grid.size());
  std::vector<std::vector<EstimateReport>> reports(grid.size());
  parallel_for(grid.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
    try {
      const GroundSpace gs = ground_space(build_annni({N, grid[i][0], grid[i][1]}));
      rows[i] = estimate_row(gs, set, T, derive_seed(cfg.seed, i), cfg.epsilon, reports[i]);
      rows[i].params = grid[i];
    } catch (const std::exception& e) {
      throw PipelineError("ANNNI point " + describe_point(names, grid[i]) + ": " + e.what());
    }
  });
  // Rows are generated in (k, g) order already, which is also the sorted order.
  AnnniSweep out;
  out.features = assemble_feature_matrix(set, names, std::move(rows), N, cfg.epsilon);
  out.reports = std::move(reports);
  return out;
}

KhSweep run_kh_sweep(const SweepConfig& cfg) {
  cfg.validate();
  if (cfg.model != "kh") throw PipelineError("kh sweep needs model \"kh\"");
  const int L = cfg.resolved_size();
  const ObservableSet set = kh_quadrant_observables(L);
  const std::int64_t T = budget_for(cfg, set);
  const PauliString plaquette = plaquette_observable(L, cfg.plaquette_offset);
  const std::vector<PauliString> targets{plaquette};
  const auto schedule = derandomized_schedule(targets, cfg.plaquette_rounds);
  const std::vector<std::string> names{"phi"};

  std::vector<double> phis;
  for (double p : cfg.phi_pi.values()) phis.push_back(p * kPi);
  std::vector<FeatureRow> rows(phis.size());
  std::vector<std::vector<EstimateReport>> reports(phis.size());
  std::vector<PlaquettePoint> plaq(phis.size());
  parallel_for(phis.size(), resolve_threads(cfg.threads), [&](std::size_t i) {
    try {
      const GroundSpace gs = ground_space(build_kitaev_heisenberg({L, phis[i]}));
      const std::uint64_t seed = derive_seed(cfg.seed, i);
      rows[i] = estimate_row(gs, set, T, seed, cfg.epsilon, reports[i]);
      rows[i].params = {phis[i]};
      plaq[i].phi = phis[i];
      plaq[i].estimate =
          estimate_derandomized(StateSource(gs), schedule, plaquette, derive_seed(seed, 1));
      plaq[i].exact = ground_pauli_expectation(gs, plaquette);
    } catch (const std::exception& e) {
      throw PipelineError("KH point " + describe_point(names, {phis[i]}) + ": " + e.what());
    }
  });
  KhSweep out;
  out.features = assemble_feature_matrix(set, names, std::move(rows), L, cfg.epsilon);
  out.reports = std::move(reports);
  out.plaquette = std::move(plaq);
  out.plaquette_rounds = cfg.plaquette_rounds;
  out.plaquette_string = plaquette.str();
  return out;
}

Eigen::MatrixXd feature_values(const FeatureMatrix& fm, bool exact) {
  if (exact && !fm.has_exact()) throw PipelineError("feature matrix has no oracle values");
  Eigen::MatrixXd X(static_cast<Eigen::Index>(fm.row_count()),
                    static_cast<Eigen::Index>(fm.column_count()));
  for (std::size_t i = 0; i < fm.row_count(); ++i) {
    const auto& v = exact ? fm.rows[i].exact : fm.rows[i].values;
    for (std::size_t c = 0; c < v.size(); ++c) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v[c];
    }
  }
  return X;
}

PhaseMap classify_annni(const FeatureMatrix& fm, const SweepConfig& cfg) {
  if (fm.model != ModelTag::Annni || fm.param_names.size() != 2) {
    throw PipelineError("classify_annni needs an ANNNI feature matrix");
  }
  PhaseMap map = base_map(fm, cfg);
  map.legend = {{"ferromagnetic", "ferromagnetic order"},
                {"paramagnetic", "paramagnetic, spins along the field"},
                {"antiphase", "antiphase order (floating region merged)"}};
  const std::vector<Anchor> anchors{{"ferromagnetic", {0.1, 0.1}},
                                    {"paramagnetic", {0.2, 0.9}},
                                    {"antiphase", {0.9, 0.1}}};
  std::vector<std::size_t> all(fm.row_count());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  cluster_and_name(feature_values(fm, cfg.use_oracle), all, anchors, cfg, map);
  return map;
}

PhaseMap classify_kh(const FeatureMatrix& fm, std::span<const double> plaquette,
                     const SweepConfig& cfg) {
  if (fm.param_names.size() != 1) throw PipelineError("classify_kh needs a ladder feature matrix");
  if (plaquette.size() != fm.row_count()) {
    throw PipelineError("plaquette series and feature rows are not aligned");
  }
  PhaseMap map = base_map(fm, cfg);
  map.legend = {{"AFK", "antiferromagnetic Kitaev spin liquid"},
                {"FK", "ferromagnetic Kitaev spin liquid"},
                {"RS", "rung singlet"},
                {"ZZ", "zigzag"},
                {"FM", "ferromagnetic"},
                {"ST", "stripy"}};
  std::vector<std::size_t> ordered;
  for (std::size_t i = 0; i < fm.row_count(); ++i) {
    if (std::abs(plaquette[i]) >= cfg.plaquette_threshold) {
      map.labels[i] = map.points[i][0] < kPi ? "AFK" : "FK";
    } else {
      ordered.push_back(i);
    }
  }
  const std::vector<Anchor> anchors{{"RS", {0.0}},
                                    {"ZZ", {0.65 * kPi}},
                                    {"FM", {kPi}},
                                    {"ST", {1.62 * kPi}}};
  cluster_and_name(feature_values(fm, cfg.use_oracle), ordered, anchors, cfg, map);
  return map;
}

std::vector<Transition> detect_transitions(const PhaseMap& map) {
  if (map.param_names.size() != 1) {
    throw PipelineError("transitions are defined for one-parameter maps");
  }
  std::vector<std::size_t> order(map.points.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return map.points[a][0] < map.points[b][0];
  });
  std::vector<Transition> out;
  for (std::size_t j = 0; j + 1 < order.size(); ++j) {
    const auto a = order[j];
    const auto b = order[j + 1];
    if (map.labels[a] != map.labels[b]) {
      out.push_back({map.labels[a], map.labels[b], 0.5 * (map.points[a][0] + map.points[b][0])});
    }
  }
  return out;
}

std::vector<FailureSeries> run_failure_experiment(const SweepConfig& cfg) {
  cfg.validate();
  std::vector<FailureSeries> out;
  for (std::size_t s = 0; s < cfg.failure.sizes.size(); ++s) {
    const int N = cfg.failure.sizes[s];
    const ObservableSet set = annni_observables(N);
    FailureSeries series;
    series.size = N;
    series.budget = budget_for(cfg, set);
    series.observables = static_cast<int>(set.size());
    const GroundSpace gs = ground_space(build_annni({N, cfg.failure.k, cfg.failure.g}));
    std::vector<double> exact;
    for (const PauliString& P : set.observables) exact.push_back(ground_pauli_expectation(gs, P));
    series.rho.assign(static_cast<std::size_t>(cfg.failure.trials), 0.0);
    const StateSource source(gs);
    parallel_for(series.rho.size(), resolve_threads(cfg.threads), [&](std::size_t t) {
      const ShadowEnsemble ens =
          sample_snapshots(source, series.budget, derive_seed(cfg.seed, static_cast<std::uint64_t>(N), t));
      std::vector<EstimateReport> reports;
      for (std::size_t o = 0; o < set.size(); ++o) {
        reports.push_back({set.observables[o], estimate_pauli(ens, set.observables[o]),
                           exact[o], cfg.epsilon});
      }
      series.rho[t] = failure_proportion(reports, cfg.epsilon);
    });
    out.push_back(std::move(series));
  }
  return out;
}

}  // namespace shadowphase
