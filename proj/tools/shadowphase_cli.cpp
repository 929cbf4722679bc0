#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>

#include "shadowphase/pipeline.hpp"

namespace fs = std::filesystem;
using namespace shadowphase;

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<double> epsilon;
  std::string out = "out";
  std::optional<std::int64_t> budget_override;
  std::optional<int> threads;
  std::string in;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool reads_features) {
  cmd->add_option("--config", f.config, "JSON configuration file");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--epsilon", f.epsilon, "Error bound for estimates");
  cmd->add_option("--out", f.out, "Output directory")->capture_default_str();
  cmd->add_option("--budget-override", f.budget_override, "Snapshots per point instead of the budget formula");
  cmd->add_option("--threads", f.threads, "Worker threads (default: $SHADOWPHASE_THREADS or all cores)");
  if (reads_features) {
    cmd->add_option("--in", f.in, "Directory holding a sweep's output (default: --out)");
  }
}

// Loads the configuration and applies command-line overrides. `model` is the
// model implied by the subcommand, if any.
SweepConfig resolve(const CommonFlags& f, const std::string& model) {
  SweepConfig cfg;
  bool explicit_model = false;
  if (!f.config.empty()) {
    const std::string text = read_text_file(f.config);
    cfg = config_from_json(text);
    explicit_model = nlohmann::json::parse(text).contains("model");
  }
  if (!model.empty()) {
    if (explicit_model && cfg.model != model) {
      throw PipelineError("configuration is for model \"" + cfg.model + "\", command needs \"" +
                          model + "\"");
    }
    cfg.model = model;
  }
  if (f.seed) cfg.seed = *f.seed;
  if (f.epsilon) cfg.epsilon = *f.epsilon;
  if (f.budget_override) cfg.budget_override = *f.budget_override;
  if (f.threads) cfg.threads = *f.threads;
  cfg.validate();
  return cfg;
}

fs::path input_dir(const CommonFlags& f) { return f.in.empty() ? fs::path(f.out) : fs::path(f.in); }

// Feature rows to analyse; ladder rows inside spin-liquid windows are dropped
// when the plaquette series is available.
Eigen::MatrixXd analysis_rows(const FeatureMatrix& fm, const SweepConfig& cfg, const fs::path& dir,
                              FeatureMatrix& kept) {
  kept = fm;
  if (fm.model == ModelTag::KhCorrelators && fs::exists(dir / "plaquette.csv")) {
    const auto plaq = read_plaquette_csv(dir / "plaquette.csv");
    if (plaq.size() != fm.row_count()) throw PipelineError("plaquette.csv does not match the features");
    kept.rows.clear();
    for (std::size_t i = 0; i < plaq.size(); ++i) {
      const double v = cfg.use_oracle ? plaq[i].exact : plaq[i].estimate;
      if (std::abs(v) < cfg.plaquette_threshold) kept.rows.push_back(fm.rows[i]);
    }
    if (kept.rows.empty()) throw PipelineError("no ordered-phase rows left after the plaquette cut");
  }
  return feature_values(kept, cfg.use_oracle);
}

void print_transitions(const PhaseMap& map) {
  for (const Transition& t : detect_transitions(map)) {
    std::printf("  %s -> %s at phi = %.4f pi\n", t.from.c_str(), t.to.c_str(), t.at / M_PI);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Classical-shadow phase classification for the ANNNI chain and the Kitaev-Heisenberg ladder"};
  app.require_subcommand(1);
  CommonFlags f;

  auto* annni = app.add_subcommand("annni-sweep", "Estimate ANNNI correlators over a (k, g) grid");
  auto* kh = app.add_subcommand("kh-sweep", "Estimate ladder correlators and the plaquette over phi");
  auto* cls_annni = app.add_subcommand("classify-annni", "Cluster an ANNNI sweep into phases");
  auto* cls_kh = app.add_subcommand("classify-kh", "Classify a ladder sweep into phases");
  auto* failure = app.add_subcommand("failure-exp", "Failure proportion over repeated trials");
  auto* elbow = app.add_subcommand("elbow", "Inertia versus cluster count");
  auto* pca_cmd = app.add_subcommand("pca", "Principal components of a sweep");
  auto* persist = app.add_subcommand("persistence", "H0 persistence diagram of a sweep");
  add_common(annni, f, false);
  add_common(kh, f, false);
  add_common(cls_annni, f, true);
  add_common(cls_kh, f, true);
  add_common(failure, f, false);
  add_common(elbow, f, true);
  add_common(pca_cmd, f, true);
  add_common(persist, f, true);

  CLI11_PARSE(app, argc, argv);

  try {
    const fs::path out(f.out);
    if (annni->parsed()) {
      const SweepConfig cfg = resolve(f, "annni");
      const AnnniSweep sweep = run_annni_sweep(cfg);
      write_annni_sweep(out, cfg, sweep);
      std::printf("wrote %zu x %zu features to %s\n", sweep.features.row_count(),
                  sweep.features.column_count(), out.c_str());
    } else if (kh->parsed()) {
      const SweepConfig cfg = resolve(f, "kh");
      const KhSweep sweep = run_kh_sweep(cfg);
      write_kh_sweep(out, cfg, sweep);
      std::printf("wrote %zu x %zu features and %zu plaquette values to %s\n",
                  sweep.features.row_count(), sweep.features.column_count(),
                  sweep.plaquette.size(), out.c_str());
    } else if (cls_annni->parsed()) {
      const SweepConfig cfg = resolve(f, "annni");
      const FeatureMatrix fm = read_feature_files(input_dir(f));
      const PhaseMap map = classify_annni(fm, cfg);
      write_phase_map(out, map);
      std::printf("classified %zu points into 3 phases; wrote %s\n", map.points.size(),
                  (out / "phase_map.json").c_str());
    } else if (cls_kh->parsed()) {
      const SweepConfig cfg = resolve(f, "kh");
      const fs::path dir = input_dir(f);
      const FeatureMatrix fm = read_feature_files(dir);
      std::vector<double> plaq;
      for (const PlaquettePoint& p : read_plaquette_csv(dir / "plaquette.csv")) {
        plaq.push_back(cfg.use_oracle ? p.exact : p.estimate);
      }
      const PhaseMap map = classify_kh(fm, plaq, cfg);
      write_phase_map(out, map);
      std::printf("classified %zu points; transitions:\n", map.points.size());
      print_transitions(map);
    } else if (failure->parsed()) {
      const SweepConfig cfg = resolve(f, "annni");
      const auto series = run_failure_experiment(cfg);
      write_failure_experiment(out, cfg, series);
      for (const FailureSeries& s : series) {
        double mean = 0.0;
        for (double r : s.rho) mean += r;
        std::printf("N = %d: T = %lld, mean rho_fail = %.5f over %zu trials\n", s.size,
                    static_cast<long long>(s.budget), mean / static_cast<double>(s.rho.size()),
                    s.rho.size());
      }
    } else {
      const fs::path dir = input_dir(f);
      const FeatureMatrix fm = read_feature_files(dir);
      SweepConfig cfg = resolve(f, fm.model == ModelTag::Annni ? "annni" : "kh");
      FeatureMatrix kept;
      const Eigen::MatrixXd X = analysis_rows(fm, cfg, dir, kept);
      if (elbow->parsed()) {
        const int k_max = std::min<int>(cfg.k_max, static_cast<int>(X.rows()));
        const auto curve = elbow_curve(X, k_max, cfg.seed);
        write_text_file(out / "elbow.csv", elbow_csv(curve));
        std::printf("elbow at k = %d\n", elbow_point(curve));
      } else if (pca_cmd->parsed()) {
        const int nc = std::min<int>(cfg.pca_components,
                                     static_cast<int>(std::min(X.rows(), X.cols())));
        const PcaResult p = pca(X, nc);
        write_text_file(out / "pca.csv", pca_csv(kept, p));
        nlohmann::json j;
        j["schema_version"] = 1;
        j["columns"] = kept.columns;
        j["explained_variance_ratio"] = std::vector<double>(
            p.explained_variance_ratio.data(),
            p.explained_variance_ratio.data() + p.explained_variance_ratio.size());
        nlohmann::json comps = nlohmann::json::array();
        for (Eigen::Index c = 0; c < p.components.cols(); ++c) {
          comps.push_back(std::vector<double>(p.components.col(c).data(),
                                              p.components.col(c).data() + p.components.rows()));
        }
        j["components"] = std::move(comps);
        j["zero_variance"] = p.zero_variance;
        write_text_file(out / "pca.json", j.dump(2) + "\n");
        for (Eigen::Index c = 0; c < p.explained_variance_ratio.size(); ++c) {
          std::printf("pc%ld explains %.4f of the variance\n", static_cast<long>(c + 1),
                      p.explained_variance_ratio(c));
        }
      } else if (persist->parsed()) {
        const PersistenceDiagram d = h0_persistence(X);
        write_text_file(out / "persistence.csv", persistence_csv(d));
        std::printf("%zu H0 pairs written to %s\n", d.pairs.size(),
                    (out / "persistence.csv").c_str());
      }
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
