#pragma once

// Parameter sweeps, phase classification and the failure-proportion
// experiment, plus their file formats.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "shadowphase/features.hpp"
#include "shadowphase/ml.hpp"
#include "shadowphase/shadows.hpp"

namespace shadowphase {

class PipelineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evenly spaced values from min to max; the end point is included unless
/// `endpoint` is false.
struct Range {
  double min = 0.0;
  double max = 1.0;
  int points = 21;
  bool endpoint = true;

  std::vector<double> values() const;
};

struct FailureSetup {
  std::vector<int> sizes{8, 12};
  int trials = 100;
  double k = 0.5;
  double g = 0.5;
};

struct SweepConfig {
  std::string model = "annni";  // "annni" or "kh"
  /// N for the chain, L for the ladder; 0 picks 12 or 6.
  int size = 0;
  Range k{0.0, 1.0, 21, true};
  Range g{0.0, 1.0, 21, true};
  /// In units of pi.
  Range phi_pi{0.0, 2.0, 100, false};
  double epsilon = 0.1;
  std::uint64_t seed = 1;
  std::optional<std::int64_t> budget_override;
  int plaquette_rounds = 1000;
  int plaquette_offset = 1;
  double plaquette_threshold = 0.5;
  /// 0 picks 3 for the chain and 4 for the ladder.
  int clusters = 0;
  int k_max = 10;
  int pca_components = 2;
  /// Analyse oracle values instead of shadow estimates.
  bool use_oracle = false;
  FailureSetup failure;
  /// 0 reads SHADOWPHASE_THREADS, then falls back to the hardware count.
  int threads = 0;

  int resolved_size() const;
  int resolved_clusters() const;
  void validate() const;
};

SweepConfig config_from_json(const std::string& text);
SweepConfig load_config(const std::filesystem::path& path);
/// Canonical JSON form; its hash identifies a run.
std::string config_to_json(const SweepConfig& cfg);

std::uint64_t fnv1a(std::string_view data);
std::string hex64(std::uint64_t v);
/// Independent seed for a sub-task, e.g. one grid point or trial.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

int resolve_threads(int requested);
/// Runs body(i) for i in [0, count) on a pool of `threads` workers. The first
/// exception (lowest index) is rethrown after all workers stop.
void parallel_for(std::size_t count, int threads,
                  const std::function<void(std::size_t)>& body);

struct AnnniSweep {
  FeatureMatrix features;
  /// reports[row][observable], rows in feature-matrix order.
  std::vector<std::vector<EstimateReport>> reports;
};

AnnniSweep run_annni_sweep(const SweepConfig& cfg);

struct PlaquettePoint {
  double phi = 0.0;
  double estimate = 0.0;
  double exact = 0.0;
};

struct KhSweep {
  FeatureMatrix features;
  std::vector<std::vector<EstimateReport>> reports;
  std::vector<PlaquettePoint> plaquette;  // aligned with feature rows
  int plaquette_rounds = 0;
  std::string plaquette_string;
};

KhSweep run_kh_sweep(const SweepConfig& cfg);

struct PhaseMap {
  std::string model;
  std::vector<std::string> param_names;
  std::vector<std::vector<double>> points;
  std::vector<std::string> labels;  // one per point
  std::vector<std::pair<std::string, std::string>> legend;  // code, description
  std::string config_hash;
  std::string features_hash;
  std::uint64_t seed = 0;
  double inertia = 0.0;
};

/// Rows of the feature matrix as an Eigen matrix (estimates or oracle values).
Eigen::MatrixXd feature_values(const FeatureMatrix& fm, bool exact);

/// k = 3 K-means, clusters named by the grid points nearest the ferromagnetic
/// (0.1, 0.1), paramagnetic (0.2, 0.9) and antiphase (0.9, 0.1) anchors.
PhaseMap classify_annni(const FeatureMatrix& fm, const SweepConfig& cfg);

/// Points with |plaquette| >= threshold are spin liquids (AFK below pi, FK
/// above); the rest are clustered with k = 4 and named by the points nearest
/// phi = 0 (RS), 0.65pi (ZZ), pi (FM) and 1.62pi (ST).
PhaseMap classify_kh(const FeatureMatrix& fm, std::span<const double> plaquette,
                     const SweepConfig& cfg);

struct Transition {
  std::string from;
  std::string to;
  double at = 0.0;  // midpoint between the neighbouring grid points
};

/// Label changes along a one-parameter phase map, in increasing parameter.
std::vector<Transition> detect_transitions(const PhaseMap& map);

struct FailureSeries {
  int size = 0;
  std::int64_t budget = 0;
  int observables = 0;
  std::vector<double> rho;  // one per trial
};

/// Repeats the chain correlator estimation at a fixed (k, g) with fresh seeds
/// and returns the failure proportion of every trial, for each chain size.
std::vector<FailureSeries> run_failure_experiment(const SweepConfig& cfg);

// Output files. All writers produce byte-identical files for identical input.
void write_annni_sweep(const std::filesystem::path& dir, const SweepConfig& cfg,
                       const AnnniSweep& sweep);
void write_kh_sweep(const std::filesystem::path& dir, const SweepConfig& cfg,
                    const KhSweep& sweep);
std::vector<PlaquettePoint> read_plaquette_csv(const std::filesystem::path& path);
std::string phase_map_json(const PhaseMap& map);
std::string phase_map_csv(const PhaseMap& map);
void write_phase_map(const std::filesystem::path& dir, const PhaseMap& map);
void write_failure_experiment(const std::filesystem::path& dir, const SweepConfig& cfg,
                              const std::vector<FailureSeries>& series);
std::string elbow_csv(const std::vector<ElbowPoint>& curve);
std::string pca_csv(const FeatureMatrix& fm, const PcaResult& p);
std::string persistence_csv(const PersistenceDiagram& d);
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace shadowphase
