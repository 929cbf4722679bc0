#pragma once

// Observable sets for each model and the feature matrices built from them.
// Correlator features are in Pauli normalization, <sigma^a sigma^a> in [-1, 1].

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "shadowphase/spin_ops.hpp"

namespace shadowphase {

class FeatureError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class ModelTag { Annni, KhCorrelators, KhPlaquette };

std::string to_string(ModelTag tag);
ModelTag model_tag_from_string(const std::string& s);

struct ObservableSet {
  ModelTag model = ModelTag::Annni;
  std::vector<PauliString> observables;
  std::vector<std::string> names;  // e.g. "zz_1_2", 1-based sites
  int locality = 0;
  /// Observable count used for the snapshot budget. Equals the set size
  /// except for the ladder quadrant set, which keeps the nominal 3N - 6.
  int budget_count = 0;

  std::size_t size() const { return observables.size(); }
};

/// sigma^a_i sigma^a_j for NN pairs (i, i+1) then NNN pairs (i, i+2), pairs
/// by left index, a in x, y, z order. 3(2N - 3) observables.
ObservableSet annni_observables(int N);

/// Two-point correlators over every four-spin window (rungs i, i+1) of the
/// ladder: legs, rungs and diagonals, shared pairs counted once, a in x, y, z.
ObservableSet kh_quadrant_observables(int L);

/// Six-site flux operator on the ladder window spanned by rungs
/// offset..offset+2 (1-based, no wrap). Each site carries the Pauli label of
/// its Kitaev bond that is not on the window's perimeter loop.
PauliString plaquette_observable(int L, int offset = 1);

struct FeatureRow {
  std::vector<double> params;  // (k, g) or (phi)
  std::vector<double> values;  // estimates in observable order
  std::vector<double> exact;   // oracle values, same order (may be empty)
  std::uint64_t seed = 0;
  std::int64_t budget = 0;
};

struct FeatureMatrix {
  ModelTag model = ModelTag::Annni;
  int size = 0;  // N for the chain, L for the ladder
  double epsilon = 0.0;
  std::vector<std::string> param_names;
  std::vector<std::string> columns;
  std::vector<FeatureRow> rows;

  std::size_t row_count() const { return rows.size(); }
  std::size_t column_count() const { return columns.size(); }
  bool has_exact() const;
};

/// Validates row widths against the observable set and sorts rows by their
/// parameters (lexicographically).
FeatureMatrix assemble_feature_matrix(const ObservableSet& set,
                                      std::vector<std::string> param_names,
                                      std::vector<FeatureRow> rows, int size,
                                      double epsilon);

inline constexpr int kFeatureSchemaVersion = 1;

/// CSV with header "<params...>,<observable names...>". `exact` selects the
/// oracle values instead of the estimates.
std::string feature_csv(const FeatureMatrix& fm, bool exact = false);
/// JSON sidecar: schema_version, model, size, epsilon, columns, per-row
/// parameters, seeds and budgets.
std::string feature_sidecar(const FeatureMatrix& fm);

void write_feature_files(const std::filesystem::path& dir,
                         const FeatureMatrix& fm);
/// Reads features.csv, the optional oracle.csv and features.json from `dir`.
FeatureMatrix read_feature_files(const std::filesystem::path& dir);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace shadowphase
