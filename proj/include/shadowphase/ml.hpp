#pragma once

// Unsupervised analysis of feature matrices (rows are points).

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

namespace shadowphase {

class MlError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct Clustering {
  int k = 0;
  std::vector<int> labels;
  Eigen::MatrixXd centroids;  // k x features
  double inertia = 0.0;
  /// Inertia after each Lloyd assignment of the winning run.
  std::vector<double> history;
};

struct KmeansOptions {
  int restarts = 10;
  int max_iterations = 300;
  /// Stop when the total centroid displacement falls below this.
  double tolerance = 1e-8;
};

/// Lloyd iterations from k-means++ seeding, best of `restarts` runs by
/// inertia. Assignment ties go to the lowest cluster index; an emptied
/// cluster keeps its previous centroid.
Clustering kmeans(const Eigen::MatrixXd& X, int k, std::uint64_t seed,
                  const KmeansOptions& options = {});

/// Lloyd iterations from the given initial centroids.
Clustering lloyd(const Eigen::MatrixXd& X, Eigen::MatrixXd centroids,
                 const KmeansOptions& options = {});

struct ElbowPoint {
  int k = 0;
  double inertia = 0.0;
};

/// Inertia for k = 1..k_max. Each k also tries the best (k-1) solution plus
/// the point farthest from its centroid as a start, so the curve never
/// increases.
std::vector<ElbowPoint> elbow_curve(const Eigen::MatrixXd& X, int k_max,
                                    std::uint64_t seed,
                                    const KmeansOptions& options = {});

/// I_{k-1} - 2 I_k + I_{k+1}; NaN at the ends of the curve.
double second_difference(const std::vector<ElbowPoint>& curve, int k);

/// k with the largest second difference (lowest k on ties); 1 for curves
/// shorter than three points.
int elbow_point(const std::vector<ElbowPoint>& curve);

struct PcaResult {
  Eigen::MatrixXd projections;  // rows x n_components
  Eigen::VectorXd explained_variance_ratio;
  Eigen::MatrixXd components;  // features x n_components, unit columns
  Eigen::RowVectorXd mean;
  /// Set when the centered data is zero; ratios are then all 0.
  bool zero_variance = false;
};

/// Principal components via SVD of the column-centered data. Each component
/// is signed so that its largest-magnitude entry is positive.
PcaResult pca(const Eigen::MatrixXd& X, int n_components);

/// projections * components^T + mean
Eigen::MatrixXd reconstruct(const PcaResult& p);

struct PersistencePair {
  double birth = 0.0;
  double death = std::numeric_limits<double>::infinity();
};

struct PersistenceDiagram {
  /// Finite pairs in merge order (nondecreasing death), then the essential
  /// pair.
  std::vector<PersistencePair> pairs;

  std::vector<double> finite_deaths() const;
};

/// Degree-0 Vietoris-Rips persistence under the Euclidean metric, from the
/// minimum spanning tree.
PersistenceDiagram h0_persistence(const Eigen::MatrixXd& X);

}  // namespace shadowphase
