#include "shadowphase/ml.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "shadowphase/kernels.hpp"

namespace shadowphase {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void check_input(const Eigen::MatrixXd& X) {
  if (X.rows() == 0 || X.cols() == 0) throw MlError("empty feature matrix");
  if (!X.allFinite()) throw MlError("feature matrix has non-finite entries");
}

double sq_dist(const RowMatrix& A, Eigen::Index i, const RowMatrix& B, Eigen::Index j) {
  return kernels::active().squared_distance(A.row(i).data(), B.row(j).data(),
                                            static_cast<std::size_t>(A.cols()));
}

// Assigns every point to its nearest centroid; returns the inertia.
double assign(const RowMatrix& X, const RowMatrix& C, std::vector<int>& labels) {
  double inertia = 0.0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double best = sq_dist(X, i, C, 0);
    int arg = 0;
    for (Eigen::Index c = 1; c < C.rows(); ++c) {
      const double d = sq_dist(X, i, C, c);
      if (d < best) {
        best = d;
        arg = static_cast<int>(c);
      }
    }
    labels[static_cast<std::size_t>(i)] = arg;
    inertia += best;
  }
  return inertia;
}

Clustering run_lloyd(const RowMatrix& X, RowMatrix C, const KmeansOptions& opt) {
  Clustering out;
  out.k = static_cast<int>(C.rows());
  out.labels.assign(static_cast<std::size_t>(X.rows()), 0);
  for (int it = 0; it < opt.max_iterations; ++it) {
    out.history.push_back(assign(X, C, out.labels));
    RowMatrix next = RowMatrix::Zero(C.rows(), C.cols());
    std::vector<Eigen::Index> counts(static_cast<std::size_t>(C.rows()), 0);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const int l = out.labels[static_cast<std::size_t>(i)];
      next.row(l) += X.row(i);
      ++counts[static_cast<std::size_t>(l)];
    }
    for (Eigen::Index c = 0; c < C.rows(); ++c) {
      const auto n = counts[static_cast<std::size_t>(c)];
      if (n == 0) {
        next.row(c) = C.row(c);
      } else {
        next.row(c) /= static_cast<double>(n);
      }
    }
    const double shift = (next - C).norm();
    C = std::move(next);
    if (shift < opt.tolerance) break;
  }
  out.inertia = assign(X, C, out.labels);
  out.history.push_back(out.inertia);
  out.centroids = C;
  return out;
}

RowMatrix plus_plus_seed(const RowMatrix& X, int k, std::mt19937_64& rng) {
  const Eigen::Index n = X.rows();
  RowMatrix C(k, X.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  C.row(0) = X.row(pick(rng));
  std::vector<double> d2(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) d2[static_cast<std::size_t>(i)] = sq_dist(X, i, C, 0);
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (double d : d2) total += d;
    Eigen::Index chosen = 0;
    if (total > 0.0) {
      const double target = std::uniform_real_distribution<double>(0.0, total)(rng);
      double acc = 0.0;
      chosen = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[static_cast<std::size_t>(i)];
        if (acc > target && d2[static_cast<std::size_t>(i)] > 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);
    }
    C.row(c) = X.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i) {
      auto& d = d2[static_cast<std::size_t>(i)];
      d = std::min(d, sq_dist(X, i, C, c));
    }
  }
  return C;
}

Clustering kmeans_rows(const RowMatrix& X, int k, std::uint64_t seed,
                       const KmeansOptions& opt) {
  if (k < 1) throw MlError("k must be at least 1");
  if (k > X.rows()) {
    throw MlError("k = " + std::to_string(k) + " exceeds the " +
                  std::to_string(X.rows()) + " available points");
  }
  if (opt.restarts < 1) throw MlError("kmeans needs at least one restart");
  Clustering best;
  for (int r = 0; r < opt.restarts; ++r) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(r)};
    std::mt19937_64 rng(seq);
    Clustering c = run_lloyd(X, plus_plus_seed(X, k, rng), opt);
    if (r == 0 || c.inertia < best.inertia) best = std::move(c);
  }
  return best;
}

}  // namespace

Clustering kmeans(const Eigen::MatrixXd& X, int k, std::uint64_t seed,
                  const KmeansOptions& options) {
  check_input(X);
  return kmeans_rows(RowMatrix(X), k, seed, options);
}

Clustering lloyd(const Eigen::MatrixXd& X, Eigen::MatrixXd centroids,
                 const KmeansOptions& options) {
  check_input(X);
  if (centroids.rows() < 1 || centroids.cols() != X.cols()) {
    throw MlError("initial centroids do not match the feature dimension");
  }
  return run_lloyd(RowMatrix(X), RowMatrix(centroids), options);
}

std::vector<ElbowPoint> elbow_curve(const Eigen::MatrixXd& X, int k_max,
                                    std::uint64_t seed,
                                    const KmeansOptions& options) {
  check_input(X);
  if (k_max < 1 || k_max > X.rows()) {
    throw MlError("k_max must lie in [1, rows]");
  }
  const RowMatrix rows(X);
  std::vector<ElbowPoint> curve;
  Clustering prev;
  for (int k = 1; k <= k_max; ++k) {
    Clustering c = kmeans_rows(rows, k, seed, options);
    if (k > 1) {
      // Warm start: previous centroids plus the worst-served point.
      Eigen::Index far = 0;
      double far_d = -1.0;
      const RowMatrix pc(prev.centroids);
      for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        const double d = sq_dist(rows, i, pc, prev.labels[static_cast<std::size_t>(i)]);
        if (d > far_d) {
          far_d = d;
          far = i;
        }
      }
      RowMatrix start(k, rows.cols());
      start.topRows(k - 1) = pc;
      start.row(k - 1) = rows.row(far);
      Clustering warm = run_lloyd(rows, start, options);
      if (warm.inertia < c.inertia) c = std::move(warm);
    }
    curve.push_back({k, c.inertia});
    prev = std::move(c);
  }
  return curve;
}

double second_difference(const std::vector<ElbowPoint>& curve, int k) {
  const auto i = static_cast<std::size_t>(k - 1);
  if (k < 2 || i + 1 >= curve.size()) return std::numeric_limits<double>::quiet_NaN();
  return curve[i - 1].inertia - 2.0 * curve[i].inertia + curve[i + 1].inertia;
}

int elbow_point(const std::vector<ElbowPoint>& curve) {
  int best_k = 1;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i + 1 < curve.size(); ++i) {
    const double d = second_difference(curve, curve[i].k);
    if (d > best) {
      best = d;
      best_k = curve[i].k;
    }
  }
  return best_k;
}

PcaResult pca(const Eigen::MatrixXd& X, int n_components) {
  check_input(X);
  if (n_components < 1 || n_components > std::min(X.rows(), X.cols())) {
    throw MlError("n_components must lie in [1, min(rows, cols)]");
  }
  PcaResult out;
  out.mean = X.colwise().mean();
  const Eigen::MatrixXd centered = X.rowwise() - out.mean;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  const double total = s.squaredNorm();
  const Eigen::Index nc = n_components;
  out.components = svd.matrixV().leftCols(nc);
  for (Eigen::Index c = 0; c < nc; ++c) {
    Eigen::Index arg = 0;
    out.components.col(c).cwiseAbs().maxCoeff(&arg);
    if (out.components(arg, c) < 0.0) out.components.col(c) *= -1.0;
  }
  out.zero_variance = !(total > 0.0);
  out.explained_variance_ratio = out.zero_variance
                                     ? Eigen::VectorXd::Zero(nc)
                                     : Eigen::VectorXd(s.head(nc).array().square() / total);
  out.projections = centered * out.components;
  return out;
}

Eigen::MatrixXd reconstruct(const PcaResult& p) {
  return (p.projections * p.components.transpose()).rowwise() + p.mean;
}

std::vector<double> PersistenceDiagram::finite_deaths() const {
  std::vector<double> d;
  for (const auto& p : pairs) {
    if (std::isfinite(p.death)) d.push_back(p.death);
  }
  return d;
}

PersistenceDiagram h0_persistence(const Eigen::MatrixXd& X) {
  check_input(X);
  const RowMatrix rows(X);
  const Eigen::Index n = rows.rows();
  // Prim's algorithm on the complete graph.
  std::vector<double> best(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<char> in_tree(static_cast<std::size_t>(n), 0);
  std::vector<double> deaths;
  Eigen::Index current = 0;
  in_tree[0] = 1;
  for (Eigen::Index step = 1; step < n; ++step) {
    Eigen::Index next = -1;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      if (in_tree[u]) continue;
      best[u] = std::min(best[u], std::sqrt(sq_dist(rows, current, rows, i)));
      if (next < 0 || best[u] < best[static_cast<std::size_t>(next)]) next = i;
    }
    in_tree[static_cast<std::size_t>(next)] = 1;
    deaths.push_back(best[static_cast<std::size_t>(next)]);
    current = next;
  }
  std::sort(deaths.begin(), deaths.end());
  PersistenceDiagram out;
  for (double d : deaths) out.pairs.push_back({0.0, d});
  out.pairs.push_back({});
  return out;
}

}  // namespace shadowphase
