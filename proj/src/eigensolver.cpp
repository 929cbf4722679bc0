#include "shadowphase/eigensolver.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <type_traits>

#include "shadowphase/kernels.hpp"

namespace shadowphase {

namespace {

using Eigen::Index;

// Matrix-vector product in the working scalar type. Real Hamiltonians (all
// the models here) run in real arithmetic.
template <typename Scalar>
class Operator;

template <>
class Operator<double> {
 public:
  explicit Operator(const SparseOperator& H) : H_(H) {
    vals_.reserve(H.nonzeros());
    for (const cplx& v : H.values()) vals_.push_back(v.real());
  }
  void apply(const double* x, double* y) const {
    kernels::active().csr_matvec_real(H_.dim(), H_.row_ptr().data(),
                                      H_.cols().data(), vals_.data(), x, y);
  }

 private:
  const SparseOperator& H_;
  std::vector<double> vals_;
};

template <>
class Operator<cplx> {
 public:
  explicit Operator(const SparseOperator& H) : H_(H) {}
  void apply(const cplx* x, cplx* y) const {
    kernels::active().csr_matvec(H_.dim(), H_.row_ptr().data(),
                                 H_.cols().data(), H_.values().data(), x, y);
  }

 private:
  const SparseOperator& H_;
};

// Restarted block Krylov iteration (block Davidson with identity
// preconditioner, i.e. block Lanczos with explicit Rayleigh-Ritz) with full
// reorthogonalization and locking of converged ground vectors.
template <typename Scalar>
class BlockKrylov {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

 public:
  BlockKrylov(const SparseOperator& H, const EigensolverOptions& opt)
      : op_(H),
        sites_(H.sites()),
        opt_(opt),
        dim_(static_cast<Index>(H.dim())),
        rng_(opt.seed) {
    budget_ = opt.max_matvecs > 0 ? opt.max_matvecs
                                  : 10 * static_cast<std::int64_t>(H.dim());
    block_ = std::max<Index>(1, std::min<Index>(opt.block_size, dim_));
    max_basis_ = std::min<Index>(dim_, std::max<Index>(3 * block_, opt.max_basis));
    V_.resize(dim_, max_basis_);
    HV_.resize(dim_, max_basis_);
    T_.resize(max_basis_, max_basis_);
    locked_.resize(dim_, 0);
  }

  GroundSpace run() {
    std::vector<double> locked_values;
    expand(random_block(block_));

    double excited = std::numeric_limits<double>::quiet_NaN();
    bool confirmed = false;
    while (true) {
      if (m_ == 0) {
        if (locked_.cols() == dim_) break;  // whole space is degenerate
        expand(random_block(block_));
        continue;
      }
      const Matrix T = T_.topLeftCorner(m_, m_).template selfadjointView<Eigen::Upper>();
      Eigen::SelfAdjointEigenSolver<Matrix> es(T);
      const Eigen::VectorXd theta = es.eigenvalues();
      const Matrix Y = es.eigenvectors();

      const Index wanted = std::min<Index>(block_, m_);
      const Matrix X = V_.leftCols(m_) * Y.leftCols(wanted);
      const Matrix R =
          HV_.leftCols(m_) * Y.leftCols(wanted) - X * theta.head(wanted).asDiagonal();

      // Lock converged pairs from the bottom of the spectrum upward.
      Index n_locked_now = 0;
      bool done = false;
      for (Index j = 0; j < wanted; ++j) {
        if (R.col(j).norm() > opt_.residual_tol) break;
        if (!locked_values.empty() && !within_ground(theta(j), locked_values.front())) {
          excited = theta(j);
          done = confirmed;
          break;
        }
        locked_.conservativeResize(Eigen::NoChange, locked_.cols() + 1);
        locked_.col(locked_.cols() - 1) = X.col(j);
        locked_values.push_back(theta(j));
        ++n_locked_now;
        confirmed = false;
      }
      if (done || locked_.cols() == dim_) break;

      if (!std::isnan(excited) && n_locked_now == 0) {
        // A Krylov space only contains the part of a degenerate eigenspace
        // present in its start block. Before accepting the ground space,
        // grow a fresh space from random directions in the complement of the
        // locked vectors and check that it converges to the same excited
        // level.
        confirmed = true;
        excited = std::numeric_limits<double>::quiet_NaN();
        m_ = 0;
        expand(random_block(block_));
        continue;
      }

      if (n_locked_now > 0) {
        const Index keep = std::min<Index>(m_ - n_locked_now, max_basis_ / 2);
        restart(Y.middleCols(n_locked_now, keep), theta.segment(n_locked_now, keep));
        expand(random_block(block_));
        continue;
      }

      if (m_ + block_ > max_basis_) {
        const Index keep = std::min<Index>(m_, max_basis_ / 2);
        // The residual directions in R stay valid across the restart.
        restart(Y.leftCols(keep), theta.head(keep));
      }
      expand(R);
    }

    if (locked_values.empty()) {
      throw EigensolverError("eigensolver: no converged eigenpair");
    }
    GroundSpace gs;
    gs.energy = locked_values.front();
    gs.gap = std::isnan(excited) ? 0.0 : excited - gs.energy;
    for (Index c = 0; c < locked_.cols(); ++c) {
      std::vector<cplx> amps(static_cast<std::size_t>(dim_));
      for (Index r = 0; r < dim_; ++r) amps[static_cast<std::size_t>(r)] = locked_(r, c);
      gs.basis.push_back(StateVector::normalized(sites_, std::move(amps)));
    }
    return gs;
  }

 private:
  bool within_ground(double value, double ground) const {
    return value - ground <= opt_.degeneracy_tol * std::max(1.0, std::abs(ground));
  }

  void restart(const Matrix& Yk, const Eigen::VectorXd& values) {
    const Index keep = Yk.cols();
    const Matrix v = V_.leftCols(m_) * Yk;
    const Matrix hv = HV_.leftCols(m_) * Yk;
    V_.leftCols(keep) = v;
    HV_.leftCols(keep) = hv;
    T_.topLeftCorner(keep, keep).setZero();
    for (Index i = 0; i < keep; ++i) T_(i, i) = values(i);
    m_ = keep;
  }

  Matrix random_block(Index cols) {
    Matrix B(dim_, cols);
    auto uniform = [this] { return static_cast<double>(rng_() >> 11) * 0x1.0p-53 - 0.5; };
    for (Index c = 0; c < cols; ++c) {
      for (Index r = 0; r < dim_; ++r) {
        if constexpr (std::is_same_v<Scalar, double>) {
          B(r, c) = uniform();
        } else {
          const double re = uniform();
          B(r, c) = cplx{re, uniform()};
        }
      }
    }
    return B;
  }

  // Classical Gram-Schmidt, applied twice.
  template <typename Basis>
  static void project_out(const Basis& basis, Vector& v) {
    if (basis.cols() == 0) return;
    for (int pass = 0; pass < 2; ++pass) {
      const Vector h = basis.adjoint() * v;
      v.noalias() -= basis * h;
    }
  }

  void expand(const Matrix& directions) {
    Vector hv(dim_);
    for (Index c = 0; c < directions.cols() && m_ < max_basis_; ++c) {
      Vector v = directions.col(c);
      const double before = v.norm();
      if (before == 0.0) continue;
      project_out(locked_, v);
      project_out(V_.leftCols(m_), v);
      const double after = v.norm();
      // Drop directions already (numerically) in the span.
      if (after <= 1e-10 * before) continue;
      v /= after;
      if (++matvecs_ > budget_) {
        throw EigensolverError("eigensolver: no convergence within " +
                               std::to_string(budget_) +
                               " matrix-vector products");
      }
      op_.apply(v.data(), hv.data());
      V_.col(m_) = v;
      HV_.col(m_) = hv;
      T_.col(m_).head(m_ + 1) = V_.leftCols(m_ + 1).adjoint() * hv;
      ++m_;
    }
    if (directions.cols() > 0 && m_ == 0 && locked_.cols() < dim_) {
      if (++stalls_ > 8) throw EigensolverError("eigensolver: Krylov space collapsed");
      expand(random_block(block_));
    }
  }

  Operator<Scalar> op_;
  int sites_;
  const EigensolverOptions& opt_;
  Index dim_;
  std::mt19937_64 rng_;
  std::int64_t budget_ = 0;
  std::int64_t matvecs_ = 0;
  int stalls_ = 0;
  Index block_ = 1;
  Index max_basis_ = 1;
  Index m_ = 0;  // active columns of V_
  Matrix locked_;
  Matrix V_;
  Matrix HV_;
  Matrix T_;  // upper triangle of V^H H V
};

bool is_real(const SparseOperator& H) {
  return std::all_of(H.values().begin(), H.values().end(),
                     [](const cplx& v) { return v.imag() == 0.0; });
}

void check_dims(const GroundSpace& gs, int sites) {
  if (gs.basis.empty()) throw EigensolverError("empty ground space");
  if (gs.sites() != sites) {
    throw SpinOpsError("ground expectation: ground space has " +
                       std::to_string(gs.sites()) + " sites, operator " +
                       std::to_string(sites));
  }
}

}  // namespace

GroundSpace ground_space(const SparseOperator& H,
                         const EigensolverOptions& options) {
  if (H.sites() < 1) throw EigensolverError("ground_space: empty operator");
  if (H.sites() > kMaxSites) {
    throw EigensolverError("ground_space: dimension exceeds 2^" +
                           std::to_string(kMaxSites));
  }
  if (is_real(H)) return BlockKrylov<double>(H, options).run();
  return BlockKrylov<cplx>(H, options).run();
}

double ground_expectation(const GroundSpace& gs, const SparseOperator& op) {
  check_dims(gs, op.sites());
  double acc = 0.0;
  for (const StateVector& v : gs.basis) acc += expectation(v, op);
  return acc / static_cast<double>(gs.basis.size());
}

double ground_pauli_expectation(const GroundSpace& gs, const PauliString& ps) {
  check_dims(gs, ps.size());
  double acc = 0.0;
  for (const StateVector& v : gs.basis) acc += pauli_expectation(v.amplitudes(), ps);
  return acc / static_cast<double>(gs.basis.size());
}

}  // namespace shadowphase
