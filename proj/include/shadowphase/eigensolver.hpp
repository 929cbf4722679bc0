#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "shadowphase/spin_ops.hpp"

namespace shadowphase {

class EigensolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EigensolverOptions {
  /// Eigenvalues within degeneracy_tol * max(1, |E0|) of E0 join the ground space.
  double degeneracy_tol = 1e-9;
  /// Required ||Hv - theta v|| for a Ritz pair to count as converged.
  double residual_tol = 1e-9;
  int block_size = 1;
  int max_basis = 64;
  /// Matrix-vector product budget; 0 means 10 * dim.
  std::int64_t max_matvecs = 0;
  std::uint64_t seed = 0x6a09e667f3bcc908ULL;
};

/// Lowest eigenvalue and an orthonormal basis of its eigenspace.
struct GroundSpace {
  double energy = 0.0;
  std::vector<StateVector> basis;
  /// Gap to the next converged level (informational).
  double gap = 0.0;

  int degeneracy() const { return static_cast<int>(basis.size()); }
  int sites() const { return basis.empty() ? 0 : basis.front().sites(); }
};

/// Ground space of a Hermitian operator via a restarted block Krylov
/// (block Lanczos / Davidson) iteration with full reorthogonalization and
/// locking. The start block is drawn from a seeded generator, so repeated
/// calls return identical results. Throws EigensolverError when the matvec
/// budget runs out.
GroundSpace ground_space(const SparseOperator& H,
                         const EigensolverOptions& options = {});

/// <op> in the ground space; for a degenerate space this is tr(P op)/d,
/// the maximally mixed ground-space state.
double ground_expectation(const GroundSpace& gs, const SparseOperator& op);

/// Same as ground_expectation for a single Pauli string, without building
/// the operator.
double ground_pauli_expectation(const GroundSpace& gs, const PauliString& ps);

}  // namespace shadowphase
