#pragma once

// Data-parallel inner loops used across the library.
//
// Every kernel has a scalar reference implementation and, on x86-64, an AVX2
// variant. `active()` picks the best variant supported by the running CPU;
// the scalar table is always available so tests can compare the two.
// Setting SHADOWPHASE_KERNELS=scalar in the environment forces the scalar path.

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace shadowphase::kernels {

using cplx = std::complex<double>;

/// Squared norms of the two branches produced by a single-qubit basis change.
struct BranchWeights {
  double zero = 0.0;
  double one = 0.0;
};

/// Result of folding packed snapshots against one Pauli pattern.
struct MatchTally {
  std::int64_t matched = 0;     // snapshots whose bases agree on the support
  std::int64_t signed_sum = 0;  // sum of (-1)^parity over matched snapshots
};

/// Measurement basis codes, as stored in packed snapshots (2 bits per qubit).
enum class BasisCode : std::uint8_t { X = 1, Y = 2, Z = 3 };

struct KernelTable {
  std::string_view name;

  /// sum_i conj(a_i) * b_i
  cplx (*dot)(const cplx* a, const cplx* b, std::size_t n);
  /// y += alpha * x
  void (*axpy)(cplx alpha, const cplx* x, cplx* y, std::size_t n);
  /// x *= s
  void (*scale)(double s, cplx* x, std::size_t n);
  double (*norm_sq)(const cplx* x, std::size_t n);

  /// y = A x for a CSR matrix with `rows` rows.
  void (*csr_matvec)(std::size_t rows, const std::size_t* row_ptr,
                     const std::uint32_t* cols, const cplx* vals,
                     const cplx* x, cplx* y);
  /// Real-valued variant of csr_matvec.
  void (*csr_matvec_real)(std::size_t rows, const std::size_t* row_ptr,
                          const std::uint32_t* cols, const double* vals,
                          const double* x, double* y);

  /// Rotates the leading qubit of a state into `basis`.
  ///
  /// `upper`/`lower` are the halves of the state with the leading qubit in
  /// |0> and |1>. On return `out0`/`out1` hold the (unnormalized) amplitudes
  /// of the remaining qubits conditioned on measuring 0 and 1 respectively.
  BranchWeights (*rotate_leading_qubit)(BasisCode basis, const cplx* upper,
                                        const cplx* lower, cplx* out0,
                                        cplx* out1, std::size_t half);

  /// Folds packed snapshots: a snapshot matches when
  /// (bases & basis_mask) == basis_pattern; its sign is the parity of
  /// (outcomes & outcome_mask).
  MatchTally (*tally_matches)(const std::uint32_t* bases,
                              const std::uint16_t* outcomes, std::size_t count,
                              std::uint32_t basis_pattern,
                              std::uint32_t basis_mask,
                              std::uint16_t outcome_mask);

  double (*squared_distance)(const double* a, const double* b, std::size_t n);
};

const KernelTable& scalar();

/// AVX2 table, or nullptr when not compiled in or not supported by this CPU.
const KernelTable* avx2();

/// Table chosen at first use; stable for the lifetime of the process.
const KernelTable& active();

}  // namespace shadowphase::kernels
