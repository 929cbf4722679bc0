#include "kernels_impl.hpp"

#include <bit>

namespace shadowphase::kernels {
namespace {

cplx dot_scalar(const cplx* a, const cplx* b, std::size_t n) {
  double re = 0.0;
  double im = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
  }
  return {re, im};
}

void axpy_scalar(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
  const double ar = alpha.real();
  const double ai = alpha.imag();
  for (std::size_t i = 0; i < n; ++i) {
    const double xr = x[i].real();
    const double xi = x[i].imag();
    y[i] += cplx{ar * xr - ai * xi, ar * xi + ai * xr};
  }
}

void scale_scalar(double s, cplx* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= s;
}

double norm_sq_scalar(const cplx* x, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::norm(x[i]);
  return acc;
}

void csr_matvec_scalar(std::size_t rows, const std::size_t* row_ptr,
                       const std::uint32_t* cols, const cplx* vals,
                       const cplx* x, cplx* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      const cplx v = vals[k];
      const cplx xv = x[cols[k]];
      re += v.real() * xv.real() - v.imag() * xv.imag();
      im += v.real() * xv.imag() + v.imag() * xv.real();
    }
    y[r] = cplx{re, im};
  }
}

void csr_matvec_real_scalar(std::size_t rows, const std::size_t* row_ptr,
                            const std::uint32_t* cols, const double* vals,
                            const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) acc += vals[k] * x[cols[k]];
    y[r] = acc;
  }
}

BranchWeights rotate_scalar(BasisCode basis, const cplx* upper,
                            const cplx* lower, cplx* out0, cplx* out1,
                            std::size_t half) {
  BranchWeights w;
  switch (basis) {
    case BasisCode::Z:
      for (std::size_t i = 0; i < half; ++i) {
        out0[i] = upper[i];
        out1[i] = lower[i];
        w.zero += std::norm(upper[i]);
        w.one += std::norm(lower[i]);
      }
      break;
    case BasisCode::X:
      // <+|psi>, <-|psi>
      for (std::size_t i = 0; i < half; ++i) {
        const cplx s = (upper[i] + lower[i]) * kInvSqrt2;
        const cplx d = (upper[i] - lower[i]) * kInvSqrt2;
        out0[i] = s;
        out1[i] = d;
        w.zero += std::norm(s);
        w.one += std::norm(d);
      }
      break;
    case BasisCode::Y:
      // <+i|psi> = (a - i b)/sqrt2, <-i|psi> = (a + i b)/sqrt2
      for (std::size_t i = 0; i < half; ++i) {
        const cplx ib{-lower[i].imag(), lower[i].real()};
        const cplx s = (upper[i] - ib) * kInvSqrt2;
        const cplx d = (upper[i] + ib) * kInvSqrt2;
        out0[i] = s;
        out1[i] = d;
        w.zero += std::norm(s);
        w.one += std::norm(d);
      }
      break;
  }
  return w;
}

MatchTally tally_scalar(const std::uint32_t* bases,
                        const std::uint16_t* outcomes, std::size_t count,
                        std::uint32_t basis_pattern, std::uint32_t basis_mask,
                        std::uint16_t outcome_mask) {
  MatchTally t;
  for (std::size_t m = 0; m < count; ++m) {
    if ((bases[m] & basis_mask) != basis_pattern) continue;
    ++t.matched;
    const int parity =
        std::popcount(static_cast<unsigned>(outcomes[m] & outcome_mask)) & 1;
    t.signed_sum += parity ? -1 : 1;
  }
  return t;
}

double squared_distance_scalar(const double* a, const double* b,
                               std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

const KernelTable& scalar() {
  static const KernelTable table{
      "scalar",         dot_scalar,    axpy_scalar,  scale_scalar,
      norm_sq_scalar,   csr_matvec_scalar, csr_matvec_real_scalar,
      rotate_scalar,    tally_scalar,  squared_distance_scalar,
  };
  return table;
}

}  // namespace shadowphase::kernels
