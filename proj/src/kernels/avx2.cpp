// AVX2 + FMA variants. This translation unit is compiled with -mavx2 -mfma
// and must only be entered after a runtime CPU check (see dispatch.cpp).

#include <immintrin.h>

#include <algorithm>

#include "kernels_impl.hpp"

namespace shadowphase::kernels {
namespace {

inline const double* as_doubles(const cplx* p) {
  return reinterpret_cast<const double*>(p);
}
inline double* as_doubles(cplx* p) { return reinterpret_cast<double*>(p); }

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// (re0, im0, re1, im1) -> (im0, re0, im1, re1)
inline __m256d swap_parts(__m256d v) { return _mm256_permute_pd(v, 0b0101); }

// Two complex products a*b packed in one register.
inline __m256d cmul(__m256d a, __m256d b) {
  const __m256d a_re = _mm256_movedup_pd(a);
  const __m256d a_im = _mm256_permute_pd(a, 0b1111);
  return _mm256_fmaddsub_pd(a_re, b, _mm256_mul_pd(a_im, swap_parts(b)));
}

cplx dot_avx2(const cplx* a, const cplx* b, std::size_t n) {
  const double* pa = as_doubles(a);
  const double* pb = as_doubles(b);
  __m256d direct0 = _mm256_setzero_pd();
  __m256d direct1 = _mm256_setzero_pd();
  __m256d crossed0 = _mm256_setzero_pd();
  __m256d crossed1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d va0 = _mm256_loadu_pd(pa + 2 * i);
    const __m256d vb0 = _mm256_loadu_pd(pb + 2 * i);
    const __m256d va1 = _mm256_loadu_pd(pa + 2 * i + 4);
    const __m256d vb1 = _mm256_loadu_pd(pb + 2 * i + 4);
    direct0 = _mm256_fmadd_pd(va0, vb0, direct0);
    direct1 = _mm256_fmadd_pd(va1, vb1, direct1);
    crossed0 = _mm256_fmadd_pd(va0, swap_parts(vb0), crossed0);
    crossed1 = _mm256_fmadd_pd(va1, swap_parts(vb1), crossed1);
  }
  const __m256d direct = _mm256_add_pd(direct0, direct1);
  const __m256d crossed = _mm256_add_pd(crossed0, crossed1);
  alignas(32) double c[4];
  _mm256_store_pd(c, crossed);
  // crossed lanes: (ar*bi, ai*br, ...); Im = ar*bi - ai*br
  double re = hsum(direct);
  double im = (c[0] - c[1]) + (c[2] - c[3]);
  for (; i < n; ++i) {
    re += a[i].real() * b[i].real() + a[i].imag() * b[i].imag();
    im += a[i].real() * b[i].imag() - a[i].imag() * b[i].real();
  }
  return {re, im};
}

void axpy_avx2(cplx alpha, const cplx* x, cplx* y, std::size_t n) {
  const double* px = as_doubles(x);
  double* py = as_doubles(y);
  const __m256d ar = _mm256_set1_pd(alpha.real());
  const __m256d ai = _mm256_set1_pd(alpha.imag());
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const __m256d vx = _mm256_loadu_pd(px + 2 * i);
    const __m256d prod =
        _mm256_fmaddsub_pd(ar, vx, _mm256_mul_pd(ai, swap_parts(vx)));
    _mm256_storeu_pd(py + 2 * i,
                     _mm256_add_pd(_mm256_loadu_pd(py + 2 * i), prod));
  }
  for (; i < n; ++i) {
    const double xr = x[i].real();
    const double xi = x[i].imag();
    y[i] += cplx{alpha.real() * xr - alpha.imag() * xi,
                 alpha.real() * xi + alpha.imag() * xr};
  }
}

void scale_avx2(double s, cplx* x, std::size_t n) {
  double* px = as_doubles(x);
  const __m256d vs = _mm256_set1_pd(s);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    _mm256_storeu_pd(px + 2 * i, _mm256_mul_pd(vs, _mm256_loadu_pd(px + 2 * i)));
  }
  for (; i < n; ++i) x[i] *= s;
}

double norm_sq_avx2(const cplx* x, std::size_t n) {
  const double* px = as_doubles(x);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v0 = _mm256_loadu_pd(px + 2 * i);
    const __m256d v1 = _mm256_loadu_pd(px + 2 * i + 4);
    acc0 = _mm256_fmadd_pd(v0, v0, acc0);
    acc1 = _mm256_fmadd_pd(v1, v1, acc1);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += std::norm(x[i]);
  return acc;
}

void csr_matvec_avx2(std::size_t rows, const std::size_t* row_ptr,
                     const std::uint32_t* cols, const cplx* vals,
                     const cplx* x, cplx* y) {
  const double* pv = as_doubles(vals);
  const double* px = as_doubles(x);
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t k = row_ptr[r];
    const std::size_t end = row_ptr[r + 1];
    __m256d acc = _mm256_setzero_pd();
    for (; k + 2 <= end; k += 2) {
      const __m256d v = _mm256_loadu_pd(pv + 2 * k);
      const __m256d xv =
          _mm256_set_m128d(_mm_loadu_pd(px + 2 * std::size_t{cols[k + 1]}),
                           _mm_loadu_pd(px + 2 * std::size_t{cols[k]}));
      acc = _mm256_add_pd(acc, cmul(v, xv));
    }
    __m128d sum = _mm_add_pd(_mm256_castpd256_pd128(acc),
                             _mm256_extractf128_pd(acc, 1));
    if (k < end) {
      const cplx v = vals[k];
      const cplx xv = x[cols[k]];
      sum = _mm_add_pd(sum, _mm_set_pd(v.real() * xv.imag() + v.imag() * xv.real(),
                                       v.real() * xv.real() - v.imag() * xv.imag()));
    }
    _mm_storeu_pd(as_doubles(y + r), sum);
  }
}

void csr_matvec_real_avx2(std::size_t rows, const std::size_t* row_ptr,
                          const std::uint32_t* cols, const double* vals,
                          const double* x, double* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    std::size_t k = row_ptr[r];
    const std::size_t end = row_ptr[r + 1];
    __m256d acc = _mm256_setzero_pd();
    for (; k + 4 <= end; k += 4) {
      const __m128i idx = _mm_loadu_si128(reinterpret_cast<const __m128i*>(cols + k));
      const __m256d xv = _mm256_i32gather_pd(x, idx, 8);
      acc = _mm256_fmadd_pd(_mm256_loadu_pd(vals + k), xv, acc);
    }
    double sum = hsum(acc);
    for (; k < end; ++k) sum += vals[k] * x[cols[k]];
    y[r] = sum;
  }
}

BranchWeights rotate_avx2(BasisCode basis, const cplx* upper,
                          const cplx* lower, cplx* out0, cplx* out1,
                          std::size_t half) {
  const double* pu = as_doubles(upper);
  const double* pl = as_doubles(lower);
  double* p0 = as_doubles(out0);
  double* p1 = as_doubles(out1);
  const __m256d c = _mm256_set1_pd(kInvSqrt2);
  // Multiplying (re, im) pairs after swap_parts by this gives i*z.
  const __m256d times_i_sign = _mm256_setr_pd(-1.0, 1.0, -1.0, 1.0);
  __m256d w0 = _mm256_setzero_pd();
  __m256d w1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 2 <= half; i += 2) {
    const __m256d u = _mm256_loadu_pd(pu + 2 * i);
    const __m256d l = _mm256_loadu_pd(pl + 2 * i);
    __m256d s;
    __m256d d;
    switch (basis) {
      case BasisCode::Z:
        s = u;
        d = l;
        break;
      case BasisCode::X:
        s = _mm256_mul_pd(_mm256_add_pd(u, l), c);
        d = _mm256_mul_pd(_mm256_sub_pd(u, l), c);
        break;
      case BasisCode::Y:
      default: {
        const __m256d il = _mm256_mul_pd(swap_parts(l), times_i_sign);
        s = _mm256_mul_pd(_mm256_sub_pd(u, il), c);
        d = _mm256_mul_pd(_mm256_add_pd(u, il), c);
        break;
      }
    }
    _mm256_storeu_pd(p0 + 2 * i, s);
    _mm256_storeu_pd(p1 + 2 * i, d);
    w0 = _mm256_fmadd_pd(s, s, w0);
    w1 = _mm256_fmadd_pd(d, d, w1);
  }
  BranchWeights w{hsum(w0), hsum(w1)};
  if (i < half) {
    // Odd half only happens for a one-amplitude tail.
    const BranchWeights tail = scalar().rotate_leading_qubit(
        basis, upper + i, lower + i, out0 + i, out1 + i, half - i);
    w.zero += tail.zero;
    w.one += tail.one;
  }
  return w;
}

MatchTally tally_avx2(const std::uint32_t* bases, const std::uint16_t* outcomes,
                      std::size_t count, std::uint32_t basis_pattern,
                      std::uint32_t basis_mask, std::uint16_t outcome_mask) {
  const __m256i vpattern = _mm256_set1_epi32(static_cast<int>(basis_pattern));
  const __m256i vmask = _mm256_set1_epi32(static_cast<int>(basis_mask));
  const __m256i vomask = _mm256_set1_epi32(outcome_mask);
  const __m256i one = _mm256_set1_epi32(1);
  MatchTally t;
  std::size_t m = 0;
  // Per-lane int32 accumulators are flushed before they can overflow.
  constexpr std::size_t kFlushEvery = std::size_t{1} << 24;
  while (m + 8 <= count) {
    __m256i matched = _mm256_setzero_si256();
    __m256i negatives = _mm256_setzero_si256();
    const std::size_t block_end =
        std::min(count - (count - m) % 8, m + 8 * kFlushEvery);
    for (; m < block_end; m += 8) {
      const __m256i b = _mm256_loadu_si256(
          reinterpret_cast<const __m256i*>(bases + m));
      const __m256i o = _mm256_cvtepu16_epi32(
          _mm_loadu_si128(reinterpret_cast<const __m128i*>(outcomes + m)));
      const __m256i hit =
          _mm256_cmpeq_epi32(_mm256_and_si256(b, vmask), vpattern);
      __m256i p = _mm256_and_si256(o, vomask);
      p = _mm256_xor_si256(p, _mm256_srli_epi32(p, 8));
      p = _mm256_xor_si256(p, _mm256_srli_epi32(p, 4));
      p = _mm256_xor_si256(p, _mm256_srli_epi32(p, 2));
      p = _mm256_xor_si256(p, _mm256_srli_epi32(p, 1));
      p = _mm256_and_si256(p, one);
      matched = _mm256_sub_epi32(matched, hit);  // hit lanes are -1
      negatives = _mm256_add_epi32(negatives, _mm256_and_si256(p, hit));
    }
    alignas(32) std::int32_t mv[8];
    alignas(32) std::int32_t nv[8];
    _mm256_store_si256(reinterpret_cast<__m256i*>(mv), matched);
    _mm256_store_si256(reinterpret_cast<__m256i*>(nv), negatives);
    for (int lane = 0; lane < 8; ++lane) {
      t.matched += mv[lane];
      t.signed_sum += mv[lane] - 2 * static_cast<std::int64_t>(nv[lane]);
    }
  }
  if (m < count) {
    const MatchTally tail = scalar().tally_matches(
        bases + m, outcomes + m, count - m, basis_pattern, basis_mask,
        outcome_mask);
    t.matched += tail.matched;
    t.signed_sum += tail.signed_sum;
  }
  return t;
}

double squared_distance_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    const __m256d d1 =
        _mm256_sub_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
    acc1 = _mm256_fmadd_pd(d1, d1, acc1);
  }
  for (; i + 4 <= n; i += 4) {
    const __m256d d0 = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
    acc0 = _mm256_fmadd_pd(d0, d0, acc0);
  }
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable table{
      "avx2",          dot_avx2,        axpy_avx2,   scale_avx2,
      norm_sq_avx2,    csr_matvec_avx2, csr_matvec_real_avx2,
      rotate_avx2,     tally_avx2,      squared_distance_avx2,
  };
  return table;
}

}  // namespace shadowphase::kernels
