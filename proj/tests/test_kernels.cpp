#include <doctest.h>

#include <random>
#include <vector>

#include "shadowphase/kernels.hpp"
#include "shadowphase/spin_ops.hpp"

using namespace shadowphase;
namespace k = shadowphase::kernels;

namespace {

std::vector<k::cplx> random_vec(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> d;
  std::vector<k::cplx> v(n);
  for (auto& x : v) x = {d(rng), d(rng)};
  return v;
}

double max_diff(const std::vector<k::cplx>& a, const std::vector<k::cplx>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("scalar table is always present") {
  CHECK(k::scalar().name == "scalar");
  CHECK(!k::active().name.empty());
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  const k::KernelTable* v = k::avx2();
  if (v == nullptr) {
    MESSAGE("AVX2 unavailable; nothing to compare");
    return;
  }
  const k::KernelTable& s = k::scalar();
  std::mt19937_64 rng(11);

  for (std::size_t n : {0u, 1u, 2u, 3u, 5u, 8u, 17u, 64u, 1001u}) {
    CAPTURE(n);
    const auto a = random_vec(n, rng);
    const auto b = random_vec(n, rng);
    CHECK(std::abs(s.dot(a.data(), b.data(), n) - v->dot(a.data(), b.data(), n)) <= 1e-10 * (1.0 + n));
    CHECK(s.norm_sq(a.data(), n) == doctest::Approx(v->norm_sq(a.data(), n)).epsilon(1e-12));

    auto y1 = b, y2 = b;
    s.axpy({0.3, -1.2}, a.data(), y1.data(), n);
    v->axpy({0.3, -1.2}, a.data(), y2.data(), n);
    CHECK(max_diff(y1, y2) <= 1e-12);

    s.scale(-2.5, y1.data(), n);
    v->scale(-2.5, y2.data(), n);
    CHECK(max_diff(y1, y2) <= 1e-12);

    std::vector<double> ra(n), rb(n);
    for (std::size_t i = 0; i < n; ++i) {
      ra[i] = a[i].real();
      rb[i] = b[i].imag();
    }
    CHECK(s.squared_distance(ra.data(), rb.data(), n) ==
          doctest::Approx(v->squared_distance(ra.data(), rb.data(), n)).epsilon(1e-12));
  }
}

TEST_CASE("avx2 matvec and qubit rotation agree with the scalar reference") {
  const k::KernelTable* v = k::avx2();
  if (v == nullptr) return;
  const k::KernelTable& s = k::scalar();
  std::mt19937_64 rng(5);

  const int n = 7;
  std::vector<SparseOperator::Term> terms;
  terms.push_back({{0.7, 0.0}, PauliString::parse("XYZIIXZ")});
  terms.push_back({{-0.2, 0.0}, PauliString::parse("ZZIIIII")});
  terms.push_back({{1.1, 0.0}, PauliString::parse("IIIYIYI")});
  const SparseOperator H = SparseOperator::from_terms(n, terms);
  const auto x = random_vec(H.dim(), rng);
  std::vector<k::cplx> y1(H.dim()), y2(H.dim());
  s.csr_matvec(H.dim(), H.row_ptr().data(), H.cols().data(), H.values().data(), x.data(), y1.data());
  v->csr_matvec(H.dim(), H.row_ptr().data(), H.cols().data(), H.values().data(), x.data(), y2.data());
  CHECK(max_diff(y1, y2) <= 1e-12);

  const SparseOperator R = SparseOperator::from_terms(
      n, std::vector<SparseOperator::Term>{{{0.5, 0.0}, PauliString::parse("XXIIIIZ")},
                                           {{-1.0, 0.0}, PauliString::parse("IZZIIII")},
                                           {{0.25, 0.0}, PauliString::parse("IIIIXII")}});
  std::vector<double> rv(R.values().size());
  for (std::size_t i = 0; i < rv.size(); ++i) rv[i] = R.values()[i].real();
  std::vector<double> rx(R.dim()), ry1(R.dim()), ry2(R.dim());
  for (std::size_t i = 0; i < rx.size(); ++i) rx[i] = x[i].real();
  s.csr_matvec_real(R.dim(), R.row_ptr().data(), R.cols().data(), rv.data(), rx.data(), ry1.data());
  v->csr_matvec_real(R.dim(), R.row_ptr().data(), R.cols().data(), rv.data(), rx.data(), ry2.data());
  for (std::size_t i = 0; i < ry1.size(); ++i) CHECK(ry1[i] == doctest::Approx(ry2[i]).epsilon(1e-12));

  for (std::size_t half : {1u, 2u, 3u, 4u, 9u, 64u}) {
    for (auto basis : {k::BasisCode::X, k::BasisCode::Y, k::BasisCode::Z}) {
      const auto up = random_vec(half, rng);
      const auto lo = random_vec(half, rng);
      std::vector<k::cplx> a0(half), a1(half), b0(half), b1(half);
      const auto w1 = s.rotate_leading_qubit(basis, up.data(), lo.data(), a0.data(), a1.data(), half);
      const auto w2 = v->rotate_leading_qubit(basis, up.data(), lo.data(), b0.data(), b1.data(), half);
      CHECK(max_diff(a0, b0) <= 1e-12);
      CHECK(max_diff(a1, b1) <= 1e-12);
      CHECK(w1.zero == doctest::Approx(w2.zero).epsilon(1e-12));
      CHECK(w1.one == doctest::Approx(w2.one).epsilon(1e-12));
    }
  }
}

TEST_CASE("avx2 tally agrees with the scalar reference") {
  const k::KernelTable* v = k::avx2();
  if (v == nullptr) return;
  std::mt19937_64 rng(3);
  for (std::size_t count : {0u, 1u, 7u, 8u, 9u, 1000u}) {
    std::vector<std::uint32_t> bases(count);
    std::vector<std::uint16_t> outs(count);
    for (std::size_t i = 0; i < count; ++i) {
      std::uint32_t w = 0;
      for (int q = 0; q < 4; ++q) w = (w << 2) | static_cast<std::uint32_t>(1 + rng() % 3);
      bases[i] = w;
      outs[i] = static_cast<std::uint16_t>(rng() & 0xF);
    }
    const auto a = k::scalar().tally_matches(bases.data(), outs.data(), count, 0b01000011u, 0b11000011u, 0b1001);
    const auto b = v->tally_matches(bases.data(), outs.data(), count, 0b01000011u, 0b11000011u, 0b1001);
    CHECK(a.matched == b.matched);
    CHECK(a.signed_sum == b.signed_sum);
  }
}

TEST_CASE("rotation into Z keeps the computational branches") {
  const std::vector<k::cplx> up{{0.6, 0.0}}, lo{{0.0, 0.8}};
  std::vector<k::cplx> o0(1), o1(1);
  const auto w = k::scalar().rotate_leading_qubit(k::BasisCode::Z, up.data(), lo.data(), o0.data(), o1.data(), 1);
  CHECK(w.zero == doctest::Approx(0.36));
  CHECK(w.one == doctest::Approx(0.64));
}

TEST_CASE("rotation into X of |+> gives outcome 0 with certainty") {
  const double r = 1.0 / std::sqrt(2.0);
  const std::vector<k::cplx> up{{r, 0.0}}, lo{{r, 0.0}};
  std::vector<k::cplx> o0(1), o1(1);
  const auto w = k::scalar().rotate_leading_qubit(k::BasisCode::X, up.data(), lo.data(), o0.data(), o1.data(), 1);
  CHECK(w.zero == doctest::Approx(1.0));
  CHECK(w.one == doctest::Approx(0.0));
}
