#include <doctest.h>

#include <numbers>

#include "oracle.hpp"
#include "shadowphase/eigensolver.hpp"
#include "shadowphase/hamiltonians.hpp"

using namespace shadowphase;

namespace {

double residual(const SparseOperator& H, const StateVector& v, double e) {
  std::vector<cplx> hv(H.dim());
  H.apply(v.amplitudes(), hv);
  double r = 0.0;
  for (std::size_t i = 0; i < hv.size(); ++i) r += std::norm(hv[i] - e * v.amplitudes()[i]);
  return std::sqrt(r);
}

void check_invariants(const SparseOperator& H, const GroundSpace& gs) {
  for (const auto& v : gs.basis) CHECK(residual(H, v, gs.energy) < 1e-8);
  for (std::size_t a = 0; a < gs.basis.size(); ++a) {
    for (std::size_t b = 0; b < gs.basis.size(); ++b) {
      cplx d = 0;
      for (std::size_t i = 0; i < H.dim(); ++i)
        d += std::conj(gs.basis[a].amplitudes()[i]) * gs.basis[b].amplitudes()[i];
      CHECK(std::abs(d - (a == b ? 1.0 : 0.0)) < 1e-10);
    }
  }
}

}  // namespace

TEST_CASE("classical ferromagnet has a twofold ground space") {
  const auto H = build_annni({4, 0.2, 0.0});
  const GroundSpace gs = ground_space(H);
  CHECK(gs.energy == doctest::Approx(-0.65));
  CHECK(gs.degeneracy() == 2);
  check_invariants(H, gs);
  CHECK(ground_pauli_expectation(gs, PauliString::parse("ZZII")) == doctest::Approx(1.0));
  CHECK(ground_pauli_expectation(gs, PauliString::parse("ZIII")) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(ground_expectation(gs, embed_pauli_string(PauliString::parse("ZIII"))) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("strong field polarizes along x") {
  const auto H = build_annni({2, 0.0, 100.0});
  const GroundSpace gs = ground_space(H);
  CHECK(gs.degeneracy() == 1);
  CHECK(gs.energy == doctest::Approx(-100.0).epsilon(1e-4));
  CHECK(ground_pauli_expectation(gs, PauliString::parse("XX")) == doctest::Approx(1.0).epsilon(1e-4));
}

TEST_CASE("ground spaces agree with dense diagonalization") {
  struct Case {
    const char* name;
    SparseOperator H;
    oracle::Mat ref;
  };
  std::vector<Case> cases;
  for (auto [k, g] : {std::pair{0.1, 0.1}, {0.5, 0.5}, {0.9, 0.2}, {0.3, 0.0}, {0.6, 1.0}}) {
    cases.push_back({"chain", build_annni({8, k, g}), oracle::annni(8, k, g)});
  }
  for (double phi_pi : {0.0, 0.5, 0.65, 1.0, 1.5, 1.62}) {
    const double phi = phi_pi * std::numbers::pi;
    cases.push_back({"ladder", build_kitaev_heisenberg({4, phi}), oracle::kitaev_heisenberg(4, phi)});
  }
  for (const auto& c : cases) {
    CAPTURE(c.name);
    const GroundSpace gs = ground_space(c.H);
    const oracle::Ground ref = oracle::ground(c.ref);
    CHECK(gs.energy == doctest::Approx(ref.energy).epsilon(1e-10));
    CHECK(gs.degeneracy() == ref.degeneracy);
    check_invariants(c.H, gs);
    for (const char* s : {"ZZIIIIII", "XIXIIIII", "YYIIIIII", "IIIXXIII", "ZIIIZIII"}) {
      CHECK(ground_pauli_expectation(gs, PauliString::parse(s)) ==
            doctest::Approx(oracle::expect(ref, oracle::string_op(s))).epsilon(1e-8));
    }
  }
}

TEST_CASE("isotropic antiferromagnetic ladder has a unique ground state") {
  const GroundSpace gs = ground_space(build_kitaev_heisenberg({4, 0.0}));
  CHECK(gs.degeneracy() == 1);
  // Rung singlet character: negative rung correlations.
  CHECK(ground_pauli_expectation(gs, PauliString::parse("ZIIIZIII")) < 0.0);
}

TEST_CASE("solver is deterministic") {
  const auto H = build_annni({8, 0.4, 0.3});
  const GroundSpace a = ground_space(H);
  const GroundSpace b = ground_space(H);
  CHECK(a.energy == b.energy);
  REQUIRE(a.degeneracy() == b.degeneracy());
  for (std::size_t i = 0; i < a.basis.front().dim(); ++i) {
    CHECK(a.basis.front().amplitudes()[i] == b.basis.front().amplitudes()[i]);
  }
}

TEST_CASE("exhausted matvec budget is an explicit failure") {
  EigensolverOptions opt;
  opt.max_matvecs = 3;
  CHECK_THROWS_AS(ground_space(build_annni({8, 0.4, 0.3}), opt), EigensolverError);
}
