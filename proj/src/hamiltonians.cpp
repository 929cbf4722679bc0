#include "shadowphase/hamiltonians.hpp"

#include <array>
#include <cmath>
#include <numbers>
#include <string>

namespace shadowphase {

namespace {

using Term = SparseOperator::Term;

PauliString two_site(int n, int a, int b, Pauli p) {
  const std::array<int, 2> sites{a, b};
  const std::array<Pauli, 2> labels{p, p};
  return PauliString::on_sites(n, sites, labels);
}

Pauli kitaev_label(BondKind kind) {
  switch (kind) {
    case BondKind::KitaevX: return Pauli::X;
    case BondKind::KitaevY: return Pauli::Y;
    case BondKind::KitaevZ: return Pauli::Z;
  }
  return Pauli::Z;
}

}  // namespace

void validate(const AnnniParams& p) {
  if (p.N < 2 || p.N > kMaxSites) {
    throw InvalidParams("ANNNI: N must be in [2, " + std::to_string(kMaxSites) +
                        "], got " + std::to_string(p.N));
  }
  if (!(p.k >= 0.0) || !(p.g >= 0.0)) {
    throw InvalidParams("ANNNI: k and g must be non-negative");
  }
}

void validate(const KhParams& p) {
  if (p.L < 4 || p.L % 2 != 0 || 2 * p.L > kMaxSites) {
    throw InvalidParams("KH ladder: L must be even, >= 4 and 2L <= " +
                        std::to_string(kMaxSites) + ", got " +
                        std::to_string(p.L));
  }
  if (!(p.phi >= 0.0) || !(p.phi < 2.0 * std::numbers::pi)) {
    throw InvalidParams("KH ladder: phi must lie in [0, 2pi)");
  }
}

SparseOperator build_annni(const AnnniParams& p) {
  validate(p);
  const int n = p.N;
  std::vector<Term> terms;
  // S^a S^b = sigma^a sigma^b / 4, S^x = sigma^x / 2.
  for (int i = 0; i + 1 < n; ++i) terms.push_back({-0.25, two_site(n, i, i + 1, Pauli::Z)});
  for (int i = 0; i + 2 < n; ++i) terms.push_back({0.25 * p.k, two_site(n, i, i + 2, Pauli::Z)});
  if (p.g != 0.0) {
    for (int i = 0; i < n; ++i) {
      const std::array<int, 1> s{i};
      const std::array<Pauli, 1> l{Pauli::X};
      terms.push_back({-0.5 * p.g, PauliString::on_sites(n, s, l)});
    }
  }
  return SparseOperator::from_terms(n, terms);
}

int ladder_site(int L, int rung, int leg) {
  const int r = ((rung - 1) % L + L) % L;
  return (leg - 1) * L + r;
}

std::vector<LadderBond> kh_bonds(int L) {
  std::vector<LadderBond> bonds;
  for (int i = 1; i <= L; ++i) {
    // Leg 1: x on (2j-1, 2j), y on (2j, 2j+1). Leg 2 is shifted by one.
    const bool odd = (i % 2) == 1;
    bonds.push_back({ladder_site(L, i, 1), ladder_site(L, i + 1, 1),
                     odd ? BondKind::KitaevX : BondKind::KitaevY, false});
    bonds.push_back({ladder_site(L, i, 2), ladder_site(L, i + 1, 2),
                     odd ? BondKind::KitaevY : BondKind::KitaevX, false});
  }
  for (int i = 1; i <= L; ++i) {
    bonds.push_back({ladder_site(L, i, 1), ladder_site(L, i, 2),
                     BondKind::KitaevZ, true});
  }
  return bonds;
}

SparseOperator build_kitaev_heisenberg(const KhParams& p) {
  validate(p);
  const int n = 2 * p.L;
  // sin/cos at multiples of pi/2 leave ~1e-17 residues; snap them to zero.
  const auto snap = [](double v) { return std::abs(v) < 1e-14 ? 0.0 : v; };
  const double kitaev = snap(std::sin(p.phi));
  const double heisenberg = snap(std::cos(p.phi));
  std::vector<Term> terms;
  for (const LadderBond& b : kh_bonds(p.L)) {
    for (Pauli a : {Pauli::X, Pauli::Y, Pauli::Z}) {
      double c = 0.25 * heisenberg;
      if (a == kitaev_label(b.kitaev)) c += 0.25 * kitaev;
      if (c != 0.0) terms.push_back({c, two_site(n, b.a, b.b, a)});
    }
  }
  return SparseOperator::from_terms(n, terms);
}

}  // namespace shadowphase
