#pragma once

#include <vector>

#include "shadowphase/spin_ops.hpp"

namespace shadowphase {

class InvalidParams : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// ANNNI chain with J1 = 1: k = J2/J1, g = h/J1.
struct AnnniParams {
  int N = 12;
  double k = 0.0;
  double g = 0.0;
};

/// Kitaev-Heisenberg two-leg ladder with K = sin(phi), J = cos(phi).
struct KhParams {
  int L = 6;  // rungs (sites per leg)
  double phi = 0.0;
};

void validate(const AnnniParams& p);
void validate(const KhParams& p);

/// H = -sum S^z_i S^z_{i+1} + k sum S^z_i S^z_{i+2} - g sum S^x_i, open chain.
SparseOperator build_annni(const AnnniParams& p);

/// Ladder sites are numbered leg-major: rung r (1-based) on leg 1 is site
/// r-1, on leg 2 it is L + r - 1.
int ladder_site(int L, int rung, int leg);

enum class BondKind { KitaevX, KitaevY, KitaevZ };

struct LadderBond {
  int a;  // 0-based site indices
  int b;
  BondKind kitaev;
  bool on_rung;
};

/// Every nearest-neighbour bond of the periodic ladder with its Kitaev
/// component. Each bond carries one Kitaev term and one Heisenberg term.
std::vector<LadderBond> kh_bonds(int L);

/// K sum S^gamma S^gamma over Kitaev bonds + J sum S.S over all NN bonds,
/// periodic along the legs.
SparseOperator build_kitaev_heisenberg(const KhParams& p);

}  // namespace shadowphase
