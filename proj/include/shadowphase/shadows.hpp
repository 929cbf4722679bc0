#pragma once

// Classical shadows from randomized single-qubit Pauli measurements.
//
// A snapshot is stored packed: the measurement basis of site i occupies bits
// 2(n-1-i)..2(n-1-i)+1 of a 32-bit word (X=1, Y=2, Z=3), and the outcome bit
// of site i is bit n-1-i of a 16-bit word, so the outcome word equals the
// index of the observed computational-basis state after rotation.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "shadowphase/eigensolver.hpp"
#include "shadowphase/spin_ops.hpp"

namespace shadowphase {

class ShadowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Snapshot {
  std::vector<Pauli> bases;  // X, Y or Z per site
  std::vector<int> outcomes;  // 0 or 1 per site
};

class ShadowEnsemble {
 public:
  ShadowEnsemble() = default;
  ShadowEnsemble(int n, std::uint64_t seed, std::vector<std::uint32_t> bases,
                 std::vector<std::uint16_t> outcomes);

  int sites() const { return n_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t size() const { return bases_.size(); }
  std::span<const std::uint32_t> packed_bases() const { return bases_; }
  std::span<const std::uint16_t> packed_outcomes() const { return outcomes_; }

  Snapshot at(std::size_t m) const;

  friend bool operator==(const ShadowEnsemble&, const ShadowEnsemble&) = default;

 private:
  int n_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::uint32_t> bases_;
  std::vector<std::uint16_t> outcomes_;
};

std::uint32_t pack_bases(std::span<const Pauli> bases);
std::vector<Pauli> unpack_bases(std::uint32_t word, int n);

/// States to measure: one pure state, or a degenerate ground space from which
/// every snapshot draws a basis vector uniformly at random.
class StateSource {
 public:
  explicit StateSource(StateVector state);
  explicit StateSource(const GroundSpace& gs);

  int sites() const { return states_.front().sites(); }
  std::size_t count() const { return states_.size(); }
  const StateVector& state(std::size_t i) const { return states_[i]; }

 private:
  std::vector<StateVector> states_;
};

/// T snapshots with uniformly random bases. Snapshot m draws everything it
/// needs (state index, bases, outcome variates) from its own stream derived
/// from (seed, m), so the result does not depend on evaluation order.
ShadowEnsemble sample_snapshots(const StateSource& source, std::int64_t T,
                                std::uint64_t seed);

/// Measures snapshot m in the packed bases schedule[m]; outcomes use the same
/// per-snapshot streams as sample_snapshots.
ShadowEnsemble measure_in_bases(const StateSource& source,
                                std::span<const std::uint32_t> schedule,
                                std::uint64_t seed);

/// Reference implementation of sample_snapshots that collapses each snapshot
/// independently, qubit by qubit. Produces identical ensembles.
ShadowEnsemble sample_snapshots_sequential(const StateSource& source,
                                           std::int64_t T, std::uint64_t seed);

/// Mean over snapshots of the matched-basis estimator: 3^w times the outcome
/// parity on the support when every basis on the support matches P, else 0.
double estimate_pauli(const ShadowEnsemble& ens, const PauliString& P);

/// Fraction of snapshots whose bases match P on its support.
double matched_fraction(const ShadowEnsemble& ens, const PauliString& P);

/// ceil(4 * 3^l * ln(M) / eps^2).
std::int64_t snapshot_budget(double M, int locality, double epsilon);

struct DerandomOptions {
  /// Exponent scale of the per-observable confidence bound.
  double eta = 0.9;
};

/// T packed basis assignments chosen greedily, round by round and qubit by
/// qubit, to minimize sum_o exp(-eta/2 * hits_o) * (1 - (1 - e^{-eta/2})/3^r_o)
/// where hits_o counts completed rounds matching o and r_o the number of
/// still-unassigned support qubits of o in the current round (the factor is
/// 1 once the round conflicts with o). Ties choose X, then Y, then Z.
std::vector<std::uint32_t> derandomized_schedule(
    std::span<const PauliString> observables, std::int64_t T,
    const DerandomOptions& options = {});

/// Measures the source along the schedule and returns the mean outcome parity
/// on the support of P over rounds matching P.
double estimate_derandomized(const StateSource& source,
                             std::span<const std::uint32_t> schedule,
                             const PauliString& P, std::uint64_t seed);

struct EstimateReport {
  PauliString observable;
  double estimate = 0.0;
  std::optional<double> exact;
  double epsilon = 0.0;

  bool within_bound() const {
    return exact.has_value() && std::abs(estimate - *exact) <= epsilon;
  }
};

/// N_fail / N_total with N_fail = #{|estimate - exact| > epsilon}.
double failure_proportion(std::span<const EstimateReport> reports,
                          double epsilon);

/// Binary archive: "SPSHADOW", u32 version, u32 n, u64 T, u64 seed, then T
/// records of (u32 bases, u16 outcomes), all little-endian.
void write_archive(const std::filesystem::path& path, const ShadowEnsemble& ens);
ShadowEnsemble read_archive(const std::filesystem::path& path);

}  // namespace shadowphase
