#include "shadowphase/shadows.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "shadowphase/kernels.hpp"

namespace shadowphase {

namespace {

using kernels::BasisCode;

// SplitMix64 keyed by (seed, snapshot index).
class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t index)
      : state_(seed ^ mix(index + 0x9e3779b97f4a7c15ULL)) {}

  std::uint64_t next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    return mix(state_);
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  std::uint32_t below(std::uint32_t bound) {
    return static_cast<std::uint32_t>(
        (static_cast<unsigned __int128>(next()) * bound) >> 64);
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  std::uint64_t state_;
};

int basis_shift(int n, int site) { return 2 * (n - 1 - site); }

BasisCode basis_at(std::uint32_t word, int n, int site) {
  return static_cast<BasisCode>((word >> basis_shift(n, site)) & 3u);
}

// Everything a snapshot needs before collapse.
struct Plan {
  int n = 0;
  std::vector<std::uint32_t> state_index;
  std::vector<std::uint32_t> bases;
  std::vector<double> variates;  // n per snapshot
};

Plan make_plan(const StateSource& source, std::int64_t T, std::uint64_t seed,
               std::span<const std::uint32_t> schedule) {
  if (T < 1) throw ShadowError("snapshot count must be at least 1");
  Plan plan;
  const int n = source.sites();
  plan.n = n;
  const auto count = static_cast<std::size_t>(T);
  plan.state_index.resize(count);
  plan.bases.resize(count);
  plan.variates.resize(count * static_cast<std::size_t>(n));
  const auto states = static_cast<std::uint32_t>(source.count());
  for (std::size_t m = 0; m < count; ++m) {
    Stream s(seed, m);
    plan.state_index[m] = s.below(states);
    if (schedule.empty()) {
      std::uint32_t word = 0;
      for (int i = 0; i < n; ++i) word |= (s.below(3) + 1) << basis_shift(n, i);
      plan.bases[m] = word;
    } else {
      plan.bases[m] = schedule[m];
    }
    for (int i = 0; i < n; ++i) plan.variates[m * n + i] = s.uniform();
  }
  return plan;
}

void check_schedule(std::span<const std::uint32_t> schedule, int n) {
  const std::uint32_t valid = n >= 16 ? ~0u : (1u << (2 * n)) - 1;
  for (std::uint32_t word : schedule) {
    if ((word & ~valid) != 0) throw ShadowError("schedule word uses bits beyond n sites");
    for (int i = 0; i < n; ++i) {
      if (basis_at(word, n, i) == BasisCode{0}) {
        throw ShadowError("schedule word leaves a site unmeasured");
      }
    }
  }
}

// Samples all snapshots of one state at once: snapshots sharing the bases
// and outcomes of the leading qubits share the collapsed state of the rest,
// so each distinct prefix is rotated only once.
class TreeSampler {
 public:
  TreeSampler(const Plan& plan, std::vector<std::uint16_t>& outcomes)
      : plan_(plan), outcomes_(outcomes), k_(kernels::active()) {
    const int n = plan.n;
    for (int q = 0; q < n; ++q) {
      const std::size_t half = std::size_t{1} << (n - q - 1);
      zero_.emplace_back(half);
      one_.emplace_back(half);
    }
  }

  void run(const cplx* amps, std::span<std::uint32_t> snapshots) {
    descend(amps, 0, snapshots);
  }

 private:
  void descend(const cplx* amps, int q, std::span<std::uint32_t> snaps) {
    const int n = plan_.n;
    const std::size_t half = std::size_t{1} << (n - q - 1);
    auto rest = snaps;
    for (BasisCode b : {BasisCode::X, BasisCode::Y, BasisCode::Z}) {
      const auto mid = std::partition(rest.begin(), rest.end(), [&](std::uint32_t m) {
        return basis_at(plan_.bases[m], n, q) == b;
      });
      const auto group = rest.first(static_cast<std::size_t>(mid - rest.begin()));
      rest = rest.subspan(group.size());
      if (group.empty()) continue;

      cplx* out0 = zero_[q].data();
      cplx* out1 = one_[q].data();
      const auto w = k_.rotate_leading_qubit(b, amps, amps + half, out0, out1, half);
      const double p0 = w.zero / (w.zero + w.one);
      const auto split = std::partition(group.begin(), group.end(), [&](std::uint32_t m) {
        return plan_.variates[m * n + q] < p0;
      });
      const auto zeros = group.first(static_cast<std::size_t>(split - group.begin()));
      const auto ones = group.subspan(zeros.size());
      const auto bit = static_cast<std::uint16_t>(1u << (n - 1 - q));
      for (std::uint32_t m : ones) outcomes_[m] |= bit;
      if (q + 1 < n) {
        if (!zeros.empty()) descend(out0, q + 1, zeros);
        if (!ones.empty()) descend(out1, q + 1, ones);
      }
    }
  }

  const Plan& plan_;
  std::vector<std::uint16_t>& outcomes_;
  const kernels::KernelTable& k_;
  std::vector<std::vector<cplx>> zero_;
  std::vector<std::vector<cplx>> one_;
};

ShadowEnsemble collapse_tree(const StateSource& source, const Plan& plan,
                             std::uint64_t seed) {
  const std::size_t T = plan.bases.size();
  std::vector<std::uint16_t> outcomes(T, 0);
  std::vector<std::vector<std::uint32_t>> by_state(source.count());
  for (std::uint32_t m = 0; m < T; ++m) by_state[plan.state_index[m]].push_back(m);
  TreeSampler sampler(plan, outcomes);
  for (std::size_t s = 0; s < by_state.size(); ++s) {
    if (!by_state[s].empty()) sampler.run(source.state(s).amplitudes().data(), by_state[s]);
  }
  return ShadowEnsemble(plan.n, seed, plan.bases, std::move(outcomes));
}

struct SupportMasks {
  std::uint32_t basis_pattern = 0;
  std::uint32_t basis_mask = 0;
  std::uint16_t outcome_mask = 0;
};

SupportMasks support_masks(const PauliString& P) {
  const int n = P.size();
  SupportMasks m;
  for (int i = 0; i < n; ++i) {
    if (P[i] == Pauli::I) continue;
    m.basis_pattern |= static_cast<std::uint32_t>(P[i]) << basis_shift(n, i);
    m.basis_mask |= 3u << basis_shift(n, i);
    m.outcome_mask |= static_cast<std::uint16_t>(1u << (n - 1 - i));
  }
  return m;
}

kernels::MatchTally tally(const ShadowEnsemble& ens, const PauliString& P) {
  if (P.size() != ens.sites()) {
    throw ShadowError("observable acts on " + std::to_string(P.size()) +
                      " sites, ensemble has " + std::to_string(ens.sites()));
  }
  const SupportMasks m = support_masks(P);
  return kernels::active().tally_matches(ens.packed_bases().data(),
                                         ens.packed_outcomes().data(), ens.size(),
                                         m.basis_pattern, m.basis_mask,
                                         m.outcome_mask);
}

}  // namespace

ShadowEnsemble::ShadowEnsemble(int n, std::uint64_t seed,
                               std::vector<std::uint32_t> bases,
                               std::vector<std::uint16_t> outcomes)
    : n_(n), seed_(seed), bases_(std::move(bases)), outcomes_(std::move(outcomes)) {
  if (n < 1 || n > kMaxSites) throw ShadowError("ensemble site count out of range");
  if (bases_.empty()) throw ShadowError("ensemble must hold at least one snapshot");
  if (bases_.size() != outcomes_.size()) {
    throw ShadowError("ensemble bases and outcomes differ in length");
  }
}

Snapshot ShadowEnsemble::at(std::size_t m) const {
  Snapshot s;
  s.bases = unpack_bases(bases_.at(m), n_);
  for (int i = 0; i < n_; ++i) s.outcomes.push_back((outcomes_[m] >> (n_ - 1 - i)) & 1);
  return s;
}

std::uint32_t pack_bases(std::span<const Pauli> bases) {
  const int n = static_cast<int>(bases.size());
  std::uint32_t word = 0;
  for (int i = 0; i < n; ++i) {
    if (bases[i] == Pauli::I) throw ShadowError("measurement basis must be X, Y or Z");
    word |= static_cast<std::uint32_t>(bases[i]) << basis_shift(n, i);
  }
  return word;
}

std::vector<Pauli> unpack_bases(std::uint32_t word, int n) {
  std::vector<Pauli> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[i] = static_cast<Pauli>(basis_at(word, n, i));
  return out;
}

StateSource::StateSource(StateVector state) { states_.push_back(std::move(state)); }

StateSource::StateSource(const GroundSpace& gs) : states_(gs.basis) {
  if (states_.empty()) throw ShadowError("ground space has no basis vectors");
}

ShadowEnsemble sample_snapshots(const StateSource& source, std::int64_t T,
                                std::uint64_t seed) {
  return collapse_tree(source, make_plan(source, T, seed, {}), seed);
}

ShadowEnsemble measure_in_bases(const StateSource& source,
                                std::span<const std::uint32_t> schedule,
                                std::uint64_t seed) {
  if (schedule.empty()) throw ShadowError("measurement schedule is empty");
  check_schedule(schedule, source.sites());
  const auto T = static_cast<std::int64_t>(schedule.size());
  return collapse_tree(source, make_plan(source, T, seed, schedule), seed);
}

ShadowEnsemble sample_snapshots_sequential(const StateSource& source,
                                           std::int64_t T, std::uint64_t seed) {
  const Plan plan = make_plan(source, T, seed, {});
  const int n = plan.n;
  const auto& k = kernels::active();
  std::vector<std::uint16_t> outcomes(plan.bases.size(), 0);
  std::vector<cplx> work;
  std::vector<cplx> out0;
  std::vector<cplx> out1;
  for (std::size_t m = 0; m < plan.bases.size(); ++m) {
    const auto amps = source.state(plan.state_index[m]).amplitudes();
    work.assign(amps.begin(), amps.end());
    for (int q = 0; q < n; ++q) {
      const std::size_t half = work.size() / 2;
      out0.resize(half);
      out1.resize(half);
      const auto w = k.rotate_leading_qubit(basis_at(plan.bases[m], n, q), work.data(),
                                            work.data() + half, out0.data(),
                                            out1.data(), half);
      const double p0 = w.zero / (w.zero + w.one);
      if (plan.variates[m * n + q] < p0) {
        work.swap(out0);
      } else {
        outcomes[m] |= static_cast<std::uint16_t>(1u << (n - 1 - q));
        work.swap(out1);
      }
      work.resize(half);
    }
  }
  return ShadowEnsemble(n, seed, plan.bases, std::move(outcomes));
}

double estimate_pauli(const ShadowEnsemble& ens, const PauliString& P) {
  const auto t = tally(ens, P);
  const double scale = std::pow(3.0, P.weight());
  return scale * static_cast<double>(t.signed_sum) / static_cast<double>(ens.size());
}

double matched_fraction(const ShadowEnsemble& ens, const PauliString& P) {
  return static_cast<double>(tally(ens, P).matched) / static_cast<double>(ens.size());
}

std::int64_t snapshot_budget(double M, int locality, double epsilon) {
  if (!(M >= 2.0)) throw ShadowError("snapshot budget needs at least 2 observables");
  if (locality < 1) throw ShadowError("snapshot budget needs locality >= 1");
  if (!(epsilon > 0.0)) throw ShadowError("snapshot budget needs epsilon > 0");
  const double x = 4.0 * std::pow(3.0, locality) * std::log(M) / (epsilon * epsilon);
  // Do not round up values that are integers up to floating-point noise.
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * x) return static_cast<std::int64_t>(r);
  return static_cast<std::int64_t>(std::ceil(x));
}

std::vector<std::uint32_t> derandomized_schedule(
    std::span<const PauliString> observables, std::int64_t T,
    const DerandomOptions& options) {
  if (observables.empty()) throw ShadowError("derandomization needs observables");
  if (T < 1) throw ShadowError("derandomization needs at least one round");
  const int n = observables.front().size();
  if (n < 1 || n > kMaxSites) throw ShadowError("observable site count out of range");

  // touching[q] lists (observable, label) pairs with q in the support.
  std::vector<std::vector<std::pair<std::size_t, Pauli>>> touching(n);
  std::vector<int> weight(observables.size());
  for (std::size_t o = 0; o < observables.size(); ++o) {
    if (observables[o].size() != n) throw ShadowError("observables differ in site count");
    for (int q : observables[o].support()) touching[q].push_back({o, observables[o][q]});
    weight[o] = observables[o].weight();
  }

  const double half_eta = options.eta / 2.0;
  const double shrink = -std::expm1(-half_eta);  // 1 - e^{-eta/2}
  const auto factor = [&](int remaining) { return 1.0 - shrink * std::pow(3.0, -remaining); };

  std::vector<std::int64_t> hits(observables.size(), 0);
  std::vector<double> scale(observables.size());
  std::vector<int> remaining(observables.size());
  std::vector<char> conflict(observables.size());
  std::vector<std::uint32_t> schedule;
  schedule.reserve(static_cast<std::size_t>(T));

  for (std::int64_t round = 0; round < T; ++round) {
    const std::int64_t least = *std::min_element(hits.begin(), hits.end());
    for (std::size_t o = 0; o < observables.size(); ++o) {
      scale[o] = std::exp(-half_eta * static_cast<double>(hits[o] - least));
      remaining[o] = weight[o];
      conflict[o] = 0;
    }
    std::uint32_t word = 0;
    for (int q = 0; q < n; ++q) {
      Pauli best = Pauli::X;
      double best_delta = 0.0;
      for (Pauli c : {Pauli::X, Pauli::Y, Pauli::Z}) {
        double delta = 0.0;
        for (const auto& [o, label] : touching[q]) {
          if (conflict[o]) continue;
          const double before = factor(remaining[o]);
          const double after = label == c ? factor(remaining[o] - 1) : 1.0;
          delta += scale[o] * (after - before);
        }
        if (c == Pauli::X || delta < best_delta) {
          best = c;
          best_delta = delta;
        }
      }
      for (const auto& [o, label] : touching[q]) {
        if (conflict[o]) continue;
        if (label == best) {
          --remaining[o];
        } else {
          conflict[o] = 1;
        }
      }
      word |= static_cast<std::uint32_t>(best) << basis_shift(n, q);
    }
    for (std::size_t o = 0; o < observables.size(); ++o) {
      if (!conflict[o]) ++hits[o];
    }
    schedule.push_back(word);
  }
  return schedule;
}

double estimate_derandomized(const StateSource& source,
                             std::span<const std::uint32_t> schedule,
                             const PauliString& P, std::uint64_t seed) {
  const ShadowEnsemble ens = measure_in_bases(source, schedule, seed);
  const auto t = tally(ens, P);
  if (t.matched == 0) {
    throw ShadowError("no scheduled round measures " + P.str());
  }
  return static_cast<double>(t.signed_sum) / static_cast<double>(t.matched);
}

double failure_proportion(std::span<const EstimateReport> reports,
                          double epsilon) {
  if (reports.empty()) throw ShadowError("failure proportion of an empty report list");
  std::size_t failed = 0;
  for (const EstimateReport& r : reports) {
    if (!r.exact) throw ShadowError("report for " + r.observable.str() + " has no exact value");
    if (std::abs(r.estimate - *r.exact) > epsilon) ++failed;
  }
  return static_cast<double>(failed) / static_cast<double>(reports.size());
}

}  // namespace shadowphase
