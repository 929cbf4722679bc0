#include "shadowphase/spin_ops.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "shadowphase/kernels.hpp"

namespace shadowphase {

namespace {

std::uint32_t site_bit(int n, int site) {
  return std::uint32_t{1} << (n - 1 - site);
}

void check_sites(int n) {
  if (n < 1 || n > kMaxSites) {
    throw SpinOpsError("site count must be in [1, " +
                       std::to_string(kMaxSites) + "], got " +
                       std::to_string(n));
  }
}

cplx i_power(int k) {
  switch (k & 3) {
    case 0: return {1.0, 0.0};
    case 1: return {0.0, 1.0};
    case 2: return {-1.0, 0.0};
    default: return {0.0, -1.0};
  }
}

}  // namespace

char to_char(Pauli p) {
  static constexpr char kChars[] = {'I', 'X', 'Y', 'Z'};
  return kChars[static_cast<int>(p)];
}

Pauli pauli_from_char(char c) {
  switch (c) {
    case 'I': case 'i': return Pauli::I;
    case 'X': case 'x': return Pauli::X;
    case 'Y': case 'y': return Pauli::Y;
    case 'Z': case 'z': return Pauli::Z;
    default:
      throw SpinOpsError(std::string("invalid Pauli label '") + c + "'");
  }
}

Matrix2 pauli_matrix(Pauli label) {
  const cplx o{0.0, 0.0};
  const cplx one{1.0, 0.0};
  const cplx i{0.0, 1.0};
  switch (label) {
    case Pauli::I: return {{{one, o}, {o, one}}};
    case Pauli::X: return {{{o, one}, {one, o}}};
    case Pauli::Y: return {{{o, -i}, {i, o}}};
    case Pauli::Z: return {{{one, o}, {o, -one}}};
  }
  throw SpinOpsError("invalid Pauli label");
}

PauliString::PauliString(int n) : labels_(static_cast<std::size_t>(n), Pauli::I) {
  if (n < 1) throw SpinOpsError("PauliString needs at least one site");
}

PauliString::PauliString(std::vector<Pauli> labels) : labels_(std::move(labels)) {
  if (labels_.empty()) throw SpinOpsError("PauliString needs at least one site");
}

PauliString PauliString::parse(std::string_view text) {
  std::vector<Pauli> labels;
  labels.reserve(text.size());
  for (char c : text) labels.push_back(pauli_from_char(c));
  return PauliString(std::move(labels));
}

PauliString PauliString::on_sites(int n, std::span<const int> sites,
                                  std::span<const Pauli> labels) {
  if (sites.size() != labels.size()) {
    throw SpinOpsError("on_sites: sites and labels differ in length");
  }
  PauliString ps(n);
  for (std::size_t k = 0; k < sites.size(); ++k) {
    if (sites[k] < 0 || sites[k] >= n) {
      throw SpinOpsError("on_sites: site " + std::to_string(sites[k]) +
                         " out of range");
    }
    ps.labels_[static_cast<std::size_t>(sites[k])] = labels[k];
  }
  return ps;
}

int PauliString::weight() const {
  return static_cast<int>(std::count_if(labels_.begin(), labels_.end(),
                                        [](Pauli p) { return p != Pauli::I; }));
}

std::vector<int> PauliString::support() const {
  std::vector<int> s;
  for (int i = 0; i < size(); ++i) {
    if (labels_[static_cast<std::size_t>(i)] != Pauli::I) s.push_back(i);
  }
  return s;
}

std::string PauliString::str() const {
  std::string s;
  s.reserve(labels_.size());
  for (Pauli p : labels_) s.push_back(to_char(p));
  return s;
}

std::uint32_t PauliString::flip_mask() const {
  std::uint32_t m = 0;
  for (int i = 0; i < size(); ++i) {
    const Pauli p = labels_[static_cast<std::size_t>(i)];
    if (p == Pauli::X || p == Pauli::Y) m |= site_bit(size(), i);
  }
  return m;
}

std::uint32_t PauliString::phase_mask() const {
  std::uint32_t m = 0;
  for (int i = 0; i < size(); ++i) {
    const Pauli p = labels_[static_cast<std::size_t>(i)];
    if (p == Pauli::Y || p == Pauli::Z) m |= site_bit(size(), i);
  }
  return m;
}

int PauliString::y_count() const {
  return static_cast<int>(
      std::count(labels_.begin(), labels_.end(), Pauli::Y));
}

StateVector::StateVector(int n, std::vector<cplx> amplitudes)
    : n_(n), amps_(std::move(amplitudes)) {
  check_sites(n);
  if (amps_.size() != (std::size_t{1} << n)) {
    throw SpinOpsError("state vector length does not match 2^n");
  }
  const double norm = kernels::active().norm_sq(amps_.data(), amps_.size());
  if (std::abs(norm - 1.0) > 1e-10) {
    throw SpinOpsError("state vector is not normalized (norm^2 = " +
                       std::to_string(norm) + ")");
  }
}

StateVector StateVector::basis_state(int n, std::uint32_t index) {
  check_sites(n);
  std::vector<cplx> amps(std::size_t{1} << n);
  if (index >= amps.size()) throw SpinOpsError("basis index out of range");
  amps[index] = 1.0;
  return StateVector(n, std::move(amps));
}

StateVector StateVector::normalized(int n, std::vector<cplx> amplitudes) {
  const auto& k = kernels::active();
  const double norm = k.norm_sq(amplitudes.data(), amplitudes.size());
  if (!(norm > 0.0)) throw SpinOpsError("cannot normalize a zero vector");
  k.scale(1.0 / std::sqrt(norm), amplitudes.data(), amplitudes.size());
  return StateVector(n, std::move(amplitudes));
}

SparseOperator SparseOperator::from_terms(int n, std::span<const Term> terms) {
  check_sites(n);
  for (const Term& t : terms) {
    if (t.pauli.size() != n) {
      throw SpinOpsError("term acts on " + std::to_string(t.pauli.size()) +
                         " sites, operator on " + std::to_string(n));
    }
  }
  struct Compiled {
    cplx coeff;
    std::uint32_t flip;
    std::uint32_t phase;
  };
  std::vector<Compiled> compiled;
  compiled.reserve(terms.size());
  for (const Term& t : terms) {
    compiled.push_back({t.coefficient * i_power(t.pauli.y_count()),
                        t.pauli.flip_mask(), t.pauli.phase_mask()});
  }

  SparseOperator op;
  op.n_ = n;
  const std::size_t dim = std::size_t{1} << n;
  op.row_ptr_.reserve(dim + 1);
  op.row_ptr_.push_back(0);
  std::vector<std::pair<std::uint32_t, cplx>> row;
  for (std::uint32_t r = 0; r < dim; ++r) {
    row.clear();
    for (const Compiled& c : compiled) {
      // P|col> = phase(col) |col ^ flip>, so row r couples to col = r ^ flip.
      const std::uint32_t col = r ^ c.flip;
      const bool negative = std::popcount(col & c.phase) & 1;
      row.emplace_back(col, negative ? -c.coeff : c.coeff);
    }
    std::sort(row.begin(), row.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    for (std::size_t k = 0; k < row.size();) {
      std::uint32_t col = row[k].first;
      cplx sum{0.0, 0.0};
      for (; k < row.size() && row[k].first == col; ++k) sum += row[k].second;
      if (std::abs(sum) > 1e-15) {
        op.cols_.push_back(col);
        op.vals_.push_back(sum);
      }
    }
    op.row_ptr_.push_back(op.cols_.size());
  }
  return op;
}

SparseOperator SparseOperator::identity(int n) {
  const Term t{1.0, PauliString(n)};
  return from_terms(n, std::span<const Term>(&t, 1));
}

void SparseOperator::apply(std::span<const cplx> x, std::span<cplx> y) const {
  if (x.size() != dim() || y.size() != dim()) {
    throw SpinOpsError("apply: dimension mismatch");
  }
  kernels::active().csr_matvec(dim(), row_ptr_.data(), cols_.data(),
                               vals_.data(), x.data(), y.data());
}

cplx SparseOperator::element(std::size_t row, std::size_t col) const {
  if (row >= dim() || col >= dim()) throw SpinOpsError("element out of range");
  const auto first = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[row]);
  const auto last = cols_.begin() + static_cast<std::ptrdiff_t>(row_ptr_[row + 1]);
  const auto it = std::lower_bound(first, last, static_cast<std::uint32_t>(col));
  if (it == last || *it != col) return {0.0, 0.0};
  return vals_[static_cast<std::size_t>(it - cols_.begin())];
}

double SparseOperator::hermiticity_defect() const {
  double worst = 0.0;
  for (std::size_t r = 0; r < dim(); ++r) {
    for (std::size_t k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const cplx mirror = element(cols_[k], r);
      worst = std::max(worst, std::abs(vals_[k] - std::conj(mirror)));
    }
  }
  return worst;
}

SparseOperator SparseOperator::operator+(const SparseOperator& other) const {
  if (n_ != other.n_) throw SpinOpsError("operator sum: site count mismatch");
  SparseOperator out;
  out.n_ = n_;
  out.row_ptr_.reserve(dim() + 1);
  out.row_ptr_.push_back(0);
  for (std::size_t r = 0; r < dim(); ++r) {
    std::size_t a = row_ptr_[r];
    std::size_t b = other.row_ptr_[r];
    const std::size_t a_end = row_ptr_[r + 1];
    const std::size_t b_end = other.row_ptr_[r + 1];
    while (a < a_end || b < b_end) {
      std::uint32_t col;
      cplx v{0.0, 0.0};
      if (b >= b_end || (a < a_end && cols_[a] < other.cols_[b])) {
        col = cols_[a];
        v = vals_[a++];
      } else if (a >= a_end || other.cols_[b] < cols_[a]) {
        col = other.cols_[b];
        v = other.vals_[b++];
      } else {
        col = cols_[a];
        v = vals_[a++] + other.vals_[b++];
      }
      if (std::abs(v) > 1e-15) {
        out.cols_.push_back(col);
        out.vals_.push_back(v);
      }
    }
    out.row_ptr_.push_back(out.cols_.size());
  }
  return out;
}

SparseOperator SparseOperator::operator*(cplx s) const {
  SparseOperator out = *this;
  for (cplx& v : out.vals_) v *= s;
  return out;
}

SparseOperator embed_pauli_string(const PauliString& ps, int max_sites) {
  if (ps.size() > max_sites) {
    throw SpinOpsError("embed_pauli_string: " + std::to_string(ps.size()) +
                       " sites exceeds the cap of " + std::to_string(max_sites));
  }
  const SparseOperator::Term t{1.0, ps};
  return SparseOperator::from_terms(ps.size(),
                                    std::span<const SparseOperator::Term>(&t, 1));
}

double expectation(const StateVector& state, const SparseOperator& op) {
  if (state.sites() != op.sites()) {
    throw SpinOpsError("expectation: state has " +
                       std::to_string(state.sites()) + " sites, operator " +
                       std::to_string(op.sites()));
  }
  std::vector<cplx> tmp(state.dim());
  op.apply(state.amplitudes(), tmp);
  const cplx v = kernels::active().dot(state.amplitudes().data(), tmp.data(),
                                       tmp.size());
  if (std::abs(v.imag()) > 1e-10) {
    throw SpinOpsError("expectation: imaginary part " +
                       std::to_string(v.imag()) + " exceeds 1e-10");
  }
  return v.real();
}

double pauli_expectation(std::span<const cplx> amplitudes,
                         const PauliString& ps) {
  const std::size_t dim = std::size_t{1} << ps.size();
  if (amplitudes.size() != dim) {
    throw SpinOpsError("pauli_expectation: dimension mismatch");
  }
  const std::uint32_t flip = ps.flip_mask();
  const std::uint32_t phase = ps.phase_mask();
  cplx acc{0.0, 0.0};
  for (std::uint32_t col = 0; col < dim; ++col) {
    const cplx a = amplitudes[col];
    if (a == cplx{0.0, 0.0}) continue;
    const cplx term = std::conj(amplitudes[col ^ flip]) * a;
    acc += (std::popcount(col & phase) & 1) ? -term : term;
  }
  acc *= i_power(ps.y_count());
  return acc.real();
}

}  // namespace shadowphase
