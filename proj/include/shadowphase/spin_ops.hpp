#pragma once

// Pauli algebra, state vectors, and sparse operators on n spin-1/2 sites.
//
// Site ordering convention (used everywhere in this library): site 0 is the
// most significant bit of a computational-basis index, i.e. basis state
// |b_0 b_1 ... b_{n-1}> has index sum_i b_i * 2^(n-1-i).

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace shadowphase {

using cplx = std::complex<double>;

/// Largest supported site count; bounded by the packed snapshot layout.
inline constexpr int kMaxSites = 14;

class SpinOpsError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

enum class Pauli : std::uint8_t { I = 0, X = 1, Y = 2, Z = 3 };

char to_char(Pauli p);
Pauli pauli_from_char(char c);

using Matrix2 = std::array<std::array<cplx, 2>, 2>;

/// Standard single-qubit Pauli matrix.
Matrix2 pauli_matrix(Pauli label);

/// A label in {I,X,Y,Z} per site.
class PauliString {
 public:
  PauliString() = default;
  explicit PauliString(int n);  // all identity
  explicit PauliString(std::vector<Pauli> labels);

  /// Parses e.g. "XIZ"; the string length is the site count.
  static PauliString parse(std::string_view text);

  /// Identity everywhere except `label` at each listed site.
  static PauliString on_sites(int n, std::span<const int> sites,
                              std::span<const Pauli> labels);

  int size() const { return static_cast<int>(labels_.size()); }
  Pauli operator[](int site) const { return labels_.at(site); }
  void set(int site, Pauli p) { labels_.at(site) = p; }
  const std::vector<Pauli>& labels() const { return labels_; }

  int weight() const;
  std::vector<int> support() const;
  std::string str() const;

  /// Computational-basis bits flipped by the string (X or Y sites).
  std::uint32_t flip_mask() const;
  /// Sites carrying Y or Z; they contribute a sign on |1>.
  std::uint32_t phase_mask() const;
  int y_count() const;

  friend bool operator==(const PauliString&, const PauliString&) = default;

 private:
  std::vector<Pauli> labels_;
};

/// Normalized pure state on n sites.
class StateVector {
 public:
  StateVector() = default;
  /// Validates normalization within 1e-10.
  StateVector(int n, std::vector<cplx> amplitudes);

  static StateVector basis_state(int n, std::uint32_t index);
  /// Normalizes the given amplitudes; throws on a zero vector.
  static StateVector normalized(int n, std::vector<cplx> amplitudes);

  int sites() const { return n_; }
  std::size_t dim() const { return amps_.size(); }
  std::span<const cplx> amplitudes() const { return amps_; }

 private:
  int n_ = 0;
  std::vector<cplx> amps_;
};

/// Sparse complex operator on the 2^n-dimensional space, CSR storage.
class SparseOperator {
 public:
  struct Term {
    cplx coefficient;
    PauliString pauli;
  };

  SparseOperator() = default;

  /// sum_k coefficient_k * pauli_k. Entries below 1e-15 after summation are
  /// dropped.
  static SparseOperator from_terms(int n, std::span<const Term> terms);
  static SparseOperator identity(int n);

  int sites() const { return n_; }
  std::size_t dim() const { return std::size_t{1} << n_; }
  std::size_t nonzeros() const { return vals_.size(); }

  /// y = A x
  void apply(std::span<const cplx> x, std::span<cplx> y) const;

  /// Matrix element <row|A|col>; zero when not stored.
  cplx element(std::size_t row, std::size_t col) const;

  /// max |A_ij - conj(A_ji)| over stored entries.
  double hermiticity_defect() const;
  bool is_hermitian(double tol = 1e-12) const {
    return hermiticity_defect() <= tol;
  }

  SparseOperator operator+(const SparseOperator& other) const;
  SparseOperator operator*(cplx s) const;

  std::span<const std::size_t> row_ptr() const { return row_ptr_; }
  std::span<const std::uint32_t> cols() const { return cols_; }
  std::span<const cplx> values() const { return vals_; }

 private:
  int n_ = 0;
  std::vector<std::size_t> row_ptr_;
  std::vector<std::uint32_t> cols_;
  std::vector<cplx> vals_;
};

/// Default cap on the site count accepted by embed_pauli_string.
inline constexpr int kDefaultEmbedCap = kMaxSites;

/// Kronecker product of the single-site matrices (site 0 leftmost factor).
SparseOperator embed_pauli_string(const PauliString& ps,
                                  int max_sites = kDefaultEmbedCap);

/// <psi|op|psi>. Throws if the imaginary part exceeds 1e-10.
double expectation(const StateVector& state, const SparseOperator& op);

/// <psi|P|psi> evaluated directly from the amplitudes without building the
/// operator.
double pauli_expectation(std::span<const cplx> amplitudes,
                         const PauliString& ps);

}  // namespace shadowphase
