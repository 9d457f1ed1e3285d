#pragma once

#include <gmpxx.h>

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace narrowlab {

using BigInt = mpz_class;
using Rational = mpq_class;

/// num/den in canonical form (GMP comparisons assume it).
inline Rational ratio_of(std::size_t num, std::size_t den) {
  Rational r(static_cast<long>(num), static_cast<long>(den));
  r.canonicalize();
  return r;
}

/// Affine form coeffs . x + constant over Z^d.
struct LinearForm {
  std::vector<std::int64_t> coeffs;
  std::int64_t constant = 0;

  std::size_t dim() const noexcept { return coeffs.size(); }
  /// Exact value; throws DomainError on 128-bit overflow.
  __int128 evaluate(std::span<const std::int64_t> x) const;

  friend bool operator==(const LinearForm&, const LinearForm&) = default;
};

/// Ordered list of pairwise distinct affine forms in a common dimension d.
class LinearSystem {
 public:
  LinearSystem(std::size_t dim, std::vector<LinearForm> forms, std::vector<std::string> variable_names = {});

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return forms_.size(); }
  const std::vector<LinearForm>& forms() const noexcept { return forms_; }
  const LinearForm& operator[](std::size_t i) const { return forms_.at(i); }
  const std::vector<std::string>& variable_names() const noexcept { return names_; }

  /// Human-readable form, e.g. "2x1 - y3 + 1".
  std::string describe(std::size_t i) const;

  /// Interchange text: one form per line, "c0; c1 c2 ... cd". '#' starts a comment.
  std::string to_text() const;
  static LinearSystem from_text(const std::string& text);

 private:
  std::size_t dim_;
  std::vector<LinearForm> forms_;
  std::vector<std::string> names_;
};

/// Partition of {0, ..., t-1} into disjoint non-empty atoms.
struct FormPartition {
  std::vector<std::vector<std::size_t>> atoms;

  std::size_t size() const noexcept { return atoms.size(); }
  /// Throws DomainError unless the atoms exactly partition {0..t-1}.
  void validate(std::size_t t) const;
  static FormPartition discrete(std::size_t t);
  /// From a label per element (equal labels share an atom); atoms ordered by first element.
  static FormPartition from_labels(std::span<const std::size_t> labels);
};

/// Affine flat {x : r . (x, 1) = 0 for every constraint row r}, stored in reduced
/// row-echelon form over Q on d+1 columns (coefficients, then constant). The echelon
/// form is canonical, so key() identifies the flat.
class Subspace {
 public:
  explicit Subspace(std::size_t dim);

  std::size_t dim() const noexcept { return dim_; }
  std::size_t codim() const noexcept { return rows_.size(); }
  bool feasible() const noexcept { return feasible_; }
  const std::vector<std::vector<Rational>>& rows() const noexcept { return rows_; }
  const std::vector<std::size_t>& pivots() const noexcept { return pivots_; }

  /// Remainder of an augmented row modulo the constraint span (canonical coset representative).
  std::vector<Rational> reduce(std::vector<Rational> row) const;
  bool implies(const std::vector<Rational>& row) const;
  /// Intersection with {row . (x, 1) = 0}; infeasible result when inconsistent.
  Subspace with(const std::vector<Rational>& row) const;

  std::string key() const;
  std::string describe(const std::vector<std::string>& names = {}) const;

 private:
  std::size_t dim_;
  std::vector<std::vector<Rational>> rows_;
  std::vector<std::size_t> pivots_;
  bool feasible_ = true;
};

/// (psi_i - psi_j) as an augmented rational row.
std::vector<Rational> difference_row(const LinearForm& a, const LinearForm& b);

/// The flat Pi(Psi, pi): within-atom differences vanish.
Subspace partition_flat(const LinearSystem& sys, const FormPartition& pi);

/// Forms that coincide as functions on the flat (flat must be feasible).
FormPartition induced_partition(const LinearSystem& sys, const Subspace& flat);

/// codim Pi(Psi, pi); nullopt encodes the infinite codimension of an empty flat.
std::optional<std::size_t> codim_of_partition(const LinearSystem& sys, const FormPartition& pi);

// --- named systems ---

/// psi_j(s) = sum_i (j - i) s_i over k variables, 1 <= j <= k.
LinearForm psi_j(int k, int j);
/// First family: psi_j(s^(omega)) for each j and omega in {0,1}^{[k]\{j}}; 2k variables
/// (x1..xk = s^(0), y1..yk = s^(1)); k 2^{k-1} forms.
LinearSystem first_family(int k);
/// Second family: k! sum_i s_i^(omega_i), omega in {0,1}^k; 2^k forms.
LinearSystem second_family(int k);
/// Third family: the zero form and (i - j) d^(tau), i != j, tau in {0,1}; variables d0, d1.
LinearSystem third_family(int k, int j);

/// Distinct consistent hyperplanes {psi_i = psi_j}, each as a single normalized row.
std::vector<std::vector<Rational>> difference_kernels(const LinearSystem& sys);

/// Every non-empty intersection of difference kernels, the whole space first,
/// in order of increasing codimension. Throws ResourceError above max_subspaces.
std::vector<Subspace> closure_lattice(const LinearSystem& sys, std::size_t max_subspaces = 5'000'000);

struct LIndexOptions {
  std::size_t max_subspaces = 5'000'000;
};

struct LIndexResult {
  Rational value;                 ///< L(Psi); 0 when no partition has finite codimension
  std::optional<FormPartition> witness;
  std::size_t witness_codim = 0;
  std::size_t witness_merges = 0;  ///< t - |pi|
  std::size_t subspaces_explored = 0;
  std::optional<Subspace> witness_flat;
};

/// L(Psi) by breadth-first search over the closure lattice of pairwise-difference
/// kernels; each flat contributes its induced partition.
LIndexResult lindex(const LinearSystem& sys, const LIndexOptions& options = {});

/// L(Psi) by enumerating all set partitions (t <= 8).
LIndexResult lindex_bruteforce(const LinearSystem& sys);

struct MinDistinctResult {
  std::size_t min_count = 0;
  std::optional<Subspace> witness;  ///< nullopt when the minimum is attained by a generic subspace
  std::size_t candidates = 0;
};

/// Minimum over subspaces of codimension c in {1, 2} of the number of distinct restricted forms.
MinDistinctResult min_distinct_on_codim(const LinearSystem& sys, int c);

struct SolutionLattice {
  std::size_t dimension = 0;              ///< d - codim
  std::vector<std::vector<BigInt>> basis;  ///< integer kernel basis (each of length d)
  BigInt gram_determinant;                 ///< det(B^T B), the squared covolume
  std::optional<std::vector<BigInt>> particular;  ///< integer point of the affine flat, if any
};

/// Integer points of Pi(Psi, pi) via unimodular column elimination.
SolutionLattice solution_lattice(const LinearSystem& sys, const FormPartition& pi);

/// Set partitions of {0..n-1} as restricted growth strings, visited in lexicographic order.
template <class Visit>
void for_each_set_partition(std::size_t n, Visit&& visit) {
  if (n == 0) return;
  std::vector<std::size_t> a(n, 0), mx(n, 1);  // mx[i] = max(a[0..i-1]) + 1
  mx[0] = 0;
  while (true) {
    visit(std::span<const std::size_t>(a));
    std::size_t i = n - 1;
    while (i > 0 && a[i] == mx[i]) --i;
    if (i == 0) return;
    ++a[i];
    for (std::size_t j = i + 1; j < n; ++j) {
      a[j] = 0;
      mx[j] = std::max(mx[j - 1], a[j - 1] + 1);
    }
  }
}

}  // namespace narrowlab
