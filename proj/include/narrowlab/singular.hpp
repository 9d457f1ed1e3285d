#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <mutex>
#include <span>
#include <utility>
#include <vector>

namespace narrowlab {

/// Integer shifts h_1..h_k; repeated values are allowed.
class ShiftVector {
 public:
  explicit ShiftVector(std::vector<std::int64_t> entries);

  const std::vector<std::int64_t>& entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  /// Distinct values, ascending.
  const std::vector<std::int64_t>& distinct() const noexcept { return distinct_; }
  std::size_t r() const noexcept { return distinct_.size(); }
  /// m(h) for each distinct value, aligned with distinct().
  const std::vector<std::size_t>& multiplicities() const noexcept { return mult_; }

 private:
  std::vector<std::int64_t> entries_;
  std::vector<std::int64_t> distinct_;
  std::vector<std::size_t> mult_;
};

/// nu_p(h): number of residue classes mod p met by h. Throws DomainError for composite p.
std::size_t occupied_residues(const ShiftVector& h, std::uint64_t p);

/// Product of (h_i - h_j) over i < j with h_i != h_j; 1 when empty.
mpz_class delta(const ShiftVector& h);

/// Distinct primes dividing delta(h), ascending.
std::vector<std::uint64_t> delta_primes(const ShiftVector& h);

struct SingularValue {
  double value = 0.0;
  std::uint64_t pmax = 0;
  double tail_bound = 0.0;  ///< relative error of the omitted p > pmax
  bool zero = false;
};

/// G_W(h) = prod_{p not dividing W} (1 - 1/p)^{-r} (1 - nu_p(h)/p), truncated at pmax.
///
/// Holds the generic log-sum over primes up to pmax so repeated evaluations
/// only touch the primes dividing delta(h) or W.
class SingularSeriesEvaluator {
 public:
  explicit SingularSeriesEvaluator(std::uint64_t pmax);

  std::uint64_t pmax() const noexcept { return pmax_; }
  /// W must be squarefree (1 means no W-trick). Throws DomainError when delta(h)
  /// has a prime factor above pmax.
  SingularValue operator()(const ShiftVector& h, std::uint64_t W = 1) const;

 private:
  double generic_log_sum(std::size_t r) const;
  std::vector<std::uint64_t> small_primes_of(std::uint64_t n) const;

  std::uint64_t pmax_;
  std::vector<std::uint32_t> primes_;
  mutable std::vector<double> log_sums_;  // by r, filled on demand
  mutable std::vector<bool> have_sum_;
  mutable std::mutex mutex_;
};

SingularValue singular_series(const ShiftVector& h, std::uint64_t pmax = 100'000, std::uint64_t W = 1);

struct ErrorFactor {
  double value = 1.0;   ///< exp(C * raw_sum)
  double raw_sum = 0.0; ///< sum of 1/p over p | delta(h)
};

/// E(h) = exp(C sum_{p | delta(h)} 1/p); C > 0.
ErrorFactor error_factor(const ShiftVector& h, double C);

enum class GallagherWeight { GW, E };

struct GallagherOptions {
  std::uint64_t exact_cap = 10'000'000;
  bool allow_sampling = false;
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 1;
  unsigned workers = 1;
};

struct GallagherResult {
  double mean = 0.0;
  double abs_deviation = 0.0;  ///< |mean - 1|
  double std_error = 0.0;      ///< sd / sqrt(points)
  std::uint64_t points = 0;
  bool sampled = false;
};

/// Mean of the weight over the integer box prod [lo_i, hi_i] in Z^t.
GallagherResult gallagher_average(GallagherWeight weight, std::span<const std::pair<std::int64_t, std::int64_t>> box,
                                  std::uint64_t W, std::uint64_t pmax, double C,
                                  const GallagherOptions& options = {});

}  // namespace narrowlab
