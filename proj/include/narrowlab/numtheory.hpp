#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <utility>
#include <vector>

namespace narrowlab {

struct SieveOptions {
  /// Tables larger than this many entries are filled segment by segment.
  std::uint64_t resident_entries = std::uint64_t{1} << 26;
  /// Entries per segment in segmented mode.
  std::uint64_t segment_entries = std::uint64_t{1} << 20;
  /// Hard cap on the table allocation.
  std::uint64_t max_bytes = std::uint64_t{3} << 30;
  unsigned workers = 1;
};

/// Smallest-prime-factor table on [0, limit]; spf(0) = spf(1) = 0.
///
/// Immutable after construction. Entries are 32-bit, so limit < 2^32.
class FactorSieve {
 public:
  explicit FactorSieve(std::uint64_t limit, const SieveOptions& options = {});

  /// Adopts a previously built table (cache loader). The table is validated.
  static FactorSieve from_table(std::vector<std::uint32_t> table);

  std::uint64_t limit() const noexcept { return spf_.size() - 1; }
  std::uint32_t spf(std::uint64_t n) const;
  bool is_prime(std::uint64_t n) const;
  std::span<const std::uint32_t> table() const noexcept { return spf_; }

  bool segmented() const noexcept { return segmented_; }

 private:
  FactorSieve() = default;

  std::vector<std::uint32_t> spf_;
  bool segmented_ = false;
};

FactorSieve build_factor_sieve(std::uint64_t limit, const SieveOptions& options = {});

int moebius(std::uint64_t n, const FactorSieve& sieve);
std::uint64_t euler_phi(std::uint64_t n, const FactorSieve& sieve);

using Factorization = std::vector<std::pair<std::uint64_t, unsigned>>;

/// Sorted by prime. factorize(1) is empty.
Factorization factorize(std::uint64_t n, const FactorSieve& sieve);
unsigned omega(std::uint64_t n, const FactorSieve& sieve);

/// Primality bitset over odd numbers, built by a segmented sieve of Eratosthenes.
/// Uses limit/16 bytes, so it reaches 10^9 and beyond where a FactorSieve cannot.
class PrimeTable {
 public:
  explicit PrimeTable(std::uint64_t limit, std::uint64_t segment_bytes = std::uint64_t{1} << 18);

  std::uint64_t limit() const noexcept { return limit_; }
  bool is_prime(std::uint64_t n) const;
  std::uint64_t count() const noexcept { return count_; }
  /// Number of primes <= x (x <= limit); linear in x/64.
  std::uint64_t count_upto(std::uint64_t x) const;
  std::vector<std::uint64_t> primes(std::uint64_t lo = 2, std::uint64_t hi = UINT64_MAX) const;

 private:
  std::uint64_t limit_;
  std::uint64_t count_ = 0;
  std::vector<std::uint64_t> odd_bits_;  // bit i <-> 2i+1 is prime
};

/// Simple sieve for small ranges (base primes, singular-series tables).
std::vector<std::uint32_t> primes_up_to(std::uint32_t limit);

/// Deterministic Miller-Rabin; exact for every 64-bit input.
bool is_prime_u64(std::uint64_t n);

/// Trial-division factorization of |n| (n != 0), for values outside any sieve.
Factorization factorize_trial(std::uint64_t n);

std::uint64_t gcd_u64(std::uint64_t a, std::uint64_t b);
/// Inverse of a modulo m (gcd(a, m) = 1, m >= 1).
std::uint64_t inverse_mod(std::uint64_t a, std::uint64_t m);

/// The W-trick data: W = product of primes <= w, a reduced class b mod W and
/// the prime modulus N' of the cyclic group.
struct WTrickContext {
  std::uint64_t w = 1;
  std::uint64_t W = 1;
  std::uint64_t b = 0;
  std::uint64_t modulus = 2;
};

/// Validates and normalizes; b is reduced mod W. Throws DomainError naming the
/// prime shared by b and W, or when the modulus is composite.
WTrickContext primorial_context(std::uint64_t w, std::int64_t b, std::uint64_t modulus);

std::uint64_t primorial(std::uint64_t w);

// Binary cache: "NAPSV1", u64 LE limit, then (limit + 1) u32 LE entries.
void save_sieve(const std::filesystem::path& path, const FactorSieve& sieve);
FactorSieve load_sieve(const std::filesystem::path& path);

}  // namespace narrowlab
