#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "narrowlab/cutoff.hpp"
#include "narrowlab/numtheory.hpp"

namespace narrowlab {

/// Lambda_{chi,R}(m) = log R * sum_{d | m} mu(d) chi(log d / log R). Needs m <= sieve.limit().
double lambda_chi_R(std::uint64_t m, double R, const CutoffSpec& cutoff, const FactorSieve& sieve);

/// nu(n) for n in Z/N'Z together with Lambda_{chi,R}(Wn + b).
struct MajorantTable {
  WTrickContext context;
  double R = 0.0;
  std::optional<CutoffSpec> cutoff;   ///< absent for loaded or synthetic tables
  std::vector<double> values;         ///< nu(n)
  std::vector<double> lambda_values;  ///< empty for loaded or synthetic tables

  std::uint64_t modulus() const noexcept { return context.modulus; }
  /// phi(W) / (W log R)
  double normalizer() const;
  /// phi(W) log R / (4W), the floor nu must clear at primes Wn + b > R.
  double floor() const;
};

struct MajorantOptions {
  unsigned workers = 1;
};

/// Divisor sieve: for squarefree d <= R with gcd(d, W) = 1, add mu(d) chi(log d / log R)
/// to every n with Wn + b = 0 mod d. The sieve must cover floor(R). Requires
/// R <= sqrt(W N' + b). Each entry sums its divisors in increasing d, so the
/// result does not depend on the worker count.
MajorantTable build_majorant(const WTrickContext& context, double R, const CutoffSpec& cutoff,
                             const FactorSieve& sieve, const MajorantOptions& options = {});

/// Table with nu = 1 everywhere (harness validation).
MajorantTable constant_majorant(const WTrickContext& context);

/// R = (W N' + b)^exponent.
double majorant_R(const WTrickContext& context, double exponent);

struct MeanReport {
  double mean = 0.0;
  double std_error = 0.0;
};
MeanReport majorant_mean(const MajorantTable& table);

struct PairCorrelation {
  std::int64_t h = 0;
  double empirical = 0.0;  ///< E_n nu(n) nu(n + h), cyclic
  double predicted = 0.0;  ///< G_W((0, h))
  double ratio = 0.0;
};

/// Predicted value uses the singular series with the table's W truncated at pmax.
/// A table flagged constant (no cutoff, all ones) predicts 1.
PairCorrelation majorant_pair_correlation(const MajorantTable& table, std::int64_t h, std::uint64_t pmax = 100'000);

struct MinorizationReport {
  std::uint64_t violations = 0;
  std::uint64_t primes_checked = 0;
  double threshold = 0.0;
  double min_ratio = 0.0;  ///< min nu(n) / threshold over checked primes
};

/// Exhaustive scan of primes Wn + b > R; the prime table must cover W(N'-1) + b.
MinorizationReport check_minorization(const MajorantTable& table, const PrimeTable& primes);

// Binary cache: "NAPMV1", u64 N', u64 W, u64 b, f64 R, then N' f64 values.
void save_majorant(const std::filesystem::path& path, const MajorantTable& table);
MajorantTable load_majorant(const std::filesystem::path& path);

}  // namespace narrowlab
