#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "narrowlab/numtheory.hpp"

namespace narrowlab {

/// Lambda_D(f_1..f_k) = E_{n in Z/N'Z} E_{d in [D]} f_1(n) f_2(n+d) ... f_k(n+(k-1)d).
///
/// The displayed definition writes f_2(g+d) with g undeclared; it is read here as n+d.
/// Terms are accumulated in (n, d) lexicographic order and zero terms are skipped,
/// so the result is bit-identical to the plain double loop.
double lambda_D(std::span<const std::span<const double>> fs, std::uint64_t D);

/// #{p <= N : p, p+d, ..., p+(k-1)d all prime}; needs N + (k-1)d <= primes.limit().
std::uint64_t count_aps_with_difference(std::uint64_t N, unsigned k, std::uint64_t d, const PrimeTable& primes);

struct HLPrediction {
  double singular = 0.0;  ///< G((0, d, ..., (k-1)d))
  double integral = 0.0;  ///< G * int_2^N dt / (log t)^k
  double simple = 0.0;    ///< G * N / (log N)^k
};

HLPrediction hl_prediction(std::uint64_t N, unsigned k, std::uint64_t d, std::uint64_t pmax = 100'000);

struct APCountReport {
  std::uint64_t N = 0;
  unsigned k = 0;
  std::uint64_t d = 0;
  std::uint64_t count = 0;
  HLPrediction prediction;
  double ratio = 0.0;  ///< count / prediction.integral
};

APCountReport ap_count_report(std::uint64_t N, unsigned k, std::uint64_t d, const PrimeTable& primes,
                              std::uint64_t pmax = 100'000);

/// Congruence filter: keep primes p with p mod modulus in residues (modulus 1 keeps all).
struct SubsetRule {
  std::uint64_t modulus = 1;
  std::vector<std::uint64_t> residues{0};

  bool keeps(std::uint64_t p) const;
};

struct NarrownessRow {
  std::uint64_t N = 0;
  std::uint64_t subset_size = 0;
  double density = 0.0;       ///< share of the primes up to N kept by the rule
  std::uint64_t starts = 0;   ///< subset primes that begin a k-AP with d <= d_cap
  std::uint64_t min_d = 0;    ///< 0 when no k-AP was found
  double median_d = 0.0;      ///< median over starting primes of their least d
  double log_k1 = 0.0;        ///< (log N)^{k-1}
  double log_Lk = 0.0;        ///< (log N)^{L_k}, L_k = (k-1) 2^{k-2}
  double ratio_k1 = 0.0;      ///< min_d / (log N)^{k-1}
  double ratio_Lk = 0.0;      ///< min_d / (log N)^{L_k}
  bool meets_delta = true;    ///< density >= the requested delta
};

/// For each N: every subset prime p is tried as the first term, with the least
/// d <= d_cap = ceil((log N)^{L_k}) such that the k-AP stays in the subset and below N.
std::vector<NarrownessRow> narrowness_report(std::span<const std::uint64_t> ladder, unsigned k, double delta,
                                             const SubsetRule& rule, const PrimeTable& primes);

/// L_k = (k-1) 2^{k-2}.
double collision_exponent(unsigned k);

}  // namespace narrowlab
