#include "narrowlab/aplab.hpp"

#include <algorithm>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <string>

#include "narrowlab/errors.hpp"
#include "narrowlab/singular.hpp"

namespace narrowlab {

double lambda_D(std::span<const std::span<const double>> fs, std::uint64_t D) {
  if (fs.empty()) throw DomainError("Lambda_D needs at least one function");
  const std::uint64_t N = fs[0].size();
  if (N == 0) throw DomainError("functions must be non-empty");
  for (std::size_t j = 1; j < fs.size(); ++j) {
    if (fs[j].size() != N) {
      throw DomainError("function " + std::to_string(j + 1) + " has length " + std::to_string(fs[j].size()) +
                        ", expected " + std::to_string(N));
    }
  }
  if (D < 1 || D >= N) throw DomainError("D must satisfy 1 <= D < N'");
  const std::size_t k = fs.size();

  // positions where f_2 is non-zero, so each n only visits d with f_2(n+d) != 0
  std::vector<std::uint64_t> support2;
  if (k >= 2) {
    for (std::uint64_t m = 0; m < N; ++m) {
      if (fs[1][m] != 0.0) support2.push_back(m);
    }
  }
  double total = 0.0;
  auto term = [&](std::uint64_t n, std::uint64_t d) {
    double prod = fs[0][n];
    for (std::size_t j = 1; j < k; ++j) {
      const std::uint64_t idx = static_cast<std::uint64_t>((n + static_cast<unsigned __int128>(j) * d) % N);
      prod *= fs[j][idx];
    }
    total += prod;
  };
  for (std::uint64_t n = 0; n < N; ++n) {
    if (fs[0][n] == 0.0) continue;
    if (k == 1) {
      for (std::uint64_t d = 1; d <= D; ++d) total += fs[0][n];
      continue;
    }
    // window n+1 .. n+D, possibly wrapping past N-1; d increases along both pieces
    const std::uint64_t end = n + D;
    auto visit = [&](std::uint64_t lo, std::uint64_t hi, std::uint64_t offset) {  // positions [lo, hi]
      for (auto it = std::lower_bound(support2.begin(), support2.end(), lo); it != support2.end() && *it <= hi; ++it) {
        term(n, *it + offset - n);
      }
    };
    if (end < N) {
      visit(n + 1, end, 0);
    } else {
      if (n + 1 < N) visit(n + 1, N - 1, 0);
      visit(0, end - N, N);
    }
  }
  return total / (static_cast<double>(N) * static_cast<double>(D));
}

std::uint64_t count_aps_with_difference(std::uint64_t N, unsigned k, std::uint64_t d, const PrimeTable& primes) {
  if (k < 1) throw DomainError("k must be positive");
  if (d < 1) throw DomainError("common difference must be at least 1");
  if (N + static_cast<unsigned __int128>(k - 1) * d > primes.limit()) {
    throw DomainError("N + (k-1)d exceeds the prime table limit " + std::to_string(primes.limit()));
  }
  std::uint64_t count = 0;
  for (std::uint64_t p : primes.primes(2, N)) {
    bool all = true;
    for (unsigned j = 1; j < k && all; ++j) all = primes.is_prime(p + j * d);
    count += all;
  }
  return count;
}

HLPrediction hl_prediction(std::uint64_t N, unsigned k, std::uint64_t d, std::uint64_t pmax) {
  if (d < 1) throw DomainError("common difference must be at least 1");
  if (k < 1) throw DomainError("k must be positive");
  if (N < 3) throw DomainError("N must be at least 3");
  std::vector<std::int64_t> h;
  for (unsigned j = 0; j < k; ++j) h.push_back(static_cast<std::int64_t>(j * d));
  HLPrediction out;
  out.singular = singular_series(ShiftVector(h), pmax).value;
  const double logN = std::log(static_cast<double>(N));
  out.simple = out.singular * static_cast<double>(N) / std::pow(logN, k);
  // substitute t = e^u: int_{log 2}^{log N} e^u / u^k du
  const double kk = k;
  auto f = [kk](double u) { return std::exp(u - kk * std::log(u)); };
  const double I = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, std::log(2.0), logN, 15, 1e-12);
  out.integral = out.singular * I;
  return out;
}

APCountReport ap_count_report(std::uint64_t N, unsigned k, std::uint64_t d, const PrimeTable& primes, std::uint64_t pmax) {
  APCountReport r;
  r.N = N;
  r.k = k;
  r.d = d;
  r.count = count_aps_with_difference(N, k, d, primes);
  r.prediction = hl_prediction(N, k, d, pmax);
  r.ratio = r.prediction.integral > 0 ? static_cast<double>(r.count) / r.prediction.integral : 0.0;
  return r;
}

bool SubsetRule::keeps(std::uint64_t p) const {
  const std::uint64_t r = p % modulus;
  return std::find(residues.begin(), residues.end(), r) != residues.end();
}

double collision_exponent(unsigned k) {
  if (k < 2) throw DomainError("k must be at least 2");
  return static_cast<double>(k - 1) * std::ldexp(1.0, static_cast<int>(k) - 2);
}

std::vector<NarrownessRow> narrowness_report(std::span<const std::uint64_t> ladder, unsigned k, double delta,
                                             const SubsetRule& rule, const PrimeTable& primes) {
  if (k < 2) throw DomainError("k must be at least 2");
  if (!(delta >= 0 && delta <= 1)) throw DomainError("delta must lie in [0, 1]");
  if (rule.modulus == 0 || rule.residues.empty()) throw DomainError("subset rule needs a modulus and residues");
  std::vector<NarrownessRow> rows;
  for (std::uint64_t N : ladder) {
    if (N > primes.limit()) throw DomainError("ladder point " + std::to_string(N) + " exceeds the prime table");
    if (N < 3) throw DomainError("ladder points must be at least 3");
    NarrownessRow row;
    row.N = N;
    const double logN = std::log(static_cast<double>(N));
    row.log_k1 = std::pow(logN, static_cast<double>(k - 1));
    row.log_Lk = std::pow(logN, collision_exponent(k));
    const auto d_cap = static_cast<std::uint64_t>(std::ceil(row.log_Lk));

    const auto all = primes.primes(2, N);
    std::vector<std::uint64_t> subset;
    for (auto p : all) {
      if (rule.keeps(p)) subset.push_back(p);
    }
    if (subset.empty()) throw DomainError("subset rule keeps no primes up to " + std::to_string(N));
    row.subset_size = subset.size();
    row.density = static_cast<double>(subset.size()) / static_cast<double>(all.size());
    row.meets_delta = row.density >= delta;

    auto in_subset = [&](std::uint64_t m) { return m <= N && primes.is_prime(m) && rule.keeps(m); };
    std::vector<std::uint64_t> least;
    for (std::size_t i = 0; i < subset.size(); ++i) {
      const std::uint64_t p = subset[i];
      // candidate d: second term ranges over later subset primes
      for (std::size_t j = i + 1; j < subset.size(); ++j) {
        const std::uint64_t d = subset[j] - p;
        if (d > d_cap || p + (k - 1) * d > N) break;
        bool ok = true;
        for (unsigned t = 2; t < k && ok; ++t) ok = in_subset(p + t * d);
        if (ok) {
          least.push_back(d);
          break;
        }
      }
    }
    row.starts = least.size();
    if (!least.empty()) {
      row.min_d = *std::min_element(least.begin(), least.end());
      std::sort(least.begin(), least.end());
      const std::size_t m = least.size();
      row.median_d = m % 2 ? static_cast<double>(least[m / 2])
                           : 0.5 * (static_cast<double>(least[m / 2 - 1]) + static_cast<double>(least[m / 2]));
      row.ratio_k1 = static_cast<double>(row.min_d) / row.log_k1;
      row.ratio_Lk = static_cast<double>(row.min_d) / row.log_Lk;
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace narrowlab
