#include "narrowlab/singular.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <thread>

#include "narrowlab/errors.hpp"
#include "narrowlab/numtheory.hpp"
#include "rng.hpp"

namespace narrowlab {

namespace {

std::uint64_t abs_diff(std::int64_t a, std::int64_t b) {
  return a > b ? static_cast<std::uint64_t>(a) - static_cast<std::uint64_t>(b)
               : static_cast<std::uint64_t>(b) - static_cast<std::uint64_t>(a);
}

std::uint64_t residue(std::int64_t v, std::uint64_t p) {
  const std::int64_t m = static_cast<std::int64_t>(p);
  std::int64_t r = v % m;
  if (r < 0) r += m;
  return static_cast<std::uint64_t>(r);
}

std::size_t count_residues(const std::vector<std::int64_t>& values, std::uint64_t p) {
  if (p <= 64) {
    std::uint64_t seen = 0;
    for (auto v : values) seen |= std::uint64_t{1} << residue(v, p);
    return static_cast<std::size_t>(std::popcount(seen));
  }
  std::vector<std::uint64_t> rs;
  rs.reserve(values.size());
  for (auto v : values) rs.push_back(residue(v, p));
  std::sort(rs.begin(), rs.end());
  return static_cast<std::size_t>(std::unique(rs.begin(), rs.end()) - rs.begin());
}

// log of (1 - 1/p)^{-r} (1 - nu/p) for nu < p
double log_local(std::size_t r, std::size_t nu, double p) {
  return std::log1p(-static_cast<double>(nu) / p) - static_cast<double>(r) * std::log1p(-1.0 / p);
}

bool divides_squarefree(std::uint64_t p, std::uint64_t W) { return W % p == 0; }

}  // namespace

ShiftVector::ShiftVector(std::vector<std::int64_t> entries) : entries_(std::move(entries)) {
  if (entries_.empty()) throw DomainError("shift vector must be non-empty");
  std::vector<std::int64_t> sorted = entries_;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    distinct_.push_back(sorted[i]);
    mult_.push_back(j - i);
    i = j;
  }
}

std::size_t occupied_residues(const ShiftVector& h, std::uint64_t p) {
  if (!is_prime_u64(p)) throw DomainError(std::to_string(p) + " is not prime");
  return count_residues(h.distinct(), p);
}

mpz_class delta(const ShiftVector& h) {
  mpz_class d = 1;
  const auto& e = h.entries();
  for (std::size_t i = 0; i < e.size(); ++i) {
    for (std::size_t j = i + 1; j < e.size(); ++j) {
      if (e[i] == e[j]) continue;
      d *= mpz_class(std::to_string(e[i])) - mpz_class(std::to_string(e[j]));
    }
  }
  return d;
}

std::vector<std::uint64_t> delta_primes(const ShiftVector& h) {
  std::set<std::uint64_t> ps;
  const auto& v = h.distinct();
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      for (auto [p, e] : factorize_trial(abs_diff(v[i], v[j]))) ps.insert(p);
    }
  }
  return {ps.begin(), ps.end()};
}

SingularSeriesEvaluator::SingularSeriesEvaluator(std::uint64_t pmax) : pmax_(pmax) {
  if (pmax < 2) throw DomainError("pmax must be at least 2");
  if (pmax > UINT32_MAX) throw DomainError("pmax above 2^32 is out of range");
  primes_ = primes_up_to(static_cast<std::uint32_t>(pmax));
}

double SingularSeriesEvaluator::generic_log_sum(std::size_t r) const {
  std::lock_guard lock(mutex_);
  if (r >= log_sums_.size()) {
    log_sums_.resize(r + 1, 0.0);
    have_sum_.resize(r + 1, false);
  }
  if (!have_sum_[r]) {
    // sum over r < p <= pmax; the factor is 1 - O(r^2/p^2), so add small terms first
    long double s = 0.0L;
    for (auto it = primes_.rbegin(); it != primes_.rend() && *it > r; ++it) {
      s += log_local(r, r, static_cast<double>(*it));
    }
    log_sums_[r] = static_cast<double>(s);
    have_sum_[r] = true;
  }
  return log_sums_[r];
}

std::vector<std::uint64_t> SingularSeriesEvaluator::small_primes_of(std::uint64_t n) const {
  std::vector<std::uint64_t> out;
  for (auto p32 : primes_) {
    const std::uint64_t p = p32;
    if (p * p > n) break;
    if (n % p) continue;
    out.push_back(p);
    while (n % p == 0) n /= p;
  }
  if (n > 1) {
    if (n > pmax_) {
      throw DomainError("delta(h) has a prime factor above pmax = " + std::to_string(pmax_) +
                        "; raise pmax to keep local factors exact");
    }
    out.push_back(n);
  }
  return out;
}

SingularValue SingularSeriesEvaluator::operator()(const ShiftVector& h, std::uint64_t W) const {
  if (W == 0) throw DomainError("W must be positive");
  const std::size_t r = h.r();
  if (pmax_ < r) throw DomainError("pmax must be at least the number of distinct shifts");

  SingularValue out;
  out.pmax = pmax_;
  out.tail_bound = std::expm1(static_cast<double>(r * r) / static_cast<double>(pmax_));
  if (r == 1) {
    out.value = 1.0;
    return out;
  }

  // Primes needing an exact factor: p <= r and p | delta(h).
  std::set<std::uint64_t> special;
  for (auto p : primes_) {
    if (p > r) break;
    special.insert(p);
  }
  const auto& v = h.distinct();
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      for (auto p : small_primes_of(abs_diff(v[i], v[j]))) special.insert(p);
    }
  }

  double log_value = generic_log_sum(r);
  // primes dividing W are removed from the product entirely
  for (auto p : primes_) {
    if (p > W) break;
    if (p > r && divides_squarefree(p, W) && !special.contains(p)) log_value -= log_local(r, r, p);
  }
  for (auto p : special) {
    if (p > r) log_value -= log_local(r, r, static_cast<double>(p));
    if (divides_squarefree(p, W)) continue;
    const std::size_t nu = count_residues(v, p);
    if (nu == p) {
      out.zero = true;
      out.value = 0.0;
      return out;
    }
    log_value += log_local(r, nu, static_cast<double>(p));
  }
  out.value = std::exp(log_value);
  return out;
}

SingularValue singular_series(const ShiftVector& h, std::uint64_t pmax, std::uint64_t W) {
  return SingularSeriesEvaluator(pmax)(h, W);
}

ErrorFactor error_factor(const ShiftVector& h, double C) {
  if (!(C > 0)) throw DomainError("error factor constant C must be positive");
  ErrorFactor out;
  for (auto p : delta_primes(h)) out.raw_sum += 1.0 / static_cast<double>(p);
  out.value = std::exp(C * out.raw_sum);
  return out;
}

GallagherResult gallagher_average(GallagherWeight weight, std::span<const std::pair<std::int64_t, std::int64_t>> box,
                                  std::uint64_t W, std::uint64_t pmax, double C, const GallagherOptions& options) {
  if (box.empty()) throw DomainError("box must have at least one coordinate");
  std::uint64_t total = 1;
  std::vector<std::uint64_t> sides;
  for (auto [lo, hi] : box) {
    if (hi < lo) throw DomainError("box side has hi < lo");
    const std::uint64_t side = abs_diff(hi, lo) + 1;
    if (total > UINT64_MAX / side) throw ResourceError("box has more than 2^64 points");
    total *= side;
    sides.push_back(side);
  }
  const bool sampled = total > options.exact_cap;
  if (sampled && !options.allow_sampling) {
    throw ResourceError("box has " + std::to_string(total) + " points, above the exact cap of " +
                            std::to_string(options.exact_cap) + "; enable sampling",
                        total);
  }
  if (weight == GallagherWeight::E && !(C > 0)) throw DomainError("weight E needs C > 0");

  std::optional<SingularSeriesEvaluator> eval;
  if (weight == GallagherWeight::GW) eval.emplace(pmax);

  const std::uint64_t n = sampled ? options.samples : total;
  if (n == 0) throw DomainError("sample count must be positive");
  constexpr std::uint64_t block = 4096;
  const std::uint64_t nblocks = (n + block - 1) / block;
  std::vector<double> sums(nblocks, 0.0), squares(nblocks, 0.0);

  auto weight_at = [&](const std::vector<std::int64_t>& h) {
    const ShiftVector sv(h);
    return weight == GallagherWeight::GW ? (*eval)(sv, W).value : error_factor(sv, C).value;
  };

  auto run_block = [&](std::uint64_t b) {
    std::vector<std::int64_t> h(box.size());
    std::mt19937_64 gen(rng::stream_seed(options.seed, b));
    double s = 0.0, q = 0.0;
    const std::uint64_t end = std::min(n, (b + 1) * block);
    for (std::uint64_t idx = b * block; idx < end; ++idx) {
      if (sampled) {
        for (std::size_t i = 0; i < box.size(); ++i) {
          h[i] = box[i].first + static_cast<std::int64_t>(std::uniform_int_distribution<std::uint64_t>(0, sides[i] - 1)(gen));
        }
      } else {
        std::uint64_t rem = idx;
        for (std::size_t i = box.size(); i-- > 0;) {
          h[i] = box[i].first + static_cast<std::int64_t>(rem % sides[i]);
          rem /= sides[i];
        }
      }
      const double g = weight_at(h);
      s += g;
      q += g * g;
    }
    sums[b] = s;
    squares[b] = q;
  };

  const unsigned workers = std::max(1u, options.workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::uint64_t b = w; b < nblocks; b += workers) run_block(b);
      });
    }
  }

  double s = 0.0, q = 0.0;
  for (std::uint64_t b = 0; b < nblocks; ++b) {
    s += sums[b];
    q += squares[b];
  }
  GallagherResult out;
  out.points = n;
  out.sampled = sampled;
  out.mean = s / static_cast<double>(n);
  out.abs_deviation = std::abs(out.mean - 1.0);
  const double var = std::max(0.0, q / static_cast<double>(n) - out.mean * out.mean);
  out.std_error = std::sqrt(var / static_cast<double>(n));
  return out;
}

}  // namespace narrowlab
