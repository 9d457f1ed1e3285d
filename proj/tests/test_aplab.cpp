#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "narrowlab/aplab.hpp"
#include "narrowlab/errors.hpp"
#include "narrowlab/singular.hpp"

using namespace narrowlab;

namespace {

double lambda_brute(const std::vector<std::vector<double>>& f, std::uint64_t D) {
  const std::uint64_t N = f[0].size();
  double total = 0.0;
  for (std::uint64_t n = 0; n < N; ++n) {
    for (std::uint64_t d = 1; d <= D; ++d) {
      double prod = f[0][n];
      for (std::size_t j = 1; j < f.size(); ++j) prod *= f[j][(n + j * d) % N];
      total += prod;
    }
  }
  return total / (static_cast<double>(N) * static_cast<double>(D));
}

double lambda_of(const std::vector<std::vector<double>>& f, std::uint64_t D) {
  std::vector<std::span<const double>> s(f.begin(), f.end());
  return lambda_D(s, D);
}

bool prime_trial(std::uint64_t n) {
  if (n < 2) return false;
  for (std::uint64_t p = 2; p * p <= n; ++p) {
    if (n % p == 0) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("Lambda_D on simple inputs") {
  const std::vector<std::vector<double>> ones(3, std::vector<double>(101, 1.0));
  CHECK(lambda_of(ones, 10) == 1.0);
  auto delta0 = ones;
  std::fill(delta0[0].begin(), delta0[0].end(), 0.0);
  delta0[0][0] = 1.0;
  CHECK(lambda_of(delta0, 10) == doctest::Approx(1.0 / 101));
  CHECK_THROWS_AS(lambda_of({std::vector<double>(5, 1.0), std::vector<double>(6, 1.0)}, 2), DomainError);
  CHECK_THROWS_AS(lambda_of(ones, 101), DomainError);
  CHECK_THROWS_AS(lambda_of(ones, 0), DomainError);
}

TEST_CASE("Lambda_D equals the triple loop bit for bit") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint64_t N = 2 + rng() % 210;
    const std::uint64_t D = 1 + rng() % std::min<std::uint64_t>(20, N - 1);
    const std::size_t k = 1 + rng() % 4;
    std::vector<std::vector<double>> f(k, std::vector<double>(N));
    for (auto& row : f) {
      for (auto& v : row) v = trial % 2 ? static_cast<double>(rng() % 2) : std::ldexp(static_cast<double>(rng() % 1000), -7) * (rng() % 3 == 0);
    }
    REQUIRE(lambda_of(f, D) == lambda_brute(f, D));
  }
  std::vector<std::vector<double>> f(3, std::vector<double>(101));
  for (auto& row : f) {
    for (auto& v : row) v = static_cast<double>(rng() % 2);
  }
  CHECK(lambda_of(f, 10) == lambda_brute(f, 10));
}

TEST_CASE("counting progressions with a fixed difference") {
  const PrimeTable primes(2'000'000);
  CHECK(count_aps_with_difference(10, 3, 2, primes) == 1);
  CHECK(count_aps_with_difference(10, 3, 1, primes) == 0);
  std::uint64_t brute = 0;
  for (std::uint64_t p = 2; p <= 100'000; ++p) brute += prime_trial(p) && prime_trial(p + 6) && prime_trial(p + 12);
  CHECK(count_aps_with_difference(100'000, 3, 6, primes) == brute);
  std::uint64_t prev = 0;
  for (std::uint64_t N = 1000; N <= 1'000'000; N *= 10) {
    const auto c = count_aps_with_difference(N, 3, 30, primes);
    CHECK(c >= prev);
    prev = c;
  }
  CHECK_THROWS_AS(count_aps_with_difference(2'000'000, 3, 6, primes), DomainError);
  CHECK_THROWS_AS(count_aps_with_difference(100, 3, 0, primes), DomainError);
}

TEST_CASE("Hardy-Littlewood predictions") {
  const double N = 1e6;
  const auto twin = hl_prediction(1'000'000, 2, 2);
  double logsum = 0.0;
  for (std::uint64_t p = 3; p <= 100'000; ++p) {
    if (prime_trial(p)) logsum += std::log1p(-1.0 / ((p - 1.0) * (p - 1.0)));
  }
  CHECK(twin.singular == doctest::Approx(2 * std::exp(logsum)).epsilon(1e-12));
  CHECK(twin.simple == doctest::Approx(twin.singular * N / std::pow(std::log(N), 2)));
  // int_2^N dt / log^2 t by composite Simpson in u = log t
  const int steps = 2'000'000;
  const double lo = std::log(2.0), h = (std::log(N) - lo) / steps;
  auto g = [](double u) { return std::exp(u) / (u * u); };
  double integral = g(lo) + g(lo + steps * h);
  for (int i = 1; i < steps; ++i) integral += g(lo + i * h) * (i % 2 ? 4 : 2);
  integral *= h / 3;
  CHECK(twin.integral == doctest::Approx(twin.singular * integral).epsilon(1e-9));

  CHECK(hl_prediction(1'000'000, 3, 3).singular == 0.0);
  CHECK(hl_prediction(1'000'000, 3, 7).integral == 0.0);
  const auto a = hl_prediction(1'000'000, 3, 6), b = hl_prediction(1'000'000, 3, 30);
  CHECK(a.integral > 0);
  CHECK(a.integral / b.integral ==
        doctest::Approx(singular_series(ShiftVector({0, 6, 12})).value / singular_series(ShiftVector({0, 30, 60})).value));
}

TEST_CASE("narrowness reports") {
  const PrimeTable primes(1'000'000);
  const std::vector<std::uint64_t> ladder{100'000, 1'000'000};
  const auto full = narrowness_report(ladder, 3, 0.9, SubsetRule{}, primes);
  for (const auto& row : full) {
    CHECK(row.min_d >= 1);
    CHECK(static_cast<double>(row.min_d) <= row.log_Lk);
    CHECK(row.density == 1.0);
    CHECK(row.meets_delta);
    CHECK(row.log_Lk == doctest::Approx(std::pow(std::log(static_cast<double>(row.N)), 4)));
  }
  const SubsetRule third{7, {1, 2}};
  const auto sub = narrowness_report(ladder, 3, 0.3, third, primes);
  for (const auto& row : sub) {
    CHECK(row.density == doctest::Approx(1.0 / 3).epsilon(0.05));
    CHECK(row.min_d >= 1);
    CHECK(static_cast<double>(row.min_d) <= row.log_Lk);
  }

  // k = 2: the least gap between consecutive subset primes
  const std::vector<std::uint64_t> one{100'000};
  const SubsetRule mod4{4, {1}};
  const auto gaps = narrowness_report(one, 2, 0.0, mod4, primes);
  std::uint64_t last = 0, best = UINT64_MAX;
  for (std::uint64_t p = 2; p <= 100'000; ++p) {
    if (!prime_trial(p) || p % 4 != 1) continue;
    if (last) best = std::min(best, p - last);
    last = p;
  }
  CHECK(gaps[0].min_d == best);

  CHECK_THROWS_AS(narrowness_report(one, 3, 0.0, SubsetRule{10, {0}}, primes), DomainError);
  CHECK_FALSE(narrowness_report(one, 3, 0.9, third, primes)[0].meets_delta);
  CHECK(collision_exponent(3) == 4);
  CHECK(collision_exponent(4) == 12);
}

TEST_CASE("Lambda_D on the primes is positive") {
  for (std::uint64_t N : {100'003ULL, 1'000'003ULL}) {
    const PrimeTable primes(N);
    const double L = std::log(static_cast<double>(N));
    std::vector<double> f(N, 0.0);
    for (auto p : primes.primes(static_cast<std::uint64_t>(std::ceil(std::sqrt(static_cast<double>(N)))), N - 1)) f[p] = L;
    const auto D = static_cast<std::uint64_t>(std::ceil(std::pow(L, 4)));
    CHECK(lambda_of({f, f, f}, D) > 0);
  }
}
