#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "narrowlab/errors.hpp"
#include "narrowlab/majorant.hpp"
#include "narrowlab/singular.hpp"

using namespace narrowlab;

namespace {

int mobius_trial(std::uint64_t d) {
  int mu = 1;
  for (std::uint64_t p = 2; p * p <= d; ++p) {
    if (d % p) continue;
    d /= p;
    if (d % p == 0) return 0;
    mu = -mu;
  }
  return d > 1 ? -mu : mu;
}

// Lambda_{chi,R}(m) by scanning every divisor
double lambda_direct(std::uint64_t m, double R, const CutoffSpec& chi) {
  double s = 0.0;
  for (std::uint64_t d = 1; d <= m && static_cast<double>(d) < R; ++d) {
    if (m % d == 0) s += mobius_trial(d) * chi.value(std::log(static_cast<double>(d)) / std::log(R));
  }
  return std::log(R) * s;
}

}  // namespace

TEST_CASE("truncated von Mangoldt weight") {
  const auto chi = make_cutoff(CutoffKind::cosine);
  const FactorSieve sieve(100'000);
  const double R = 10;
  CHECK(lambda_chi_R(1, R, chi, sieve) == doctest::Approx(chi.at_zero() * std::log(R)));
  CHECK(lambda_chi_R(97, R, chi, sieve) == doctest::Approx(chi.at_zero() * std::log(R)));
  CHECK(lambda_chi_R(4, R, chi, sieve) ==
        doctest::Approx(std::log(10.0) * (chi.at_zero() - chi.value(std::log(2.0) / std::log(10.0)))));
  for (std::uint64_t m = 1; m < 3000; ++m) {
    REQUIRE(lambda_chi_R(m, 50.0, chi, sieve) == doctest::Approx(lambda_direct(m, 50.0, chi)).epsilon(1e-12));
  }
  CHECK_THROWS_AS(lambda_chi_R(0, R, chi, sieve), DomainError);
}

TEST_CASE("majorant table entries") {
  const auto ctx = primorial_context(3, 1, 10007);
  const auto chi = make_cutoff(CutoffKind::cosine);
  const double R = majorant_R(ctx, 0.5);
  const FactorSieve small(static_cast<std::uint64_t>(R) + 1);
  const auto t = build_majorant(ctx, R, chi, small);
  const FactorSieve big(ctx.W * ctx.modulus + ctx.b);
  for (std::uint64_t n = 0; n < ctx.modulus; n += 7) {
    const double lam = lambda_chi_R(ctx.W * n + ctx.b, R, chi, big);
    REQUIRE(t.lambda_values[n] == doctest::Approx(lam).epsilon(1e-10).scale(1.0));
    REQUIRE(t.values[n] == doctest::Approx(t.normalizer() * lam * lam).epsilon(1e-10).scale(1.0));
    REQUIRE(t.values[n] >= 0.0);
  }
  // worker count does not change a single bit
  const auto t3 = build_majorant(ctx, R, chi, small, {3});
  CHECK(t3.values == t.values);
  CHECK_THROWS_AS(build_majorant(ctx, 1e6, chi, big), DomainError);
}

TEST_CASE("mean and floor at N' = 10^6 + 3") {
  const auto ctx = primorial_context(3, 1, 1'000'003);
  for (auto kind : {CutoffKind::cosine, CutoffKind::bump}) {
    const auto chi = make_cutoff(kind);
    const double R = majorant_R(ctx, 0.5);
    const FactorSieve sieve(static_cast<std::uint64_t>(R) + 1);
    const auto t = build_majorant(ctx, R, chi, sieve);
    const auto m = majorant_mean(t);
    double direct = 0.0;
    for (double v : t.values) direct += v;
    CHECK(m.mean == doctest::Approx(direct / static_cast<double>(t.values.size())).epsilon(1e-9));
    CHECK(m.mean >= 0.5);
    CHECK(m.mean <= 1.5);
    const PrimeTable primes(ctx.W * ctx.modulus + ctx.b);
    const auto mr = check_minorization(t, primes);
    CHECK(mr.violations == 0);
    CHECK(mr.primes_checked > 10'000);
    CHECK(mr.min_ratio >= 1.0);
  }
}

TEST_CASE("floor check catches a cutoff with chi(0) < 1/2") {
  const auto ctx = primorial_context(3, 1, 100'003);
  const CutoffSpec low(CutoffKind::cosine, 0.4);
  const double R = majorant_R(ctx, 0.5);
  const FactorSieve sieve(static_cast<std::uint64_t>(R) + 1);
  const auto t = build_majorant(ctx, R, low, sieve);
  const PrimeTable primes(ctx.W * ctx.modulus + ctx.b);
  CHECK(check_minorization(t, primes).violations > 0);
}

TEST_CASE("pair correlation") {
  const auto ctx = primorial_context(3, 1, 1'000'003);
  const auto one = constant_majorant(ctx);
  const auto c1 = majorant_pair_correlation(one, 6);
  CHECK(c1.empirical == 1.0);
  CHECK(c1.predicted == 1.0);

  const auto chi = make_cutoff(CutoffKind::cosine);
  const double R = majorant_R(ctx, 0.5);
  const FactorSieve sieve(static_cast<std::uint64_t>(R) + 1);
  const auto t = build_majorant(ctx, R, chi, sieve);
  const auto c = majorant_pair_correlation(t, 6);
  double direct = 0.0;
  for (std::uint64_t n = 0; n < ctx.modulus; ++n) direct += t.values[n] * t.values[(n + 6) % ctx.modulus];
  CHECK(c.empirical == doctest::Approx(direct / static_cast<double>(ctx.modulus)).epsilon(1e-9));
  CHECK(c.predicted == doctest::Approx(singular_series(ShiftVector({0, 6}), 100'000, 6).value));
  CHECK(c.ratio >= 0.5);
  CHECK(c.ratio <= 2.0);
  CHECK_THROWS_AS(majorant_pair_correlation(t, 0), DomainError);
}

TEST_CASE("majorant cache") {
  const auto dir = std::filesystem::temp_directory_path() / "narrowlab_majorant";
  std::filesystem::create_directories(dir);
  const auto path = dir / "m.napmv";
  const auto ctx = primorial_context(5, 7, 10007);
  const auto chi = make_cutoff(CutoffKind::bump);
  const double R = majorant_R(ctx, 0.5);
  const auto t = build_majorant(ctx, R, chi, FactorSieve(static_cast<std::uint64_t>(R) + 1));
  save_majorant(path, t);
  const auto back = load_majorant(path);
  CHECK(back.values == t.values);
  CHECK(back.context.W == 30);
  CHECK(back.context.b == 7);
  CHECK(back.R == t.R);

  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
  CHECK_THROWS_AS(load_majorant(path), FormatError);
  {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f << "NAPSV1garbage";
  }
  CHECK_THROWS_AS(load_majorant(path), FormatError);
}
