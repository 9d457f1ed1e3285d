// Acceptance run: one PASS/FAIL line per criterion, then a summary.
// Exit status is non-zero when a criterion fails that is not listed in kKnownFailures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "narrowlab/aplab.hpp"
#include "narrowlab/conditions.hpp"
#include "narrowlab/cutoff.hpp"
#include "narrowlab/errors.hpp"
#include "narrowlab/linforms.hpp"
#include "narrowlab/majorant.hpp"
#include "narrowlab/numtheory.hpp"
#include "narrowlab/singular.hpp"

using namespace narrowlab;

namespace {

// c2 = 1 needs the half-line normalization, the full-line identity needs the
// other one; no single cutoff satisfies both (see README).
const std::set<int> kKnownFailures{4};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

// ---- 1: collision index values ----
Outcome lindex_values() {
  std::ostringstream os;
  bool ok = true;
  auto expect = [&](const std::string& name, const LinearSystem& sys, long want) {
    const auto r = lindex(sys);
    const bool hit = r.value == Rational(want);
    ok = ok && hit;
    os << name << "=" << r.value.get_str() << (hit ? "" : "(want " + std::to_string(want) + ")") << " ";
  };
  for (int k : {2, 3}) {
    const auto t0 = Clock::now();
    expect("first(" + std::to_string(k) + ")", first_family(k), (k - 1) * (1L << (k - 2)));
    const double dt = seconds_since(t0);
    if (k == 3) {
      os << "[" << fmt(dt, 3) << "s] ";
      ok = ok && dt < 60.0;
    }
    expect("second(" + std::to_string(k) + ")", second_family(k), 1L << (k - 1));
    for (int j = 1; j <= k; ++j) expect("third(" + std::to_string(k) + "," + std::to_string(j) + ")", third_family(k, j), k - 1);
  }
  return {ok, os.str()};
}

// ---- 2: minimum distinct forms on codim 1 and 2 ----
Outcome min_distinct_bounds() {
  std::ostringstream os;
  bool ok = true;
  const auto t0 = Clock::now();
  for (int k : {2, 3, 4}) {
    const auto sys = first_family(k);
    const auto c1 = min_distinct_on_codim(sys, 1).min_count;
    const auto c2 = min_distinct_on_codim(sys, 2).min_count;
    const std::size_t b1 = static_cast<std::size_t>(k + 1) << (k - 2), b2 = std::size_t{1} << (k - 1);
    ok = ok && c1 >= b1 && c2 >= b2;
    os << "k=" << k << ": " << c1 << ">=" << b1 << ", " << c2 << ">=" << b2 << "; ";
  }
  const double dt = seconds_since(t0);
  ok = ok && dt < 600.0;
  os << "[" << fmt(dt, 3) << "s]";
  return {ok, os.str()};
}

// ---- 3: lindex against the exhaustive partition search ----
LinearSystem random_system(std::mt19937_64& rng, std::size_t t, std::size_t d) {
  std::uniform_int_distribution<int> coef(-2, 2), cst(-1, 1);
  while (true) {
    std::vector<LinearForm> fs;
    for (std::size_t i = 0; i < t; ++i) {
      LinearForm f;
      for (std::size_t c = 0; c < d; ++c) f.coeffs.push_back(coef(rng));
      f.constant = cst(rng);
      fs.push_back(f);
    }
    try {
      return LinearSystem(d, fs);
    } catch (const DomainError&) {
    }
  }
}

Outcome lindex_vs_brute() {
  std::mt19937_64 rng(20240611);
  std::uniform_int_distribution<std::size_t> tdist(2, 6), ddist(1, 4);
  const auto t0 = Clock::now();
  int mismatches = 0, nonzero = 0;
  for (int i = 0; i < 100; ++i) {
    const auto sys = random_system(rng, tdist(rng), ddist(rng));
    const auto a = lindex(sys).value, b = lindex_bruteforce(sys).value;
    mismatches += a != b;
    nonzero += a != 0;
  }
  const double dt = seconds_since(t0);
  return {mismatches == 0 && dt < 300.0, "100 systems, " + std::to_string(mismatches) + " mismatches, " +
                                             std::to_string(nonzero) + " with L > 0 [" + fmt(dt, 3) + "s]"};
}

// ---- 4: sieve factor normalization ----
Outcome c2_normalization() {
  std::ostringstream os;
  bool ok = true;
  for (auto kind : {CutoffKind::cosine, CutoffKind::bump}) {
    const auto chi = make_cutoff(kind, Normalization::half_line);
    const auto sf = sieve_factor(chi, 2);
    const double res = full_line_residual(chi);
    const bool hit = std::abs(sf.value - 1.0) <= 1e-3 && res < 1e-9;
    ok = ok && hit;
    os << to_string(kind) << ": c2=" << fmt(sf.value, 8) << " residual=" << fmt(res, 3) << "; ";
  }
  const auto full = make_cutoff(CutoffKind::cosine, Normalization::full_line);
  os << "(full-line cosine: c2=" << fmt(sieve_factor(full, 2).value, 6) << " residual=" << fmt(full_line_residual(full), 3)
     << ")";
  return {ok, os.str()};
}

// ---- 5: singular series ----
Outcome singular_checks() {
  std::ostringstream os;
  // twice the twin-prime constant, directly
  const auto ps = primes_up_to(10'000'000);
  double logsum = 0.0;
  for (auto p : ps) {
    if (p == 2) continue;
    const double q = static_cast<double>(p) - 1.0;
    logsum += std::log1p(-1.0 / (q * q));
  }
  const double oracle = 2.0 * std::exp(logsum);
  const auto g = singular_series(ShiftVector({0, 2}), 10'000'000);
  bool ok = std::abs(g.value - oracle) <= 1e-10 * oracle && std::abs(g.value - 1.32032) <= 1e-4;
  os << "G(0,2)=" << fmt(g.value, 11) << " oracle=" << fmt(oracle, 11) << "; ";

  const auto g01 = singular_series(ShiftVector({0, 1}), 10'000'000);
  ok = ok && g01.value == 0.0 && g01.zero;
  os << "G(0,1)=" << g01.value << "; ";

  const SingularSeriesEvaluator eval(100'000);
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<std::int64_t> entry(-60, 60), shift(-1000, 1000);
  std::uniform_int_distribution<int> len(1, 6);
  double worst = 0.0;
  for (int i = 0; i < 200; ++i) {
    std::vector<std::int64_t> h(static_cast<std::size_t>(len(rng)));
    for (auto& v : h) v = entry(rng);
    const double base = eval(ShiftVector(h)).value;
    auto moved = h;
    const auto s = shift(rng);
    for (auto& v : moved) v += s;
    std::shuffle(moved.begin(), moved.end(), rng);
    const double other = eval(ShiftVector(moved)).value;
    const double diff = base == 0.0 ? std::abs(other) : std::abs(other - base) / base;
    worst = std::max(worst, diff);
  }
  ok = ok && worst <= 1e-12;
  os << "invariance on 200 vectors, worst rel diff " << fmt(worst, 3);
  return {ok, os.str()};
}

// ---- 6: average of the singular series over a box ----
Outcome gallagher_trend() {
  const std::vector<std::pair<std::int64_t, std::int64_t>> box{{1, 500}, {1, 500}};
  std::ostringstream os;
  bool ok = true;
  double prev = INFINITY, prev_se = 0.0;
  for (std::uint64_t w : {2, 3, 5, 7}) {
    const auto r = gallagher_average(GallagherWeight::GW, box, primorial(w), 100'000, 1.0);
    ok = ok && r.abs_deviation <= prev + 2.0 * std::hypot(r.std_error, prev_se);
    os << "w=" << w << ": |mean-1|=" << fmt(r.abs_deviation, 4) << " (se " << fmt(r.std_error, 2) << ") ";
    prev = r.abs_deviation;
    prev_se = r.std_error;
  }
  return {ok, os.str()};
}

MajorantTable make_table(std::uint64_t modulus, CutoffKind kind) {
  const auto ctx = primorial_context(3, 1, modulus);
  const double R = majorant_R(ctx, 0.5);
  const FactorSieve sieve(static_cast<std::uint64_t>(R) + 1);
  return build_majorant(ctx, R, make_cutoff(kind), sieve);
}

// ---- 7: floor ----
Outcome majorant_floor() {
  std::ostringstream os;
  bool ok = true;
  for (auto kind : {CutoffKind::cosine, CutoffKind::bump}) {
    const auto t0 = Clock::now();
    const auto t = make_table(1'000'003, kind);
    const PrimeTable primes(t.context.W * t.context.modulus + t.context.b);
    const auto m = check_minorization(t, primes);
    const double dt = seconds_since(t0);
    ok = ok && m.violations == 0 && m.primes_checked > 0 && dt < 60.0;
    os << to_string(kind) << ": " << m.violations << " violations / " << m.primes_checked << " primes, min ratio "
       << fmt(m.min_ratio, 4) << " [" << fmt(dt, 3) << "s]; ";
  }
  return {ok, os.str()};
}

// ---- 8: mean and pair correlation along the ladder ----
Outcome majorant_trend() {
  std::ostringstream os;
  bool ok = true;
  double prev_dev = INFINITY, prev_se = 0.0, prev_corr = INFINITY;
  for (std::uint64_t N : {100'003ULL, 1'000'003ULL, 10'000'019ULL}) {
    const auto t = make_table(N, CutoffKind::cosine);
    const auto m = majorant_mean(t);
    const auto c = majorant_pair_correlation(t, 6);
    const double dev = std::abs(m.mean - 1.0), cdev = std::abs(c.ratio - 1.0);
    if (N == 1'000'003ULL) ok = ok && m.mean >= 0.5 && m.mean <= 1.5;
    ok = ok && dev <= prev_dev + 2.0 * std::hypot(m.std_error, prev_se);
    ok = ok && c.ratio >= 0.5 && c.ratio <= 2.0 && cdev <= prev_corr;
    os << "N'=" << N << ": mean " << fmt(m.mean, 5) << ", corr(6)/G_W " << fmt(c.ratio, 4) << "; ";
    prev_dev = dev;
    prev_se = m.std_error;
    prev_corr = cdev;
  }
  return {ok, os.str()};
}

// ---- 9: width threshold exponent ----
struct SlopeResult {
  double slope = 0.0;
  bool ratios_match = true;
  std::string detail;
};

SlopeResult threshold_slope(const LinearSystem& sys, const DeviationModel& model) {
  const Rational L = lindex(sys).value;
  SlopeResult out;
  std::vector<double> xs, ys;
  for (double a : {0.2, 0.1, 0.05}) {
    const auto pt = width_threshold(model, a);
    xs.push_back(std::log(1.0 / a));
    ys.push_back(std::log(pt.S_star));
    out.ratios_match = out.ratios_match && pt.dominant_ratio == L;
    out.detail += "S*(" + fmt(a, 2) + ")=" + fmt(pt.S_star, 5) + " ratio " + pt.dominant_ratio.get_str() + " ";
  }
  const double mx = (xs[0] + xs[1] + xs[2]) / 3, my = (ys[0] + ys[1] + ys[2]) / 3;
  double sxy = 0, sxx = 0;
  for (int i = 0; i < 3; ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  out.slope = sxy / sxx;
  return out;
}

Outcome threshold_exponents() {
  std::ostringstream os;
  bool ok = true;
  const auto t0 = Clock::now();
  {
    const auto sys = first_family(3);
    const DeviationModel model(sys);
    const auto r = threshold_slope(sys, model);
    ok = ok && std::abs(r.slope - 4.0) <= 0.3 && r.ratios_match;
    const auto at = model.evaluate(0.1, static_cast<std::int64_t>(2.0 * std::pow(0.1, -4)));
    ok = ok && at.deviation < 1.0;
    os << "first(3): slope " << fmt(r.slope, 4) << ", " << r.detail << "dev(0.1, S=2e4)=" << fmt(at.deviation, 3) << "; ";
  }
  for (int j : {1, 2}) {
    const auto sys = third_family(3, j);
    const DeviationModel model(sys);
    const auto r = threshold_slope(sys, model);
    ok = ok && std::abs(r.slope - 2.0) <= 0.2 && r.ratios_match;
    os << "third(3," << j << "): slope " << fmt(r.slope, 4) << "; ";
  }
  const double dt = seconds_since(t0);
  ok = ok && dt < 300.0;
  os << "[" << fmt(dt, 3) << "s]";
  return {ok, os.str()};
}

// ---- 10: narrow progressions and Lambda_D on the primes ----
Outcome narrow_progressions() {
  std::ostringstream os;
  bool ok = true;
  const PrimeTable primes(10'000'000);
  const std::vector<std::uint64_t> ladder{100'000, 1'000'000, 10'000'000};
  for (const auto& row : narrowness_report(ladder, 3, 0.0, SubsetRule{}, primes)) {
    ok = ok && row.min_d >= 1 && static_cast<double>(row.min_d) <= row.log_Lk;
    os << "N=" << row.N << ": min d " << row.min_d << " <= " << fmt(row.log_Lk, 6) << "; ";
  }
  for (std::uint64_t N : {100'003ULL, 1'000'003ULL}) {
    const PrimeTable pt(N);
    const double L = std::log(static_cast<double>(N));
    std::vector<double> f(N, 0.0);
    for (auto p : pt.primes(2, N - 1)) f[p] = L;
    const auto D = static_cast<std::uint64_t>(std::ceil(std::pow(L, 4)));
    const std::vector<std::span<const double>> fs{f, f, f};
    const double v = lambda_D(fs, D);
    ok = ok && v > 0.0;
    os << "Lambda_D(N'=" << N << ", D=" << D << ")=" << fmt(v, 6) << "; ";
  }
  return {ok, os.str()};
}

// ---- 11: count against the Hardy-Littlewood prediction ----
Outcome hl_comparison() {
  const PrimeTable primes(10'000'000 + 12);
  const auto r = ap_count_report(10'000'000, 3, 6, primes);
  const bool ok = std::abs(r.ratio - 1.0) <= 0.10;
  return {ok, "count " + std::to_string(r.count) + ", prediction " + fmt(r.prediction.integral, 7) + ", ratio " +
                  fmt(r.ratio, 5) + " (N/log^3 N form: ratio " +
                  fmt(static_cast<double>(r.count) / r.prediction.simple, 4) + ")"};
}

// ---- 12: Lambda_D against the plain loop ----
Outcome lambda_brute() {
  std::mt19937_64 rng(4242);
  int mismatches = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::uint64_t N = 2 + rng() % 300;
    const std::uint64_t D = 1 + rng() % std::min<std::uint64_t>(40, N - 1);
    const std::size_t k = 1 + rng() % 5;
    std::vector<std::vector<double>> f(k, std::vector<double>(N));
    for (auto& row : f) {
      for (auto& v : row) v = (rng() % 3 == 0) ? 0.0 : std::ldexp(static_cast<double>(rng() % 4096), -9);
    }
    double total = 0.0;
    for (std::uint64_t n = 0; n < N; ++n) {
      for (std::uint64_t d = 1; d <= D; ++d) {
        double prod = f[0][n];
        for (std::size_t j = 1; j < k; ++j) prod *= f[j][(n + j * d) % N];
        total += prod;
      }
    }
    const double brute = total / (static_cast<double>(N) * static_cast<double>(D));
    const std::vector<std::span<const double>> fs(f.begin(), f.end());
    mismatches += lambda_D(fs, D) != brute;
  }
  return {mismatches == 0, "50 instances, " + std::to_string(mismatches) + " mismatches"};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"collision index values", lindex_values},
      {"distinct forms on codim 1 and 2", min_distinct_bounds},
      {"lindex vs brute force", lindex_vs_brute},
      {"sieve factor normalization", c2_normalization},
      {"singular series", singular_checks},
      {"singular series average trend", gallagher_trend},
      {"majorant floor", majorant_floor},
      {"majorant mean and correlation trend", majorant_trend},
      {"width threshold exponents", threshold_exponents},
      {"narrow prime progressions", narrow_progressions},
      {"Hardy-Littlewood count", hl_comparison},
      {"Lambda_D vs brute force", lambda_brute},
  };
  int passed = 0, unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const bool known = kKnownFailures.count(id) > 0;
    passed += o.pass;
    if (!o.pass && !known) ++unexpected;
    std::printf("%2d %-36s %s  %s\n", id, criteria[i].first.c_str(),
                o.pass ? "PASS" : (known ? "FAIL (known)" : "FAIL"), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu passed, %d unexpected failures\n", passed, criteria.size(), unexpected);
  return unexpected == 0 ? 0 : 1;
}
