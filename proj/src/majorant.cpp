#include "narrowlab/majorant.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <string_view>
#include <thread>

#include "binio.hpp"
#include "narrowlab/errors.hpp"
#include "narrowlab/singular.hpp"

namespace narrowlab {

namespace {

constexpr std::string_view kMajorantMagic = "NAPMV1";

std::uint64_t phi_of_squarefree(std::uint64_t W) {
  std::uint64_t phi = 1;
  for (auto [p, e] : factorize_trial(W)) {
    if (e != 1) throw DomainError("W must be squarefree");
    phi *= p - 1;
  }
  return phi;
}

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

// Neumaier step on (sum, compensation).
inline void neumaier(double& s, double& c, double x) {
  const double t = s + x;
  if (std::abs(s) >= std::abs(x)) {
    c += (s - t) + x;
  } else {
    c += (x - t) + s;
  }
  s = t;
}

}  // namespace

double lambda_chi_R(std::uint64_t m, double R, const CutoffSpec& cutoff, const FactorSieve& sieve) {
  if (m == 0 || m > sieve.limit()) {
    throw DomainError("m = " + std::to_string(m) + " outside the sieve range [1, " + std::to_string(sieve.limit()) + "]");
  }
  if (!(R > 1)) throw DomainError("R must exceed 1");
  const double logR = std::log(R);
  std::vector<std::uint64_t> ps;
  for (auto [p, e] : factorize(m, sieve)) ps.push_back(p);
  double s = 0.0;
  // squarefree divisors by subset; products above R drop out by support
  const std::size_t n = ps.size();
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double d = 1.0;
    int sign = 1;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask >> i & 1) {
        d *= static_cast<double>(ps[i]);
        sign = -sign;
      }
    }
    if (d >= R) continue;
    s += sign * cutoff.value(std::log(d) / logR);
  }
  return logR * s;
}

double MajorantTable::normalizer() const {
  return static_cast<double>(phi_of_squarefree(context.W)) / (static_cast<double>(context.W) * std::log(R));
}

double MajorantTable::floor() const {
  return static_cast<double>(phi_of_squarefree(context.W)) * std::log(R) / (4.0 * static_cast<double>(context.W));
}

double majorant_R(const WTrickContext& context, double exponent) {
  if (!(exponent > 0 && exponent <= 0.5)) throw DomainError("R exponent must lie in (0, 1/2]");
  const double range = static_cast<double>(context.W) * static_cast<double>(context.modulus) + static_cast<double>(context.b);
  return std::pow(range, exponent);
}

MajorantTable build_majorant(const WTrickContext& context, double R, const CutoffSpec& cutoff,
                             const FactorSieve& sieve, const MajorantOptions& options) {
  const std::uint64_t N = context.modulus;
  const double range = static_cast<double>(context.W) * static_cast<double>(N) + static_cast<double>(context.b);
  if (!(R > 1)) throw DomainError("R must exceed 1");
  if (R > std::sqrt(range) * (1 + 1e-12)) {
    throw DomainError("R = " + std::to_string(R) + " exceeds sqrt(W N' + b) = " + std::to_string(std::sqrt(range)));
  }
  const auto dmax = static_cast<std::uint64_t>(std::floor(R));
  if (dmax > sieve.limit()) {
    throw DomainError("sieve limit " + std::to_string(sieve.limit()) + " does not cover R = " + std::to_string(R));
  }
  const double logR = std::log(R);

  struct Divisor {
    std::uint64_t d;
    std::uint64_t n0;  // Wn + b = 0 mod d  <=>  n = n0 mod d
    double weight;
  };
  std::vector<Divisor> divisors;
  for (std::uint64_t d = 1; d <= dmax; ++d) {
    const int mu = moebius(d, sieve);
    if (mu == 0 || gcd_u64(d, context.W) != 1) continue;
    const double weight = mu * cutoff.value(std::log(static_cast<double>(d)) / logR);
    if (weight == 0.0) continue;
    const std::uint64_t minus_b = (d - context.b % d) % d;
    const std::uint64_t n0 = d == 1 ? 0 : mulmod(minus_b, inverse_mod(context.W % d, d), d);
    divisors.push_back({d, n0, weight});
  }

  MajorantTable table;
  table.context = context;
  table.R = R;
  table.cutoff = cutoff;
  table.lambda_values.assign(N, 0.0);
  table.values.assign(N, 0.0);
  std::vector<double> comp(N, 0.0);

  const unsigned workers = std::max(1u, options.workers);
  const std::uint64_t chunk = (N + workers - 1) / workers;
  const double norm = table.normalizer();
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      const std::uint64_t lo = std::min(N, w * chunk), hi = std::min(N, lo + chunk);
      pool.emplace_back([&, lo, hi] {
        double* lam = table.lambda_values.data();
        double* c = comp.data();
        for (const auto& dv : divisors) {
          std::uint64_t n = dv.n0;
          if (n < lo) n += (lo - n + dv.d - 1) / dv.d * dv.d;
          for (; n < hi; n += dv.d) neumaier(lam[n], c[n], dv.weight);
        }
        for (std::uint64_t n = lo; n < hi; ++n) {
          lam[n] = (lam[n] + c[n]) * logR;
          table.values[n] = norm * lam[n] * lam[n];
        }
      });
    }
  }
  return table;
}

MajorantTable constant_majorant(const WTrickContext& context) {
  MajorantTable table;
  table.context = context;
  table.R = std::exp(1.0);
  table.values.assign(context.modulus, 1.0);
  return table;
}

MeanReport majorant_mean(const MajorantTable& table) {
  const auto& v = table.values;
  if (v.empty()) throw DomainError("empty majorant table");
  double s = 0.0, c = 0.0, q = 0.0, cq = 0.0;
  for (double x : v) {
    neumaier(s, c, x);
    neumaier(q, cq, x * x);
  }
  const double n = static_cast<double>(v.size());
  MeanReport out;
  out.mean = (s + c) / n;
  const double var = std::max(0.0, (q + cq) / n - out.mean * out.mean);
  out.std_error = std::sqrt(var / n);
  return out;
}

PairCorrelation majorant_pair_correlation(const MajorantTable& table, std::int64_t h, std::uint64_t pmax) {
  const std::uint64_t N = table.modulus();
  const auto& v = table.values;
  if (v.size() != N) throw DomainError("table length does not match its modulus");
  const std::int64_t Ns = static_cast<std::int64_t>(N);
  const std::int64_t hr = ((h % Ns) + Ns) % Ns;
  if (hr == 0) throw DomainError("shift h must be nonzero mod N'");

  PairCorrelation out;
  out.h = h;
  double s = 0.0, c = 0.0;
  const std::uint64_t shift = static_cast<std::uint64_t>(hr);
  for (std::uint64_t n = 0; n < N; ++n) {
    std::uint64_t m = n + shift;
    if (m >= N) m -= N;
    neumaier(s, c, v[n] * v[m]);
  }
  out.empirical = (s + c) / static_cast<double>(N);
  const bool constant = !table.cutoff && std::all_of(v.begin(), v.end(), [](double x) { return x == 1.0; });
  out.predicted = constant ? 1.0 : SingularSeriesEvaluator(pmax)(ShiftVector({0, h}), table.context.W).value;
  out.ratio = out.predicted != 0.0 ? out.empirical / out.predicted : 0.0;
  return out;
}

MinorizationReport check_minorization(const MajorantTable& table, const PrimeTable& primes) {
  const auto& ctx = table.context;
  const std::uint64_t N = table.modulus();
  const unsigned __int128 top = static_cast<unsigned __int128>(ctx.W) * (N - 1) + ctx.b;
  if (top > primes.limit()) {
    throw DomainError("prime table limit " + std::to_string(primes.limit()) + " does not cover W(N'-1) + b");
  }
  MinorizationReport out;
  out.threshold = table.floor();
  out.min_ratio = INFINITY;
  for (std::uint64_t n = 0; n < N; ++n) {
    const std::uint64_t m = ctx.W * n + ctx.b;
    if (static_cast<double>(m) <= table.R || !primes.is_prime(m)) continue;
    ++out.primes_checked;
    const double ratio = table.values[n] / out.threshold;
    out.min_ratio = std::min(out.min_ratio, ratio);
    if (table.values[n] < out.threshold) ++out.violations;
  }
  return out;
}

void save_majorant(const std::filesystem::path& path, const MajorantTable& table) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(kMajorantMagic.data(), kMajorantMagic.size());
  binio::put_u64(out, table.modulus());
  binio::put_u64(out, table.context.W);
  binio::put_u64(out, table.context.b);
  binio::put_f64(out, table.R);
  for (double x : table.values) binio::put_f64(out, x);
  if (!out) throw FormatError("write to " + path.string() + " failed");
}

MajorantTable load_majorant(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  binio::expect_magic(in, kMajorantMagic);
  const std::uint64_t N = binio::get_u64(in);
  const std::uint64_t W = binio::get_u64(in);
  const std::uint64_t b = binio::get_u64(in);
  const double R = binio::get_f64(in);
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  if (ec || N == 0 || N > (std::uint64_t{1} << 40) || size != kMajorantMagic.size() + 32 + N * 8) {
    throw FormatError("majorant cache " + path.string() + ": header N' = " + std::to_string(N) +
                      " does not match file length " + std::to_string(size));
  }
  MajorantTable table;
  std::uint64_t w = 1;
  for (auto [p, e] : factorize_trial(W)) w = p;
  try {
    table.context = primorial_context(w, static_cast<std::int64_t>(b), N);
  } catch (const DomainError& e) {
    throw FormatError(std::string("majorant cache header is inconsistent: ") + e.what());
  }
  if (table.context.W != W) throw FormatError("majorant cache header W is not a primorial");
  table.R = R;
  table.values.resize(N);
  for (auto& x : table.values) x = binio::get_f64(in);
  return table;
}

}  // namespace narrowlab
