#include "narrowlab/numtheory.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <new>
#include <string>
#include <thread>

#include "binio.hpp"
#include "narrowlab/errors.hpp"

namespace narrowlab {

namespace {

constexpr std::string_view kSieveMagic = "NAPSV1";

std::uint64_t isqrt(std::uint64_t n) {
  auto r = static_cast<std::uint64_t>(std::sqrt(static_cast<long double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

void fill_spf_range(std::span<std::uint32_t> spf, std::uint64_t lo, std::uint64_t hi,
                    std::span<const std::uint32_t> base) {
  // spf holds entries for [lo, hi); index i <-> lo + i
  for (std::uint32_t p : base) {
    const std::uint64_t pp = std::uint64_t{p} * p;
    if (pp >= hi) break;
    std::uint64_t start = std::max(pp, (lo + p - 1) / p * p);
    for (std::uint64_t m = start; m < hi; m += p) {
      auto& slot = spf[m - lo];
      if (slot == 0) slot = p;
    }
  }
  for (std::uint64_t n = std::max<std::uint64_t>(lo, 2); n < hi; ++n) {
    if (spf[n - lo] == 0) spf[n - lo] = static_cast<std::uint32_t>(n);
  }
}

std::uint64_t mulmod(std::uint64_t a, std::uint64_t b, std::uint64_t m) {
  return static_cast<std::uint64_t>(static_cast<unsigned __int128>(a) * b % m);
}

std::uint64_t powmod(std::uint64_t a, std::uint64_t e, std::uint64_t m) {
  std::uint64_t r = 1 % m;
  a %= m;
  while (e) {
    if (e & 1) r = mulmod(r, a, m);
    a = mulmod(a, a, m);
    e >>= 1;
  }
  return r;
}

void check_range(std::uint64_t n, const FactorSieve& sieve) {
  if (n < 1 || n > sieve.limit()) {
    throw DomainError("argument " + std::to_string(n) + " outside sieve range [1, " +
                      std::to_string(sieve.limit()) + "]");
  }
}

}  // namespace

std::vector<std::uint32_t> primes_up_to(std::uint32_t limit) {
  std::vector<std::uint32_t> out;
  if (limit < 2) return out;
  std::vector<bool> composite(limit + 1, false);
  for (std::uint64_t p = 2; p <= limit; ++p) {
    if (composite[p]) continue;
    out.push_back(static_cast<std::uint32_t>(p));
    for (std::uint64_t m = p * p; m <= limit; m += p) composite[m] = true;
  }
  return out;
}

FactorSieve::FactorSieve(std::uint64_t limit, const SieveOptions& options) {
  if (limit < 2) throw DomainError("sieve limit must be at least 2");
  if (limit >= (std::uint64_t{1} << 32)) {
    throw ResourceError("sieve limit exceeds 32-bit table entries", (limit + 1) * 8);
  }
  const std::uint64_t bytes = (limit + 1) * sizeof(std::uint32_t);
  if (bytes > options.max_bytes) {
    throw ResourceError("factor sieve up to " + std::to_string(limit) + " needs " + std::to_string(bytes) +
                            " bytes, above the cap of " + std::to_string(options.max_bytes),
                        bytes);
  }
  try {
    spf_.assign(limit + 1, 0);
  } catch (const std::bad_alloc&) {
    throw ResourceError("allocation of " + std::to_string(bytes) + " bytes for factor sieve failed", bytes);
  }

  const auto base = primes_up_to(static_cast<std::uint32_t>(isqrt(limit)));
  segmented_ = limit + 1 > options.resident_entries;
  if (!segmented_) {
    fill_spf_range(spf_, 0, limit + 1, base);
    return;
  }

  const std::uint64_t seg = std::max<std::uint64_t>(options.segment_entries, 1024);
  const std::uint64_t nseg = (limit + 1 + seg - 1) / seg;
  const unsigned workers = std::max(1u, options.workers);
  auto work = [&](unsigned id) {
    for (std::uint64_t s = id; s < nseg; s += workers) {
      const std::uint64_t lo = s * seg;
      const std::uint64_t hi = std::min(limit + 1, lo + seg);
      fill_spf_range(std::span(spf_).subspan(lo, hi - lo), lo, hi, base);
    }
  };
  if (workers == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned id = 0; id < workers; ++id) pool.emplace_back(work, id);
  }
}

FactorSieve FactorSieve::from_table(std::vector<std::uint32_t> table) {
  if (table.size() < 3) throw FormatError("sieve table shorter than limit 2");
  if (table[0] != 0 || table[1] != 0) throw FormatError("sieve table entries 0 and 1 must be zero");
  for (std::uint64_t n = 2; n < table.size(); ++n) {
    const std::uint64_t p = table[n];
    if (p < 2 || p > n || n % p != 0 || (p != n && table[p] != p)) {
      throw FormatError("sieve table entry " + std::to_string(n) + " is not a smallest prime factor");
    }
  }
  FactorSieve s;
  s.spf_ = std::move(table);
  return s;
}

std::uint32_t FactorSieve::spf(std::uint64_t n) const {
  if (n > limit()) throw DomainError("argument " + std::to_string(n) + " outside sieve range");
  return spf_[n];
}

bool FactorSieve::is_prime(std::uint64_t n) const { return n >= 2 && spf(n) == n; }

FactorSieve build_factor_sieve(std::uint64_t limit, const SieveOptions& options) {
  return FactorSieve(limit, options);
}

int moebius(std::uint64_t n, const FactorSieve& sieve) {
  check_range(n, sieve);
  int mu = 1;
  while (n > 1) {
    const std::uint64_t p = sieve.spf(n);
    n /= p;
    if (n % p == 0) return 0;
    mu = -mu;
  }
  return mu;
}

std::uint64_t euler_phi(std::uint64_t n, const FactorSieve& sieve) {
  check_range(n, sieve);
  std::uint64_t phi = n;
  for (auto [p, e] : factorize(n, sieve)) phi = phi / p * (p - 1);
  return phi;
}

Factorization factorize(std::uint64_t n, const FactorSieve& sieve) {
  check_range(n, sieve);
  Factorization out;
  while (n > 1) {
    const std::uint64_t p = sieve.spf(n);
    unsigned e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    out.emplace_back(p, e);
  }
  return out;
}

unsigned omega(std::uint64_t n, const FactorSieve& sieve) {
  return static_cast<unsigned>(factorize(n, sieve).size());
}

PrimeTable::PrimeTable(std::uint64_t limit, std::uint64_t segment_bytes) : limit_(limit) {
  if (limit < 2) throw DomainError("prime table limit must be at least 2");
  const std::uint64_t nodd = limit / 2 + 1;  // odd numbers 1, 3, ..., <= limit (+1 slack)
  const std::uint64_t words = (nodd + 63) / 64;
  try {
    odd_bits_.assign(words, ~std::uint64_t{0});
  } catch (const std::bad_alloc&) {
    throw ResourceError("allocation for prime table failed", words * 8);
  }
  odd_bits_[0] &= ~std::uint64_t{1};  // 1 is not prime
  // clear bits beyond limit
  for (std::uint64_t i = nodd; i < words * 64; ++i) odd_bits_[i / 64] &= ~(std::uint64_t{1} << (i % 64));
  if (2 * (nodd - 1) + 1 > limit) odd_bits_[(nodd - 1) / 64] &= ~(std::uint64_t{1} << ((nodd - 1) % 64));

  const auto base = primes_up_to(static_cast<std::uint32_t>(isqrt(limit)));
  const std::uint64_t seg_odd = std::max<std::uint64_t>(segment_bytes * 8, 4096);
  for (std::uint64_t lo = 0; lo < nodd; lo += seg_odd) {
    const std::uint64_t hi = std::min(nodd, lo + seg_odd);  // odd indices [lo, hi)
    for (std::size_t k = 1; k < base.size(); ++k) {
      const std::uint64_t p = base[k];
      const std::uint64_t pp_idx = (p * p) / 2;
      if (pp_idx >= hi) break;
      // odd multiples of p: value 2i+1 = p*m with m odd; index step p
      std::uint64_t i = pp_idx;
      if (i < lo) i += (lo - i + p - 1) / p * p;
      for (; i < hi; i += p) odd_bits_[i / 64] &= ~(std::uint64_t{1} << (i % 64));
    }
  }
  count_ = 1;  // the prime 2
  for (auto w : odd_bits_) count_ += static_cast<std::uint64_t>(std::popcount(w));
}

bool PrimeTable::is_prime(std::uint64_t n) const {
  if (n > limit_) throw DomainError("argument " + std::to_string(n) + " outside prime table range");
  if (n == 2) return true;
  if (n < 2 || n % 2 == 0) return false;
  const std::uint64_t i = n / 2;
  return (odd_bits_[i / 64] >> (i % 64)) & 1;
}

std::uint64_t PrimeTable::count_upto(std::uint64_t x) const {
  if (x > limit_) throw DomainError("count_upto beyond prime table range");
  if (x < 2) return 0;
  const std::uint64_t last = (x % 2 == 1) ? x / 2 : x / 2 - 1;  // index of largest odd <= x
  std::uint64_t c = 1;
  const std::uint64_t full = (last + 1) / 64;
  for (std::uint64_t w = 0; w < full; ++w) c += static_cast<std::uint64_t>(std::popcount(odd_bits_[w]));
  const std::uint64_t rem = (last + 1) % 64;
  if (rem) c += static_cast<std::uint64_t>(std::popcount(odd_bits_[full] & ((std::uint64_t{1} << rem) - 1)));
  return c;
}

std::vector<std::uint64_t> PrimeTable::primes(std::uint64_t lo, std::uint64_t hi) const {
  hi = std::min(hi, limit_);
  std::vector<std::uint64_t> out;
  if (lo <= 2 && hi >= 2) out.push_back(2);
  std::uint64_t start = std::max<std::uint64_t>(lo, 3);
  if (start % 2 == 0) ++start;
  for (std::uint64_t n = start; n <= hi; n += 2) {
    const std::uint64_t i = n / 2;
    const std::uint64_t word = odd_bits_[i / 64] >> (i % 64);
    if (word == 0) {  // skip to next word
      const std::uint64_t next_i = (i / 64 + 1) * 64;
      n = 2 * next_i + 1 - 2;
      continue;
    }
    if (word & 1) out.push_back(n);
  }
  return out;
}

bool is_prime_u64(std::uint64_t n) {
  if (n < 2) return false;
  static constexpr std::uint64_t kWitnesses[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41};
  for (std::uint64_t p : kWitnesses) {
    if (n % p == 0) return n == p;
  }
  std::uint64_t d = n - 1;
  unsigned s = 0;
  while (d % 2 == 0) {
    d /= 2;
    ++s;
  }
  for (std::uint64_t a : kWitnesses) {
    std::uint64_t x = powmod(a, d, n);
    if (x == 1 || x == n - 1) continue;
    bool composite = true;
    for (unsigned r = 1; r < s; ++r) {
      x = mulmod(x, x, n);
      if (x == n - 1) {
        composite = false;
        break;
      }
    }
    if (composite) return false;
  }
  return true;
}

Factorization factorize_trial(std::uint64_t n) {
  if (n == 0) throw DomainError("cannot factorize 0");
  Factorization out;
  for (std::uint64_t p = 2; p * p <= n; p += (p == 2 ? 1 : 2)) {
    if (n % p) continue;
    unsigned e = 0;
    while (n % p == 0) {
      n /= p;
      ++e;
    }
    out.emplace_back(p, e);
  }
  if (n > 1) out.emplace_back(n, 1);
  return out;
}

std::uint64_t gcd_u64(std::uint64_t a, std::uint64_t b) {
  while (b) {
    a %= b;
    std::swap(a, b);
  }
  return a;
}

std::uint64_t inverse_mod(std::uint64_t a, std::uint64_t m) {
  if (m == 1) return 0;
  __int128 t = 0, new_t = 1;
  __int128 r = m, new_r = a % m;
  while (new_r != 0) {
    const __int128 q = r / new_r;
    std::tie(t, new_t) = std::pair{new_t, t - q * new_t};
    std::tie(r, new_r) = std::pair{new_r, r - q * new_r};
  }
  if (r != 1) throw DomainError("no modular inverse: gcd(" + std::to_string(a) + ", " + std::to_string(m) + ") != 1");
  if (t < 0) t += m;
  return static_cast<std::uint64_t>(t);
}

std::uint64_t primorial(std::uint64_t w) {
  std::uint64_t W = 1;
  for (std::uint64_t p = 2; p <= w; ++p) {
    if (!is_prime_u64(p)) continue;
    if (W > UINT64_MAX / p) throw DomainError("primorial of " + std::to_string(w) + " overflows 64 bits");
    W *= p;
  }
  return W;
}

WTrickContext primorial_context(std::uint64_t w, std::int64_t b, std::uint64_t modulus) {
  if (w < 1) throw DomainError("w must be at least 1");
  if (!is_prime_u64(modulus)) throw DomainError("modulus " + std::to_string(modulus) + " is not prime");
  WTrickContext ctx;
  ctx.w = w;
  ctx.W = primorial(w);
  ctx.modulus = modulus;
  const auto W = static_cast<std::int64_t>(ctx.W);
  ctx.b = static_cast<std::uint64_t>(((b % W) + W) % W);
  for (std::uint64_t p = 2; p <= w; ++p) {
    if (is_prime_u64(p) && ctx.b % p == 0 && ctx.W > 1) {
      throw DomainError("b = " + std::to_string(b) + " is not a reduced residue mod W = " +
                        std::to_string(ctx.W) + ": shares the prime " + std::to_string(p));
    }
  }
  return ctx;
}

void save_sieve(const std::filesystem::path& path, const FactorSieve& sieve) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out.write(kSieveMagic.data(), kSieveMagic.size());
  binio::put_u64(out, sieve.limit());
  const auto table = sieve.table();
  if constexpr (std::endian::native == std::endian::little) {
    out.write(reinterpret_cast<const char*>(table.data()), static_cast<std::streamsize>(table.size_bytes()));
  } else {
    for (auto v : table) binio::put_u32(out, v);
  }
  if (!out) throw FormatError("write to " + path.string() + " failed");
}

FactorSieve load_sieve(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  binio::expect_magic(in, kSieveMagic);
  const std::uint64_t limit = binio::get_u64(in);
  std::error_code ec;
  const auto size = std::filesystem::file_size(path, ec);
  const std::uint64_t expected = kSieveMagic.size() + 8 + (limit + 1) * 4;
  if (ec || limit < 2 || limit >= (std::uint64_t{1} << 32) || size != expected) {
    throw FormatError("sieve cache " + path.string() + ": header limit " + std::to_string(limit) +
                      " does not match file length " + std::to_string(size));
  }
  std::vector<std::uint32_t> table(limit + 1);
  if constexpr (std::endian::native == std::endian::little) {
    if (!in.read(reinterpret_cast<char*>(table.data()), static_cast<std::streamsize>(table.size() * 4))) {
      throw FormatError("sieve cache truncated");
    }
  } else {
    for (auto& v : table) v = binio::get_u32(in);
  }
  return FactorSieve::from_table(std::move(table));
}

}  // namespace narrowlab
