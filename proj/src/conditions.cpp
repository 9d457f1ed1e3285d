#include "narrowlab/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <thread>
#include <tuple>

#include "narrowlab/errors.hpp"
#include "rng.hpp"

namespace narrowlab {

namespace {

std::uint64_t mod_residue(__int128 v, std::uint64_t m) {
  __int128 r = v % static_cast<__int128>(m);
  if (r < 0) r += m;
  return static_cast<std::uint64_t>(r);
}

__int128 eval_form(const LinearForm& f, const std::vector<std::int64_t>& x) {
  __int128 v = f.constant;
  for (std::size_t i = 0; i < x.size(); ++i) v += static_cast<__int128>(f.coeffs[i]) * x[i];
  return v;
}

void check_forms(std::span<const LinearForm> forms, const ExponentPattern& e, const BoxRegion& box) {
  if (forms.empty()) throw DomainError("need at least one form");
  for (const auto& f : forms) {
    if (f.dim() != box.dim()) throw DomainError("form dimension does not match the box");
  }
  if (!e.empty() && e.size() != forms.size()) throw DomainError("exponent pattern length does not match the forms");
  for (auto v : e) {
    if (v > 1) throw DomainError("exponents must be 0 or 1");
  }
}

std::vector<const LinearForm*> active_forms(std::span<const LinearForm> forms, const ExponentPattern& e) {
  std::vector<const LinearForm*> out;
  for (std::size_t i = 0; i < forms.size(); ++i) {
    if (e.empty() || e[i]) out.push_back(&forms[i]);
  }
  return out;
}

// Odometer over the integer points of a box.
bool next_point(std::vector<std::int64_t>& x, const std::vector<std::int64_t>& lo, const std::vector<std::int64_t>& hi) {
  for (std::size_t i = x.size(); i-- > 0;) {
    if (x[i] < hi[i]) {
      ++x[i];
      return true;
    }
    x[i] = lo[i];
  }
  return false;
}

}  // namespace

BoxRegion::BoxRegion(std::vector<std::int64_t> lo, std::vector<std::int64_t> hi) : lo_(std::move(lo)), hi_(std::move(hi)) {
  if (lo_.empty() || lo_.size() != hi_.size()) throw DomainError("box needs matching, non-empty bounds");
  for (std::size_t i = 0; i < lo_.size(); ++i) {
    if (hi_[i] < lo_[i]) throw DomainError("box side " + std::to_string(i) + " is empty");
  }
}

BoxRegion BoxRegion::centered(std::size_t d, std::int64_t S) {
  if (S < 0) throw DomainError("box half-width must be non-negative");
  return BoxRegion(std::vector<std::int64_t>(d, -S), std::vector<std::int64_t>(d, S));
}

double BoxRegion::inradius() const {
  std::int64_t m = hi_[0] - lo_[0];
  for (std::size_t i = 1; i < lo_.size(); ++i) m = std::min(m, hi_[i] - lo_[i]);
  return static_cast<double>(m) / 2.0;
}

std::uint64_t BoxRegion::points() const {
  std::uint64_t n = 1;
  for (std::size_t i = 0; i < dim(); ++i) {
    const std::uint64_t s = side(i);
    if (n > UINT64_MAX / s) return UINT64_MAX;
    n *= s;
  }
  return n;
}

WeightModel WeightModel::from_table(const MajorantTable& table) {
  WeightModel m;
  m.kind_ = Kind::table;
  m.table_ = &table;
  m.modulus_ = table.modulus();
  return m;
}

WeightModel WeightModel::random(double alpha, std::uint64_t seed, std::uint64_t modulus) {
  if (!(alpha > 0 && alpha < 1)) throw DomainError("alpha must lie in (0, 1)");
  if (modulus == 0) throw DomainError("modulus must be positive");
  WeightModel m;
  m.kind_ = Kind::random;
  m.alpha_ = alpha;
  m.seed_ = seed;
  m.modulus_ = modulus;
  m.threshold_ = static_cast<std::uint64_t>(std::ldexp(alpha, 64));
  return m;
}

WeightModel WeightModel::constant(std::uint64_t modulus) {
  if (modulus == 0) throw DomainError("modulus must be positive");
  WeightModel m;
  m.modulus_ = modulus;
  return m;
}

double WeightModel::operator()(std::uint64_t n) const {
  switch (kind_) {
    case Kind::table:
      return table_->values[n];
    case Kind::random:
      return rng::stream_seed(seed_, n) < threshold_ ? 1.0 / alpha_ : 0.0;
    case Kind::constant:
      break;
  }
  return 1.0;
}

LfcEstimate lfc_average_mc(const WeightModel& model, std::span<const LinearForm> forms, const ExponentPattern& e,
                           const BoxRegion& box, std::uint64_t samples, std::uint64_t seed, unsigned workers) {
  check_forms(forms, e, box);
  if (samples == 0) throw DomainError("sample count must be positive");
  const auto act = active_forms(forms, e);
  const std::uint64_t N = model.modulus();
  constexpr std::uint64_t block = 1 << 16;
  const std::uint64_t nblocks = (samples + block - 1) / block;
  std::vector<double> sums(nblocks), squares(nblocks);

  auto run = [&](std::uint64_t b) {
    std::mt19937_64 gen(rng::stream_seed(seed, b));
    std::uniform_int_distribution<std::uint64_t> pick_n(0, N - 1);
    std::vector<std::uniform_int_distribution<std::int64_t>> pick_x;
    for (std::size_t i = 0; i < box.dim(); ++i) pick_x.emplace_back(box.lo()[i], box.hi()[i]);
    std::vector<std::int64_t> x(box.dim());
    double s = 0.0, q = 0.0;
    const std::uint64_t end = std::min(samples, (b + 1) * block);
    for (std::uint64_t k = b * block; k < end; ++k) {
      const std::uint64_t n = pick_n(gen);
      for (std::size_t i = 0; i < x.size(); ++i) x[i] = pick_x[i](gen);
      double prod = 1.0;
      for (const auto* f : act) {
        prod *= model(mod_residue(n + eval_form(*f, x), N));
        if (prod == 0.0) break;
      }
      s += prod;
      q += prod * prod;
    }
    sums[b] = s;
    squares[b] = q;
  };

  workers = std::max(1u, workers);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::uint64_t b = w; b < nblocks; b += workers) run(b);
      });
    }
  }
  double s = 0.0, q = 0.0;
  for (std::uint64_t b = 0; b < nblocks; ++b) {
    s += sums[b];
    q += squares[b];
  }
  LfcEstimate out;
  out.samples = samples;
  out.workers = workers;
  const double n = static_cast<double>(samples);
  out.estimate = s / n;
  out.std_error = std::sqrt(std::max(0.0, q / n - out.estimate * out.estimate) / n);
  return out;
}

double lfc_average_exact(const WeightModel& model, std::span<const LinearForm> forms, const ExponentPattern& e,
                         const BoxRegion& box, std::uint64_t cap) {
  check_forms(forms, e, box);
  const auto act = active_forms(forms, e);
  if (model.kind() == WeightModel::Kind::constant || act.empty()) return 1.0;
  const std::uint64_t N = model.modulus();
  const std::uint64_t pts = box.points();
  const bool table = model.kind() == WeightModel::Kind::table;
  const unsigned __int128 work = static_cast<unsigned __int128>(pts) * (table ? N * act.size() : act.size());
  if (pts == UINT64_MAX || work > cap) {
    throw ResourceError("exact average needs about " + std::to_string(static_cast<double>(work)) +
                            " evaluations, above the cap of " + std::to_string(cap),
                        static_cast<std::uint64_t>(std::min<unsigned __int128>(work, UINT64_MAX)));
  }

  std::vector<std::int64_t> x = box.lo();
  std::vector<std::uint64_t> r(act.size());
  double total = 0.0;
  do {
    for (std::size_t i = 0; i < act.size(); ++i) r[i] = mod_residue(eval_form(*act[i], x), N);
    if (table) {
      double s = 0.0;
      for (std::uint64_t n = 0; n < N; ++n) {
        double prod = 1.0;
        for (auto ri : r) {
          std::uint64_t m = n + ri;
          if (m >= N) m -= N;
          prod *= model(m);
          if (prod == 0.0) break;
        }
        s += prod;
      }
      total += s / static_cast<double>(N);
    } else {
      auto sorted = r;
      std::sort(sorted.begin(), sorted.end());
      const auto distinct = std::unique(sorted.begin(), sorted.end()) - sorted.begin();
      total += std::pow(model.alpha(), static_cast<double>(distinct) - static_cast<double>(r.size()));
    }
  } while (next_point(x, box.lo(), box.hi()));
  return total / static_cast<double>(pts);
}

double hyperplane_fraction(std::span<const std::int64_t> a, std::int64_t c, const BoxRegion& box) {
  if (a.size() != box.dim()) throw DomainError("coefficient length does not match the box");
  std::int64_t g = 0;
  for (auto v : a) g = std::gcd(g, v);
  if (g == 0) return c == 0 ? 1.0 : 0.0;
  if (c % g != 0) return 0.0;

  // dist[j] = P(partial sum = vmin + j)
  std::vector<double> dist{1.0}, prefix;
  std::int64_t vmin = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 0) continue;
    std::int64_t step = a[i] / g, lo = box.lo()[i], hi = box.hi()[i];
    if (step < 0) {
      step = -step;
      std::tie(lo, hi) = std::pair(-hi, -lo);
    }
    const std::uint64_t side = static_cast<std::uint64_t>(hi - lo) + 1;
    const std::size_t newlen = dist.size() + static_cast<std::size_t>(step) * (side - 1);
    prefix.assign(newlen, 0.0);
    const std::size_t st = static_cast<std::size_t>(step);
    for (std::size_t j = 0; j < newlen; ++j) {
      prefix[j] = (j < dist.size() ? dist[j] : 0.0) + (j >= st ? prefix[j - st] : 0.0);
    }
    const std::size_t span = st * side;
    const double inv = 1.0 / static_cast<double>(side);
    dist.assign(newlen, 0.0);
    for (std::size_t j = 0; j < newlen; ++j) {
      const double v = prefix[j] - (j >= span ? prefix[j - span] : 0.0);
      dist[j] = std::max(0.0, v) * inv;
    }
    vmin += step * lo;
  }
  const std::int64_t target = -c / g - vmin;
  if (target < 0 || target >= static_cast<std::int64_t>(dist.size())) return 0.0;
  return dist[static_cast<std::size_t>(target)];
}

namespace {

// Points of a flat in [-S, S]^d, by enumerating its free coordinates.
struct FlatCounter {
  std::size_t d = 0;
  std::vector<std::size_t> free_vars, pivots;
  // scaled rows: scale * x_pivot + sum coef_f x_f + cst = 0
  std::vector<std::int64_t> scale, cst;
  std::vector<std::vector<std::int64_t>> coef;
  struct RowCongruence {
    std::int64_t c = 0, g = 1, m = 1, inv = 0;
    std::int64_t M_before = 1, h = 1, mh = 1, invM = 0;
  };
  std::vector<RowCongruence> cong;

  explicit FlatCounter(const Subspace& v) : d(v.dim()) {
    std::vector<bool> is_pivot(d, false);
    for (auto p : v.pivots()) is_pivot[p] = true;
    for (std::size_t i = 0; i < d; ++i) {
      if (!is_pivot[i]) free_vars.push_back(i);
    }
    pivots = v.pivots();
    for (const auto& row : v.rows()) {
      BigInt l = 1;
      for (const auto& q : row) l = lcm(l, BigInt(q.get_den()));
      std::vector<std::int64_t> cf;
      for (auto f : free_vars) cf.push_back(Rational(row[f] * l).get_num().get_si());
      coef.push_back(std::move(cf));
      scale.push_back(l.get_si());
      cst.push_back(Rational(row[d] * l).get_num().get_si());
    }
    // congruence data for the last free coordinate, fixed per row
    std::int64_t M = 1;
    for (std::size_t r = 0; r < pivots.size(); ++r) {
      RowCongruence rc;
      rc.c = free_vars.empty() ? 0 : coef[r].back();
      if (rc.c != 0) {
        rc.g = std::gcd(rc.c, scale[r]);
        rc.m = scale[r] / rc.g;
        if (rc.m > 1) {
          rc.inv = static_cast<std::int64_t>(inverse_mod(static_cast<std::uint64_t>(pmod(rc.c / rc.g, rc.m)), rc.m));
          rc.M_before = M;
          rc.h = std::gcd(M, rc.m);
          rc.mh = rc.m / rc.h;
          rc.invM = rc.mh == 1 ? 0 : static_cast<std::int64_t>(inverse_mod(static_cast<std::uint64_t>(pmod(M / rc.h, rc.mh)), rc.mh));
          M *= rc.mh;
        }
      }
      cong.push_back(rc);
    }
  }

  double fraction(std::int64_t S) const {
    const std::size_t nf = free_vars.size();
    const double denom = std::pow(2.0 * static_cast<double>(S) + 1.0, static_cast<double>(d));
    if (nf == 0) {
      std::vector<std::int64_t> none;
      return static_cast<double>(count_last(none, S)) / denom;
    }
    // enumerate all free coordinates but the last, which is counted in closed form
    std::vector<std::int64_t> x(nf - 1, -S);
    std::uint64_t count = 0;
    while (true) {
      count += count_last(x, S);
      std::size_t i = x.size();
      while (i > 0 && x[i - 1] == S) x[--i] = -S;
      if (i == 0) break;
      ++x[i - 1];
    }
    return static_cast<double>(count) / denom;
  }

 private:
  static std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
  }
  static std::int64_t pmod(std::int64_t a, std::int64_t m) {
    const std::int64_t r = a % m;
    return r < 0 ? r + m : r;
  }

  // Values of the last free coordinate in [-S, S] that complete prefix x to a point of the flat.
  std::uint64_t count_last(const std::vector<std::int64_t>& x, std::int64_t S) const {
    const std::size_t nf = free_vars.size();
    std::int64_t L = -S, U = S;
    std::int64_t X = 0, M = 1;  // x_last = X mod M
    for (std::size_t r = 0; r < pivots.size(); ++r) {
      std::int64_t v = cst[r];
      for (std::size_t f = 0; f < x.size(); ++f) v += coef[r][f] * x[f];
      const RowCongruence& rc = cong[r];
      const std::int64_t c = rc.c;
      const std::int64_t s = scale[r], bound = S * s;
      if (c == 0) {
        if (v % s != 0 || v < -bound || v > bound) return 0;
        continue;
      }
      // -bound <= v + c x <= bound
      if (c > 0) {
        L = std::max(L, -floor_div(bound + v, c));
        U = std::min(U, floor_div(bound - v, c));
      } else {
        L = std::max(L, -floor_div(bound - v, -c));
        U = std::min(U, floor_div(bound + v, -c));
      }
      if (L > U) return 0;
      // c x = -v mod s, then merge with X mod M
      if (pmod(-v, rc.g) != 0) return 0;
      if (rc.m > 1) {
        const std::int64_t x0 = static_cast<std::int64_t>(static_cast<__int128>(pmod(-v / rc.g, rc.m)) * rc.inv % rc.m);
        if (pmod(x0 - X, rc.h) != 0) return 0;
        const std::int64_t k =
            rc.mh == 1 ? 0 : static_cast<std::int64_t>(static_cast<__int128>(pmod((x0 - X) / rc.h, rc.mh)) * rc.invM % rc.mh);
        M = rc.M_before * rc.mh;
        X = pmod(X + rc.M_before * k, M);
      }
    }
    if (nf == 0) return 1;
    if (L > U) return 0;
    // x in [L, U] with x = X mod M
    const std::int64_t first = L + pmod(X - L, M);
    return first > U ? 0 : static_cast<std::uint64_t>((U - first) / M + 1);
  }
};

std::int64_t reference_width(std::size_t free_dim, std::uint64_t budget) {
  if (free_dim <= 1) return INT64_MAX / 4;
  const double s = (std::pow(static_cast<double>(budget), 1.0 / static_cast<double>(free_dim - 1)) - 1.0) / 2.0;
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(std::floor(s)));
}

}  // namespace

struct DeviationModel::Impl {
  std::size_t d = 0, t = 0;
  DeviationOptions options;
  std::vector<Subspace> flats;              // flats[0] is the whole space
  std::vector<std::size_t> merges;
  std::vector<std::vector<std::size_t>> below;  // strictly contained flats
  std::vector<std::string> labels;
  // codim 1: integer coefficient row and constant
  std::vector<std::vector<std::int64_t>> hyper_a;
  std::vector<std::int64_t> hyper_c;
  std::vector<FlatCounter> counters;
  std::vector<std::int64_t> ref_S;    // reference width for scaled counts
  std::vector<std::int64_t> exact_S;  // widths counted directly on every call
  std::vector<double> ref_fraction;

  double fraction(std::size_t i, std::int64_t S, bool& approx) const {
    const Subspace& v = flats[i];
    const BoxRegion box = BoxRegion::centered(d, S);
    if (v.codim() == 1) return hyperplane_fraction(hyper_a[i], hyper_c[i], box);
    if (S == ref_S[i]) return ref_fraction[i];
    if (S <= exact_S[i]) return counters[i].fraction(S);
    approx = true;
    const double ref = ref_fraction[i];
    const double scale = (2.0 * static_cast<double>(ref_S[i]) + 1.0) / (2.0 * static_cast<double>(S) + 1.0);
    return ref * std::pow(scale, static_cast<double>(v.codim()));
  }
};

DeviationModel::DeviationModel(const LinearSystem& sys, const DeviationOptions& options) : impl_(std::make_unique<Impl>()) {
  Impl& m = *impl_;
  m.d = sys.dim();
  m.t = sys.size();
  m.options = options;
  m.flats = closure_lattice(sys, options.max_subspaces);
  const auto kernels = difference_kernels(sys);
  const std::size_t F = m.flats.size();
  const std::size_t words = (kernels.size() + 63) / 64;
  std::vector<std::vector<std::uint64_t>> mask(F, std::vector<std::uint64_t>(words, 0));
  for (std::size_t i = 0; i < F; ++i) {
    for (std::size_t k = 0; k < kernels.size(); ++k) {
      if (m.flats[i].implies(kernels[k])) mask[i][k / 64] |= std::uint64_t{1} << (k % 64);
    }
  }
  auto subset = [&](std::size_t a, std::size_t b) {  // mask[a] within mask[b]
    for (std::size_t w = 0; w < words; ++w) {
      if (mask[a][w] & ~mask[b][w]) return false;
    }
    return true;
  };
  m.below.resize(F);
  for (std::size_t i = 0; i < F; ++i) {
    for (std::size_t j = 0; j < F; ++j) {
      if (m.flats[j].codim() > m.flats[i].codim() && subset(i, j)) m.below[i].push_back(j);
    }
  }
  m.hyper_a.resize(F);
  m.hyper_c.resize(F, 0);
  m.ref_S.resize(F, 0);
  m.exact_S.resize(F, 0);
  m.ref_fraction.assign(F, 0.0);
  for (std::size_t i = 0; i < F; ++i) {
    const Subspace& v = m.flats[i];
    m.merges.push_back(m.t - (i == 0 ? m.t : induced_partition(sys, v).size()));
    m.labels.push_back(v.describe(sys.variable_names()));
    m.counters.emplace_back(v);
    if (v.codim() == 1) {
      const auto& row = v.rows().front();
      BigInt l = 1;
      for (const auto& q : row) l = lcm(l, BigInt(q.get_den()));
      for (std::size_t c = 0; c < m.d; ++c) m.hyper_a[i].push_back(Rational(row[c] * l).get_num().get_si());
      m.hyper_c[i] = Rational(row[m.d] * l).get_num().get_si();
    }
    m.ref_S[i] = reference_width(m.d - v.codim(), options.enumeration_budget);
    m.exact_S[i] = reference_width(m.d - v.codim(), options.call_budget);
  }
  // reference counts for the flats that will be scaled; each is independent
  const unsigned workers = options.workers ? options.workers : std::max(1u, std::thread::hardware_concurrency());
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&m, F, w, workers] {
        for (std::size_t i = 1 + w; i < F; i += workers) {
          if (m.flats[i].codim() >= 2 && m.ref_S[i] < INT64_MAX / 4) m.ref_fraction[i] = m.counters[i].fraction(m.ref_S[i]);
        }
      });
    }
  }
}

DeviationModel::~DeviationModel() = default;
DeviationModel::DeviationModel(DeviationModel&&) noexcept = default;
DeviationModel& DeviationModel::operator=(DeviationModel&&) noexcept = default;

std::size_t DeviationModel::lattice_size() const { return impl_->flats.size(); }

DeviationReport DeviationModel::evaluate(double alpha, std::int64_t S) const {
  if (!(alpha > 0 && alpha < 1)) throw DomainError("alpha must lie in (0, 1)");
  if (S < 2) throw DomainError("S must be at least 2");
  const Impl& m = *impl_;
  const std::size_t F = m.flats.size();
  std::vector<double> raw(F, 0.0), exact(F, 0.0);
  std::vector<bool> approx(F, false);
  // on a centered box the count depends only on the multiset of |a_i| and on |c|
  std::map<std::pair<std::vector<std::int64_t>, std::int64_t>, double> hyper_cache;
  for (std::size_t i = 1; i < F; ++i) {
    if (m.flats[i].codim() == 1) {
      std::vector<std::int64_t> key;
      for (auto v : m.hyper_a[i]) {
        if (v != 0) key.push_back(v < 0 ? -v : v);
      }
      std::sort(key.begin(), key.end());
      auto [it, fresh] = hyper_cache.try_emplace({key, m.hyper_c[i] < 0 ? -m.hyper_c[i] : m.hyper_c[i]}, 0.0);
      bool unused = false;
      if (fresh) it->second = m.fraction(i, S, unused);
      raw[i] = it->second;
      continue;
    }
    bool a = false;
    raw[i] = m.fraction(i, S, a);
    approx[i] = a;
  }
  // deepest flats first: subtract every strictly smaller flat
  for (std::size_t i = F; i-- > 1;) {
    double v = raw[i];
    for (auto j : m.below[i]) v -= exact[j];
    exact[i] = v;
  }
  DeviationReport rep;
  rep.S = static_cast<double>(S);
  rep.alpha = alpha;
  for (std::size_t i = 1; i < F; ++i) {
    DeviationTerm term;
    term.flat = m.labels[i];
    term.codim = m.flats[i].codim();
    term.merges = m.merges[i];
    term.ratio = ratio_of(term.merges, term.codim);
    term.probability = exact[i];
    term.contribution = exact[i] * std::expm1(-static_cast<double>(term.merges) * std::log(alpha));
    term.approximate = approx[i];
    rep.deviation += term.contribution;
    rep.approximate = rep.approximate || approx[i];
    rep.terms.push_back(std::move(term));
  }
  std::stable_sort(rep.terms.begin(), rep.terms.end(),
                   [](const DeviationTerm& a, const DeviationTerm& b) { return a.contribution > b.contribution; });
  return rep;
}

DeviationReport random_model_deviation(const LinearSystem& sys, double alpha, std::int64_t S,
                                       const DeviationOptions& options) {
  return DeviationModel(sys, options).evaluate(alpha, S);
}

ThresholdPoint width_threshold(const DeviationModel& model, double alpha) {
  auto dev = [&](std::int64_t S) { return model.evaluate(alpha, S); };
  ThresholdPoint pt;
  pt.alpha = alpha;
  std::int64_t lo = 2;
  DeviationReport rlo = dev(lo);
  auto finish = [&](const DeviationReport& r, double S_star) {
    pt.S_star = S_star;
    pt.deviation = r.deviation;
    pt.approximate = r.approximate;
    if (!r.terms.empty()) {
      pt.dominant_codim = r.terms.front().codim;
      pt.dominant_ratio = r.terms.front().ratio;
    }
    return pt;
  };
  if (rlo.deviation <= 1.0) return finish(rlo, 2.0);

  std::int64_t hi = lo;
  DeviationReport rhi = rlo;
  while (rhi.deviation > 1.0) {
    if (hi > (std::int64_t{1} << 40)) {
      throw NumericError("deviation stays above 1 up to S = 2^40", rhi.deviation);
    }
    lo = hi;
    rlo = std::move(rhi);
    hi *= 2;
    rhi = dev(hi);
    if (rhi.deviation > rlo.deviation) {
      throw NumericError("deviation increases from S = " + std::to_string(lo) + " (" + std::to_string(rlo.deviation) +
                             ") to S = " + std::to_string(hi) + " (" + std::to_string(rhi.deviation) + ")",
                         rhi.deviation - rlo.deviation);
    }
  }
  while (hi - lo > 1 && static_cast<double>(hi - lo) > 1e-4 * static_cast<double>(lo)) {
    const std::int64_t mid = lo + (hi - lo) / 2;
    DeviationReport r = dev(mid);
    if (r.deviation > rlo.deviation || r.deviation < rhi.deviation) {
      throw NumericError("deviation is not monotone near S = " + std::to_string(mid), r.deviation);
    }
    if (r.deviation > 1.0) {
      lo = mid;
      rlo = std::move(r);
    } else {
      hi = mid;
      rhi = std::move(r);
    }
  }
  // log-linear interpolation of the crossing
  const double llo = std::log(static_cast<double>(lo)), lhi = std::log(static_cast<double>(hi));
  const double dlo = std::log(rlo.deviation), dhi = std::log(std::max(rhi.deviation, 1e-300));
  const double f = dlo == dhi ? 0.0 : dlo / (dlo - dhi);
  return finish(rhi, std::exp(llo + f * (lhi - llo)));
}

ThresholdFit width_threshold_fit(const LinearSystem& sys, std::span<const double> alphas,
                                 const DeviationOptions& options) {
  if (alphas.size() < 3) throw DomainError("threshold fit needs at least three alphas");
  const DeviationModel model(sys, options);
  ThresholdFit fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double a : alphas) {
    fit.points.push_back(width_threshold(model, a));
    const double x = std::log(1.0 / a), y = std::log(fit.points.back().S_star);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(alphas.size());
  const double den = n * sxx - sx * sx;
  if (den == 0.0) throw DomainError("alphas must not all be equal");
  fit.slope = (n * sxy - sx * sy) / den;
  fit.intercept = (sy - fit.slope * sx) / n;
  return fit;
}

}  // namespace narrowlab
