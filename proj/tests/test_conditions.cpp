#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "narrowlab/conditions.hpp"
#include "narrowlab/errors.hpp"

using namespace narrowlab;

namespace {

// E_x alpha^{#distinct - t} - 1 over [-S, S]^d by visiting every point
double brute_deviation(const LinearSystem& sys, double alpha, std::int64_t S) {
  const std::size_t d = sys.dim(), t = sys.size();
  std::vector<std::int64_t> x(d, -S);
  double total = 0.0;
  std::uint64_t count = 0;
  while (true) {
    std::set<__int128> values;
    for (const auto& f : sys.forms()) values.insert(f.evaluate(x));
    total += std::pow(alpha, static_cast<double>(values.size()) - static_cast<double>(t));
    ++count;
    std::size_t i = 0;
    while (i < d && x[i] == S) x[i++] = -S;
    if (i == d) break;
    ++x[i];
  }
  return total / static_cast<double>(count) - 1.0;
}

double brute_hyperplane(const std::vector<std::int64_t>& a, std::int64_t c, const BoxRegion& box) {
  std::vector<std::int64_t> x = box.lo();
  std::uint64_t hit = 0, all = 0;
  while (true) {
    std::int64_t v = c;
    for (std::size_t i = 0; i < a.size(); ++i) v += a[i] * x[i];
    hit += v == 0;
    ++all;
    std::size_t i = 0;
    while (i < x.size() && x[i] == box.hi()[i]) {
      x[i] = box.lo()[i];
      ++i;
    }
    if (i == x.size()) break;
    ++x[i];
  }
  return static_cast<double>(hit) / static_cast<double>(all);
}

}  // namespace

TEST_CASE("boxes") {
  const auto b = BoxRegion::centered(3, 4);
  CHECK(b.points() == 729);
  CHECK(b.inradius() == 4.0);
  CHECK(BoxRegion({0, 0}, {3, 9}).inradius() == 1.5);
  CHECK_THROWS_AS(BoxRegion({0}, {-1}), DomainError);
}

TEST_CASE("trivial weights") {
  const auto sys = first_family(2);
  const auto box = BoxRegion::centered(4, 3);
  const auto one = WeightModel::constant(101);
  const auto mc = lfc_average_mc(one, sys.forms(), {}, box, 5000, 1);
  CHECK(mc.estimate == 1.0);
  CHECK(mc.std_error == 0.0);
  CHECK(lfc_average_exact(one, sys.forms(), {}, box) == 1.0);
  const auto r = WeightModel::random(0.3, 9, 1'000'003);
  CHECK(lfc_average_exact(r, sys.forms(), ExponentPattern(4, 0), box) == 1.0);
  CHECK(lfc_average_mc(r, sys.forms(), ExponentPattern(4, 0), box, 1000, 1).estimate == 1.0);
}

TEST_CASE("random model expectations") {
  const auto r = WeightModel::random(0.5, 1, 1'000'003);
  const BoxRegion box({1}, {4});
  const LinearForm s1{{1}, 0}, s2{{2}, 0};
  const std::vector<LinearForm> same{s1, s1}, scaled{s1, s2};
  CHECK(lfc_average_exact(r, same, {}, box) == doctest::Approx(2.0));
  CHECK(lfc_average_exact(r, scaled, {}, box) == doctest::Approx(1.0));

  // about alpha of all residues carry weight 1/alpha
  double mean = 0.0;
  for (std::uint64_t n = 0; n < 100'000; ++n) mean += r(n);
  CHECK(mean / 100'000 == doctest::Approx(1.0).epsilon(0.02));

  const auto sys = first_family(2);
  const auto b6 = BoxRegion::centered(4, 3);  // side 7
  const auto r3 = WeightModel::random(0.3, 4, 1'000'000'007);
  CHECK(lfc_average_exact(r3, sys.forms(), {}, b6) - 1.0 == doctest::Approx(brute_deviation(sys, 0.3, 3)).epsilon(1e-12));
}

TEST_CASE("Monte Carlo against exact enumeration") {
  // a small table so the exact average is cheap
  MajorantTable t;
  t.context = primorial_context(1, 0, 1009);
  t.R = 2;
  std::mt19937_64 g(2);
  std::exponential_distribution<double> ex(1.0);
  for (std::uint64_t n = 0; n < 1009; ++n) t.values.push_back(ex(g));
  const auto model = WeightModel::from_table(t);
  const auto sys = first_family(3);
  const auto box = BoxRegion::centered(6, 1);
  const double exact = lfc_average_exact(model, sys.forms(), {}, box);
  const auto mc = lfc_average_mc(model, sys.forms(), {}, box, 400'000, 17);
  CHECK(std::abs(mc.estimate - exact) < 4 * mc.std_error);
  const auto mc3 = lfc_average_mc(model, sys.forms(), {}, box, 400'000, 17, 3);
  CHECK(mc3.estimate == mc.estimate);
  CHECK(mc3.std_error == mc.std_error);
  CHECK_THROWS_AS(lfc_average_exact(model, sys.forms(), {}, BoxRegion::centered(6, 40)), ResourceError);
}

TEST_CASE("hyperplane counts") {
  std::mt19937_64 rng(8);
  std::uniform_int_distribution<std::int64_t> coef(-3, 3), lo(-5, 0), len(0, 6), cst(-6, 6);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t d = 1 + trial % 3;
    std::vector<std::int64_t> a(d), l(d), h(d);
    for (std::size_t i = 0; i < d; ++i) {
      a[i] = coef(rng);
      l[i] = lo(rng);
      h[i] = l[i] + len(rng);
    }
    const BoxRegion box(l, h);
    const auto c = cst(rng);
    REQUIRE(hyperplane_fraction(a, c, box) == doctest::Approx(brute_hyperplane(a, c, box)).epsilon(1e-12));
  }
}

TEST_CASE("deviation over the closure lattice") {
  for (const auto& sys : {first_family(2), third_family(3, 1), second_family(2), third_family(3, 2)}) {
    for (std::int64_t S : {2, 3, 5}) {
      if (sys.dim() == 4 && S == 5) continue;
      const auto rep = random_model_deviation(sys, 0.3, S);
      CHECK_FALSE(rep.approximate);
      REQUIRE(rep.deviation == doctest::Approx(brute_deviation(sys, 0.3, S)).epsilon(1e-10));
      double sum = 0.0;
      for (const auto& term : rep.terms) sum += term.contribution;
      CHECK(sum == doctest::Approx(rep.deviation).epsilon(1e-10));
    }
  }
  CHECK_THROWS_AS(random_model_deviation(first_family(2), 1.5, 4), DomainError);
}

TEST_CASE("dominant flats carry the collision index") {
  const auto rep = random_model_deviation(first_family(2), 0.1, 200);
  REQUIRE(!rep.terms.empty());
  CHECK(rep.terms.front().ratio == 1);
  CHECK(rep.terms.front().codim == 1);
}

TEST_CASE("threshold exponents") {
  const std::vector<double> alphas{0.2, 0.1, 0.05};
  const auto third = width_threshold_fit(third_family(3, 1), alphas);
  CHECK(third.slope >= 1.8);
  CHECK(third.slope <= 2.2);
  for (const auto& p : third.points) CHECK(p.dominant_ratio == 2);
  const auto second = width_threshold_fit(second_family(2), alphas);
  CHECK(second.slope >= 1.8);
  CHECK(second.slope <= 2.2);
  for (const auto& p : second.points) CHECK(p.dominant_ratio == 2);
  const auto first = width_threshold_fit(first_family(2), alphas);
  CHECK(first.slope == doctest::Approx(1.0).epsilon(0.2));
  // deviation falls through 1 at S*
  const DeviationModel model(third_family(3, 1));
  const auto p = width_threshold(model, 0.1);
  CHECK(model.evaluate(0.1, static_cast<std::int64_t>(std::floor(p.S_star))).deviation >= 1.0);
  CHECK(model.evaluate(0.1, static_cast<std::int64_t>(std::ceil(p.S_star))).deviation <= 1.0);
  CHECK_THROWS_AS(width_threshold_fit(third_family(3, 1), std::vector<double>{0.1, 0.2}), DomainError);
}
