#include <cmath>
#include <functional>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "flipconc/errors.hpp"
#include "flipconc/generator.hpp"
#include "flipconc/symbolic.hpp"

using namespace flipconc;

namespace {

SiteSet ones(std::initializer_list<int> xs) {
  std::vector<Point> pts;
  for (int x : xs) pts.push_back(Point{x, 0, 0});
  return make_site_set(pts);
}

// A function of finitely many 1D sites stored as a lookup over a window
// [lo, lo + width); bit k of the index is the spin at lo + k.
struct WindowFunction {
  int lo = 0;
  int width = 0;
  std::vector<double> values;

  double at(std::uint64_t s) const { return values[s]; }
};

WindowFunction tabulate(const SetPolynomial& p, int lo, int width) {
  WindowFunction w{lo, width, std::vector<double>(std::size_t{1} << width)};
  for (std::uint64_t s = 0; s < w.values.size(); ++s) {
    w.values[s] = p.evaluate([&](const Point& q) { return ((s >> (q[0] - lo)) & 1u) != 0; });
  }
  return w;
}

// L_B f (sigma) = sum_i sigma_{B+i} (f(sigma^i) - f(sigma)) evaluated on a
// window wide enough to hold f and every B + i that matters.
WindowFunction apply_operator(const SiteSet& b, const WindowFunction& f) {
  WindowFunction out{f.lo, f.width, std::vector<double>(f.values.size(), 0.0)};
  for (std::uint64_t s = 0; s < f.values.size(); ++s) {
    double v = 0.0;
    for (int k = 0; k < f.width; ++k) {
      const double grad = f.at(s ^ (std::uint64_t{1} << k)) - f.at(s);
      if (grad == 0.0) continue;
      double sign = 1.0;
      for (const auto& q : b) {
        const int pos = q[0] + f.lo + k - f.lo;
        REQUIRE(pos >= 0);
        REQUIRE(pos < f.width);
        if (!((s >> pos) & 1u)) sign = -sign;
      }
      v += sign * grad;
    }
    out.values[s] = v;
  }
  return out;
}

SiteSet random_shape(std::mt19937_64& gen, int max_size, int spread) {
  const int m = static_cast<int>(gen() % static_cast<std::uint64_t>(max_size + 1));
  std::vector<Point> pts;
  for (int k = 0; k < m; ++k) pts.push_back(Point{static_cast<int>(gen() % static_cast<std::uint64_t>(2 * spread + 1)) - spread, 0, 0});
  return make_site_set(pts);
}

}  // namespace

TEST_CASE("site sets and symmetric differences") {
  CHECK(ones({3, 1, 3}) == ones({1, 3}));
  CHECK(symmetric_difference(ones({0, 1, 2}), ones({1, 5})) == ones({0, 2, 5}));
  CHECK(translate(ones({0, 2}), Point{-1, 0, 0}) == ones({-1, 1}));
  CHECK(parse_site_set("0,1") == ones({0, 1}));
  CHECK(parse_site_set("0,0 1,0") == make_site_set({Point{0, 0, 0}, Point{1, 0, 0}}));
  CHECK(parse_site_set("").empty());
  // sigma_G sigma_F = sigma_{G symdiff F}, checked pointwise.
  std::mt19937_64 gen(4);
  for (int rep = 0; rep < 50; ++rep) {
    const auto g = random_shape(gen, 4, 3);
    const auto f = random_shape(gen, 4, 3);
    const auto pg = SetPolynomial::monomial(g);
    const auto pf = SetPolynomial::monomial(f);
    const auto pd = SetPolynomial::monomial(symmetric_difference(g, f));
    for (std::uint64_t s = 0; s < 128; ++s) {
      auto up = [&](const Point& q) { return ((s >> (q[0] + 3)) & 1u) != 0; };
      CHECK(pg.evaluate(up) * pf.evaluate(up) == pd.evaluate(up));
    }
  }
}

TEST_CASE("exact rational parsing") {
  CHECK(parse_rational("-0.3") == Rational(-3, 10));
  CHECK(parse_rational("3/10") == Rational(3, 10));
  CHECK(parse_rational("6/20") == Rational(3, 10));
  CHECK(parse_rational("2") == Rational(2));
  CHECK(parse_rational("1.5e-2") == Rational(3, 200));
  CHECK(parse_rational("+4E1") == Rational(40));
  CHECK_THROWS_AS(parse_rational("x"), ParseError);
  CHECK_THROWS_AS(parse_rational(""), ParseError);
}

TEST_CASE("polynomials drop zero coefficients") {
  SetPolynomial p;
  p.add(ones({1}), 2);
  p.add(ones({1}), -2);
  CHECK(p.is_zero());
  p.add(ones({0, 2}), Rational(1, 3));
  p.add(ones({}), -1);
  CHECK(p.size() == 2);
  CHECK(p.l1_norm() == Rational(4, 3));
  CHECK(p.support() == ones({0, 2}));
  CHECK(p.scaled(0).is_zero());
  CHECK(p.coefficient(ones({5})) == 0);
}

TEST_CASE("exact sup norm") {
  SUBCASE("single monomial") {
    CHECK(sup_norm(SetPolynomial::monomial(ones({1, 4}), Rational(-5, 2))).value == Rational(5, 2));
  }
  SUBCASE("cancellation") {
    // 1 + sigma_0 vanishes at sigma_0 = -1 and equals 2 elsewhere.
    SetPolynomial p = SetPolynomial::monomial(ones({}));
    p.add(ones({0}), 1);
    CHECK(sup_norm(p).value == 2);
    // sigma_0 sigma_1 + sigma_0 + sigma_1 reaches 3 at all plus; so does
    // sigma_0 sigma_1 + sigma_0 - sigma_1 at (-, +) in absolute value.
    SetPolynomial q = SetPolynomial::monomial(ones({0, 1}));
    q.add(ones({0}), 1);
    q.add(ones({1}), 1);
    CHECK(sup_norm(q).value == 3);
    SetPolynomial r = SetPolynomial::monomial(ones({0, 1}));
    r.add(ones({0}), 1);
    r.add(ones({1}), -1);
    CHECK(sup_norm(r).value == 3);
    r.add(ones({0, 1}), -2);
    CHECK(sup_norm(r).value == 3);
  }
  SUBCASE("matches brute-force enumeration") {
    std::mt19937_64 gen(9);
    for (int rep = 0; rep < 40; ++rep) {
      SetPolynomial p;
      for (int k = 0; k < 6; ++k) {
        p.add(random_shape(gen, 3, 3), Rational(static_cast<long>(gen() % 21) - 10, static_cast<long>(gen() % 7) + 1));
      }
      double brute = 0.0;
      for (std::uint64_t s = 0; s < 128; ++s) {
        brute = std::max(brute, std::abs(p.evaluate([&](const Point& q) { return ((s >> (q[0] + 3)) & 1u) != 0; })));
      }
      const auto sn = sup_norm(p);
      CHECK(sn.exact);
      CHECK(sn.value.get_d() == doctest::Approx(brute).epsilon(1e-14));
      CHECK(sn.value <= p.l1_norm());
    }
  }
  SUBCASE("falls back to the l1 norm above the cap") {
    SetPolynomial p = SetPolynomial::monomial(ones({0, 1, 2}));
    p.add(ones({3}), -1);
    const auto sn = sup_norm(p, 2);
    CHECK_FALSE(sn.exact);
    CHECK(sn.value == 2);
  }
}

TEST_CASE("building-block operators") {
  CHECK(apply_LB(ones({0, 1}), SetPolynomial::monomial(ones({}))).is_zero());
  const auto l_empty = apply_LB(ones({}), SetPolynomial::monomial(ones({0})));
  CHECK(l_empty == SetPolynomial::monomial(ones({0}), -2));
  const auto l_self = apply_LB(ones({0}), SetPolynomial::monomial(ones({0})));
  CHECK(l_self == SetPolynomial::monomial(ones({}), -2));
  // L_empty sigma_A = -2 |A| sigma_A.
  CHECK(apply_LB(ones({}), SetPolynomial::monomial(ones({1, 4, 6}))) == SetPolynomial::monomial(ones({1, 4, 6}), -6));
}

TEST_CASE("building-block operators agree with the configuration-space definition") {
  std::mt19937_64 gen(21);
  for (int rep = 0; rep < 60; ++rep) {
    const auto b = random_shape(gen, 2, 2);
    SetPolynomial f;
    for (int k = 0; k < 3; ++k) f.add(random_shape(gen, 3, 2), Rational(static_cast<long>(gen() % 9) - 4));
    // Window [-6, 6) holds supp f + B and B + i for every i in supp f.
    const int lo = -6;
    const int width = 12;
    const auto symbolic = tabulate(apply_LB(b, f), lo, width);
    const auto direct = apply_operator(b, tabulate(f, lo, width));
    for (std::size_t s = 0; s < symbolic.values.size(); s += 7) CHECK(symbolic.values[s] == direct.values[s]);
  }
}

TEST_CASE("operator chains") {
  const auto r = apply_chain({ones({0, 1})}, ones({0}));
  CHECK(r.polynomial == SetPolynomial::monomial(ones({1}), -2));
  CHECK(r.bound == 2);
  CHECK(r.sup.value == 2);
  CHECK(apply_chain({ones({1}), ones({2, 3})}, ones({})).polynomial.is_zero());
  // bound = 2^n |A| (|A|+|B_1|) ... (|A|+|B_1|+...+|B_{n-1}|)
  CHECK(chain_bound({ones({0}), ones({1, 2}), ones({5, 6, 7})}, ones({0, 1})) == 8 * 2 * 3 * 5);
  std::mt19937_64 gen(31);
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<SiteSet> chain;
    for (int k = 0; k < 3; ++k) chain.push_back(random_shape(gen, 2, 2));
    const auto a = random_shape(gen, 2, 2);
    const auto res = apply_chain(chain, a);
    CHECK(res.sup.exact);
    CHECK(res.sup.value <= res.l1);
    CHECK(res.l1 <= res.bound);
  }
  CHECK_THROWS_AS(apply_chain({}, ones({0})), DomainError);
}

TEST_CASE("generator files") {
  std::istringstream ok("1 :\n3/10 : 1\n-0.25 : -1 2\n");
  const auto g = GeneratorSpec::parse(ok);
  CHECK(g.count() == 3);
  CHECK(g.K() == 2);
  CHECK(g.M() == 1);
  CHECK(g.entries[1].lambda == Rational(3, 10));
  CHECK(g.entries[2].shape == ones({-1, 2}));
  std::istringstream bad("0.5 1\n");
  CHECK_THROWS_AS(GeneratorSpec::parse(bad), ParseError);
}

TEST_CASE("generator powers") {
  GeneratorSpec independent;
  independent.entries.push_back({ones({}), 1});
  for (int n = 0; n <= 5; ++n) {
    const auto a = ones({0, 3});
    const auto r = apply_generator_power(independent, n, a);
    Rational expect = 1;
    for (int k = 0; k < n; ++k) expect *= -4;
    CHECK(r.polynomial == SetPolynomial::monomial(a, expect));
    CHECK(r.sup.value <= r.bound);
  }
  GeneratorSpec self;
  self.entries.push_back({ones({0}), 1});
  const auto r2 = apply_generator_power(self, 2, ones({0}));
  CHECK(r2.polynomial.is_zero());
  CHECK(r2.bound == 32);
  CHECK(apply_generator_power(self, 0, ones({0})).sup.value == 1);
  CHECK_THROWS_AS(apply_generator_power(self, 9, ones({0})), CapacityError);
}

TEST_CASE("first generator power matches the lattice generator") {
  GeneratorSpec g;
  g.entries.push_back({ones({}), 1});
  g.entries.push_back({ones({1}), Rational(3, 10)});
  g.entries.push_back({ones({-1, 2}), Rational(-1, 4)});
  const Torus torus({14});
  const auto rates = g.rates(torus);
  const auto a = ones({5, 6});
  const auto lf = generator_apply(rates, Observable::monomial({5, 6}));
  const auto sym = apply_generator_power(g, 1, a).polynomial;
  for (std::uint64_t s = 0; s < (std::uint64_t{1} << 14); s += 5) {
    CHECK(lf.on_state(s) == doctest::Approx(sym.evaluate([&](const Point& q) { return ((s >> q[0]) & 1u) != 0; })));
  }
}

TEST_CASE("analyticity radius and truncated series") {
  GeneratorSpec g;
  g.entries.push_back({ones({}), 1});
  CHECK(analyticity_radius(g, ones({0})) == doctest::Approx(0.5));
  CHECK(analyticity_radius(g, ones({0, 1})) < analyticity_radius(g, ones({0})));
  const auto s0 = truncated_series(g, 0.0, ones({0}), 4);
  REQUIRE(s0.coefficients.size() == 1);
  CHECK(s0.coefficients.at(ones({0})) == 1.0);
  const auto s = truncated_series(g, 0.2, ones({0}), 8);
  CHECK(std::abs(s.coefficients.at(ones({0})) - std::exp(-0.4)) <= s.remainder_bound);
  CHECK(s.remainder_bound == doctest::Approx(std::pow(0.4, 9) / 0.6));
  CHECK_THROWS_AS(truncated_series(g, 0.5, ones({0}), 4), DomainError);
}

TEST_CASE("tail measures and the infinite-range lemma") {
  const auto geo = TailMeasure::geometric(2.0);
  CHECK(geo.laplace(1.0) == doctest::Approx(1.0 / (1.0 - std::exp(-1.0))));
  CHECK_THROWS_AS(geo.laplace(2.5), DomainError);
  CHECK(TailMeasure::poisson(1.5).laplace(0.5) == doctest::Approx(std::exp(1.5 * (std::exp(0.5) - 1))));
  const auto d = infinite_range_bound(TailMeasure::dirac0(), 1.0, 1.0, 1, 1);
  CHECK(d.lemma_lhs == doctest::Approx(1.0));
  CHECK(d.lemma_rhs == doctest::Approx(std::exp(1.0)));
  CHECK(d.lemma_holds);
  // Double sum over k_1, k_2 <= 40 written out directly.
  double lhs = 0.0;
  for (int k1 = 0; k1 <= 40; ++k1) {
    for (int k2 = 0; k2 <= 40; ++k2) lhs += (1.0 + k1) * (1.0 + k1 + k2) * std::exp(-2.0 * k1) * std::exp(-2.0 * k2);
  }
  const auto r = infinite_range_bound(geo, 1.0, 1.0, 2, 2);
  CHECK(r.lemma_lhs == doctest::Approx(lhs).epsilon(1e-13));
  CHECK(r.lemma_holds);
  CHECK(r.F == doctest::Approx(1.0 / (1.0 - std::exp(-1.0))));
  CHECK(r.kappa == doctest::Approx(2.0 * 1.0 * 2 * r.F));
  CHECK(r.rhs == doctest::Approx(std::exp(1.0) * 2.0 * r.kappa * r.kappa));
  // Homogeneity in the scale of psi.
  for (int n : {1, 2, 3}) {
    const auto base = infinite_range_bound(geo, 1.0, 1.0, 1, n);
    const auto scaled = infinite_range_bound(geo.scaled(0.5), 1.0, 1.0, 1, n);
    CHECK(scaled.lemma_lhs == doctest::Approx(std::pow(0.5, n) * base.lemma_lhs));
    CHECK(scaled.lemma_rhs == doctest::Approx(std::pow(0.5, n) * base.lemma_rhs));
  }
  CHECK_THROWS_AS(infinite_range_bound(geo, 1.0, 0.0, 1, 1), DomainError);
  CHECK(factorial(5) == 120.0);
}
