#include <cmath>
#include <random>

#include "doctest.h"
#include "flipconc/entropy.hpp"
#include "flipconc/errors.hpp"
#include "flipconc/gibbs.hpp"

using namespace flipconc;

namespace {

DistributionVector random_distribution(int n, std::mt19937_64& gen) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> w(std::size_t{1} << n);
  for (double& x : w) x = u(gen) + 1e-3;
  return DistributionVector::from_weights(n, w);
}

double bernoulli_kl(double p, double q) { return p * std::log(p / q) + (1 - p) * std::log((1 - p) / (1 - q)); }

}  // namespace

TEST_CASE("relative entropy closed forms") {
  const auto u = DistributionVector::uniform(5);
  CHECK(relative_entropy(u, u) == 0.0);
  CHECK(relative_entropy(DistributionVector::dirac(5, 17), u) == doctest::Approx(5 * std::log(2.0)).epsilon(1e-14));
  CHECK(std::isinf(relative_entropy(u, DistributionVector::dirac(5, 17))));
  for (double p : {0.1, 0.5, 0.8}) {
    for (double q : {0.3, 0.6}) {
      const auto a = DistributionVector::product(1, p);
      const auto b = DistributionVector::product(1, q);
      CHECK(relative_entropy(a, b) == doctest::Approx(bernoulli_kl(p, q)).epsilon(1e-13));
      // Additivity over independent sites.
      CHECK(relative_entropy(DistributionVector::product(4, p), DistributionVector::product(4, q)) ==
            doctest::Approx(4 * bernoulli_kl(p, q)).epsilon(1e-12));
    }
  }
}

TEST_CASE("relative entropy vanishes only on equal laws") {
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 20; ++rep) {
    const auto a = random_distribution(4, gen);
    const auto b = random_distribution(4, gen);
    CHECK(relative_entropy(a, b) > 1e-12);
    CHECK(relative_entropy(a, a) == 0.0);
  }
}

TEST_CASE("marginals") {
  std::mt19937_64 gen(9);
  const auto mu = random_distribution(5, gen);
  const std::vector<int> all{0, 1, 2, 3, 4};
  const auto m = marginal(mu, all);
  for (std::size_t s = 0; s < mu.size(); ++s) CHECK(m[s] == doctest::Approx(mu[s]).epsilon(1e-14));
  const std::vector<double> p{0.2, 0.7, 0.4};
  const auto prod = DistributionVector::product(p);
  const std::vector<int> two{2, 0};
  const auto m2 = marginal(prod, two);
  // Local bit 0 is site 2, local bit 1 is site 0.
  CHECK(m2[0b11] == doctest::Approx(0.4 * 0.2));
  CHECK(m2[0b01] == doctest::Approx(0.4 * 0.8));
  // Ising ring: pair marginal from the transfer matrix.
  const double beta = 0.3;
  const int n = 8;
  const auto g = gibbs_measure(Potential::ising_nearest_neighbour(1, beta), Volume::whole(Torus({n})),
                               BoundaryCondition::periodic());
  const double l1 = 2 * std::cosh(beta);
  const double l2 = 2 * std::sinh(beta);
  const double corr = (l1 * std::pow(l2, n - 1) + l2 * std::pow(l1, n - 1)) / (std::pow(l1, n) + std::pow(l2, n));
  const std::vector<int> pair{0, 1};
  const auto pm = marginal(g.distribution, pair);
  CHECK(pm[0b11] == doctest::Approx((1 + corr) / 4).epsilon(1e-12));
  CHECK(pm[0b01] == doctest::Approx((1 - corr) / 4).epsilon(1e-12));
  const std::vector<int> bad{9};
  CHECK_THROWS_AS(marginal(mu, bad), DomainError);
}

TEST_CASE("centred windows") {
  const auto w = centred_windows(Torus({9}), 4, 10);
  REQUIRE(w.size() == 5);
  CHECK(w[0] == std::vector<int>{4});
  CHECK(w[1] == std::vector<int>{3, 4, 5});
  CHECK(w.back().size() == 9);
  const auto w2 = centred_windows(Torus({4, 4}), 5, 3);
  CHECK(w2[0].size() == 1);
  CHECK(w2[1].size() == 9);
  CHECK(w2.back().size() == 16);
}

TEST_CASE("entropy density profiles") {
  const Torus t({7});
  const auto windows = centred_windows(t, 3, 3);
  const auto a = DistributionVector::product(7, 0.3);
  const auto b = DistributionVector::product(7, 0.6);
  const auto same = entropy_density_profile(a, a, windows);
  for (double v : same.values) CHECK(v == 0.0);
  const auto prof = entropy_density_profile(a, b, windows);
  // Product measures: the per-site value is the single-site divergence of b from a.
  for (double v : prof.values) CHECK(v == doctest::Approx(bernoulli_kl(0.6, 0.3)).epsilon(1e-12));
  CHECK(prof.covers_torus);
  std::vector<std::vector<int>> not_nested{{1, 2}, {3, 4, 5}};
  CHECK_THROWS_AS(entropy_density_profile(a, b, not_nested), DomainError);
}

TEST_CASE("plus and minus boundary measures on growing segments") {
  // Per-site divergence of the whole segment; the total stays below 8 beta.
  const auto u = Potential::ising_nearest_neighbour(1, 0.4);
  double prev = INFINITY;
  for (int len = 1; len <= 10; ++len) {
    const std::vector<int> sides{len};
    const auto plus = boundary_gibbs_on_box(u, sides, true);
    const auto minus = boundary_gibbs_on_box(u, sides, false);
    std::vector<int> all(static_cast<std::size_t>(len));
    for (int k = 0; k < len; ++k) all[static_cast<std::size_t>(k)] = k;
    const auto prof = entropy_density_profile(plus, minus, {all});
    REQUIRE(prof.values.size() == 1);
    CHECK(prof.values[0] > 0.0);
    CHECK(prof.values[0] < prev);
    CHECK(prof.values[0] * len <= 8 * 0.4 + 1e-12);
    prev = prof.values[0];
  }
}

TEST_CASE("data processing along the semigroup") {
  std::mt19937_64 gen(12);
  const Torus t({5});
  std::vector<double> grid;
  for (int k = 0; k < 20; ++k) grid.push_back(0.15 * k);
  const auto rates = RateModel::independent(t, 1.0);
  const ExactSemigroup sg(rates);
  const auto a = random_distribution(5, gen);
  const auto b = random_distribution(5, gen);
  const auto rep = data_processing_check(sg, a, b, grid);
  CHECK(rep.monotone);
  CHECK(rep.entropy.front() == doctest::Approx(relative_entropy(a, b)));
  CHECK(rep.entropy.back() < 1e-3 * rep.entropy.front());
  const auto same = data_processing_check(sg, a, a, grid);
  for (double h : same.entropy) CHECK(h < 1e-15);
  std::vector<double> decreasing{1.0, 0.5};
  CHECK_THROWS_AS(data_processing_check(sg, a, b, decreasing), DomainError);
}

TEST_CASE("distinct Diracs under independent flips") {
  const Torus t({4});
  const auto rates = RateModel::independent(t, 1.0);
  const ExactSemigroup sg(rates);
  const auto fam = monomial_family(4, 1);
  const auto rep = nogo_experiment(sg, DistributionVector::dirac(4, 0b1111), DistributionVector::dirac(4, 0b1110),
                                   {0.0, 0.3, 1.0, 2.0}, fam, centred_windows(t, 0, 2));
  CHECK_FALSE(rep.degenerate_input);
  for (const auto& row : rep.rows) CHECK(row.tv == doctest::Approx(std::exp(-2 * row.t)).epsilon(1e-12));
  const auto degenerate = nogo_experiment(sg, DistributionVector::uniform(4), DistributionVector::uniform(4), {0.0, 1.0},
                                          fam, centred_windows(t, 0, 2));
  CHECK(degenerate.degenerate_input);
  for (const auto& row : degenerate.rows) {
    CHECK(row.tv == 0.0);
    CHECK(row.entropy == 0.0);
  }
}

TEST_CASE("two-dimensional plus and minus measures stay distinct") {
  const auto u = Potential::ising_nearest_neighbour(2, 0.6);
  const std::vector<int> sides{4, 4};
  const auto plus = boundary_gibbs_on_box(u, sides, true);
  const auto minus = boundary_gibbs_on_box(u, sides, false);
  const Torus t({4, 4});
  const auto rates = RateModel::glauber(t, u);
  const ExactSemigroup sg(rates);
  const auto rep = nogo_experiment(sg, plus, minus, {0.0, 0.5, 1.0, 2.0}, monomial_family(16, 1),
                                   centred_windows(t, 5, 2));
  for (const auto& row : rep.rows) {
    CHECK(row.tv > 1e-6);
    CHECK(row.entropy > 0.0);
    CHECK(row.gcb_hat > 0.0);
  }
  CHECK_FALSE(rep.summary.empty());
}
