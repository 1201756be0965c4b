#include "flipconc/generator.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "flipconc/errors.hpp"
#include "flipconc/gibbs.hpp"
#include "flipconc/kernels.hpp"

namespace flipconc {

GeneratorMatrix::GeneratorMatrix(const RateModel& rates, int cap) : sites_(rates.sites()) {
  if (sites_ > cap || sites_ > kExactCap) {
    throw CapacityError("generator matrix needs at most " + std::to_string(std::min(cap, kExactCap)) +
                        " sites, got " + std::to_string(sites_));
  }
  const std::size_t n = states();
  rates_.assign(static_cast<std::size_t>(sites_) * n, 0.0);
  exit_.assign(n, 0.0);
  min_rate_ = std::numeric_limits<double>::infinity();
  for (int i = 0; i < sites_; ++i) {
    double* col = rates_.data() + static_cast<std::size_t>(i) * n;
    for (std::size_t s = 0; s < n; ++s) {
      const double c = rates.rate_on_state(i, s);
      col[s] = c;
      exit_[s] += c;
      min_rate_ = std::min(min_rate_, c);
    }
  }
  max_exit_ = n == 0 ? 0.0 : *std::max_element(exit_.begin(), exit_.end());
  if (sites_ == 0) min_rate_ = 0.0;
}

double GeneratorMatrix::entry(std::uint64_t from, std::uint64_t to) const {
  if (from == to) return -exit_[from];
  const std::uint64_t diff = from ^ to;
  if ((diff & (diff - 1)) != 0) return 0.0;
  const int i = std::countr_zero(diff);
  return site_rates(i)[from];
}

void GeneratorMatrix::apply_function(std::span<const double> f, std::span<double> out) const {
  const auto& k = kernels::active();
  std::vector<double> minus_exit(exit_.size());
  for (std::size_t s = 0; s < exit_.size(); ++s) minus_exit[s] = -exit_[s];
  k.hadamard(out, minus_exit, f);
  for (int i = 0; i < sites_; ++i) k.flip_gather_fn(out, site_rates(i), f, std::uint64_t{1} << i);
}

void GeneratorMatrix::apply_measure(std::span<const double> mu, std::span<double> out) const {
  const auto& k = kernels::active();
  std::vector<double> minus_exit(exit_.size());
  for (std::size_t s = 0; s < exit_.size(); ++s) minus_exit[s] = -exit_[s];
  k.hadamard(out, minus_exit, mu);
  for (int i = 0; i < sites_; ++i) k.flip_gather_measure(out, site_rates(i), mu, std::uint64_t{1} << i);
}

std::vector<double> GeneratorMatrix::dense() const {
  if (sites_ > 12) throw CapacityError("dense generator limited to 12 sites");
  const std::size_t n = states();
  std::vector<double> q(n * n, 0.0);
  for (std::size_t s = 0; s < n; ++s) {
    q[s * n + s] = -exit_[s];
    for (int i = 0; i < sites_; ++i) q[s * n + (s ^ (std::size_t{1} << i))] = site_rates(i)[s];
  }
  return q;
}

// ------------------------------------------------------------ semigroup

ExactSemigroup::ExactSemigroup(const RateModel& rates, int cap)
    : ExactSemigroup(std::make_shared<const GeneratorMatrix>(rates, cap)) {}

ExactSemigroup::ExactSemigroup(std::shared_ptr<const GeneratorMatrix> q) : q_(std::move(q)) {
  if (q_->sites() > 0 && q_->min_rate() < 0.0) {
    throw DomainError("exact semigroup requires nonnegative rates");
  }
  lambda_ = q_->max_exit_rate();
  stay_.resize(q_->states());
  const auto exit = q_->exit_rates();
  for (std::size_t s = 0; s < stay_.size(); ++s) stay_[s] = lambda_ > 0.0 ? 1.0 - exit[s] / lambda_ : 1.0;
}

void ExactSemigroup::jump_function(std::span<const double> f, std::span<double> out) const {
  const auto& k = kernels::active();
  k.hadamard(out, stay_, f);
  if (lambda_ == 0.0) return;
  std::vector<double> acc(f.size(), 0.0);
  for (int i = 0; i < sites(); ++i) k.flip_gather_fn(acc, q_->site_rates(i), f, std::uint64_t{1} << i);
  k.axpy(out, 1.0 / lambda_, acc);
}

void ExactSemigroup::jump_measure(std::span<const double> mu, std::span<double> out) const {
  const auto& k = kernels::active();
  k.hadamard(out, stay_, mu);
  if (lambda_ == 0.0) return;
  std::vector<double> acc(mu.size(), 0.0);
  for (int i = 0; i < sites(); ++i) k.flip_gather_measure(acc, q_->site_rates(i), mu, std::uint64_t{1} << i);
  k.axpy(out, 1.0 / lambda_, acc);
}

template <class Step>
std::vector<double> ExactSemigroup::poisson_mixture(double t, std::span<const double> x, Step&& step) const {
  if (!(t >= 0.0)) throw DomainError("evolution time must be nonnegative");
  if (x.size() != states()) throw DomainError("vector length does not match the state space");
  std::vector<double> out(x.begin(), x.end());
  const double m = lambda_ * t;
  if (m == 0.0) return out;
  const auto& k = kernels::active();
  std::vector<double> cur(x.begin(), x.end());
  std::vector<double> next(x.size());
  double w = std::exp(-m);
  double log_w = -m;
  for (double& v : out) v *= w;
  double used = w;
  const double log_m = std::log(m);
  const std::size_t hard_cap = static_cast<std::size_t>(m + 40.0 * std::sqrt(m) + 200.0);
  for (std::size_t n = 1; n <= hard_cap; ++n) {
    step(cur, next);
    cur.swap(next);
    log_w += log_m - std::log(static_cast<double>(n));
    w = std::exp(log_w);
    k.axpy(out, w, cur);
    used += w;
    if (static_cast<double>(n) > m && 1.0 - used < kTruncation) break;
  }
  return out;
}

std::vector<double> ExactSemigroup::apply_function(double t, std::span<const double> f) const {
  return poisson_mixture(t, f, [this](std::span<const double> a, std::span<double> b) { jump_function(a, b); });
}

std::vector<double> ExactSemigroup::evolve_vector(double t, std::span<const double> mu) const {
  return poisson_mixture(t, mu, [this](std::span<const double> a, std::span<double> b) { jump_measure(a, b); });
}

DistributionVector ExactSemigroup::evolve(double t, const DistributionVector& mu) const {
  if (mu.sites() != sites()) throw DomainError("distribution and rates live on different tori");
  auto p = evolve_vector(t, mu.probabilities());
  for (double& v : p) v = std::max(v, 0.0);
  return DistributionVector::from_weights(sites(), std::move(p));
}

std::vector<double> ExactSemigroup::nonlinear(double t, std::span<const double> f) const {
  if (f.empty()) return {};
  const double shift = *std::max_element(f.begin(), f.end());
  std::vector<double> e(f.size());
  for (std::size_t s = 0; s < f.size(); ++s) e[s] = std::exp(f[s] - shift);
  auto out = apply_function(t, e);
  for (double& v : out) v = std::log(v) + shift;
  return out;
}

// ------------------------------------------------------- free functions

GeneratorMatrix generator_matrix(const RateModel& rates, int cap) { return GeneratorMatrix(rates, cap); }

Observable generator_apply(const RateModel& rates, const Observable& f, int cap) {
  std::vector<int> support(f.support().begin(), f.support().end());
  for (int i : f.support()) {
    const auto dep = rates.dependence(i);
    support.insert(support.end(), dep.begin(), dep.end());
  }
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  if (static_cast<int>(support.size()) > cap) {
    throw CapacityError("support of Lf exceeds the tabulation cap");
  }
  const int n = rates.sites();
  std::vector<double> table(std::size_t{1} << support.size());
  SpinConfiguration sigma(n, false);
  for (std::size_t r = 0; r < table.size(); ++r) {
    for (std::size_t k = 0; k < support.size(); ++k) sigma.set(support[k], ((r >> k) & 1u) != 0);
    const double base = f(sigma);
    double acc = 0.0;
    for (int i : f.support()) {
      sigma.toggle(i);
      const double flipped = f(sigma);
      sigma.toggle(i);
      acc += rates.rate(i, sigma) * (flipped - base);
    }
    table[r] = acc;
  }
  return Observable::from_table(std::move(support), std::move(table));
}

DistributionVector exact_semigroup_measure(const RateModel& rates, double t, const DistributionVector& mu) {
  if (!(t >= 0.0)) throw DomainError("evolution time must be nonnegative");
  return ExactSemigroup(rates).evolve(t, mu);
}

std::vector<double> exact_semigroup_function(const RateModel& rates, double t, const Observable& f) {
  if (!(t >= 0.0)) throw DomainError("evolution time must be nonnegative");
  const ExactSemigroup sg(rates);
  return sg.apply_function(t, f.state_vector(rates.sites()));
}

std::vector<double> nonlinear_semigroup(const RateModel& rates, double t, const Observable& f) {
  if (!(t >= 0.0)) throw DomainError("evolution time must be nonnegative");
  const ExactSemigroup sg(rates);
  return sg.nonlinear(t, f.state_vector(rates.sites()));
}

DistributionVector stationary_distribution(const RateModel& rates, double tol) {
  const int n = rates.sites();
  switch (rates.kind()) {
    case RateKind::kIndependent:
      return DistributionVector::uniform(n);
    case RateKind::kGlauber:
      return gibbs_measure(rates.potential(), Volume::whole(rates.torus()), BoundaryCondition::periodic()).distribution;
    default:
      break;
  }
  const ExactSemigroup sg(rates);
  std::vector<double> cur(sg.states(), 1.0 / static_cast<double>(sg.states()));
  std::vector<double> next(cur.size());
  for (int iter = 0; iter < 1000000; ++iter) {
    sg.jump_measure(cur, next);
    double diff = 0.0;
    for (std::size_t s = 0; s < cur.size(); ++s) {
      next[s] = 0.5 * (next[s] + cur[s]);
      diff += std::abs(next[s] - cur[s]);
    }
    cur.swap(next);
    if (0.5 * diff < tol * 1e-3) break;
  }
  return DistributionVector::from_weights(n, std::move(cur));
}

}  // namespace flipconc
