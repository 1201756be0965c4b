#include "flipconc/mc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flipconc/errors.hpp"
#include "flipconc/parallel.hpp"

namespace flipconc {
namespace {

// Fenwick tree over nonnegative weights with prefix-sum search.
class Fenwick {
 public:
  explicit Fenwick(std::size_t n) : tree_(n + 1, 0.0), values_(n, 0.0) {
    top_ = 1;
    while (top_ * 2 <= n) top_ *= 2;
  }
  void set(std::size_t i, double v) {
    const double d = v - values_[i];
    values_[i] = v;
    for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += d;
  }
  double value(std::size_t i) const { return values_[i]; }
  double total() const {
    double s = 0.0;
    for (std::size_t k = tree_.size() - 1; k > 0; k -= k & (~k + 1)) s += tree_[k];
    return s;
  }
  /// Smallest i with prefix(i + 1) > target.
  std::size_t find(double target) const {
    std::size_t pos = 0;
    for (std::size_t step = top_; step > 0; step >>= 1) {
      const std::size_t next = pos + step;
      if (next < tree_.size() && tree_[next] <= target) {
        pos = next;
        target -= tree_[next];
      }
    }
    return std::min(pos, values_.size() - 1);
  }
  /// Exact recomputation, bounding drift from incremental updates.
  void rebuild() {
    std::fill(tree_.begin(), tree_.end(), 0.0);
    for (std::size_t i = 0; i < values_.size(); ++i) {
      for (std::size_t k = i + 1; k < tree_.size(); k += k & (~k + 1)) tree_[k] += values_[i];
    }
  }

 private:
  std::vector<double> tree_;
  std::vector<double> values_;
  std::size_t top_ = 1;
};

}  // namespace

std::size_t run_until(const RateModel& rates, SpinConfiguration& state, double t_end, CounterRng& rng,
                      std::vector<FlipEvent>* events) {
  if (!(t_end >= 0.0)) throw DomainError("path end time must be nonnegative");
  if (state.size() != rates.sites()) throw DomainError("configuration and rates live on different tori");
  const int n = rates.sites();
  Fenwick tree(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const double c = rates.rate(i, state);
    if (c < 0.0) throw DomainError("kinetic Monte Carlo needs nonnegative rates");
    tree.set(static_cast<std::size_t>(i), c);
  }
  double t = 0.0;
  std::size_t flips = 0;
  while (true) {
    const double total = tree.total();
    if (!(total > 0.0)) break;
    t += rng.exponential(total);
    if (t > t_end) break;
    const std::size_t site = tree.find(rng.uniform() * total);
    state.toggle(static_cast<int>(site));
    ++flips;
    if (events) events->push_back({t, static_cast<int>(site)});
    for (int j : rates.influenced(static_cast<int>(site))) tree.set(static_cast<std::size_t>(j), rates.rate(j, state));
    if (flips % 4096 == 0) tree.rebuild();
  }
  return flips;
}

Trajectory sample_path(const RateModel& rates, const SpinConfiguration& start, double t_end, std::uint64_t seed,
                       bool record_events) {
  Trajectory tr;
  tr.initial = start;
  tr.final_state = start;
  CounterRng rng(seed);
  run_until(rates, tr.final_state, t_end, rng, record_events ? &tr.events : nullptr);
  return tr;
}

// --------------------------------------------------------------- sampler

StateSampler StateSampler::dirac(SpinConfiguration sigma) {
  StateSampler s;
  s.kind_ = Kind::kDirac;
  s.sites_ = sigma.size();
  s.dirac_ = std::move(sigma);
  return s;
}

StateSampler StateSampler::product(int sites, double p_up) {
  if (!(p_up >= 0.0 && p_up <= 1.0)) throw DomainError("product sampler needs p in [0, 1]");
  StateSampler s;
  s.kind_ = Kind::kProduct;
  s.sites_ = sites;
  s.p_up_ = p_up;
  return s;
}

StateSampler StateSampler::from_distribution(const DistributionVector& mu) {
  StateSampler s;
  s.kind_ = Kind::kTable;
  s.sites_ = mu.sites();
  s.cdf_.resize(mu.size());
  double acc = 0.0;
  for (std::size_t k = 0; k < mu.size(); ++k) s.cdf_[k] = (acc += mu[k]);
  return s;
}

SpinConfiguration StateSampler::draw(CounterRng& rng) const {
  switch (kind_) {
    case Kind::kDirac:
      return dirac_;
    case Kind::kProduct: {
      SpinConfiguration sigma(sites_, false);
      for (int i = 0; i < sites_; ++i) sigma.set(i, rng.uniform() < p_up_);
      return sigma;
    }
    case Kind::kTable: {
      const double u = rng.uniform() * cdf_.back();
      const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
      const auto state = static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - cdf_.begin(),
                                                                              static_cast<std::ptrdiff_t>(cdf_.size()) - 1));
      return SpinConfiguration::from_state(sites_, state);
    }
  }
  return dirac_;
}

// ------------------------------------------------------------ estimators

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::kMean:
      return "mean";
    case EstimatorKind::kVariance:
      return "variance";
    case EstimatorKind::kExponentialMoment:
      return "exponential-moment";
  }
  return "?";
}

std::vector<double> replica_values(const RateModel& rates, const StateSampler& init, double t, const Observable& f,
                                   std::size_t replicas, std::uint64_t seed) {
  if (init.sites() != rates.sites()) throw DomainError("initial sampler and rates live on different tori");
  std::vector<double> out(replicas);
  parallel_for(replicas, [&](std::size_t r) {
    CounterRng rng(seed, r);
    SpinConfiguration sigma = init.draw(rng);
    run_until(rates, sigma, t, rng);
    out[r] = f(sigma);
  });
  return out;
}

EnsembleEstimate mean_estimate(std::span<const double> x) {
  if (x.size() < 2) throw DomainError("ensemble estimates need at least two replicas");
  const double n = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  EnsembleEstimate e;
  e.kind = EstimatorKind::kMean;
  e.value = e.raw = mean;
  e.standard_error = std::sqrt(ss / (n - 1.0) / n);
  e.samples = x.size();
  return e;
}

EnsembleEstimate variance_estimate(std::span<const double> x) {
  if (x.size() < 3) throw DomainError("variance estimate needs at least three replicas");
  const std::size_t n = x.size();
  const double nd = static_cast<double>(n);
  double s1 = 0.0, s2 = 0.0;
  const double shift = x[0];
  for (double v : x) {
    s1 += v - shift;
    s2 += (v - shift) * (v - shift);
  }
  const auto var_of = [](double a1, double a2, double m) { return (a2 - a1 * a1 / m) / (m - 1.0); };
  EnsembleEstimate e;
  e.kind = EstimatorKind::kVariance;
  e.value = e.raw = var_of(s1, s2, nd);
  double mean_loo = 0.0;
  std::vector<double> loo(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = x[i] - shift;
    loo[i] = var_of(s1 - d, s2 - d * d, nd - 1.0);
    mean_loo += loo[i];
  }
  mean_loo /= nd;
  double ss = 0.0;
  for (double v : loo) ss += (v - mean_loo) * (v - mean_loo);
  e.standard_error = std::sqrt((nd - 1.0) / nd * ss);
  e.samples = n;
  return e;
}

EnsembleEstimate exponential_moment_estimate(std::span<const double> x) {
  if (x.size() < 3) throw DomainError("exponential-moment estimate needs at least three replicas");
  const std::size_t n = x.size();
  const double nd = static_cast<double>(n);
  const double shift = *std::max_element(x.begin(), x.end());
  double sum_x = 0.0, sum_e = 0.0;
  for (double v : x) {
    sum_x += v;
    sum_e += std::exp(v - shift);
  }
  // theta = log mean e^{x - xbar} = log(sum_e / n) + shift - xbar.
  const auto theta = [&](double sx, double se, double m) { return std::log(se / m) + shift - sx / m; };
  EnsembleEstimate e;
  e.kind = EstimatorKind::kExponentialMoment;
  e.raw = theta(sum_x, sum_e, nd);
  std::vector<double> loo(n);
  double mean_loo = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    loo[i] = theta(sum_x - x[i], std::max(sum_e - std::exp(x[i] - shift), std::numeric_limits<double>::min()), nd - 1.0);
    mean_loo += loo[i];
  }
  mean_loo /= nd;
  double ss = 0.0;
  for (double v : loo) ss += (v - mean_loo) * (v - mean_loo);
  e.value = nd * e.raw - (nd - 1.0) * mean_loo;
  e.standard_error = std::sqrt((nd - 1.0) / nd * ss);
  e.samples = n;
  return e;
}

EnsembleEstimate ensemble_expectation(const RateModel& rates, const StateSampler& init, double t,
                                      const Observable& f, std::size_t replicas, std::uint64_t seed) {
  auto e = mean_estimate(replica_values(rates, init, t, f, replicas, seed));
  e.seed = seed;
  return e;
}

EnsembleEstimate ensemble_variance(const RateModel& rates, const StateSampler& init, double t, const Observable& f,
                                   std::size_t replicas, std::uint64_t seed) {
  auto e = variance_estimate(replica_values(rates, init, t, f, replicas, seed));
  e.seed = seed;
  return e;
}

EnsembleEstimate ensemble_exponential_moment(const RateModel& rates, const StateSampler& init, double t,
                                             const Observable& f, std::size_t replicas, std::uint64_t seed) {
  auto e = exponential_moment_estimate(replica_values(rates, init, t, f, replicas, seed));
  e.seed = seed;
  return e;
}

}  // namespace flipconc
