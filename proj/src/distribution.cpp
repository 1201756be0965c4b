#include "flipconc/distribution.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "flipconc/errors.hpp"
#include "flipconc/kernels.hpp"

namespace flipconc {
namespace {

std::size_t state_count(int sites) {
  if (sites < 1 || sites > 30) throw CapacityError("distribution over " + std::to_string(sites) + " sites");
  return std::size_t{1} << sites;
}

}  // namespace

DistributionVector DistributionVector::uniform(int sites) {
  const std::size_t n = state_count(sites);
  return DistributionVector(sites, std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

DistributionVector DistributionVector::dirac(int sites, std::uint64_t state) {
  const std::size_t n = state_count(sites);
  if (state >= n) throw DomainError("dirac state out of range");
  std::vector<double> p(n, 0.0);
  p[state] = 1.0;
  return DistributionVector(sites, std::move(p));
}

DistributionVector DistributionVector::product(std::span<const double> p_up) {
  const int sites = static_cast<int>(p_up.size());
  const std::size_t n = state_count(sites);
  for (double q : p_up) {
    if (!(q >= 0.0 && q <= 1.0)) throw DomainError("product marginal outside [0,1]");
  }
  std::vector<double> p(n, 1.0);
  for (std::size_t s = 0; s < n; ++s) {
    for (int i = 0; i < sites; ++i) p[s] *= ((s >> i) & 1u) ? p_up[static_cast<std::size_t>(i)] : 1.0 - p_up[static_cast<std::size_t>(i)];
  }
  return DistributionVector(sites, std::move(p));
}

DistributionVector DistributionVector::product(int sites, double p_up) {
  std::vector<double> q(static_cast<std::size_t>(sites), p_up);
  return product(q);
}

DistributionVector DistributionVector::from_weights(int sites, std::vector<double> weights) {
  if (weights.size() != state_count(sites)) throw DomainError("weight vector length must be 2^sites");
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || std::isinf(w)) throw DomainError("weights must be finite and nonnegative");
    total += w;
  }
  if (!(total > 0.0)) throw DomainError("weights sum to zero");
  for (double& w : weights) w /= total;
  return DistributionVector(sites, std::move(weights));
}

DistributionVector DistributionVector::from_log_weights(int sites, std::span<const double> log_weights) {
  if (log_weights.size() != state_count(sites)) throw DomainError("weight vector length must be 2^sites");
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  std::vector<double> w(log_weights.size());
  for (std::size_t s = 0; s < w.size(); ++s) w[s] = std::exp(log_weights[s] - top);
  return from_weights(sites, std::move(w));
}

DistributionVector DistributionVector::from_probabilities(int sites, std::vector<double> p, double tol) {
  if (p.size() != state_count(sites)) throw DomainError("probability vector length must be 2^sites");
  double total = 0.0;
  for (double& v : p) {
    if (v < -tol || std::isnan(v)) throw InvariantViolation("probability vector has a negative entry");
    if (v < 0.0) v = 0.0;
    total += v;
  }
  if (std::abs(total - 1.0) > tol) {
    throw InvariantViolation("probability vector does not sum to 1 (sum = " + std::to_string(total) + ")");
  }
  return DistributionVector(sites, std::move(p));
}

double DistributionVector::expectation(std::span<const double> values) const {
  if (values.size() != p_.size()) throw DomainError("expectation: length mismatch");
  return kernels::active().dot(p_, values);
}

double DistributionVector::expectation(const Observable& f) const {
  const auto v = f.state_vector(sites_);
  return expectation(v);
}

double total_variation(const DistributionVector& mu, const DistributionVector& nu) {
  if (mu.size() != nu.size()) throw DomainError("total_variation: size mismatch");
  double acc = 0.0;
  for (std::size_t s = 0; s < mu.size(); ++s) acc += std::abs(mu[s] - nu[s]);
  return 0.5 * acc;
}

}  // namespace flipconc
