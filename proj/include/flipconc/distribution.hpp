#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "flipconc/lattice.hpp"

namespace flipconc {

/// Exact probability vector over the 2^N states of an N-site system
/// (state bit i = spin at site i is up).
class DistributionVector {
 public:
  static constexpr double kTolerance = 1e-12;

  static DistributionVector uniform(int sites);
  static DistributionVector dirac(int sites, std::uint64_t state);
  /// Independent spins with P(sigma_i = +1) = p_up[i].
  static DistributionVector product(std::span<const double> p_up);
  static DistributionVector product(int sites, double p_up);
  /// Normalizes nonnegative weights.
  static DistributionVector from_weights(int sites, std::vector<double> weights);
  /// Normalizes exp(log_weights) with a max shift.
  static DistributionVector from_log_weights(int sites, std::span<const double> log_weights);
  /// Takes an already normalized vector; throws if entries are negative
  /// beyond `tol` or the total is off by more than `tol`.
  static DistributionVector from_probabilities(int sites, std::vector<double> p,
                                               double tol = kTolerance);

  int sites() const { return sites_; }
  std::size_t size() const { return p_.size(); }
  std::span<const double> probabilities() const { return p_; }
  double operator[](std::size_t s) const { return p_[s]; }

  double expectation(std::span<const double> values) const;
  double expectation(const Observable& f) const;

 private:
  DistributionVector(int sites, std::vector<double> p) : sites_(sites), p_(std::move(p)) {}

  int sites_ = 0;
  std::vector<double> p_;
};

/// (1/2) sum_s |mu(s) - nu(s)|.
double total_variation(const DistributionVector& mu, const DistributionVector& nu);

}  // namespace flipconc
