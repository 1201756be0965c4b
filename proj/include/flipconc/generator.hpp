#pragma once

// Finite-state realization of the spin-flip generator and exact
// semigroup evolution by uniformization.

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "flipconc/distribution.hpp"
#include "flipconc/lattice.hpp"
#include "flipconc/rates.hpp"

namespace flipconc {

/// Largest torus handled by the exact engine (2^20 states).
inline constexpr int kExactCap = 20;

/// The 2^N x 2^N rate matrix Q with Q(s, s ^ (1 << i)) = c(i, s), stored as
/// N rate columns of length 2^N.
class GeneratorMatrix {
 public:
  explicit GeneratorMatrix(const RateModel& rates, int cap = kExactCap);

  int sites() const { return sites_; }
  std::size_t states() const { return std::size_t{1} << sites_; }
  /// c(i, s) for every state s.
  std::span<const double> site_rates(int i) const {
    return {rates_.data() + static_cast<std::size_t>(i) * states(), states()};
  }
  /// sum_i c(i, s).
  std::span<const double> exit_rates() const { return exit_; }
  double max_exit_rate() const { return max_exit_; }
  double min_rate() const { return min_rate_; }

  double entry(std::uint64_t from, std::uint64_t to) const;
  /// out = Q f.
  void apply_function(std::span<const double> f, std::span<double> out) const;
  /// out = mu Q.
  void apply_measure(std::span<const double> mu, std::span<double> out) const;
  /// Row-major dense copy; CapacityError above 12 sites.
  std::vector<double> dense() const;

 private:
  int sites_;
  std::vector<double> rates_;
  std::vector<double> exit_;
  double max_exit_ = 0.0;
  double min_rate_ = 0.0;
};

/// S(t) = e^{tQ} evaluated as a Poisson mixture of powers of the jump
/// kernel P = I + Q / Lambda. The series is cut once the neglected Poisson
/// mass is below `kTruncation`, which bounds the total-variation error.
class ExactSemigroup {
 public:
  static constexpr double kTruncation = 1e-13;

  explicit ExactSemigroup(const RateModel& rates, int cap = kExactCap);
  explicit ExactSemigroup(std::shared_ptr<const GeneratorMatrix> q);

  const GeneratorMatrix& generator() const { return *q_; }
  int sites() const { return q_->sites(); }
  std::size_t states() const { return q_->states(); }

  /// S(t) f as a vector over states.
  std::vector<double> apply_function(double t, std::span<const double> f) const;
  /// mu S(t).
  std::vector<double> evolve_vector(double t, std::span<const double> mu) const;
  DistributionVector evolve(double t, const DistributionVector& mu) const;
  /// V(t) f = log S(t) e^f, computed with a max shift.
  std::vector<double> nonlinear(double t, std::span<const double> f) const;

  /// One application of P to a function or a measure.
  void jump_function(std::span<const double> f, std::span<double> out) const;
  void jump_measure(std::span<const double> mu, std::span<double> out) const;
  double uniformization_rate() const { return lambda_; }

 private:
  template <class Step>
  std::vector<double> poisson_mixture(double t, std::span<const double> x, Step&& step) const;

  std::shared_ptr<const GeneratorMatrix> q_;
  double lambda_ = 0.0;
  std::vector<double> stay_;
};

GeneratorMatrix generator_matrix(const RateModel& rates, int cap = kExactCap);

/// L f as a tabulated observable with support grown by the rates'
/// dependence sets. Throws CapacityError above `cap` sites.
Observable generator_apply(const RateModel& rates, const Observable& f, int cap = kTabulationCap);

DistributionVector exact_semigroup_measure(const RateModel& rates, double t, const DistributionVector& mu);
std::vector<double> exact_semigroup_function(const RateModel& rates, double t, const Observable& f);
std::vector<double> nonlinear_semigroup(const RateModel& rates, double t, const Observable& f);

/// Stationary law: the torus Gibbs measure for Glauber rates, the uniform
/// measure for independent flips, otherwise the limit of the jump chain
/// started from uniform (converged to `tol` in total variation).
DistributionVector stationary_distribution(const RateModel& rates, double tol = 1e-13);

}  // namespace flipconc
