#pragma once

// Kinetic Monte Carlo for spin-flip dynamics (Gillespie direct method with
// a Fenwick tree over site rates) and replica ensemble estimators.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "flipconc/distribution.hpp"
#include "flipconc/lattice.hpp"
#include "flipconc/rates.hpp"
#include "flipconc/rng.hpp"

namespace flipconc {

struct FlipEvent {
  double time = 0.0;
  int site = 0;
};

struct Trajectory {
  SpinConfiguration initial{1};
  SpinConfiguration final_state{1};
  std::vector<FlipEvent> events;
};

/// Runs the jump process up to t_end. Only the rates of sites whose rate
/// reads the flipped site are recomputed after each event.
Trajectory sample_path(const RateModel& rates, const SpinConfiguration& start, double t_end, std::uint64_t seed,
                       bool record_events = true);
/// Same with an explicit generator; the state is advanced in place and the
/// number of flips returned.
std::size_t run_until(const RateModel& rates, SpinConfiguration& state, double t_end, CounterRng& rng,
                      std::vector<FlipEvent>* events = nullptr);

/// Draws initial configurations.
class StateSampler {
 public:
  static StateSampler dirac(SpinConfiguration sigma);
  /// Independent spins, P(up) = p_up.
  static StateSampler product(int sites, double p_up);
  /// Exact law on at most 20 sites (inverse CDF).
  static StateSampler from_distribution(const DistributionVector& mu);

  int sites() const { return sites_; }
  SpinConfiguration draw(CounterRng& rng) const;

 private:
  enum class Kind { kDirac, kProduct, kTable };
  Kind kind_ = Kind::kDirac;
  int sites_ = 0;
  SpinConfiguration dirac_{1};
  double p_up_ = 0.5;
  std::vector<double> cdf_;
};

enum class EstimatorKind { kMean, kVariance, kExponentialMoment };

struct EnsembleEstimate {
  EstimatorKind kind = EstimatorKind::kMean;
  double value = 0.0;
  double standard_error = 0.0;
  double raw = 0.0;  ///< plug-in value before bias correction
  std::size_t samples = 0;
  std::uint64_t seed = 0;
};

std::string to_string(EstimatorKind kind);

/// f(sigma(t)) for each replica r, using substream r of `seed`.
std::vector<double> replica_values(const RateModel& rates, const StateSampler& init, double t, const Observable& f,
                                   std::size_t replicas, std::uint64_t seed);

EnsembleEstimate ensemble_expectation(const RateModel& rates, const StateSampler& init, double t,
                                      const Observable& f, std::size_t replicas, std::uint64_t seed);
/// Unbiased sample variance with a jackknife standard error.
EnsembleEstimate ensemble_variance(const RateModel& rates, const StateSampler& init, double t, const Observable& f,
                                   std::size_t replicas, std::uint64_t seed);
/// Jackknife-corrected log E[e^{f - E f}].
EnsembleEstimate ensemble_exponential_moment(const RateModel& rates, const StateSampler& init, double t,
                                             const Observable& f, std::size_t replicas, std::uint64_t seed);

/// Estimators on precomputed samples.
EnsembleEstimate mean_estimate(std::span<const double> x);
EnsembleEstimate variance_estimate(std::span<const double> x);
EnsembleEstimate exponential_moment_estimate(std::span<const double> x);

}  // namespace flipconc
