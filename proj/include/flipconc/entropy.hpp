#pragma once

// Relative entropy, marginals and entropy-density profiles of exact
// distributions, their monotonicity under the dynamics, and the
// plus/minus comparison of evolved Gibbs measures.

#include <string>
#include <vector>

#include "flipconc/concentration.hpp"
#include "flipconc/distribution.hpp"
#include "flipconc/generator.hpp"
#include "flipconc/lattice.hpp"

namespace flipconc {

/// sum mu log(mu / nu) with 0 log 0 = 0; +inf when mu is not absolutely
/// continuous with respect to nu.
double relative_entropy(const DistributionVector& mu, const DistributionVector& nu);

/// Law of the spins at `sites` (local bit k = sites[k]).
DistributionVector marginal(const DistributionVector& mu, std::span<const int> sites);

/// [-n, n]^d windows around `centre` for n = 0..radius_max. A window that
/// would wrap is clipped to the whole torus.
std::vector<std::vector<int>> centred_windows(const Torus& torus, int centre, int radius_max);

struct EntropyProfile {
  std::vector<int> window_sizes;
  std::vector<double> values;  ///< h_window(nu | mu) / |window|
  bool covers_torus = false;   ///< the largest window is the whole torus
};

EntropyProfile entropy_density_profile(const DistributionVector& mu, const DistributionVector& nu,
                                       const std::vector<std::vector<int>>& windows);

struct DataProcessingReport {
  std::vector<double> times;
  std::vector<double> entropy;
  double max_increase = 0.0;
  bool monotone = true;
};

/// H(mu S(t) | nu S(t)) along an increasing t-grid.
DataProcessingReport data_processing_check(const ExactSemigroup& sg, const DistributionVector& mu,
                                           const DistributionVector& nu, const std::vector<double>& times,
                                           double tol = 1e-10);

struct NogoRow {
  double t = 0.0;
  double tv = 0.0;
  double entropy = 0.0;                 ///< H(mu- S(t) | mu+ S(t))
  std::vector<double> entropy_profile;  ///< per-site values on the windows
  double gcb_hat = 0.0;                 ///< empirical GCB constant of mu+ S(t)
};

struct NogoReport {
  std::vector<int> window_sizes;
  std::vector<NogoRow> rows;
  bool degenerate_input = false;
  std::string summary;
};

NogoReport nogo_experiment(const ExactSemigroup& sg, const DistributionVector& mu_plus,
                           const DistributionVector& mu_minus, const std::vector<double>& times,
                           const FunctionFamily& family, const std::vector<std::vector<int>>& windows,
                           const std::vector<double>& lambdas = lambda_grid());

}  // namespace flipconc
