#pragma once

// Propagation of Lipschitz vectors through e^{t Gamma} and the l2
// contraction constants of the flow.

#include <optional>
#include <vector>

#include "flipconc/lattice.hpp"
#include "flipconc/rates.hpp"

namespace flipconc {

/// kLiteral uses Gamma as defined, diagonal included. kShifted drops the
/// diagonal and subtracts eps = inf_{i,sigma} [c(i,sigma) + c(i,sigma^i)]
/// on it, which is the sharper matrix of the classical coupling argument.
enum class GammaConvention { kLiteral, kShifted };

/// Dense n x n matrix for the chosen convention, row-major.
std::vector<double> gamma_dense(const RateModel& rates, GammaConvention convention);

/// inf_{i,sigma} [c(i,sigma) + c(i,sigma^i)].
double flip_pair_floor(const RateModel& rates);

/// e^{t Gamma^T} delta f, so that delta_i S(t) f <= (e^{t Gamma^T} delta f)_i.
LipschitzVector lipschitz_propagation(const RateModel& rates, double t, const LipschitzVector& delta,
                                      GammaConvention convention = GammaConvention::kLiteral);

/// e^{t G} for a dense row-major n x n matrix.
std::vector<double> matrix_exponential(const std::vector<double>& g, int n, double t);

/// Kernel gamma_t with (e^{t Gamma^T} x)_i = sum_j gamma_t(j - i) x_j for
/// translation-invariant Gamma: returns column 0 of e^{t Gamma}.
std::vector<double> propagation_kernel(const RateModel& rates, double t,
                                       GammaConvention convention = GammaConvention::kLiteral);

struct ContractionConstants {
  double K = 1.0;             ///< ||e^{t Gamma}||_{2->2}^2, literal Gamma
  double schur_bound = 1.0;   ///< e^{2 t sqrt(||Gamma||_1 ||Gamma||_inf)}
  bool rigid = false;         ///< Gamma == 0
  double eps = 0.0;           ///< flip_pair_floor
  double M = 0.0;             ///< sup_i sum_{j != i} Gamma_ij
  /// 2 (eps - M) when eps > M and ||e^{s Gamma_shifted}||^2 <= e^{-alpha s}
  /// was confirmed on the check grid.
  std::optional<double> alpha;
  double K_shifted = 1.0;     ///< ||e^{t Gamma_shifted}||^2
};

/// Squared spectral norm of a dense row-major matrix.
double squared_operator_norm(const std::vector<double>& a, int n);

ContractionConstants contraction_constants(const RateModel& rates, double t);

}  // namespace flipconc
