#pragma once

// Exact measurement of Gaussian concentration, variance and (H,J,C)
// inequalities for distributions over the states of a torus, and the
// numerical checks of their conservation under the dynamics.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "flipconc/distribution.hpp"
#include "flipconc/generator.hpp"
#include "flipconc/lattice.hpp"
#include "flipconc/rates.hpp"

namespace flipconc {

// ------------------------------------------------------------- families

struct FunctionFamily {
  std::string description;
  std::vector<Observable> members;
};

/// All sigma_A with 1 <= |A| <= k_max.
FunctionFamily monomial_family(int sites, int k_max);
/// `count` random combinations of one to three monomials with supports of
/// at most four sites and coefficients uniform in [-1, 1].
FunctionFamily random_family(int sites, int count, std::uint64_t seed);
FunctionFamily file_family(const std::string& path);
/// "monomials:K", "random:N:SEED" or "file:PATH".
FunctionFamily parse_family(const std::string& spec, int sites);

/// {+-2^k base : k_lo <= k <= k_hi}, negatives first, ascending.
std::vector<double> lambda_grid(double base = 1.0, int k_lo = -3, int k_hi = 3);

// ------------------------------------------------------ single measures

/// log E_mu[e^{f - E_mu f}] / ||delta f||_2^2, log-sum-exp stabilized.
/// DomainError when f is constant.
double gcb_ratio(const DistributionVector& mu, const Observable& f);
/// Same on raw state values with a precomputed ||delta f||_2^2.
double gcb_ratio_values(std::span<const double> p, std::span<const double> f, double delta_sq);

/// log E[e^{g - E g}] for g given by its values and probabilities.
double centered_log_mgf(std::span<const double> p, std::span<const double> g);
double variance(std::span<const double> p, std::span<const double> g);

struct FunctionRatio {
  std::string name;
  double lambda = 1.0;
  double delta_sq = 0.0;  ///< ||delta(lambda f)||_2^2
  double value = 0.0;     ///< measured left side
  double ratio = 0.0;     ///< value / delta_sq
  bool ok = true;
};

struct ConcentrationReport {
  double best = 0.0;  ///< empirical constant: max ratio (a lower bound on any valid constant)
  std::string argmax;
  double argmax_lambda = 0.0;
  std::vector<FunctionRatio> rows;
  std::optional<double> reference;  ///< supplied constant, if any
  std::size_t violations = 0;
};

/// Max of gcb_ratio over family x lambda grid.
ConcentrationReport empirical_gcb_constant(const DistributionVector& mu, const FunctionFamily& family,
                                           const std::vector<double>& lambdas = lambda_grid(),
                                           std::optional<double> reference = std::nullopt);

struct TailRow {
  double u = 0.0;
  double probability = 0.0;
  double bound = 0.0;
  bool ok = true;
};
/// mu(f - E f >= u) against exp(-u^2 / (4 C ||delta f||_2^2)).
std::vector<TailRow> check_subgaussian_tail(const DistributionVector& mu, const Observable& f,
                                            const std::vector<double>& u_grid, double C);

/// Var_mu(f) / ||delta f||_2^2 over the family; violations counted
/// against C.
ConcentrationReport check_uvb(const DistributionVector& mu, const FunctionFamily& family,
                              std::optional<double> C = std::nullopt);

struct WeakGcbReport {
  double var_ratio = 0.0;  ///< Var / ||delta f||^2
  /// 2 (E e^{lambda X} - 1) / (lambda^2 ||delta f||^2) at lambda = 2^{-k}.
  std::vector<std::pair<double, double>> limit_scan;
  double limit_estimate = 0.0;
  bool forward_consistent = false;  ///< limit_estimate matches var_ratio
  double lambda0 = 0.0;             ///< 1 / (2 ||f||_inf + 1)
  double window_constant = 0.0;     ///< e C / 2
  bool window_holds = false;        ///< wGCB(e C/2) on |lambda| <= lambda0
  bool holds = false;
};
/// Scans lambda -> 0 and the proof window, with C a UVB constant of mu.
WeakGcbReport weak_gcb_check(const DistributionVector& mu, const Observable& f, double C);

struct CarreDuChamp {
  Observable gamma;
  double sup = 0.0;
  double bound = 0.0;  ///< c-hat ||delta f||_2^2
  bool holds = true;
};
/// Gamma(f,f) = sum_i c(i,.) (f(sigma^i) - f(sigma))^2, tabulated.
CarreDuChamp carre_du_champ(const RateModel& rates, const Observable& f);

struct PsiIdentity {
  std::vector<double> direct;    ///< S(t) f^2 - (S(t) f)^2
  std::vector<double> integral;  ///< int_0^t S(t-s) Gamma(S(s)f, S(s)f) ds, Simpson
  double gap = 0.0;              ///< sup-norm difference
};
PsiIdentity psi_identity_check(const ExactSemigroup& sg, double t, std::span<const double> f, int steps);
PsiIdentity psi_identity_check(const RateModel& rates, double t, const Observable& f, int steps);

// ----------------------------------------------- evolution of a family

/// Tracks S(t) sigma_B for every B contained in the support of some family
/// member. From these, the law of the restriction sigma(t)|_supp(f) under
/// every start is recovered by an inverse Walsh-Hadamard transform.
class FamilyPropagator {
 public:
  FamilyPropagator(const ExactSemigroup& sg, const FunctionFamily& family);

  double time() const { return t_; }
  void advance_to(double t);

  std::size_t size() const { return members_.size(); }
  /// P(sigma(t)|_S = r) for the start state `start`, r indexed like the
  /// member's table.
  void start_marginal(std::size_t member, std::uint64_t start, std::span<double> out) const;
  /// S(t) f over all states.
  std::vector<double> evolved_function(std::size_t member) const;
  const Observable& member(std::size_t k) const { return family_->members[k]; }

 private:
  struct Member {
    std::vector<std::size_t> subset_vectors;  // index per subset mask of the support
  };
  const ExactSemigroup* sg_;
  const FunctionFamily* family_;
  double t_ = 0.0;
  std::vector<Member> members_;
  std::vector<std::vector<double>> vectors_;  // S(t) sigma_B
};

// ---------------------------------------------------- conservation checks

struct BoundRow {
  std::string name;
  double lambda = 1.0;
  double lhs = 0.0;
  double bound = 0.0;
  bool ok = true;
};

struct Theorem31Report {
  double t = 0.0;
  double D_t = 0.0;        ///< max over starts of the empirical GCB constant of delta_sigma S(t)
  double C_mu = 0.0;
  double K = 1.0;
  double C_hat = 0.0;      ///< empirical GCB constant of mu S(t)
  double composite = 0.0;  ///< D_t + K C_mu
  std::optional<double> alpha;
  std::optional<double> decay_bound;  ///< e^{-alpha t} C_mu + D_t
  std::vector<BoundRow> rows;
  std::size_t violations = 0;
};

/// C_mu must be a certified GCB constant of mu.
Theorem31Report theorem31_check(const ExactSemigroup& sg, const RateModel& rates, double t,
                                const DistributionVector& mu, double C_mu, const FunctionFamily& family,
                                const std::vector<double>& lambdas = lambda_grid());

struct Theorem52Report {
  double t = 0.0;
  double C = 0.0;             ///< UVB constant of mu
  double K = 1.0;
  double mean_start_constant = 0.0;  ///< int C(sigma,t) dmu
  double max_start_constant = 0.0;
  double composite = 0.0;     ///< C K + int C(sigma,t) dmu
  double C_hat = 0.0;         ///< measured variance ratio of mu S(t)
  std::vector<BoundRow> rows;
  std::size_t violations = 0;
};
Theorem52Report theorem52_check(const ExactSemigroup& sg, const RateModel& rates, double t,
                                const DistributionVector& mu, double C, const FunctionFamily& family);

/// int_0^t K(s)^2 ds by adaptive Simpson.
double k_squared_integral(const RateModel& rates, double t, double tol = 1e-10);

struct Theorem53Report {
  double t = 0.0;
  double c_hat = 0.0;
  double integral = 0.0;
  double C = 0.0;          ///< 2 c-hat int_0^t K(s)^2 ds
  double max_ratio = 0.0;  ///< max over starts and family of Var / ||delta f||^2
  std::size_t violations = 0;
};
Theorem53Report theorem53_check(const ExactSemigroup& sg, const RateModel& rates, double t,
                                const FunctionFamily& family);
double theorem53_constant(const RateModel& rates, double t);

// ----------------------------------------------------------- (H, J, C)

struct NamedFunction {
  std::string name;
  std::function<double(double)> fn;
};
/// "square", "exp", "exp_square", "abs:P".
NamedFunction builtin_function(const std::string& name);

struct HJCSpec {
  NamedFunction H;
  NamedFunction J;
  /// Throws DomainError unless H is convex and J nondecreasing on a grid.
  void validate() const;
  /// Smallest x >= 0 with J(x) >= y, by bisection.
  double invert_J(double y) const;
};

/// Certified (H,J) constant of the uniform product measure, when known
/// for the builtin pair.
std::optional<double> uniform_product_hjc_constant(const HJCSpec& spec);

struct HJCReport {
  double t = 0.0;
  double C = 0.0;     ///< max over starts of the per-start constant, measured on 2f
  double C_mu = 0.0;
  double K = 1.0;
  std::vector<BoundRow> rows;
  std::size_t violations = 0;
};
HJCReport hjc_check(const ExactSemigroup& sg, const RateModel& rates, double t, const DistributionVector& mu,
                    double C_mu, const HJCSpec& spec, const FunctionFamily& family);

/// Relative slack used by every bound comparison above.
inline constexpr double kBoundSlack = 1e-9;

}  // namespace flipconc
