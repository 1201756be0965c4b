#pragma once

// Spin-flip rate models c(i, sigma) on a torus, their validity report and
// the Gamma-matrix of rate sensitivities.

#include <cmath>
#include <concepts>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "flipconc/gibbs.hpp"
#include "flipconc/lattice.hpp"

namespace flipconc {

enum class RateKind { kIndependent, kGlauber, kPerturbed, kPolynomial };

/// One term lambda * sigma_{B+i} of a polynomial rate c(i, .) = sum lambda(B) sigma_{B+i}.
struct RateTerm {
  std::vector<Point> shape;
  double lambda = 0.0;
};

/// Translation-invariant flip rates on a torus. Per-site dependence lists
/// are resolved once at construction so evaluation is table lookups on
/// absolute site indices.
class RateModel {
 public:
  /// c = r.
  static RateModel independent(const Torus& torus, double r);
  /// c(i, sigma) = exp(-(H(sigma^i) - H(sigma)) / 2) with H the torus Hamiltonian of U.
  static RateModel glauber(const Torus& torus, const Potential& U);
  /// c(i, sigma) = 1 + eps(sigma at i + eps.offsets).
  static RateModel perturbed(const Torus& torus, const Shape& eps);
  /// c(i, sigma) = sum_B lambda(B) sigma_{B+i}; may be signed.
  static RateModel polynomial(const Torus& torus, std::vector<RateTerm> terms);

  const Torus& torus() const { return torus_; }
  int sites() const { return torus_.site_count(); }
  RateKind kind() const { return kind_; }
  std::string describe() const;

  /// Distinct sites (other than or including i) that c(i, .) reads.
  std::span<const int> dependence(int site) const {
    return {dep_.data() + dep_begin_[static_cast<std::size_t>(site)],
            dep_.data() + dep_begin_[static_cast<std::size_t>(site) + 1]};
  }
  /// Sites j whose rate c(j, .) reads site i.
  std::span<const int> influenced(int site) const {
    return {inf_.data() + inf_begin_[static_cast<std::size_t>(site)],
            inf_.data() + inf_begin_[static_cast<std::size_t>(site) + 1]};
  }
  /// Largest torus distance between a site and a site its rate reads.
  int range() const { return range_; }

  /// Rate at `site` with spins given by up(j) -> bool for absolute sites.
  template <class UpAt>
    requires std::predicate<UpAt, int>
  double rate(int site, UpAt&& up) const;
  double rate(int site, const SpinConfiguration& sigma) const {
    return rate(site, [&](int j) { return sigma.up(j); });
  }
  double rate_on_state(int site, std::uint64_t state) const {
    return rate(site, [state](int j) { return ((state >> j) & 1u) != 0; });
  }

  /// The potential behind a Glauber model.
  const Potential& potential() const { return potential_; }

 private:
  struct Translate {
    std::uint32_t shape;      // into potential_.shapes()
    std::uint32_t first;      // into slots_
    std::uint64_t flip_mask;  // positions reading the flipped site
  };

  RateModel(const Torus& torus, RateKind kind) : torus_(torus), kind_(kind) {}
  void finish();

  Torus torus_;
  RateKind kind_;
  double constant_ = 0.0;
  Potential potential_;
  Shape eps_;
  std::vector<RateTerm> terms_;

  // Flat per-site tables. Perturbed: slots_ are the neighbourhood sites;
  // Polynomial: slots_ are term sites with term_begin_ ranges;
  // Glauber: translates_ per site, slots_ their sites.
  std::vector<int> slots_;
  std::vector<std::uint32_t> slot_begin_;
  std::vector<std::uint32_t> term_begin_;
  std::vector<Translate> translates_;
  std::vector<std::uint32_t> translate_begin_;

  std::vector<int> dep_;
  std::vector<std::uint32_t> dep_begin_;
  std::vector<int> inf_;
  std::vector<std::uint32_t> inf_begin_;
  int range_ = 0;
};

struct RateReport {
  double min_rate = 0.0;
  double max_rate = 0.0;  ///< c-hat = sup c(i, sigma)
  int range = 0;
  double locality_sum = 0.0;  ///< sup_i sum_j Gamma_ij
  double eps_sup = 0.0;       ///< sup |c - 1|, the weak-interaction size
  bool satisfies_A = false;
  bool satisfies_C = false;
};

/// Exhaustive over each site's dependence set (at most 24 sites).
RateReport validate_conditions(const RateModel& rates);

/// Gamma_ij = sup_sigma (c(i, sigma^j) - c(i, sigma)), stored row-sparse.
/// For translation-invariant rates `kernel[k]` = Gamma_{0,k}, so that
/// Gamma_ij = kernel[site of (j - i)].
struct GammaMatrix {
  int n = 0;
  std::vector<std::vector<std::pair<int, double>>> rows;
  bool translation_invariant = false;
  std::vector<double> kernel;

  double at(int i, int j) const;
  /// Dense n x n copy, row-major.
  std::vector<double> dense() const;
  double max_row_sum() const;
  double max_col_sum() const;
};

GammaMatrix gamma_matrix(const RateModel& rates);

/// Reads a single `offsets | values` line (same layout as a potential
/// shape) defining eps(0, .) for perturbed rates.
Shape load_perturbation(const std::string& path);

// ------------------------------------------------------------ inline

template <class UpAt>
  requires std::predicate<UpAt, int>
double RateModel::rate(int site, UpAt&& up) const {
  const auto s = static_cast<std::size_t>(site);
  switch (kind_) {
    case RateKind::kIndependent:
      return constant_;
    case RateKind::kPerturbed: {
      std::size_t r = 0;
      const std::uint32_t b = slot_begin_[s];
      const std::uint32_t e = slot_begin_[s + 1];
      for (std::uint32_t k = b; k < e; ++k) {
        if (up(slots_[k])) r |= std::size_t{1} << (k - b);
      }
      return 1.0 + eps_.values[r];
    }
    case RateKind::kPolynomial: {
      double c = 0.0;
      const std::uint32_t tb = slot_begin_[s];
      for (std::size_t t = 0; t < terms_.size(); ++t) {
        const std::uint32_t b = term_begin_[tb + t];
        const std::uint32_t e = term_begin_[tb + t + 1];
        bool negative = false;
        for (std::uint32_t k = b; k < e; ++k) negative ^= !up(slots_[k]);
        c += negative ? -terms_[t].lambda : terms_[t].lambda;
      }
      return c;
    }
    case RateKind::kGlauber: {
      double delta_h = 0.0;
      for (std::uint32_t t = translate_begin_[s]; t < translate_begin_[s + 1]; ++t) {
        const Translate& tr = translates_[t];
        const Shape& shape = potential_.shapes()[tr.shape];
        std::uint64_t pattern = 0;
        const int m = shape.size();
        for (int k = 0; k < m; ++k) {
          if (up(slots_[tr.first + static_cast<std::uint32_t>(k)])) pattern |= std::uint64_t{1} << k;
        }
        delta_h += shape.values[pattern ^ tr.flip_mask] - shape.values[pattern];
      }
      return std::exp(-0.5 * delta_h);
    }
  }
  return 0.0;
}

}  // namespace flipconc
