#pragma once

// Exact algebra of the building-block operators L_B acting on monomials
// sigma_A over Z^d (no wrap-around), with rational coefficients.
//
// L_B sigma_A = -2 sum_{i in A} sigma_{(B+i) symdiff A}. A generator
// L = sum_B lambda(B) L_B corresponds to the spin-flip rates
// c(i, sigma) = sum_B lambda(B) sigma_{B+i}.

#include <gmpxx.h>

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "flipconc/lattice.hpp"
#include "flipconc/rates.hpp"

namespace flipconc {

using Rational = mpq_class;

/// A finite subset of Z^d, kept sorted and duplicate free.
using SiteSet = std::vector<Point>;

SiteSet make_site_set(std::vector<Point> sites);
SiteSet symmetric_difference(const SiteSet& a, const SiteSet& b);
SiteSet translate(const SiteSet& a, const Point& by);
/// Whitespace separated points ("0,0 1,0"). A single comma list without
/// spaces ("0,1") is read as 1D sites.
SiteSet parse_site_set(const std::string& text);

/// Parses "-0.3", "3/10" or "2" exactly.
Rational parse_rational(const std::string& text);

/// Finite linear combination of monomials; zero coefficients are never stored.
class SetPolynomial {
 public:
  using Terms = std::map<SiteSet, Rational>;

  SetPolynomial() = default;
  static SetPolynomial monomial(SiteSet a, Rational coeff = 1);

  void add(const SiteSet& a, const Rational& coeff);
  SetPolynomial& operator+=(const SetPolynomial& other);
  SetPolynomial scaled(const Rational& s) const;

  const Terms& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool is_zero() const { return terms_.empty(); }
  Rational coefficient(const SiteSet& a) const;

  /// Union of all monomial sets.
  SiteSet support() const;
  /// sum |coeff|.
  Rational l1_norm() const;
  /// Value at a configuration given as up(point) -> bool.
  template <class UpAt>
  double evaluate(UpAt&& up) const {
    double v = 0.0;
    for (const auto& [set, c] : terms_) {
      bool negative = false;
      for (const auto& p : set) negative ^= !up(p);
      v += negative ? -c.get_d() : c.get_d();
    }
    return v;
  }

  bool operator==(const SetPolynomial&) const = default;

 private:
  Terms terms_;
};

/// Exact sup norm by enumerating the support (Walsh-Hadamard transform of
/// the integer-scaled coefficients). `exact` is false when the support
/// exceeds `cap` sites or the scaled coefficients overflow 64 bits; the
/// value is then the l1 norm.
struct SupNorm {
  Rational value;
  bool exact = true;
};
inline constexpr int kSymbolicSupCap = 20;
SupNorm sup_norm(const SetPolynomial& p, int cap = kSymbolicSupCap);

SetPolynomial apply_LB(const SiteSet& b, const SetPolynomial& p);

inline constexpr std::size_t kTermCap = 10'000'000;

struct ChainResult {
  SetPolynomial polynomial;
  SupNorm sup;
  Rational l1;
  Rational bound;
};

/// L_{B_n} ... L_{B_1} sigma_A with chain = {B_1, ..., B_n} (B_1 applied
/// first). bound = 2^n |A| (|A|+|B_1|) ... (|A|+|B_1|+...+|B_{n-1}|).
ChainResult apply_chain(const std::vector<SiteSet>& chain, const SiteSet& a);
Rational chain_bound(const std::vector<SiteSet>& chain, const SiteSet& a);

struct GeneratorSpec {
  struct Entry {
    SiteSet shape;
    Rational lambda;
  };
  std::vector<Entry> entries;

  int K() const;            ///< max |B|
  Rational M() const;       ///< max |lambda(B)|
  int count() const { return static_cast<int>(entries.size()); }

  /// Lines `lambda : i1 i2 ... ik`; points may carry comma separated
  /// coordinates. '#' starts a comment.
  static GeneratorSpec parse(std::istream& in);
  static GeneratorSpec load(const std::string& path);

  /// The matching signed rates c(i, sigma) = sum lambda(B) sigma_{B+i}.
  RateModel rates(const Torus& torus) const;
};

inline constexpr int kPowerCap = 8;

/// L^n sigma_A with bound 2^n M^n |B|^n (|A|+K)^n n!.
ChainResult apply_generator_power(const GeneratorSpec& g, int n, const SiteSet& a, int cap = kPowerCap);
Rational power_bound(const GeneratorSpec& g, int n, const SiteSet& a);

/// t0 = 1 / (2 M |B| (|A|+K)).
double analyticity_radius(const GeneratorSpec& g, const SiteSet& a);

struct TruncatedSeries {
  std::map<SiteSet, double> coefficients;
  double remainder_bound = 0.0;

  template <class UpAt>
  double evaluate(UpAt&& up) const {
    double v = 0.0;
    for (const auto& [set, c] : coefficients) {
      bool negative = false;
      for (const auto& p : set) negative ^= !up(p);
      v += negative ? -c : c;
    }
    return v;
  }
};

/// sum_{n <= n_max} t^n / n! L^n sigma_A, with the geometric tail
/// q^{n_max+1} / (1 - q), q = t / t0, as remainder bound.
TruncatedSeries truncated_series(const GeneratorSpec& g, double t, const SiteSet& a, int n_max);

/// A positive measure psi on the naturals.
struct TailMeasure {
  enum class Kind { kDirac0, kGeometric, kPoisson, kTable };
  Kind kind = Kind::kDirac0;
  double scale = 1.0;  ///< overall factor
  double rate = 0.0;   ///< geometric: psi(k) = scale e^{-rate k}; poisson: mean
  std::vector<double> table;

  static TailMeasure dirac0(double scale = 1.0);
  static TailMeasure geometric(double rate, double scale = 1.0);
  static TailMeasure poisson(double mean, double scale = 1.0);
  static TailMeasure from_table(std::vector<double> values);

  double operator()(int k) const;
  TailMeasure scaled(double s) const;
  /// sum_k e^{uk} psi(k) in closed form; DomainError when divergent.
  double laplace(double u) const;
};

struct InfiniteRangeBound {
  double F = 0.0;          ///< F(u)
  double kappa = 0.0;      ///< 2 c |A| F(u) / u
  double prefactor = 0.0;  ///< e^u
  double rhs = 0.0;        ///< e^u n! kappa^n
  double lemma_lhs = 0.0;  ///< truncated sum over k_1..k_n <= k_max
  double lemma_rhs = 0.0;  ///< e^u n! u^{-n} F(u)^n
  bool lemma_holds = false;
};

InfiniteRangeBound infinite_range_bound(const TailMeasure& psi, double c, double u, int a_size, int n,
                                        int k_max = 40);

double factorial(int n);

}  // namespace flipconc
