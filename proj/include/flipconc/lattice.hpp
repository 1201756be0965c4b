#pragma once

// Finite periodic lattices, bit-packed spin configurations, local
// observables and their per-site oscillations.

#include <array>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace flipconc {

inline constexpr int kMaxDimension = 3;

/// Integer lattice vector; coordinates beyond the torus dimension are zero.
using Point = std::array<int, kMaxDimension>;

/// Default cap on the support size of an exhaustively tabulated observable.
inline constexpr int kTabulationCap = 24;

/// Z^d / (l_1 Z x ... x l_d Z). Sites are numbered with the first
/// coordinate varying fastest.
class Torus {
 public:
  explicit Torus(std::vector<int> sides);

  /// "12" (a ring), "4x4", "2x3x2".
  static Torus parse(std::string_view spec);

  int dimension() const { return static_cast<int>(sides_.size()); }
  std::span<const int> sides() const { return sides_; }
  int site_count() const { return sites_; }

  Point coordinates(int site) const;
  /// Site at p after wrapping each coordinate.
  int site(const Point& p) const;
  int translate(int site, const Point& offset) const;
  /// Chebyshev distance in the torus metric.
  int distance(int a, int b) const;

  std::string to_string() const;
  bool operator==(const Torus&) const = default;

 private:
  std::vector<int> sides_;
  int sites_ = 1;
};

/// Assignment of +-1 to sites 0..N-1; bit i set means sigma_i = +1.
class SpinConfiguration {
 public:
  explicit SpinConfiguration(int sites, bool all_up = true);

  static SpinConfiguration from_state(int sites, std::uint64_t bits);
  /// Accepts '+'/'-' or '1'/'0' characters, site 0 first.
  static SpinConfiguration parse(int sites, std::string_view text);

  int size() const { return sites_; }
  bool up(int site) const {
    return (words_[static_cast<std::size_t>(site) >> 6] >> (site & 63)) & 1u;
  }
  int spin(int site) const { return up(site) ? 1 : -1; }
  void toggle(int site) { words_[static_cast<std::size_t>(site) >> 6] ^= std::uint64_t{1} << (site & 63); }
  void set(int site, bool up_spin);
  /// Packed word; only valid when size() <= 64.
  std::uint64_t state() const;

  std::string to_string() const;
  bool operator==(const SpinConfiguration&) const = default;

 private:
  int sites_;
  std::vector<std::uint64_t> words_;
};

/// sigma with the spin at `site` reversed.
SpinConfiguration flip(const SpinConfiguration& sigma, int site);

/// prod_{i in A} sigma_i, and 1 for the empty set.
double monomial_eval(const SpinConfiguration& sigma, std::span<const int> sites);

struct MonomialTerm {
  double coeff = 0.0;
  std::vector<int> sites;
};

/// A real function depending on finitely many sites. Observables with
/// support up to kTabulationCap are stored as a table over the 2^|support|
/// restrictions (entry r: bit k of r is the spin at support()[k]); larger
/// ones keep their monomial expansion and are evaluated term by term.
class Observable {
 public:
  static Observable constant(double c);
  static Observable monomial(std::vector<int> sites, double coeff = 1.0);
  static Observable from_terms(std::vector<MonomialTerm> terms);
  static Observable from_table(std::vector<int> support, std::vector<double> table);
  static Observable from_function(std::vector<int> support,
                                  const std::function<double(const SpinConfiguration&)>& fn,
                                  int sites);

  std::span<const int> support() const { return support_; }
  bool tabulated() const { return !table_.empty(); }
  std::span<const double> table() const;

  double operator()(const SpinConfiguration& sigma) const;
  /// Evaluation on a packed state of a torus with at most 64 sites.
  double on_state(std::uint64_t state) const;
  /// Values on all 2^n states of an n-site torus.
  std::vector<double> state_vector(int sites) const;

  Observable scaled(double lambda) const;

  const std::string& name() const { return name_; }
  Observable& named(std::string n) {
    name_ = std::move(n);
    return *this;
  }

 private:
  std::vector<int> support_;
  std::vector<double> table_;
  std::vector<MonomialTerm> terms_;
  std::string name_;
};

/// Entries delta_i f >= 0, one per torus site.
struct LipschitzVector {
  std::vector<double> entries;

  std::size_t size() const { return entries.size(); }
  double operator[](std::size_t i) const { return entries[i]; }
};

/// f(sigma^i) - f(sigma).
double discrete_gradient(const Observable& f, int site, const SpinConfiguration& sigma);

/// delta_i f = max over support restrictions of the discrete gradient.
/// Throws CapacityError when the support exceeds `cap`.
LipschitzVector lipschitz_vector(const Observable& f, int sites, int cap = kTabulationCap);

/// Same, for a function given by its values on all 2^n states.
LipschitzVector lipschitz_vector_states(std::span<const double> values, int sites);

/// (sum_i (delta_i f)^p)^(1/p); p = +inf gives the max entry.
double lipschitz_norm(const LipschitzVector& delta, double p);

/// Lines `coeff : i1 i2 ... ik` (no sites = constant term). '#' starts a
/// comment; a line of `---` separates consecutive functions.
std::vector<std::vector<MonomialTerm>> parse_monomial_expansions(std::istream& in);
std::vector<Observable> load_observables(const std::string& path);

}  // namespace flipconc
