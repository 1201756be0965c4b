#pragma once

// Translation-invariant finite-range potentials and finite-volume Gibbs
// measures, with the strong-uniqueness (Dobrushin-type) constant.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "flipconc/distribution.hpp"
#include "flipconc/lattice.hpp"

namespace flipconc {

/// One basis term U(A_0, .) of a translation-invariant potential.
/// values[r] is the energy when bit k of r gives the spin at offsets[k].
struct Shape {
  std::vector<Point> offsets;
  std::vector<double> values;

  int size() const { return static_cast<int>(offsets.size()); }
  double sup_abs() const;
  /// max - min of the value table: sup_{sigma,eta} |U(A,sigma) - U(A,eta)|.
  double oscillation() const;
  /// Chebyshev diameter of the offset set.
  int diameter() const;
};

class Potential {
 public:
  Potential() = default;
  /// Translates each shape so its lexicographically smallest offset is the
  /// origin, orders offsets, and merges shapes with equal offset sets.
  Potential(std::vector<Shape> shapes, int dimension);

  /// U({i,j}) = -beta sigma_i sigma_j over nearest-neighbour pairs and
  /// U({i}) = -field sigma_i.
  static Potential ising_nearest_neighbour(int dimension, double beta, double field = 0.0);

  /// One shape per line: `offsets | v(--..-) v(--..+) ... v(++..+)`.
  /// Offsets are whitespace separated points with comma separated
  /// coordinates; the value list runs in binary order with the first
  /// offset as the most significant spin and '+' as 1.
  static Potential parse(std::istream& in);
  static Potential load(const std::string& path);

  std::span<const Shape> shapes() const { return shapes_; }
  int dimension() const { return dimension_; }
  /// Largest shape diameter.
  int range() const;
  Potential scaled(double lambda) const;

 private:
  std::vector<Shape> shapes_;
  int dimension_ = 1;
};

/// The shape lines of a potential file as written, without translating
/// or merging; `dim` receives the coordinate count.
std::vector<Shape> parse_shape_lines(std::istream& in, int& dim);

/// sup_i sum_{A containing i} sup |U(A, .)|.
double summability_norm(const Potential& U);

/// c(U) = sup_i (1/2) sum_{A containing i} (|A| - 1) osc U(A, .).
double dobrushin_constant(const Potential& U);

/// 1 / (2 (1 - c(U))^2); DomainError when c(U) >= 1.
double gcb_constant_dobrushin(const Potential& U);

/// A finite set of sites of an ambient torus. Local state bit k is the
/// spin at sites[k].
struct Volume {
  Torus torus;
  std::vector<int> sites;

  static Volume whole(const Torus& t);
  /// Box with the given corner and side lengths; sites listed with the
  /// first coordinate fastest, so local bit k matches site k of a torus
  /// with those side lengths.
  static Volume box(const Torus& t, const Point& corner, std::span<const int> sides);
  int size() const { return static_cast<int>(sites.size()); }
};

struct BoundaryCondition {
  enum class Kind { kPeriodic, kFixed };

  Kind kind = Kind::kPeriodic;
  /// Spins on the ambient torus; only sites outside the volume are read.
  SpinConfiguration eta{1};

  static BoundaryCondition periodic() { return {}; }
  static BoundaryCondition fixed(SpinConfiguration eta) { return {Kind::kFixed, std::move(eta)}; }
};

/// H = sum over translated shapes meeting the volume of U(A, sigma_vol eta_out).
/// Periodic boundary requires the volume to be the whole torus.
double hamiltonian(const Potential& U, const Volume& volume, std::uint64_t local_state,
                   const BoundaryCondition& bc);

struct GibbsMeasure {
  Volume volume;
  DistributionVector distribution;
  Potential potential;
  BoundaryCondition boundary;
};

inline constexpr int kGibbsEnumerationCap = 20;

/// exp(-H)/Z by full enumeration of the 2^|volume| states.
GibbsMeasure gibbs_measure(const Potential& U, const Volume& volume, const BoundaryCondition& bc,
                           int cap = kGibbsEnumerationCap);

/// Gibbs measure on a box of the given sides surrounded by a ring of
/// all-plus (or all-minus) spins of width range(U). The result is indexed
/// like the states of a torus with those side lengths.
DistributionVector boundary_gibbs_on_box(const Potential& U, std::span<const int> box_sides,
                                         bool plus_boundary);

}  // namespace flipconc
