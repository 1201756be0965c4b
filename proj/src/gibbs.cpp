#include "flipconc/gibbs.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <sstream>

#include "flipconc/errors.hpp"

namespace flipconc {
namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Point parse_point(std::string_view tok, int& dim) {
  Point p{};
  int k = 0;
  std::size_t start = 0;
  while (true) {
    const auto end = tok.find(',', start);
    const auto part = tok.substr(start, end == std::string_view::npos ? end : end - start);
    if (k >= kMaxDimension) throw ParseError("point '" + std::string(tok) + "' has too many coordinates");
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), p[k]);
    if (ec != std::errc{} || ptr != part.data() + part.size() || part.empty()) {
      throw ParseError("bad offset '" + std::string(tok) + "'");
    }
    ++k;
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  if (dim == 0) dim = k;
  if (k != dim) throw ParseError("offsets have inconsistent dimensions");
  return p;
}

// Reorders a shape's offsets ascending, permuting the value table along.
Shape sorted_shape(const Shape& s) {
  const int m = s.size();
  std::vector<int> order(static_cast<std::size_t>(m));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return s.offsets[a] < s.offsets[b]; });
  Shape out;
  for (int k : order) out.offsets.push_back(s.offsets[static_cast<std::size_t>(k)]);
  out.values.assign(s.values.size(), 0.0);
  for (std::size_t r = 0; r < s.values.size(); ++r) {
    std::size_t target = 0;
    for (int knew = 0; knew < m; ++knew) {
      if ((r >> order[static_cast<std::size_t>(knew)]) & 1u) target |= std::size_t{1} << knew;
    }
    out.values[target] = s.values[r];
  }
  return out;
}

struct PlacedTerm {
  const Shape* shape;
  // Per offset: local bit index, or -1 with the fixed spin in `fixed_up`.
  std::vector<int> local;
  std::uint64_t fixed_pattern = 0;
};

std::vector<PlacedTerm> place_terms(const Potential& U, const Volume& volume,
                                    const BoundaryCondition& bc) {
  const Torus& torus = volume.torus;
  if (U.dimension() > torus.dimension()) throw DomainError("potential dimension exceeds torus dimension");
  std::vector<int> local_of(static_cast<std::size_t>(torus.site_count()), -1);
  for (int k = 0; k < volume.size(); ++k) {
    const int s = volume.sites[static_cast<std::size_t>(k)];
    if (s < 0 || s >= torus.site_count()) throw DomainError("volume site outside torus");
    if (local_of[static_cast<std::size_t>(s)] != -1) throw DomainError("volume lists a site twice");
    local_of[static_cast<std::size_t>(s)] = k;
  }
  if (bc.kind == BoundaryCondition::Kind::kPeriodic) {
    if (volume.size() != torus.site_count()) {
      throw DomainError("periodic boundary requires the volume to be the whole torus");
    }
  } else if (bc.eta.size() != torus.site_count()) {
    throw DomainError("fixed boundary condition does not cover the sites within range of the volume");
  }
  std::vector<PlacedTerm> terms;
  for (const Shape& shape : U.shapes()) {
    for (int base = 0; base < torus.site_count(); ++base) {
      PlacedTerm t{&shape, {}, 0};
      bool meets = false;
      for (int k = 0; k < shape.size(); ++k) {
        const int s = torus.translate(base, shape.offsets[static_cast<std::size_t>(k)]);
        const int loc = local_of[static_cast<std::size_t>(s)];
        t.local.push_back(loc);
        if (loc >= 0) {
          meets = true;
        } else if (bc.eta.up(s)) {
          t.fixed_pattern |= std::uint64_t{1} << k;
        }
      }
      if (meets) terms.push_back(std::move(t));
    }
  }
  return terms;
}

double evaluate_terms(const std::vector<PlacedTerm>& terms, std::uint64_t local_state) {
  double h = 0.0;
  for (const auto& t : terms) {
    std::uint64_t pattern = t.fixed_pattern;
    for (std::size_t k = 0; k < t.local.size(); ++k) {
      const int loc = t.local[k];
      if (loc >= 0 && ((local_state >> loc) & 1u)) pattern |= std::uint64_t{1} << k;
    }
    h += t.shape->values[pattern];
  }
  return h;
}

}  // namespace

// ----------------------------------------------------------------- Shape

double Shape::sup_abs() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

double Shape::oscillation() const {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return *hi - *lo;
}

int Shape::diameter() const {
  int d = 0;
  for (const auto& a : offsets) {
    for (const auto& b : offsets) {
      for (int k = 0; k < kMaxDimension; ++k) d = std::max(d, std::abs(a[k] - b[k]));
    }
  }
  return d;
}

// ------------------------------------------------------------- Potential

Potential::Potential(std::vector<Shape> shapes, int dimension) : dimension_(dimension) {
  if (dimension < 1 || dimension > kMaxDimension) throw DomainError("potential dimension must be 1..3");
  std::map<std::vector<Point>, std::vector<double>> merged;
  for (auto& raw : shapes) {
    if (raw.offsets.empty()) throw DomainError("potential shapes must be nonempty");
    if (raw.values.size() != (std::size_t{1} << raw.offsets.size())) {
      throw DomainError("shape value table must have 2^|A| entries");
    }
    Shape s = sorted_shape(raw);
    if (std::adjacent_find(s.offsets.begin(), s.offsets.end()) != s.offsets.end()) {
      throw DomainError("shape lists an offset twice");
    }
    for (const auto& p : s.offsets) {
      for (int k = dimension; k < kMaxDimension; ++k) {
        if (p[k] != 0) throw DomainError("offset exceeds potential dimension");
      }
    }
    const Point origin = s.offsets.front();
    for (auto& p : s.offsets) {
      for (int k = 0; k < kMaxDimension; ++k) p[k] -= origin[k];
    }
    auto [it, inserted] = merged.try_emplace(s.offsets, s.values);
    if (!inserted) {
      for (std::size_t r = 0; r < s.values.size(); ++r) it->second[r] += s.values[r];
    }
  }
  for (auto& [offs, vals] : merged) shapes_.push_back(Shape{offs, vals});
}

Potential Potential::ising_nearest_neighbour(int dimension, double beta, double field) {
  std::vector<Shape> shapes;
  for (int k = 0; k < dimension; ++k) {
    Point e{};
    e[k] = 1;
    // bit0 = origin, bit1 = neighbour; aligned spins give -beta.
    shapes.push_back(Shape{{Point{}, e}, {-beta, beta, beta, -beta}});
  }
  if (field != 0.0) shapes.push_back(Shape{{Point{}}, {field, -field}});
  return Potential(std::move(shapes), dimension);
}

std::vector<Shape> parse_shape_lines(std::istream& in, int& dim) {
  std::vector<Shape> shapes;
  dim = 0;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    const auto bar = view.find('|');
    if (bar == std::string_view::npos) {
      throw ParseError("potential line " + std::to_string(lineno) + ": expected 'offsets | values'");
    }
    Shape s;
    std::istringstream offs{std::string(view.substr(0, bar))};
    std::string tok;
    while (offs >> tok) s.offsets.push_back(parse_point(tok, dim));
    std::vector<double> listed;
    std::istringstream vals{std::string(view.substr(bar + 1))};
    while (vals >> tok) {
      try {
        std::size_t used = 0;
        listed.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw ParseError("");
      } catch (const std::exception&) {
        throw ParseError("potential line " + std::to_string(lineno) + ": bad value '" + tok + "'");
      }
    }
    const int m = s.size();
    if (m == 0 || listed.size() != (std::size_t{1} << m)) {
      throw ParseError("potential line " + std::to_string(lineno) + ": need 2^|A| values");
    }
    s.values.assign(listed.size(), 0.0);
    for (std::size_t j = 0; j < listed.size(); ++j) {
      std::size_t r = 0;
      for (int k = 0; k < m; ++k) {
        if ((j >> (m - 1 - k)) & 1u) r |= std::size_t{1} << k;
      }
      s.values[r] = listed[j];
    }
    shapes.push_back(std::move(s));
  }
  if (shapes.empty()) throw ParseError("potential file has no shapes");
  return shapes;
}

Potential Potential::parse(std::istream& in) {
  int dim = 0;
  auto shapes = parse_shape_lines(in, dim);
  return Potential(std::move(shapes), dim);
}

Potential Potential::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open potential file '" + path + "'");
  return parse(in);
}

int Potential::range() const {
  int r = 0;
  for (const auto& s : shapes_) r = std::max(r, s.diameter());
  return r;
}

Potential Potential::scaled(double lambda) const {
  Potential out = *this;
  for (auto& s : out.shapes_) {
    for (double& v : s.values) v *= lambda;
  }
  return out;
}

// Each shape A_0 has exactly |A_0| translates containing a given site, so
// both sums reduce to sums over the basis.
double summability_norm(const Potential& U) {
  double total = 0.0;
  for (const auto& s : U.shapes()) total += s.size() * s.sup_abs();
  return total;
}

double dobrushin_constant(const Potential& U) {
  double total = 0.0;
  for (const auto& s : U.shapes()) total += 0.5 * s.size() * (s.size() - 1) * s.oscillation();
  return total;
}

double gcb_constant_dobrushin(const Potential& U) {
  const double c = dobrushin_constant(U);
  if (!(c < 1.0)) {
    throw DomainError("c(U) = " + std::to_string(c) + " is outside the strong-uniqueness regime (c(U) < 1)");
  }
  return 1.0 / (2.0 * (1.0 - c) * (1.0 - c));
}

// ---------------------------------------------------------------- Volume

Volume Volume::whole(const Torus& t) {
  Volume v{t, std::vector<int>(static_cast<std::size_t>(t.site_count()))};
  std::iota(v.sites.begin(), v.sites.end(), 0);
  return v;
}

Volume Volume::box(const Torus& t, const Point& corner, std::span<const int> sides) {
  if (static_cast<int>(sides.size()) != t.dimension()) throw DomainError("box dimension mismatch");
  const Torus shape{std::vector<int>(sides.begin(), sides.end())};
  Volume v{t, {}};
  for (int k = 0; k < shape.site_count(); ++k) {
    Point p = shape.coordinates(k);
    for (int d = 0; d < t.dimension(); ++d) p[d] += corner[d];
    v.sites.push_back(t.site(p));
  }
  return v;
}

// ----------------------------------------------------------- Hamiltonian

double hamiltonian(const Potential& U, const Volume& volume, std::uint64_t local_state,
                   const BoundaryCondition& bc) {
  return evaluate_terms(place_terms(U, volume, bc), local_state);
}

GibbsMeasure gibbs_measure(const Potential& U, const Volume& volume, const BoundaryCondition& bc,
                           int cap) {
  if (volume.size() > cap || volume.size() > 30) {
    throw CapacityError("volume of " + std::to_string(volume.size()) + " sites exceeds the enumeration cap");
  }
  if (volume.size() < 1) throw DomainError("empty volume");
  const auto terms = place_terms(U, volume, bc);
  const std::size_t n = std::size_t{1} << volume.size();
  std::vector<double> log_w(n);
  for (std::size_t s = 0; s < n; ++s) log_w[s] = -evaluate_terms(terms, s);
  return GibbsMeasure{volume, DistributionVector::from_log_weights(volume.size(), log_w), U, bc};
}

DistributionVector boundary_gibbs_on_box(const Potential& U, std::span<const int> box_sides,
                                         bool plus_boundary) {
  const int ring = std::max(1, U.range());
  std::vector<int> ambient;
  for (int l : box_sides) ambient.push_back(l + 2 * ring);
  const Torus torus{ambient};
  Point corner{};
  for (std::size_t k = 0; k < box_sides.size(); ++k) corner[k] = ring;
  const Volume vol = Volume::box(torus, corner, box_sides);
  const auto g = gibbs_measure(U, vol, BoundaryCondition::fixed(SpinConfiguration(torus.site_count(), plus_boundary)));
  return g.distribution;
}

}  // namespace flipconc
