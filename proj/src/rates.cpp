#include "flipconc/rates.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

#include "flipconc/errors.hpp"

namespace flipconc {

RateModel RateModel::independent(const Torus& torus, double r) {
  if (!(r > 0.0)) throw DomainError("independent flip rate must be positive");
  RateModel m(torus, RateKind::kIndependent);
  m.constant_ = r;
  m.finish();
  return m;
}

RateModel RateModel::perturbed(const Torus& torus, const Shape& eps) {
  if (eps.values.size() != (std::size_t{1} << eps.offsets.size())) {
    throw DomainError("perturbation table must have 2^|offsets| entries");
  }
  if (eps.sup_abs() >= 1.0) throw DomainError("perturbation must satisfy sup |eps| < 1");
  RateModel m(torus, RateKind::kPerturbed);
  m.eps_ = eps;
  const int n = torus.site_count();
  for (int i = 0; i < n; ++i) {
    m.slot_begin_.push_back(static_cast<std::uint32_t>(m.slots_.size()));
    for (const auto& off : eps.offsets) m.slots_.push_back(torus.translate(i, off));
  }
  m.slot_begin_.push_back(static_cast<std::uint32_t>(m.slots_.size()));
  m.finish();
  return m;
}

RateModel RateModel::polynomial(const Torus& torus, std::vector<RateTerm> terms) {
  if (terms.empty()) throw DomainError("polynomial rates need at least one term");
  RateModel m(torus, RateKind::kPolynomial);
  m.terms_ = std::move(terms);
  const int n = torus.site_count();
  const std::size_t per_site = m.terms_.size() + 1;
  for (int i = 0; i < n; ++i) {
    m.slot_begin_.push_back(static_cast<std::uint32_t>(static_cast<std::size_t>(i) * per_site));
    for (const auto& t : m.terms_) {
      m.term_begin_.push_back(static_cast<std::uint32_t>(m.slots_.size()));
      for (const auto& off : t.shape) m.slots_.push_back(torus.translate(i, off));
    }
    m.term_begin_.push_back(static_cast<std::uint32_t>(m.slots_.size()));
  }
  m.slot_begin_.push_back(static_cast<std::uint32_t>(static_cast<std::size_t>(n) * per_site));
  m.finish();
  return m;
}

RateModel RateModel::glauber(const Torus& torus, const Potential& U) {
  if (U.dimension() > torus.dimension()) throw DomainError("potential dimension exceeds torus dimension");
  RateModel m(torus, RateKind::kGlauber);
  m.potential_ = U;
  const int n = torus.site_count();
  for (int i = 0; i < n; ++i) {
    m.translate_begin_.push_back(static_cast<std::uint32_t>(m.translates_.size()));
    const auto shapes = m.potential_.shapes();
    for (std::uint32_t idx = 0; idx < shapes.size(); ++idx) {
      const Shape& shape = shapes[idx];
      std::vector<int> bases;
      for (const auto& a : shape.offsets) {
        Point neg{};
        for (int k = 0; k < kMaxDimension; ++k) neg[k] = -a[k];
        bases.push_back(torus.translate(i, neg));
      }
      std::sort(bases.begin(), bases.end());
      bases.erase(std::unique(bases.begin(), bases.end()), bases.end());
      for (int base : bases) {
        Translate tr{idx, static_cast<std::uint32_t>(m.slots_.size()), 0};
        for (int k = 0; k < shape.size(); ++k) {
          const int s = torus.translate(base, shape.offsets[static_cast<std::size_t>(k)]);
          m.slots_.push_back(s);
          if (s == i) tr.flip_mask |= std::uint64_t{1} << k;
        }
        m.translates_.push_back(tr);
      }
    }
  }
  m.translate_begin_.push_back(static_cast<std::uint32_t>(m.translates_.size()));
  m.finish();
  return m;
}

void RateModel::finish() {
  const int n = torus_.site_count();
  std::vector<std::vector<int>> dep(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    auto& d = dep[static_cast<std::size_t>(i)];
    const auto s = static_cast<std::size_t>(i);
    switch (kind_) {
      case RateKind::kIndependent:
        break;
      case RateKind::kPerturbed:
        d.assign(slots_.begin() + slot_begin_[s], slots_.begin() + slot_begin_[s + 1]);
        break;
      case RateKind::kPolynomial: {
        const std::uint32_t tb = slot_begin_[s];
        d.assign(slots_.begin() + term_begin_[tb], slots_.begin() + term_begin_[tb + terms_.size()]);
        break;
      }
      case RateKind::kGlauber:
        for (std::uint32_t t = translate_begin_[s]; t < translate_begin_[s + 1]; ++t) {
          const auto& tr = translates_[t];
          d.insert(d.end(), slots_.begin() + tr.first, slots_.begin() + tr.first + potential_.shapes()[tr.shape].size());
        }
        break;
    }
    std::sort(d.begin(), d.end());
    d.erase(std::unique(d.begin(), d.end()), d.end());
  }
  std::vector<std::vector<int>> inf(static_cast<std::size_t>(n));
  range_ = 0;
  dep_.clear();
  dep_begin_.clear();
  for (int i = 0; i < n; ++i) {
    dep_begin_.push_back(static_cast<std::uint32_t>(dep_.size()));
    for (int j : dep[static_cast<std::size_t>(i)]) {
      dep_.push_back(j);
      inf[static_cast<std::size_t>(j)].push_back(i);
      range_ = std::max(range_, torus_.distance(i, j));
    }
  }
  dep_begin_.push_back(static_cast<std::uint32_t>(dep_.size()));
  inf_.clear();
  inf_begin_.clear();
  for (int j = 0; j < n; ++j) {
    inf_begin_.push_back(static_cast<std::uint32_t>(inf_.size()));
    inf_.insert(inf_.end(), inf[static_cast<std::size_t>(j)].begin(), inf[static_cast<std::size_t>(j)].end());
  }
  inf_begin_.push_back(static_cast<std::uint32_t>(inf_.size()));
}

std::string RateModel::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case RateKind::kIndependent:
      os << "independent(r=" << constant_ << ")";
      break;
    case RateKind::kGlauber:
      os << "glauber(" << potential_.shapes().size() << " shapes)";
      break;
    case RateKind::kPerturbed:
      os << "perturbed(" << eps_.offsets.size() << "-site eps)";
      break;
    case RateKind::kPolynomial:
      os << "polynomial(" << terms_.size() << " terms)";
      break;
  }
  os << " on " << torus_.to_string();
  return os.str();
}

// --------------------------------------------------------------- reports

namespace {

inline constexpr int kDependenceCap = 24;

// Calls visit(a, up_of) for every assignment a of the dependence set of
// `site`, where up_of(a) yields the spin lookup for that assignment.
template <class Visit>
void for_each_local_assignment(const RateModel& rates, int site, Visit&& visit) {
  const auto dep = rates.dependence(site);
  if (static_cast<int>(dep.size()) > kDependenceCap) {
    throw CapacityError("rate dependence set too large for exhaustive enumeration");
  }
  std::vector<int> slot(static_cast<std::size_t>(rates.sites()), -1);
  for (std::size_t k = 0; k < dep.size(); ++k) slot[static_cast<std::size_t>(dep[k])] = static_cast<int>(k);
  const auto up_of = [&slot](std::size_t assignment) {
    return [&slot, assignment](int j) {
      const int k = slot[static_cast<std::size_t>(j)];
      return k >= 0 && ((assignment >> k) & 1u) != 0;
    };
  };
  const std::size_t count = std::size_t{1} << dep.size();
  for (std::size_t a = 0; a < count; ++a) visit(a, up_of);
}

}  // namespace

RateReport validate_conditions(const RateModel& rates) {
  RateReport rep;
  rep.min_rate = std::numeric_limits<double>::infinity();
  rep.max_rate = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < rates.sites(); ++i) {
    for_each_local_assignment(rates, i, [&](std::size_t a, const auto& make_up) {
      const double c = rates.rate(i, make_up(a));
      rep.min_rate = std::min(rep.min_rate, c);
      rep.max_rate = std::max(rep.max_rate, c);
      rep.eps_sup = std::max(rep.eps_sup, std::abs(c - 1.0));
    });
  }
  const GammaMatrix gamma = gamma_matrix(rates);
  rep.locality_sum = gamma.max_row_sum();
  rep.range = rates.range();
  rep.satisfies_A = rep.min_rate > 0.0 && std::isfinite(rep.locality_sum);
  rep.satisfies_C = rep.min_rate > 0.0;
  return rep;
}

GammaMatrix gamma_matrix(const RateModel& rates) {
  const int n = rates.sites();
  GammaMatrix g;
  g.n = n;
  g.rows.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto dep = rates.dependence(i);
    std::vector<double> best(dep.size(), -std::numeric_limits<double>::infinity());
    for_each_local_assignment(rates, i, [&](std::size_t a, const auto& make_up) {
      const double c = rates.rate(i, make_up(a));
      for (std::size_t k = 0; k < dep.size(); ++k) {
        const double cf = rates.rate(i, make_up(a ^ (std::size_t{1} << k)));
        best[k] = std::max(best[k], cf - c);
      }
    });
    for (std::size_t k = 0; k < dep.size(); ++k) {
      if (best[k] != 0.0) g.rows[static_cast<std::size_t>(i)].emplace_back(dep[k], best[k]);
    }
  }
  // Translation invariance: row i equals row 0 shifted by i.
  const Torus& torus = rates.torus();
  g.kernel.assign(static_cast<std::size_t>(n), 0.0);
  for (const auto& [j, v] : g.rows[0]) g.kernel[static_cast<std::size_t>(j)] = v;
  g.translation_invariant = true;
  for (int i = 0; i < n && g.translation_invariant; ++i) {
    const Point shift = torus.coordinates(i);
    std::vector<double> expect(static_cast<std::size_t>(n), 0.0);
    for (int k = 0; k < n; ++k) expect[static_cast<std::size_t>(torus.translate(k, shift))] = g.kernel[static_cast<std::size_t>(k)];
    std::vector<double> row(static_cast<std::size_t>(n), 0.0);
    for (const auto& [j, v] : g.rows[static_cast<std::size_t>(i)]) row[static_cast<std::size_t>(j)] = v;
    for (int k = 0; k < n; ++k) {
      if (std::abs(row[static_cast<std::size_t>(k)] - expect[static_cast<std::size_t>(k)]) > 1e-12) {
        g.translation_invariant = false;
        break;
      }
    }
  }
  if (!g.translation_invariant) g.kernel.clear();
  return g;
}

double GammaMatrix::at(int i, int j) const {
  for (const auto& [col, v] : rows[static_cast<std::size_t>(i)]) {
    if (col == j) return v;
  }
  return 0.0;
}

std::vector<double> GammaMatrix::dense() const {
  std::vector<double> out(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    for (const auto& [j, v] : rows[static_cast<std::size_t>(i)]) {
      out[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] = v;
    }
  }
  return out;
}

double GammaMatrix::max_row_sum() const {
  double best = 0.0;
  for (const auto& row : rows) {
    double s = 0.0;
    for (const auto& [j, v] : row) s += std::abs(v);
    best = std::max(best, s);
  }
  return best;
}

double GammaMatrix::max_col_sum() const {
  std::vector<double> cols(static_cast<std::size_t>(n), 0.0);
  for (const auto& row : rows) {
    for (const auto& [j, v] : row) cols[static_cast<std::size_t>(j)] += std::abs(v);
  }
  return cols.empty() ? 0.0 : *std::max_element(cols.begin(), cols.end());
}

Shape load_perturbation(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open perturbation file '" + path + "'");
  int dim = 0;
  auto shapes = parse_shape_lines(in, dim);
  if (shapes.size() != 1) throw ParseError("perturbation file must contain exactly one line");
  return shapes.front();
}

}  // namespace flipconc
