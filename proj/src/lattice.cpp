#include "flipconc/lattice.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <sstream>

#include "flipconc/errors.hpp"

namespace flipconc {
namespace {

int wrap(int x, int side) {
  const int r = x % side;
  return r < 0 ? r + side : r;
}

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view text, std::string_view what) {
  std::string buf(trim(text));
  try {
    std::size_t used = 0;
    const double v = std::stod(buf, &used);
    if (used != buf.size()) throw ParseError("");
    return v;
  } catch (const std::exception&) {
    throw ParseError("cannot parse " + std::string(what) + " from '" + buf + "'");
  }
}

}  // namespace

// ---------------------------------------------------------------- Torus

Torus::Torus(std::vector<int> sides) : sides_(std::move(sides)) {
  if (sides_.empty() || static_cast<int>(sides_.size()) > kMaxDimension) {
    throw DomainError("torus dimension must be between 1 and 3");
  }
  long long n = 1;
  for (int l : sides_) {
    if (l < 1) throw DomainError("torus side lengths must be positive");
    n *= l;
    if (n > std::numeric_limits<int>::max()) throw DomainError("torus too large");
  }
  sites_ = static_cast<int>(n);
}

Torus Torus::parse(std::string_view spec) {
  std::vector<int> sides;
  std::size_t start = 0;
  while (start <= spec.size()) {
    const auto end = spec.find('x', start);
    const auto part = trim(spec.substr(start, end == std::string_view::npos ? end : end - start));
    int v = 0;
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
    if (ec != std::errc{} || ptr != part.data() + part.size() || part.empty()) {
      throw ParseError("bad torus string '" + std::string(spec) + "'");
    }
    sides.push_back(v);
    if (end == std::string_view::npos) break;
    start = end + 1;
  }
  return Torus(std::move(sides));
}

Point Torus::coordinates(int site) const {
  if (site < 0 || site >= sites_) throw DomainError("site index out of range");
  Point p{};
  for (int k = 0; k < dimension(); ++k) {
    p[k] = site % sides_[k];
    site /= sides_[k];
  }
  return p;
}

int Torus::site(const Point& p) const {
  int index = 0;
  for (int k = dimension() - 1; k >= 0; --k) index = index * sides_[k] + wrap(p[k], sides_[k]);
  return index;
}

int Torus::translate(int s, const Point& offset) const {
  Point p = coordinates(s);
  for (int k = 0; k < dimension(); ++k) p[k] += offset[k];
  return site(p);
}

int Torus::distance(int a, int b) const {
  const Point pa = coordinates(a);
  const Point pb = coordinates(b);
  int d = 0;
  for (int k = 0; k < dimension(); ++k) {
    const int diff = wrap(pa[k] - pb[k], sides_[k]);
    d = std::max(d, std::min(diff, sides_[k] - diff));
  }
  return d;
}

std::string Torus::to_string() const {
  std::string out;
  for (std::size_t k = 0; k < sides_.size(); ++k) {
    if (k) out += 'x';
    out += std::to_string(sides_[k]);
  }
  return out;
}

// ---------------------------------------------------- SpinConfiguration

SpinConfiguration::SpinConfiguration(int sites, bool all_up)
    : sites_(sites), words_((static_cast<std::size_t>(std::max(sites, 1)) + 63) / 64, 0) {
  if (sites < 1) throw DomainError("configuration needs at least one site");
  if (all_up) {
    for (int i = 0; i < sites; ++i) set(i, true);
  }
}

SpinConfiguration SpinConfiguration::from_state(int sites, std::uint64_t bits) {
  if (sites > 64) throw DomainError("packed state only covers 64 sites");
  SpinConfiguration c(sites, false);
  if (sites < 64) bits &= (std::uint64_t{1} << sites) - 1;
  c.words_[0] = bits;
  return c;
}

SpinConfiguration SpinConfiguration::parse(int sites, std::string_view text) {
  text = trim(text);
  if (static_cast<int>(text.size()) != sites) {
    throw ParseError("configuration '" + std::string(text) + "' does not have " +
                     std::to_string(sites) + " sites");
  }
  SpinConfiguration c(sites, false);
  for (int i = 0; i < sites; ++i) {
    const char ch = text[static_cast<std::size_t>(i)];
    if (ch == '+' || ch == '1') {
      c.set(i, true);
    } else if (ch != '-' && ch != '0') {
      throw ParseError("bad spin character in configuration");
    }
  }
  return c;
}

void SpinConfiguration::set(int site, bool up_spin) {
  const std::uint64_t bit = std::uint64_t{1} << (site & 63);
  auto& w = words_[static_cast<std::size_t>(site) >> 6];
  w = up_spin ? (w | bit) : (w & ~bit);
}

std::uint64_t SpinConfiguration::state() const {
  if (sites_ > 64) throw DomainError("packed state only covers 64 sites");
  return words_[0];
}

std::string SpinConfiguration::to_string() const {
  std::string out(static_cast<std::size_t>(sites_), '-');
  for (int i = 0; i < sites_; ++i) {
    if (up(i)) out[static_cast<std::size_t>(i)] = '+';
  }
  return out;
}

SpinConfiguration flip(const SpinConfiguration& sigma, int site) {
  if (site < 0 || site >= sigma.size()) throw DomainError("flip: site index out of range");
  SpinConfiguration out = sigma;
  out.toggle(site);
  return out;
}

double monomial_eval(const SpinConfiguration& sigma, std::span<const int> sites) {
  int sign = 1;
  for (int i : sites) {
    if (i < 0 || i >= sigma.size()) throw DomainError("monomial site out of range");
    if (!sigma.up(i)) sign = -sign;
  }
  return sign;
}

// ----------------------------------------------------------- Observable

Observable Observable::constant(double c) { return from_table({}, {c}); }

Observable Observable::monomial(std::vector<int> sites, double coeff) {
  return from_terms({MonomialTerm{coeff, std::move(sites)}});
}

Observable Observable::from_terms(std::vector<MonomialTerm> terms) {
  std::vector<int> support;
  for (auto& t : terms) {
    std::sort(t.sites.begin(), t.sites.end());
    // sigma_i^2 = 1: repeated sites cancel in pairs.
    std::vector<int> reduced;
    for (std::size_t k = 0; k < t.sites.size();) {
      std::size_t m = k;
      while (m < t.sites.size() && t.sites[m] == t.sites[k]) ++m;
      if ((m - k) % 2 == 1) reduced.push_back(t.sites[k]);
      k = m;
    }
    t.sites = std::move(reduced);
    for (int s : t.sites) {
      if (s < 0) throw DomainError("negative site in monomial");
    }
    support.insert(support.end(), t.sites.begin(), t.sites.end());
  }
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());

  Observable f;
  f.support_ = support;
  if (static_cast<int>(support.size()) <= kTabulationCap) {
    const std::size_t rows = std::size_t{1} << support.size();
    f.table_.assign(rows, 0.0);
    for (const auto& t : terms) {
      std::uint64_t mask = 0;
      for (int s : t.sites) {
        const auto k = std::lower_bound(support.begin(), support.end(), s) - support.begin();
        mask |= std::uint64_t{1} << k;
      }
      // bit set = spin up; the monomial is -1 for every down spin in mask.
      for (std::size_t r = 0; r < rows; ++r) {
        const int downs = std::popcount(~r & mask);
        f.table_[r] += (downs % 2 == 0) ? t.coeff : -t.coeff;
      }
    }
  } else {
    f.terms_ = std::move(terms);
  }
  return f;
}

Observable Observable::from_table(std::vector<int> support, std::vector<double> table) {
  if (!std::is_sorted(support.begin(), support.end()) ||
      std::adjacent_find(support.begin(), support.end()) != support.end()) {
    throw DomainError("observable support must be sorted and distinct");
  }
  if (static_cast<int>(support.size()) > kTabulationCap) {
    throw CapacityError("observable support exceeds the tabulation cap");
  }
  if (table.size() != (std::size_t{1} << support.size())) {
    throw DomainError("observable table must have 2^|support| entries");
  }
  Observable f;
  f.support_ = std::move(support);
  f.table_ = std::move(table);
  return f;
}

Observable Observable::from_function(std::vector<int> support,
                                     const std::function<double(const SpinConfiguration&)>& fn,
                                     int sites) {
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  if (static_cast<int>(support.size()) > kTabulationCap) {
    throw CapacityError("observable support exceeds the tabulation cap");
  }
  std::vector<double> table(std::size_t{1} << support.size());
  SpinConfiguration sigma(sites, false);
  for (std::size_t r = 0; r < table.size(); ++r) {
    for (std::size_t k = 0; k < support.size(); ++k) sigma.set(support[k], (r >> k) & 1u);
    table[r] = fn(sigma);
  }
  return from_table(std::move(support), std::move(table));
}

std::span<const double> Observable::table() const {
  if (!tabulated()) throw CapacityError("observable is not tabulated");
  return table_;
}

double Observable::operator()(const SpinConfiguration& sigma) const {
  if (tabulated()) {
    std::size_t r = 0;
    for (std::size_t k = 0; k < support_.size(); ++k) {
      if (support_[k] >= sigma.size()) throw DomainError("observable support outside configuration");
      if (sigma.up(support_[k])) r |= std::size_t{1} << k;
    }
    return table_[r];
  }
  double v = 0.0;
  for (const auto& t : terms_) v += t.coeff * monomial_eval(sigma, t.sites);
  return v;
}

double Observable::on_state(std::uint64_t state) const {
  if (tabulated()) {
    std::size_t r = 0;
    for (std::size_t k = 0; k < support_.size(); ++k) r |= ((state >> support_[k]) & 1u) << k;
    return table_[r];
  }
  double v = 0.0;
  for (const auto& t : terms_) {
    int downs = 0;
    for (int s : t.sites) downs += !((state >> s) & 1u);
    v += (downs % 2 == 0) ? t.coeff : -t.coeff;
  }
  return v;
}

std::vector<double> Observable::state_vector(int sites) const {
  if (sites > 30) throw CapacityError("state vector over more than 2^30 states");
  if (!support_.empty() && support_.back() >= sites) {
    throw DomainError("observable support outside the torus");
  }
  const std::size_t n = std::size_t{1} << sites;
  std::vector<double> out(n);
  for (std::size_t s = 0; s < n; ++s) out[s] = on_state(s);
  return out;
}

Observable Observable::scaled(double lambda) const {
  Observable g = *this;
  for (auto& v : g.table_) v *= lambda;
  for (auto& t : g.terms_) t.coeff *= lambda;
  return g;
}

// ----------------------------------------------------------- Lipschitz

double discrete_gradient(const Observable& f, int site, const SpinConfiguration& sigma) {
  return f(flip(sigma, site)) - f(sigma);
}

LipschitzVector lipschitz_vector(const Observable& f, int sites, int cap) {
  const auto support = f.support();
  if (static_cast<int>(support.size()) > cap || !f.tabulated()) {
    throw CapacityError("support too large for an exhaustive Lipschitz sup");
  }
  if (!support.empty() && support.back() >= sites) {
    throw DomainError("observable support outside the torus");
  }
  LipschitzVector delta{std::vector<double>(static_cast<std::size_t>(sites), 0.0)};
  const auto table = f.table();
  for (std::size_t k = 0; k < support.size(); ++k) {
    const std::size_t bit = std::size_t{1} << k;
    double best = 0.0;
    for (std::size_t r = 0; r < table.size(); ++r) best = std::max(best, table[r ^ bit] - table[r]);
    delta.entries[static_cast<std::size_t>(support[k])] = best;
  }
  return delta;
}

LipschitzVector lipschitz_vector_states(std::span<const double> values, int sites) {
  if (values.size() != (std::size_t{1} << sites)) {
    throw DomainError("state vector length must be 2^sites");
  }
  LipschitzVector delta{std::vector<double>(static_cast<std::size_t>(sites), 0.0)};
  for (int i = 0; i < sites; ++i) {
    const std::size_t bit = std::size_t{1} << i;
    double best = 0.0;
    for (std::size_t s = 0; s < values.size(); ++s) best = std::max(best, values[s ^ bit] - values[s]);
    delta.entries[static_cast<std::size_t>(i)] = best;
  }
  return delta;
}

double lipschitz_norm(const LipschitzVector& delta, double p) {
  if (std::isnan(p) || p < 1.0) throw DomainError("lipschitz_norm requires p >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : delta.entries) m = std::max(m, v);
    return m;
  }
  double acc = 0.0;
  for (double v : delta.entries) acc += std::pow(v, p);
  return p == 2.0 ? std::sqrt(acc) : std::pow(acc, 1.0 / p);
}

// ------------------------------------------------------------------ I/O

std::vector<std::vector<MonomialTerm>> parse_monomial_expansions(std::istream& in) {
  std::vector<std::vector<MonomialTerm>> out(1);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    view = trim(view);
    if (view.empty()) continue;
    if (view == "---") {
      if (!out.back().empty()) out.emplace_back();
      continue;
    }
    const auto colon = view.find(':');
    if (colon == std::string_view::npos) {
      throw ParseError("line " + std::to_string(lineno) + ": expected 'coeff : sites'");
    }
    MonomialTerm term;
    term.coeff = parse_double(view.substr(0, colon), "coefficient");
    std::istringstream sites{std::string(view.substr(colon + 1))};
    std::string tok;
    while (sites >> tok) {
      int s = 0;
      const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), s);
      if (ec != std::errc{} || ptr != tok.data() + tok.size() || s < 0) {
        throw ParseError("line " + std::to_string(lineno) + ": bad site '" + tok + "'");
      }
      term.sites.push_back(s);
    }
    out.back().push_back(std::move(term));
  }
  if (out.back().empty()) out.pop_back();
  return out;
}

std::vector<Observable> load_observables(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open observable file '" + path + "'");
  std::vector<Observable> out;
  int index = 0;
  for (auto& terms : parse_monomial_expansions(in)) {
    out.push_back(Observable::from_terms(std::move(terms)));
    out.back().named(path + "#" + std::to_string(index++));
  }
  return out;
}

}  // namespace flipconc
