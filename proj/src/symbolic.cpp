#include "flipconc/symbolic.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include "flipconc/errors.hpp"
#include "flipconc/kernels.hpp"

namespace flipconc {
namespace {

Point parse_point_token(const std::string& tok) {
  Point p{};
  int k = 0;
  std::size_t start = 0;
  while (true) {
    const auto end = tok.find(',', start);
    const std::string part = tok.substr(start, end == std::string::npos ? std::string::npos : end - start);
    if (k >= kMaxDimension) throw ParseError("point '" + tok + "' has too many coordinates");
    const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), p[k]);
    if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size()) {
      throw ParseError("bad point '" + tok + "'");
    }
    ++k;
    if (end == std::string::npos) break;
    start = end + 1;
  }
  return p;
}

Rational abs_q(const Rational& q) { return q < 0 ? Rational(-q) : q; }

SetPolynomial apply_generator(const GeneratorSpec& g, const SetPolynomial& p) {
  SetPolynomial out;
  for (const auto& e : g.entries) out += apply_LB(e.shape, p).scaled(e.lambda);
  return out;
}

}  // namespace

SiteSet make_site_set(std::vector<Point> sites) {
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  return sites;
}

SiteSet symmetric_difference(const SiteSet& a, const SiteSet& b) {
  SiteSet out;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return out;
}

SiteSet translate(const SiteSet& a, const Point& by) {
  SiteSet out = a;
  for (auto& p : out) {
    for (int k = 0; k < kMaxDimension; ++k) p[k] += by[k];
  }
  return out;
}

SiteSet parse_site_set(const std::string& text) {
  std::string cleaned = text;
  std::istringstream in(cleaned);
  std::vector<Point> pts;
  std::string tok;
  // A lone comma list such as "0,1" is read as 1D sites {0, 1}.
  if (cleaned.find(' ') == std::string::npos && cleaned.find(',') != std::string::npos) {
    std::istringstream parts(cleaned);
    while (std::getline(parts, tok, ',')) {
      if (!tok.empty()) pts.push_back(parse_point_token(tok));
    }
    return make_site_set(std::move(pts));
  }
  while (in >> tok) pts.push_back(parse_point_token(tok));
  return make_site_set(std::move(pts));
}

Rational parse_rational(const std::string& raw) {
  std::string text = raw;
  text.erase(std::remove_if(text.begin(), text.end(), [](unsigned char c) { return std::isspace(c); }), text.end());
  if (text.empty()) throw ParseError("empty number");
  try {
    if (text.find('/') != std::string::npos) {
      Rational q(text);
      q.canonicalize();
      return q;
    }
    bool negative = false;
    std::size_t pos = 0;
    if (text[0] == '+' || text[0] == '-') {
      negative = text[0] == '-';
      pos = 1;
    }
    std::string mantissa = text.substr(pos);
    long exponent = 0;
    if (const auto e = mantissa.find_first_of("eE"); e != std::string::npos) {
      exponent = std::stol(mantissa.substr(e + 1));
      mantissa = mantissa.substr(0, e);
    }
    std::string digits;
    if (const auto dot = mantissa.find('.'); dot != std::string::npos) {
      digits = mantissa.substr(0, dot) + mantissa.substr(dot + 1);
      exponent -= static_cast<long>(mantissa.size() - dot - 1);
    } else {
      digits = mantissa;
    }
    if (digits.empty() || !std::all_of(digits.begin(), digits.end(), [](unsigned char c) { return std::isdigit(c); })) {
      throw ParseError("bad number '" + raw + "'");
    }
    mpz_class num(digits);
    mpz_class den = 1;
    mpz_class ten = 10;
    if (exponent >= 0) {
      mpz_pow_ui(ten.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(exponent));
      num *= ten;
    } else {
      mpz_pow_ui(den.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(-exponent));
    }
    Rational q(num, den);
    q.canonicalize();
    return negative ? Rational(-q) : q;
  } catch (const ParseError&) {
    throw;
  } catch (const std::exception&) {
    throw ParseError("bad number '" + raw + "'");
  }
}

// -------------------------------------------------------- SetPolynomial

SetPolynomial SetPolynomial::monomial(SiteSet a, Rational coeff) {
  SetPolynomial p;
  p.add(make_site_set(std::move(a)), coeff);
  return p;
}

void SetPolynomial::add(const SiteSet& a, const Rational& coeff) {
  if (coeff == 0) return;
  auto [it, inserted] = terms_.try_emplace(a, coeff);
  if (!inserted) {
    it->second += coeff;
    if (it->second == 0) terms_.erase(it);
  }
}

SetPolynomial& SetPolynomial::operator+=(const SetPolynomial& other) {
  for (const auto& [set, c] : other.terms_) add(set, c);
  return *this;
}

SetPolynomial SetPolynomial::scaled(const Rational& s) const {
  SetPolynomial out;
  if (s == 0) return out;
  for (const auto& [set, c] : terms_) out.terms_.emplace(set, c * s);
  return out;
}

Rational SetPolynomial::coefficient(const SiteSet& a) const {
  const auto it = terms_.find(a);
  return it == terms_.end() ? Rational(0) : it->second;
}

SiteSet SetPolynomial::support() const {
  std::vector<Point> all;
  for (const auto& [set, c] : terms_) all.insert(all.end(), set.begin(), set.end());
  return make_site_set(std::move(all));
}

Rational SetPolynomial::l1_norm() const {
  Rational s = 0;
  for (const auto& [set, c] : terms_) s += abs_q(c);
  return s;
}

SupNorm sup_norm(const SetPolynomial& p, int cap) {
  if (p.is_zero()) return {Rational(0), true};
  const SiteSet support = p.support();
  const Rational l1 = p.l1_norm();
  if (static_cast<int>(support.size()) > cap) return {l1, false};
  mpz_class den = 1;
  for (const auto& [set, c] : p.terms()) mpz_lcm(den.get_mpz_t(), den.get_mpz_t(), c.get_den_mpz_t());
  const Rational scaled_l1 = l1 * den;
  if (cmp(scaled_l1, Rational(mpz_class(1) << 62)) >= 0) return {l1, false};
  std::vector<std::int64_t> v(std::size_t{1} << support.size(), 0);
  for (const auto& [set, c] : p.terms()) {
    std::size_t mask = 0;
    for (const auto& pt : set) {
      const auto k = std::lower_bound(support.begin(), support.end(), pt) - support.begin();
      mask |= std::size_t{1} << k;
    }
    const mpz_class ci = c.get_num() * (den / c.get_den());
    v[mask] += ci.get_si();
  }
  kernels::active().walsh_hadamard_i64(v);
  std::int64_t best = 0;
  for (auto x : v) best = std::max(best, x < 0 ? -x : x);
  Rational out(mpz_class(static_cast<long>(best)), den);
  out.canonicalize();
  return {out, true};
}

SetPolynomial apply_LB(const SiteSet& b, const SetPolynomial& p) {
  SetPolynomial out;
  for (const auto& [a, c] : p.terms()) {
    const Rational coeff = -2 * c;
    for (const auto& i : a) out.add(symmetric_difference(translate(b, i), a), coeff);
  }
  return out;
}

Rational chain_bound(const std::vector<SiteSet>& chain, const SiteSet& a) {
  Rational bound = 1;
  long partial = static_cast<long>(a.size());
  for (std::size_t k = 0; k < chain.size(); ++k) {
    bound *= 2 * partial;
    partial += static_cast<long>(chain[k].size());
  }
  return bound;
}

ChainResult apply_chain(const std::vector<SiteSet>& chain, const SiteSet& a) {
  if (chain.empty()) throw DomainError("operator chain must have at least one factor");
  SetPolynomial p = SetPolynomial::monomial(a);
  for (const auto& b : chain) {
    p = apply_LB(make_site_set(b), p);
    if (p.size() > kTermCap) throw CapacityError("operator chain exceeds the term cap");
  }
  ChainResult r{p, sup_norm(p), p.l1_norm(), chain_bound(chain, a)};
  return r;
}

// -------------------------------------------------------- GeneratorSpec

int GeneratorSpec::K() const {
  int k = 0;
  for (const auto& e : entries) k = std::max(k, static_cast<int>(e.shape.size()));
  return k;
}

Rational GeneratorSpec::M() const {
  Rational m = 0;
  for (const auto& e : entries) m = std::max(m, abs_q(e.lambda));
  return m;
}

GeneratorSpec GeneratorSpec::parse(std::istream& in) {
  GeneratorSpec g;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto colon = line.find(':');
    if (colon == std::string::npos) {
      throw ParseError("generator line " + std::to_string(lineno) + ": expected 'lambda : sites'");
    }
    Entry e;
    e.lambda = parse_rational(line.substr(0, colon));
    std::istringstream sites(line.substr(colon + 1));
    std::vector<Point> pts;
    std::string tok;
    while (sites >> tok) pts.push_back(parse_point_token(tok));
    e.shape = make_site_set(std::move(pts));
    for (const auto& other : g.entries) {
      if (other.shape == e.shape) throw ParseError("generator line " + std::to_string(lineno) + ": repeated shape");
    }
    g.entries.push_back(std::move(e));
  }
  if (g.entries.empty()) throw ParseError("generator file has no shapes");
  return g;
}

GeneratorSpec GeneratorSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open generator file '" + path + "'");
  return parse(in);
}

RateModel GeneratorSpec::rates(const Torus& torus) const {
  std::vector<RateTerm> terms;
  for (const auto& e : entries) terms.push_back(RateTerm{e.shape, e.lambda.get_d()});
  return RateModel::polynomial(torus, std::move(terms));
}

Rational power_bound(const GeneratorSpec& g, int n, const SiteSet& a) {
  const Rational base = 2 * g.M() * g.count() * static_cast<long>(a.size() + static_cast<std::size_t>(g.K()));
  Rational b = 1;
  for (int k = 1; k <= n; ++k) b *= base * k;
  return b;
}

ChainResult apply_generator_power(const GeneratorSpec& g, int n, const SiteSet& a, int cap) {
  if (n < 0) throw DomainError("generator power must be nonnegative");
  if (n > cap) throw CapacityError("generator power exceeds the configured cap");
  SetPolynomial p = SetPolynomial::monomial(a);
  for (int k = 0; k < n; ++k) {
    p = apply_generator(g, p);
    if (p.size() > kTermCap) throw CapacityError("generator power exceeds the term cap");
  }
  return ChainResult{p, sup_norm(p), p.l1_norm(), power_bound(g, n, a)};
}

double analyticity_radius(const GeneratorSpec& g, const SiteSet& a) {
  if (g.count() < 1) throw DomainError("generator has no terms");
  const double denom =
      2.0 * g.M().get_d() * g.count() * static_cast<double>(a.size() + static_cast<std::size_t>(g.K()));
  return denom == 0.0 ? INFINITY : 1.0 / denom;
}

TruncatedSeries truncated_series(const GeneratorSpec& g, double t, const SiteSet& a, int n_max) {
  const double t0 = analyticity_radius(g, a);
  if (!(t >= 0.0) || !(t < t0)) throw DomainError("series time must lie in [0, t0)");
  if (n_max < 0 || n_max > kPowerCap) throw CapacityError("series order exceeds the power cap");
  TruncatedSeries out;
  SetPolynomial p = SetPolynomial::monomial(a);
  double weight = 1.0;
  for (int n = 0; n <= n_max; ++n) {
    if (n > 0) {
      p = apply_generator(g, p);
      weight *= t / n;
      if (p.size() > kTermCap) throw CapacityError("series exceeds the term cap");
    }
    for (const auto& [set, c] : p.terms()) out.coefficients[set] += weight * c.get_d();
  }
  for (auto it = out.coefficients.begin(); it != out.coefficients.end();) {
    it = it->second == 0.0 ? out.coefficients.erase(it) : std::next(it);
  }
  const double q = std::isinf(t0) ? 0.0 : t / t0;
  out.remainder_bound = std::pow(q, n_max + 1) / (1.0 - q);
  return out;
}

// ------------------------------------------------------ infinite range

TailMeasure TailMeasure::dirac0(double scale) { return {Kind::kDirac0, scale, 0.0, {}}; }
TailMeasure TailMeasure::geometric(double rate, double scale) { return {Kind::kGeometric, scale, rate, {}}; }
TailMeasure TailMeasure::poisson(double mean, double scale) { return {Kind::kPoisson, scale, mean, {}}; }
TailMeasure TailMeasure::from_table(std::vector<double> values) {
  for (double v : values) {
    if (v < 0.0) throw DomainError("tail measure must be nonnegative");
  }
  return {Kind::kTable, 1.0, 0.0, std::move(values)};
}

double TailMeasure::operator()(int k) const {
  if (k < 0) return 0.0;
  switch (kind) {
    case Kind::kDirac0:
      return k == 0 ? scale : 0.0;
    case Kind::kGeometric:
      return scale * std::exp(-rate * k);
    case Kind::kPoisson:
      return scale * std::exp(-rate + k * std::log(rate) - std::lgamma(k + 1.0));
    case Kind::kTable:
      return static_cast<std::size_t>(k) < table.size() ? scale * table[static_cast<std::size_t>(k)] : 0.0;
  }
  return 0.0;
}

TailMeasure TailMeasure::scaled(double s) const {
  if (s < 0.0) throw DomainError("tail measure scale must be nonnegative");
  TailMeasure out = *this;
  out.scale *= s;
  return out;
}

double TailMeasure::laplace(double u) const {
  switch (kind) {
    case Kind::kDirac0:
      return scale;
    case Kind::kGeometric:
      if (u >= rate) throw DomainError("F(u) diverges: u must be below the geometric decay rate");
      return scale / (1.0 - std::exp(u - rate));
    case Kind::kPoisson:
      return scale * std::exp(rate * (std::exp(u) - 1.0));
    case Kind::kTable: {
      double f = 0.0;
      for (std::size_t k = 0; k < table.size(); ++k) f += std::exp(u * static_cast<double>(k)) * table[k];
      return scale * f;
    }
  }
  return 0.0;
}

double factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return f;
}

InfiniteRangeBound infinite_range_bound(const TailMeasure& psi, double c, double u, int a_size, int n, int k_max) {
  if (!(u > 0.0)) throw DomainError("u must be positive");
  if (n < 1) throw DomainError("n must be at least 1");
  InfiniteRangeBound r;
  r.F = psi.laplace(u);
  if (!std::isfinite(r.F)) throw DomainError("F(u) diverges");
  r.kappa = 2.0 * c * a_size * r.F / u;
  r.prefactor = std::exp(u);
  r.rhs = r.prefactor * factorial(n) * std::pow(r.kappa, n);
  r.lemma_rhs = r.prefactor * factorial(n) * std::pow(r.F / u, n);
  // dp[s] = sum over k_1..k_j with k_1+...+k_j = s of
  // prod_{l<=j} (1 + k_1 + ... + k_l) psi(k_l).
  std::vector<double> weights(static_cast<std::size_t>(k_max) + 1);
  for (int k = 0; k <= k_max; ++k) weights[static_cast<std::size_t>(k)] = psi(k);
  std::vector<double> dp{1.0};
  for (int j = 1; j <= n; ++j) {
    std::vector<double> next(dp.size() + static_cast<std::size_t>(k_max), 0.0);
    for (std::size_t s = 0; s < dp.size(); ++s) {
      if (dp[s] == 0.0) continue;
      for (int k = 0; k <= k_max; ++k) {
        const std::size_t s2 = s + static_cast<std::size_t>(k);
        next[s2] += dp[s] * weights[static_cast<std::size_t>(k)] * (1.0 + static_cast<double>(s2));
      }
    }
    dp.swap(next);
  }
  for (double v : dp) r.lemma_lhs += v;
  r.lemma_holds = r.lemma_lhs <= r.lemma_rhs;
  return r;
}

}  // namespace flipconc
