#include "flipconc/concentration.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

#include "flipconc/errors.hpp"
#include "flipconc/lipschitz_flow.hpp"
#include "flipconc/parallel.hpp"
#include "flipconc/rng.hpp"

namespace flipconc {
namespace {

double delta_sq_of(const Observable& f, int sites) {
  const double d = lipschitz_norm(lipschitz_vector(f, sites), 2.0);
  return d * d;
}

double delta_sq_values(std::span<const double> values, int sites) {
  const double d = lipschitz_norm(lipschitz_vector_states(values, sites), 2.0);
  return d * d;
}

bool within(double lhs, double bound) { return lhs <= bound + kBoundSlack * std::max(1.0, std::abs(bound)); }

// In-place unnormalized Walsh-Hadamard transform on doubles.
void walsh_hadamard(std::vector<double>& v) {
  const std::size_t n = v.size();
  for (std::size_t h = 1; h < n; h <<= 1) {
    for (std::size_t base = 0; base < n; base += 2 * h) {
      for (std::size_t j = base; j < base + h; ++j) {
        const double a = v[j];
        const double b = v[j + h];
        v[j] = a + b;
        v[j + h] = a - b;
      }
    }
  }
}

std::string set_name(const std::vector<int>& sites) {
  std::ostringstream os;
  os << "s{";
  for (std::size_t k = 0; k < sites.size(); ++k) os << (k ? "," : "") << sites[k];
  os << "}";
  return os.str();
}

// Per start: empirical ratio ingredients for one family member.
struct MemberData {
  std::vector<double> table;
  double delta_sq = 0.0;
  std::size_t rows = 0;
};

std::vector<MemberData> member_data(const FunctionFamily& family, int sites) {
  std::vector<MemberData> out;
  for (const auto& f : family.members) {
    if (!f.tabulated()) throw CapacityError("family member support exceeds the tabulation cap");
    MemberData m;
    m.table.assign(f.table().begin(), f.table().end());
    m.rows = m.table.size();
    m.delta_sq = delta_sq_of(f, sites);
    out.push_back(std::move(m));
  }
  return out;
}

}  // namespace

// ------------------------------------------------------------- families

FunctionFamily monomial_family(int sites, int k_max) {
  if (k_max < 1) throw DomainError("monomial family needs k_max >= 1");
  FunctionFamily fam;
  fam.description = "monomials:" + std::to_string(k_max);
  std::vector<int> current;
  const std::function<void(int)> rec = [&](int start) {
    if (!current.empty()) fam.members.push_back(Observable::monomial(current).named(set_name(current)));
    if (static_cast<int>(current.size()) == k_max) return;
    for (int s = start; s < sites; ++s) {
      current.push_back(s);
      rec(s + 1);
      current.pop_back();
    }
  };
  rec(0);
  std::stable_sort(fam.members.begin(), fam.members.end(),
                   [](const Observable& a, const Observable& b) { return a.support().size() < b.support().size(); });
  return fam;
}

FunctionFamily random_family(int sites, int count, std::uint64_t seed) {
  if (count < 1) throw DomainError("random family needs at least one member");
  if (sites < 1) throw DomainError("random family needs a nonempty torus");
  FunctionFamily fam;
  fam.description = "random:" + std::to_string(count) + ":" + std::to_string(seed);
  for (int m = 0; m < count; ++m) {
    CounterRng rng(seed, static_cast<std::uint64_t>(m));
    const int support_size = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min(4, sites))));
    std::vector<int> support;
    while (static_cast<int>(support.size()) < support_size) {
      const int s = static_cast<int>(rng.below(static_cast<std::uint64_t>(sites)));
      if (std::find(support.begin(), support.end(), s) == support.end()) support.push_back(s);
    }
    std::sort(support.begin(), support.end());
    const int nterms = 1 + static_cast<int>(rng.below(3));
    std::vector<MonomialTerm> terms;
    std::vector<std::uint64_t> used;
    for (int k = 0; k < nterms; ++k) {
      const std::uint64_t mask = 1 + rng.below((std::uint64_t{1} << support_size) - 1);
      if (std::find(used.begin(), used.end(), mask) != used.end()) continue;
      used.push_back(mask);
      MonomialTerm t;
      t.coeff = 2.0 * rng.uniform() - 1.0;
      if (t.coeff == 0.0) t.coeff = 0.5;
      for (int b = 0; b < support_size; ++b) {
        if ((mask >> b) & 1u) t.sites.push_back(support[static_cast<std::size_t>(b)]);
      }
      terms.push_back(std::move(t));
    }
    fam.members.push_back(Observable::from_terms(std::move(terms)).named("random#" + std::to_string(m)));
  }
  return fam;
}

FunctionFamily file_family(const std::string& path) {
  FunctionFamily fam;
  fam.description = "file:" + path;
  fam.members = load_observables(path);
  if (fam.members.empty()) throw ParseError("observable file '" + path + "' defines no functions");
  return fam;
}

FunctionFamily parse_family(const std::string& spec, int sites) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  const std::string rest = colon == std::string::npos ? "" : spec.substr(colon + 1);
  try {
    if (kind == "monomials") return monomial_family(sites, rest.empty() ? 3 : std::stoi(rest));
    if (kind == "random") {
      const auto c2 = rest.find(':');
      const int n = std::stoi(rest.substr(0, c2));
      const std::uint64_t seed = c2 == std::string::npos ? 1 : std::stoull(rest.substr(c2 + 1));
      return random_family(sites, n, seed);
    }
  } catch (const std::invalid_argument&) {
    throw ParseError("bad family string '" + spec + "'");
  } catch (const std::out_of_range&) {
    throw ParseError("bad family string '" + spec + "'");
  }
  if (kind == "file" && !rest.empty()) return file_family(rest);
  throw ParseError("family must be monomials:K, random:N:SEED or file:PATH, got '" + spec + "'");
}

std::vector<double> lambda_grid(double base, int k_lo, int k_hi) {
  if (!(base > 0.0) || k_lo > k_hi) throw DomainError("lambda grid needs base > 0 and k_lo <= k_hi");
  std::vector<double> out;
  for (int k = k_hi; k >= k_lo; --k) out.push_back(-std::ldexp(base, k));
  for (int k = k_lo; k <= k_hi; ++k) out.push_back(std::ldexp(base, k));
  return out;
}

// ------------------------------------------------------ single measures

double centered_log_mgf(std::span<const double> p, std::span<const double> g) {
  double mean = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) mean += p[s] * g[s];
  double shift = -std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < p.size(); ++s) {
    if (p[s] > 0.0) shift = std::max(shift, g[s] - mean);
  }
  if (!std::isfinite(shift)) return 0.0;
  double acc = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) {
    if (p[s] > 0.0) acc += p[s] * std::exp(g[s] - mean - shift);
  }
  return std::log(acc) + shift;
}

double variance(std::span<const double> p, std::span<const double> g) {
  double mean = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) mean += p[s] * g[s];
  double v = 0.0;
  for (std::size_t s = 0; s < p.size(); ++s) v += p[s] * (g[s] - mean) * (g[s] - mean);
  return v;
}

double gcb_ratio_values(std::span<const double> p, std::span<const double> f, double delta_sq) {
  if (!(delta_sq > 0.0)) throw DomainError("GCB ratio undefined for a function with zero Lipschitz norm");
  return centered_log_mgf(p, f) / delta_sq;
}

double gcb_ratio(const DistributionVector& mu, const Observable& f) {
  const auto values = f.state_vector(mu.sites());
  return gcb_ratio_values(mu.probabilities(), values, delta_sq_of(f, mu.sites()));
}

ConcentrationReport empirical_gcb_constant(const DistributionVector& mu, const FunctionFamily& family,
                                           const std::vector<double>& lambdas, std::optional<double> reference) {
  if (family.members.empty()) throw DomainError("function family is empty");
  ConcentrationReport rep;
  rep.reference = reference;
  rep.best = -std::numeric_limits<double>::infinity();
  const int n = mu.sites();
  std::vector<std::vector<FunctionRatio>> per(family.members.size());
  parallel_for(family.members.size(), [&](std::size_t k) {
    const Observable& f = family.members[k];
    const auto values = f.state_vector(n);
    const double d2 = delta_sq_of(f, n);
    if (!(d2 > 0.0)) throw DomainError("family member '" + f.name() + "' is constant");
    std::vector<double> g(values.size());
    for (double lam : lambdas) {
      for (std::size_t s = 0; s < g.size(); ++s) g[s] = lam * values[s];
      FunctionRatio row{f.name(), lam, lam * lam * d2, 0.0, 0.0, true};
      row.value = centered_log_mgf(mu.probabilities(), g);
      row.ratio = row.value / row.delta_sq;
      if (reference) row.ok = within(row.ratio, *reference);
      per[k].push_back(row);
    }
  });
  for (auto& rows : per) {
    for (auto& row : rows) {
      if (row.ratio > rep.best) {
        rep.best = row.ratio;
        rep.argmax = row.name;
        rep.argmax_lambda = row.lambda;
      }
      if (!row.ok) ++rep.violations;
      rep.rows.push_back(std::move(row));
    }
  }
  return rep;
}

std::vector<TailRow> check_subgaussian_tail(const DistributionVector& mu, const Observable& f,
                                            const std::vector<double>& u_grid, double C) {
  if (!(C > 0.0)) throw DomainError("tail check needs C > 0");
  const auto values = f.state_vector(mu.sites());
  const double d2 = delta_sq_of(f, mu.sites());
  const double mean = mu.expectation(values);
  std::vector<TailRow> out;
  for (double u : u_grid) {
    TailRow row;
    row.u = u;
    for (std::size_t s = 0; s < values.size(); ++s) {
      if (values[s] - mean >= u - 1e-12) row.probability += mu[s];
    }
    row.bound = u <= 0.0 ? 1.0 : (d2 > 0.0 ? std::exp(-u * u / (4.0 * C * d2)) : 0.0);
    if (u <= 0.0 && d2 == 0.0) row.bound = 1.0;
    row.ok = within(row.probability, row.bound);
    out.push_back(row);
  }
  return out;
}

ConcentrationReport check_uvb(const DistributionVector& mu, const FunctionFamily& family, std::optional<double> C) {
  if (family.members.empty()) throw DomainError("function family is empty");
  ConcentrationReport rep;
  rep.reference = C;
  rep.best = -std::numeric_limits<double>::infinity();
  for (const auto& f : family.members) {
    const auto values = f.state_vector(mu.sites());
    FunctionRatio row{f.name(), 1.0, delta_sq_of(f, mu.sites()), 0.0, 0.0, true};
    if (!(row.delta_sq > 0.0)) throw DomainError("family member '" + f.name() + "' is constant");
    row.value = variance(mu.probabilities(), values);
    row.ratio = row.value / row.delta_sq;
    if (C) row.ok = within(row.ratio, *C);
    if (row.ratio > rep.best) {
      rep.best = row.ratio;
      rep.argmax = row.name;
    }
    if (!row.ok) ++rep.violations;
    rep.rows.push_back(row);
  }
  return rep;
}

WeakGcbReport weak_gcb_check(const DistributionVector& mu, const Observable& f, double C) {
  const auto values = f.state_vector(mu.sites());
  const double d2 = delta_sq_of(f, mu.sites());
  if (!(d2 > 0.0)) throw DomainError("weak GCB check needs a nonconstant function");
  const double mean = mu.expectation(values);
  const auto p = mu.probabilities();
  WeakGcbReport rep;
  rep.var_ratio = variance(p, values) / d2;
  // E e^{lambda X} - 1 as a sum of expm1 terms keeps precision at small lambda.
  const auto mgf_minus_one = [&](double lam) {
    double acc = 0.0;
    for (std::size_t s = 0; s < values.size(); ++s) acc += p[s] * std::expm1(lam * (values[s] - mean));
    return acc;
  };
  for (int k = 1; k <= 12; ++k) {
    const double lam = std::ldexp(1.0, -k);
    rep.limit_scan.emplace_back(lam, 2.0 * mgf_minus_one(lam) / (lam * lam * d2));
  }
  rep.limit_estimate = rep.limit_scan.back().second;
  rep.forward_consistent = std::abs(rep.limit_estimate - rep.var_ratio) <= 1e-3 * std::max(rep.var_ratio, 1e-12) + 1e-12;
  double sup = 0.0;
  for (double v : values) sup = std::max(sup, std::abs(v));
  rep.lambda0 = 1.0 / (2.0 * sup + 1.0);
  rep.window_constant = std::exp(1.0) * C / 2.0;
  rep.window_holds = true;
  for (int k = 0; k <= 20; ++k) {
    for (double sign : {-1.0, 1.0}) {
      const double lam = sign * rep.lambda0 * std::ldexp(1.0, -k);
      const double lhs = std::log1p(mgf_minus_one(lam));
      const double rhs = rep.window_constant * lam * lam * d2;
      if (!within(lhs, rhs)) rep.window_holds = false;
    }
  }
  rep.holds = rep.window_holds && within(rep.var_ratio, C);
  return rep;
}

CarreDuChamp carre_du_champ(const RateModel& rates, const Observable& f) {
  std::vector<int> support(f.support().begin(), f.support().end());
  for (int i : f.support()) {
    const auto dep = rates.dependence(i);
    support.insert(support.end(), dep.begin(), dep.end());
  }
  std::sort(support.begin(), support.end());
  support.erase(std::unique(support.begin(), support.end()), support.end());
  if (static_cast<int>(support.size()) > kTabulationCap) throw CapacityError("carre du champ support too large");
  std::vector<double> table(std::size_t{1} << support.size());
  SpinConfiguration sigma(rates.sites(), false);
  double c_hat = 0.0;
  for (std::size_t r = 0; r < table.size(); ++r) {
    for (std::size_t k = 0; k < support.size(); ++k) sigma.set(support[k], ((r >> k) & 1u) != 0);
    const double base = f(sigma);
    double acc = 0.0;
    for (int i : f.support()) {
      sigma.toggle(i);
      const double diff = f(sigma) - base;
      sigma.toggle(i);
      acc += rates.rate(i, sigma) * diff * diff;
    }
    table[r] = acc;
  }
  const RateReport rep = validate_conditions(rates);
  c_hat = rep.max_rate;
  CarreDuChamp out{Observable::from_table(support, table), 0.0, 0.0, true};
  for (double v : table) out.sup = std::max(out.sup, std::abs(v));
  out.bound = c_hat * delta_sq_of(f, rates.sites());
  out.holds = within(out.sup, out.bound);
  return out;
}

PsiIdentity psi_identity_check(const ExactSemigroup& sg, double t, std::span<const double> f, int steps) {
  if (!(t >= 0.0)) throw DomainError("psi identity needs t >= 0");
  if (steps < 2 || steps % 2 != 0) throw DomainError("Simpson quadrature needs an even number of steps");
  const std::size_t n = f.size();
  const GeneratorMatrix& q = sg.generator();
  PsiIdentity out;
  std::vector<double> f2(n);
  for (std::size_t s = 0; s < n; ++s) f2[s] = f[s] * f[s];
  out.direct = sg.apply_function(t, f2);
  const auto sf = sg.apply_function(t, f);
  for (std::size_t s = 0; s < n; ++s) out.direct[s] -= sf[s] * sf[s];

  const auto gamma_of = [&](const std::vector<double>& u) {
    std::vector<double> g(n, 0.0);
    for (int i = 0; i < q.sites(); ++i) {
      const auto c = q.site_rates(i);
      const std::size_t bit = std::size_t{1} << i;
      for (std::size_t s = 0; s < n; ++s) {
        const double d = u[s ^ bit] - u[s];
        g[s] += c[s] * d * d;
      }
    }
    return g;
  };
  // Horner form of sum_j w_j S((steps - j) h) Gamma_j.
  const double h = t / steps;
  std::vector<double> u(f.begin(), f.end());
  std::vector<double> acc = gamma_of(u);
  for (int j = 1; j <= steps; ++j) {
    u = sg.apply_function(h, u);
    acc = sg.apply_function(h, acc);
    const double w = (j == steps) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    const auto g = gamma_of(u);
    for (std::size_t s = 0; s < n; ++s) acc[s] += w * g[s];
  }
  out.integral.resize(n);
  for (std::size_t s = 0; s < n; ++s) {
    out.integral[s] = acc[s] * h / 3.0;
    out.gap = std::max(out.gap, std::abs(out.integral[s] - out.direct[s]));
  }
  return out;
}

PsiIdentity psi_identity_check(const RateModel& rates, double t, const Observable& f, int steps) {
  const ExactSemigroup sg(rates);
  const auto values = f.state_vector(rates.sites());
  return psi_identity_check(sg, t, values, steps);
}

// ------------------------------------------------------ FamilyPropagator

FamilyPropagator::FamilyPropagator(const ExactSemigroup& sg, const FunctionFamily& family)
    : sg_(&sg), family_(&family) {
  std::map<std::vector<int>, std::size_t> index;
  const int n = sg.sites();
  for (const auto& f : family.members) {
    const auto support = f.support();
    if (static_cast<int>(support.size()) > 16) throw CapacityError("family member support too large to propagate");
    for (int s : support) {
      if (s >= n) throw DomainError("family member reads a site outside the torus");
    }
    Member m;
    const std::size_t subsets = std::size_t{1} << support.size();
    for (std::size_t mask = 0; mask < subsets; ++mask) {
      std::vector<int> key;
      std::uint64_t bits = 0;
      for (std::size_t k = 0; k < support.size(); ++k) {
        if ((mask >> k) & 1u) {
          key.push_back(support[k]);
          bits |= std::uint64_t{1} << support[k];
        }
      }
      auto [it, inserted] = index.try_emplace(key, vectors_.size());
      if (inserted) {
        std::vector<double> v(sg.states());
        for (std::size_t s = 0; s < v.size(); ++s) v[s] = (std::popcount(~s & bits) % 2 == 0) ? 1.0 : -1.0;
        vectors_.push_back(std::move(v));
      }
      m.subset_vectors.push_back(it->second);
    }
    members_.push_back(std::move(m));
  }
}

void FamilyPropagator::advance_to(double t) {
  if (t < t_) throw DomainError("family propagator only moves forward in time");
  const double dt = t - t_;
  if (dt > 0.0) {
    parallel_for(vectors_.size(), [&](std::size_t k) { vectors_[k] = sg_->apply_function(dt, vectors_[k]); });
  }
  t_ = t;
}

void FamilyPropagator::start_marginal(std::size_t member, std::uint64_t start, std::span<double> out) const {
  const auto& m = members_[member];
  const std::size_t rows = m.subset_vectors.size();
  std::vector<double> w(rows);
  for (std::size_t mask = 0; mask < rows; ++mask) w[mask] = vectors_[m.subset_vectors[mask]][start];
  walsh_hadamard(w);
  const double scale = 1.0 / static_cast<double>(rows);
  const std::size_t full = rows - 1;
  for (std::size_t r = 0; r < rows; ++r) out[r] = std::max(0.0, w[~r & full] * scale);
}

std::vector<double> FamilyPropagator::evolved_function(std::size_t member) const {
  const auto& m = members_[member];
  const auto table = family_->members[member].table();
  const std::size_t rows = m.subset_vectors.size();
  const std::size_t full = rows - 1;
  std::vector<double> coeff(rows);
  for (std::size_t y = 0; y < rows; ++y) coeff[y] = table[~y & full];
  walsh_hadamard(coeff);
  std::vector<double> out(sg_->states(), 0.0);
  for (std::size_t mask = 0; mask < rows; ++mask) {
    const double c = coeff[mask] / static_cast<double>(rows);
    if (c == 0.0) continue;
    const auto& v = vectors_[m.subset_vectors[mask]];
    for (std::size_t s = 0; s < out.size(); ++s) out[s] += c * v[s];
  }
  return out;
}

// --------------------------------------------------- conservation checks

Theorem31Report theorem31_check(const ExactSemigroup& sg, const RateModel& rates, double t,
                                const DistributionVector& mu, double C_mu, const FunctionFamily& family,
                                const std::vector<double>& lambdas) {
  if (family.members.empty()) throw DomainError("function family is empty");
  const int n = sg.sites();
  const std::size_t states = sg.states();
  Theorem31Report rep;
  rep.t = t;
  rep.C_mu = C_mu;
  const ContractionConstants cc = contraction_constants(rates, t);
  rep.K = cc.K;
  rep.alpha = cc.alpha;
  FamilyPropagator prop(sg, family);
  prop.advance_to(t);
  const auto data = member_data(family, n);

  // D_t: max over starts of the empirical constant of delta_sigma S(t).
  std::vector<double> start_best(states, 0.0);
  parallel_for(states, [&](std::size_t start) {
    double best = 0.0;
    std::vector<double> p, g;
    for (std::size_t k = 0; k < data.size(); ++k) {
      const auto& d = data[k];
      if (!(d.delta_sq > 0.0)) throw DomainError("family member '" + family.members[k].name() + "' is constant");
      p.resize(d.rows);
      g.resize(d.rows);
      prop.start_marginal(k, start, p);
      for (double lam : lambdas) {
        for (std::size_t r = 0; r < d.rows; ++r) g[r] = lam * d.table[r];
        best = std::max(best, centered_log_mgf(p, g) / (lam * lam * d.delta_sq));
      }
    }
    start_best[start] = best;
  });
  rep.D_t = *std::max_element(start_best.begin(), start_best.end());
  rep.composite = rep.D_t + rep.K * C_mu;
  if (rep.alpha) rep.decay_bound = std::exp(-*rep.alpha * t) * C_mu + rep.D_t;

  const auto mut = sg.evolve_vector(t, mu.probabilities());
  rep.C_hat = 0.0;
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto values = family.members[k].state_vector(n);
    const auto sf = prop.evolved_function(k);
    const double d2_sf = delta_sq_values(sf, n);
    std::vector<double> g(states);
    for (double lam : lambdas) {
      for (std::size_t s = 0; s < states; ++s) g[s] = lam * values[s];
      BoundRow row{family.members[k].name(), lam, centered_log_mgf(mut, g), 0.0, true};
      row.bound = rep.D_t * lam * lam * data[k].delta_sq + C_mu * lam * lam * d2_sf;
      row.ok = within(row.lhs, row.bound);
      rep.C_hat = std::max(rep.C_hat, row.lhs / (lam * lam * data[k].delta_sq));
      if (!row.ok) ++rep.violations;
      rep.rows.push_back(row);
    }
  }
  if (!within(rep.C_hat, rep.composite)) ++rep.violations;
  if (rep.decay_bound && !within(rep.C_hat, *rep.decay_bound)) ++rep.violations;
  return rep;
}

Theorem52Report theorem52_check(const ExactSemigroup& sg, const RateModel& rates, double t,
                                const DistributionVector& mu, double C, const FunctionFamily& family) {
  if (family.members.empty()) throw DomainError("function family is empty");
  const int n = sg.sites();
  const std::size_t states = sg.states();
  Theorem52Report rep;
  rep.t = t;
  rep.C = C;
  rep.K = contraction_constants(rates, t).K;
  FamilyPropagator prop(sg, family);
  prop.advance_to(t);
  const auto data = member_data(family, n);
  std::vector<double> start_const(states, 0.0);
  parallel_for(states, [&](std::size_t start) {
    double best = 0.0;
    std::vector<double> p;
    for (std::size_t k = 0; k < data.size(); ++k) {
      p.resize(data[k].rows);
      prop.start_marginal(k, start, p);
      best = std::max(best, variance(p, data[k].table) / data[k].delta_sq);
    }
    start_const[start] = best;
  });
  for (std::size_t s = 0; s < states; ++s) {
    rep.mean_start_constant += mu[s] * start_const[s];
    rep.max_start_constant = std::max(rep.max_start_constant, start_const[s]);
  }
  rep.composite = C * rep.K + rep.mean_start_constant;
  const auto mut = sg.evolve_vector(t, mu.probabilities());
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto values = family.members[k].state_vector(n);
    BoundRow row{family.members[k].name(), 1.0, variance(mut, values), rep.composite * data[k].delta_sq, true};
    row.ok = within(row.lhs, row.bound);
    rep.C_hat = std::max(rep.C_hat, row.lhs / data[k].delta_sq);
    if (!row.ok) ++rep.violations;
    rep.rows.push_back(row);
  }
  return rep;
}

double k_squared_integral(const RateModel& rates, double t, double tol) {
  if (!(t >= 0.0)) throw DomainError("integration time must be nonnegative");
  if (t == 0.0) return 0.0;
  const int n = rates.sites();
  const auto gamma = gamma_dense(rates, GammaConvention::kLiteral);
  const auto k2 = [&](double s) {
    const double k = squared_operator_norm(matrix_exponential(gamma, n, s), n);
    return k * k;
  };
  const std::function<double(double, double, double, double, double, double, int)> adapt =
      [&](double a, double b, double fa, double fm, double fb, double whole, int depth) {
        const double m = 0.5 * (a + b);
        const double lm = k2(0.5 * (a + m));
        const double rm = k2(0.5 * (m + b));
        const double left = (m - a) / 6.0 * (fa + 4.0 * lm + fm);
        const double right = (b - m) / 6.0 * (fm + 4.0 * rm + fb);
        if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol) {
          return left + right + (left + right - whole) / 15.0;
        }
        return adapt(a, m, fa, lm, fm, left, depth - 1) + adapt(m, b, fm, rm, fb, right, depth - 1);
      };
  const double fa = k2(0.0);
  const double fm = k2(0.5 * t);
  const double fb = k2(t);
  return adapt(0.0, t, fa, fm, fb, t / 6.0 * (fa + 4.0 * fm + fb), 30);
}

double theorem53_constant(const RateModel& rates, double t) {
  const double c_hat = validate_conditions(rates).max_rate;
  return 2.0 * c_hat * k_squared_integral(rates, t);
}

Theorem53Report theorem53_check(const ExactSemigroup& sg, const RateModel& rates, double t,
                                const FunctionFamily& family) {
  const int n = sg.sites();
  const std::size_t states = sg.states();
  Theorem53Report rep;
  rep.t = t;
  rep.c_hat = validate_conditions(rates).max_rate;
  rep.integral = k_squared_integral(rates, t);
  rep.C = 2.0 * rep.c_hat * rep.integral;
  FamilyPropagator prop(sg, family);
  prop.advance_to(t);
  const auto data = member_data(family, n);
  std::vector<double> start_max(states, 0.0);
  std::vector<std::size_t> start_viol(states, 0);
  parallel_for(states, [&](std::size_t start) {
    std::vector<double> p;
    for (std::size_t k = 0; k < data.size(); ++k) {
      p.resize(data[k].rows);
      prop.start_marginal(k, start, p);
      const double v = variance(p, data[k].table);
      start_max[start] = std::max(start_max[start], v / data[k].delta_sq);
      if (!within(v, rep.C * data[k].delta_sq)) ++start_viol[start];
    }
  });
  for (std::size_t s = 0; s < states; ++s) {
    rep.max_ratio = std::max(rep.max_ratio, start_max[s]);
    rep.violations += start_viol[s];
  }
  return rep;
}

// ----------------------------------------------------------- (H, J, C)

NamedFunction builtin_function(const std::string& name) {
  if (name == "square") return {name, [](double x) { return x * x; }};
  if (name == "exp") return {name, [](double x) { return std::exp(x); }};
  if (name == "exp_square") return {name, [](double x) { return std::exp(x * x); }};
  if (name.rfind("abs:", 0) == 0) {
    double p = 0.0;
    try {
      p = std::stod(name.substr(4));
    } catch (const std::exception&) {
      throw ParseError("bad exponent in '" + name + "'");
    }
    if (!(p >= 1.0)) throw DomainError("abs:P needs P >= 1");
    return {name, [p](double x) { return std::pow(std::abs(x), p); }};
  }
  throw ParseError("unknown function '" + name + "' (square, exp, exp_square, abs:P)");
}

void HJCSpec::validate() const {
  const double h = 1e-2;
  for (int k = -400; k <= 400; ++k) {
    const double x = k * h;
    const double second = H.fn(x - h) - 2.0 * H.fn(x) + H.fn(x + h);
    if (second < -1e-9 * std::max(1.0, std::abs(H.fn(x)))) throw DomainError("H = " + H.name + " is not convex");
  }
  double prev = J.fn(0.0);
  if (prev < 0.0) throw DomainError("J = " + J.name + " must be nonnegative");
  for (int k = 1; k <= 800; ++k) {
    const double v = J.fn(k * h);
    if (v < prev) throw DomainError("J = " + J.name + " is not increasing");
    prev = v;
  }
}

double HJCSpec::invert_J(double y) const {
  if (y <= J.fn(0.0)) return 0.0;
  double hi = 1.0;
  while (J.fn(hi) < y) {
    hi *= 2.0;
    if (hi > 1e12) throw DomainError("J does not reach the requested value");
  }
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (J.fn(mid) >= y ? hi : lo) = mid;
  }
  return hi;
}

std::optional<double> uniform_product_hjc_constant(const HJCSpec& spec) {
  if (spec.H.name == "square" && spec.J.name == "square") return 0.5;
  if (spec.H.name == "exp" && spec.J.name == "exp_square") return std::sqrt(0.125);
  if (spec.H.name.rfind("abs:", 0) == 0 && spec.H.name == spec.J.name) {
    const double p = std::stod(spec.H.name.substr(4));
    return std::pow(p * std::tgamma(p / 2.0), 1.0 / p) / std::sqrt(2.0);
  }
  return std::nullopt;
}

HJCReport hjc_check(const ExactSemigroup& sg, const RateModel& rates, double t, const DistributionVector& mu,
                    double C_mu, const HJCSpec& spec, const FunctionFamily& family) {
  spec.validate();
  const int n = sg.sites();
  const std::size_t states = sg.states();
  HJCReport rep;
  rep.t = t;
  rep.C_mu = C_mu;
  rep.K = contraction_constants(rates, t).K;
  FamilyPropagator prop(sg, family);
  prop.advance_to(t);
  const auto data = member_data(family, n);
  std::vector<double> start_const(states, 0.0);
  parallel_for(states, [&](std::size_t start) {
    std::vector<double> p;
    double best = 0.0;
    for (std::size_t k = 0; k < data.size(); ++k) {
      const auto& d = data[k];
      p.resize(d.rows);
      prop.start_marginal(k, start, p);
      double mean = 0.0;
      for (std::size_t r = 0; r < d.rows; ++r) mean += p[r] * d.table[r];
      double lhs = 0.0;
      for (std::size_t r = 0; r < d.rows; ++r) lhs += p[r] * spec.H.fn(2.0 * (d.table[r] - mean));
      best = std::max(best, spec.invert_J(lhs) / (2.0 * std::sqrt(d.delta_sq)));
    }
    start_const[start] = best;
  });
  rep.C = *std::max_element(start_const.begin(), start_const.end());
  const auto mut = sg.evolve_vector(t, mu.probabilities());
  for (std::size_t k = 0; k < data.size(); ++k) {
    const auto values = family.members[k].state_vector(n);
    double mean = 0.0;
    for (std::size_t s = 0; s < states; ++s) mean += mut[s] * values[s];
    double lhs = 0.0;
    for (std::size_t s = 0; s < states; ++s) lhs += mut[s] * spec.H.fn(values[s] - mean);
    const double arg = (2.0 * rep.C + 2.0 * C_mu * std::sqrt(rep.K)) * std::sqrt(data[k].delta_sq);
    BoundRow row{family.members[k].name(), 1.0, lhs, spec.J.fn(arg), true};
    row.ok = within(row.lhs, row.bound);
    if (!row.ok) ++rep.violations;
    rep.rows.push_back(row);
  }
  return rep;
}

}  // namespace flipconc
