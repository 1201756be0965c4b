#include "cli/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "flipconc/concentration.hpp"
#include "flipconc/entropy.hpp"
#include "flipconc/errors.hpp"
#include "flipconc/generator.hpp"
#include "flipconc/lipschitz_flow.hpp"
#include "flipconc/mc.hpp"
#include "flipconc/parallel.hpp"
#include "flipconc/symbolic.hpp"

namespace flipconc::cli {

namespace {

std::pair<std::string, std::string> split_kind(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) return {spec, ""};
  return {spec.substr(0, colon), spec.substr(colon + 1)};
}

double parse_double(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    throw ParseError("bad number '" + text + "' in " + what);
  }
  if (used != text.size() || !std::isfinite(v)) throw ParseError("bad number '" + text + "' in " + what);
  return v;
}

const std::string& require_file(const std::string& path) {
  if (path.empty() || !std::filesystem::is_regular_file(path)) throw ParseError("file not found: '" + path + "'");
  return path;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

void check_exact_size(const ExperimentConfig& cfg, int sites) {
  if (sites > cfg.exact_cap || sites > kExactCap) {
    throw CapacityError("torus has " + std::to_string(sites) + " sites, above the exact cap " +
                        std::to_string(std::min(cfg.exact_cap, kExactCap)));
  }
}

struct Setup {
  Torus torus;
  RateModel rates;
};

Setup exact_setup(const ExperimentConfig& cfg) {
  Torus torus = resolve_torus(cfg);
  check_exact_size(cfg, torus.site_count());
  RateModel rates = resolve_rates(cfg, torus);
  return {torus, rates};
}

/// Certified constant of the initial measure for the requested inequality.
double initial_constant(const ExperimentConfig& cfg, double uniform_value, const char* what) {
  if (cfg.constant > 0.0) return cfg.constant;
  if (initial_is_uniform_product(cfg)) return uniform_value;
  throw ParseError(std::string("a certified ") + what +
                   " constant of the initial measure is required (--constant); it is only known for "
                   "the uniform product measure");
}

// ------------------------------------------------------------ dobrushin

CommandResult cmd_dobrushin(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto U = resolve_potential(cfg);
  if (!U) throw ParseError("dobrushin needs --potential FILE or --rates glauber:FILE");
  CommandResult res;
  const double c = dobrushin_constant(*U);
  const double norm = summability_norm(*U);
  std::optional<double> C;
  if (c < 1.0) C = gcb_constant_dobrushin(*U);
  res.report["c_U"] = c;
  res.report["summability_norm"] = norm;
  res.report["gcb_constant"] = optional_json(C);
  ctx.out << "c_U summability C\n" << fmt(c) << ' ' << fmt(norm) << ' ' << (C ? fmt(*C) : "inf") << '\n';

  const Torus torus = resolve_torus(cfg);
  if (C && torus.site_count() <= std::min(cfg.exact_cap, kGibbsEnumerationCap) &&
      torus.dimension() == U->dimension()) {
    const auto mu = gibbs_measure(*U, Volume::whole(torus), BoundaryCondition::periodic()).distribution;
    const auto family = parse_family(cfg.family, torus.site_count());
    const auto rep = empirical_gcb_constant(mu, family, lambda_grid(), C);
    res.report["empirical"] = {{"torus", torus.to_string()},
                               {"C_hat", rep.best},
                               {"argmax", rep.argmax},
                               {"argmax_lambda", rep.argmax_lambda},
                               {"violations", rep.violations}};
    res.table.header = {"name", "lambda", "delta_sq", "value", "ratio", "ok"};
    for (const auto& r : rep.rows) res.table.rows.push_back({r.name, r.lambda, r.delta_sq, r.value, r.ratio, r.ok});
    res.violations = rep.violations;
    res.inequality = "Gaussian concentration of the Gibbs measure: log E exp(f - E f) <= C ||delta f||_2^2 "
                     "with C = 1/(2(1 - c(U))^2)";
    ctx.out << "empirical C_hat on torus " << torus.to_string() << ": " << fmt(rep.best) << '\n';
  }
  return res;
}

// --------------------------------------------------------------- evolve

CommandResult cmd_evolve(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  auto [torus, rates] = exact_setup(cfg);
  if (cfg.steps < 1) throw DomainError("steps must be at least 1");
  if (!(cfg.t1 >= cfg.t0) || cfg.t0 < 0.0) throw DomainError("need 0 <= t0 <= t1");
  const auto mu = resolve_initial(cfg, rates);
  const auto obs = resolve_observables(cfg, torus.site_count());
  const ExactSemigroup sg(rates, cfg.exact_cap);
  const auto pi = stationary_distribution(rates);

  CommandResult res;
  Json names = Json::array();
  for (const auto& f : obs) names.push_back(f.name());
  res.report["observables"] = names;
  res.report["series"] = Json::array();
  res.table.header = {"t", "tv"};
  for (const auto& f : obs) res.table.header.push_back(f.name());
  double previous_tv = 2.0;
  for (int k = 0; k <= cfg.steps; ++k) {
    const double t = cfg.t0 + (cfg.t1 - cfg.t0) * k / cfg.steps;
    const auto mut = sg.evolve(t, mu);
    const double tv = total_variation(mut, pi);
    Json ex = Json::array();
    std::vector<Json> row{t, tv};
    for (const auto& f : obs) {
      const double e = mut.expectation(f);
      ex.push_back(e);
      row.push_back(e);
    }
    res.report["series"].push_back({{"t", t}, {"tv", tv}, {"expectations", ex}});
    res.table.rows.push_back(row);
    if (tv > previous_tv + 1e-12) ++res.violations;
    previous_tv = tv;
    ctx.out << fmt(t) << ' ' << fmt(tv) << '\n';
  }
  res.inequality = "contraction toward the stationary law: TV(mu S(t), pi) nonincreasing in t";
  return res;
}

// ------------------------------------------------------ gcb-scan / uvb

CommandResult scan(const Context& ctx, bool gcb) {
  const auto& cfg = ctx.cfg;
  auto [torus, rates] = exact_setup(cfg);
  const auto mu = resolve_initial(cfg, rates);
  const auto family = parse_family(cfg.family, torus.site_count());
  const auto times = parse_time_grid(cfg.t_grid);
  const ExactSemigroup sg(rates, cfg.exact_cap);

  std::optional<double> reference;
  if (cfg.constant > 0.0) {
    reference = cfg.constant;
  } else if (gcb && split_kind(cfg.init).first == "gibbs" && rates.kind() == RateKind::kGlauber) {
    if (dobrushin_constant(rates.potential()) < 1.0) reference = gcb_constant_dobrushin(rates.potential());
  }

  CommandResult res;
  res.report["reference"] = optional_json(reference);
  res.report["series"] = Json::array();
  res.table.header = {"t", "name", "lambda", "delta_sq", "value", "ratio", "ok"};
  for (double t : times) {
    const auto mut = sg.evolve(t, mu);
    const auto rep = gcb ? empirical_gcb_constant(mut, family, lambda_grid(), reference)
                         : check_uvb(mut, family, reference);
    Json rec = {{"t", t}, {"C_hat", rep.best}, {"argmax", rep.argmax}, {"violations", rep.violations}};
    if (gcb) rec["argmax_lambda"] = rep.argmax_lambda;
    if (reference) rec["reference"] = *reference;
    res.report["series"].push_back(rec);
    for (const auto& r : rep.rows) {
      res.table.rows.push_back({t, r.name, r.lambda, r.delta_sq, r.value, r.ratio, r.ok});
    }
    res.violations += rep.violations;
    ctx.out << fmt(t) << ' ' << fmt(rep.best) << (reference ? ' ' + fmt(*reference) : std::string()) << '\n';
  }
  res.inequality = gcb ? "Gaussian concentration bound: log E exp(f - E f) <= C ||delta f||_2^2"
                       : "uniform variance bound: Var(f) <= C ||delta f||_2^2";
  return res;
}

CommandResult cmd_gcb_scan(const Context& ctx) { return scan(ctx, true); }
CommandResult cmd_uvb_check(const Context& ctx) { return scan(ctx, false); }

// ------------------------------------------------------------- conserve

void add_bound_rows(CsvTable& table, double t, const std::vector<BoundRow>& rows) {
  for (const auto& r : rows) table.rows.push_back({t, r.name, r.lambda, r.lhs, r.bound, r.ok});
}

CommandResult cmd_conserve(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const std::string& which = cfg.theorem;
  if (which != "31" && which != "52" && which != "53" && which != "hjc") {
    throw ParseError("--theorem must be 31, 52, 53 or hjc, got '" + which + "'");
  }
  auto [torus, rates] = exact_setup(cfg);
  const auto family = parse_family(cfg.family, torus.site_count());
  const auto times = parse_time_grid(cfg.t_grid);
  const ExactSemigroup sg(rates, cfg.exact_cap);

  CommandResult res;
  res.report["kind"] = which == "hjc" ? "hjc" : "theorem" + which;
  res.report["series"] = Json::array();
  Json& series = res.report["series"];
  res.table.header = {"t", "name", "lambda", "lhs", "bound", "ok"};

  if (which == "31") {
    const auto mu = resolve_initial(cfg, rates);
    const double C_mu = initial_constant(cfg, 0.125, "Gaussian concentration");
    for (double t : times) {
      const auto r = theorem31_check(sg, rates, t, mu, C_mu, family);
      series.push_back({{"t", t},
                        {"D_t", r.D_t},
                        {"C_mu", r.C_mu},
                        {"K", r.K},
                        {"C_hat", r.C_hat},
                        {"composite", r.composite},
                        {"alpha", optional_json(r.alpha)},
                        {"decay_bound", optional_json(r.decay_bound)},
                        {"violations", r.violations}});
      add_bound_rows(res.table, t, r.rows);
      res.violations += r.violations;
      ctx.out << fmt(t) << ' ' << fmt(r.C_hat) << ' ' << fmt(r.composite) << '\n';
    }
    res.inequality = "Gaussian concentration under the dynamics: C_hat(mu S(t)) <= D_t + K(t) C_mu";
  } else if (which == "52") {
    const auto mu = resolve_initial(cfg, rates);
    const double C = initial_constant(cfg, 0.25, "uniform variance");
    for (double t : times) {
      const auto r = theorem52_check(sg, rates, t, mu, C, family);
      series.push_back({{"t", t},
                        {"C", r.C},
                        {"K", r.K},
                        {"mean_start_constant", r.mean_start_constant},
                        {"max_start_constant", r.max_start_constant},
                        {"composite", r.composite},
                        {"C_hat", r.C_hat},
                        {"violations", r.violations}});
      add_bound_rows(res.table, t, r.rows);
      res.violations += r.violations;
      ctx.out << fmt(t) << ' ' << fmt(r.C_hat) << ' ' << fmt(r.composite) << '\n';
    }
    res.inequality = "variance bound under the dynamics: Var_{mu S(t)}(f) <= (C K(t) + int C(sigma,t) dmu) "
                     "||delta f||_2^2";
  } else if (which == "53") {
    res.table.header = {"t", "c_hat", "integral", "C", "max_ratio", "violations"};
    for (double t : times) {
      const auto r = theorem53_check(sg, rates, t, family);
      series.push_back({{"t", t},
                        {"c_hat", r.c_hat},
                        {"integral", r.integral},
                        {"C", r.C},
                        {"max_ratio", r.max_ratio},
                        {"violations", r.violations}});
      res.table.rows.push_back({t, r.c_hat, r.integral, r.C, r.max_ratio, r.violations});
      res.violations += r.violations;
      ctx.out << fmt(t) << ' ' << fmt(r.max_ratio) << ' ' << fmt(r.C) << '\n';
    }
    res.inequality = "variance of the evolved Dirac measures: Var_{delta_sigma S(t)}(f) <= 2 c_hat "
                     "int_0^t K(s)^2 ds ||delta f||_2^2";
  } else {
    const auto comma = cfg.hjc.find(',');
    if (comma == std::string::npos) throw ParseError("--hjc must name two functions, e.g. square,square");
    HJCSpec spec{builtin_function(cfg.hjc.substr(0, comma)), builtin_function(cfg.hjc.substr(comma + 1))};
    spec.validate();
    std::optional<double> C_mu;
    if (cfg.constant > 0.0) {
      C_mu = cfg.constant;
    } else if (initial_is_uniform_product(cfg)) {
      C_mu = uniform_product_hjc_constant(spec);
    }
    if (!C_mu) throw ParseError("no certified (H,J) constant for this initial measure and pair; pass --constant");
    const auto mu = resolve_initial(cfg, rates);
    for (double t : times) {
      const auto r = hjc_check(sg, rates, t, mu, *C_mu, spec, family);
      double worst = 0.0;
      for (const auto& row : r.rows) {
        if (row.bound > 0.0) worst = std::max(worst, row.lhs / row.bound);
      }
      series.push_back({{"t", t},
                        {"C", r.C},
                        {"C_mu", r.C_mu},
                        {"K", r.K},
                        {"worst_fraction", worst},
                        {"limit", 1.0},
                        {"violations", r.violations}});
      add_bound_rows(res.table, t, r.rows);
      res.violations += r.violations;
      ctx.out << fmt(t) << ' ' << fmt(worst) << '\n';
    }
    res.inequality = "(H,J,C) inequality under the dynamics: E H(f - E f) <= J((2C + 2 C_mu sqrt K) ||delta f||_2)";
  }
  return res;
}

// ------------------------------------------------------------- symbolic

std::string rational_text(const Rational& q) { return q.get_str(); }

GeneratorSpec load_generator(const ExperimentConfig& cfg) {
  if (cfg.gen.empty()) throw ParseError("--gen FILE is required");
  return GeneratorSpec::load(require_file(cfg.gen));
}

CommandResult cmd_symbolic_bound(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto g = load_generator(cfg);
  const SiteSet a = parse_site_set(cfg.A);
  const int cap = std::min(cfg.symbolic_cap, kPowerCap);
  if (cfg.n < 1) throw DomainError("--n must be at least 1");
  if (cfg.n > cap) throw CapacityError("--n " + std::to_string(cfg.n) + " exceeds the power cap " + std::to_string(cap));
  CommandResult res;
  res.report["series"] = Json::array();
  res.table.header = {"n", "sup", "sup_exact", "exact", "l1", "bound", "ratio", "ok"};
  ctx.out << "n sup bound ratio\n";
  for (int n = 1; n <= cfg.n; ++n) {
    const auto r = apply_generator_power(g, n, a, cap);
    const bool ok = r.sup.value <= r.bound;
    const double sup = r.sup.value.get_d();
    const double bound = r.bound.get_d();
    const double ratio = bound > 0.0 ? sup / bound : 0.0;
    res.report["series"].push_back({{"n", n},
                                    {"sup", sup},
                                    {"sup_exact", rational_text(r.sup.value)},
                                    {"exact", r.sup.exact},
                                    {"l1", r.l1.get_d()},
                                    {"bound", bound},
                                    {"bound_exact", rational_text(r.bound)},
                                    {"ratio", ratio},
                                    {"ok", ok}});
    res.table.rows.push_back({n, sup, rational_text(r.sup.value), r.sup.exact, r.l1.get_d(), bound, ratio, ok});
    if (!ok) ++res.violations;
    ctx.out << n << ' ' << fmt(sup) << (r.sup.exact ? "" : " (l1)") << ' ' << fmt(bound) << ' ' << fmt(ratio)
            << '\n';
  }
  res.inequality = "generator power bound: ||L^n sigma_A||_inf <= 2^n M^n |B|^n (|A|+K)^n n!";
  return res;
}

CommandResult cmd_radius(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const auto g = load_generator(cfg);
  const SiteSet a = parse_site_set(cfg.A);
  const double t0 = analyticity_radius(g, a);
  CommandResult res;
  res.report["t0"] = t0;
  res.report["K"] = g.K();
  res.report["M"] = g.M().get_d();
  res.report["shape_count"] = g.count();
  res.report["A_size"] = a.size();
  if (cfg.n >= 0) {
    const auto series = truncated_series(g, 0.5 * t0, a, cfg.n);
    res.report["half_radius_remainder_bound"] = series.remainder_bound;
    res.report["series_order"] = cfg.n;
  }
  ctx.out << "t0 = " << fmt(t0) << '\n';
  return res;
}

// ----------------------------------------------------------------- nogo

CommandResult cmd_nogo(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  auto [torus, rates] = exact_setup(cfg);
  if (rates.kind() != RateKind::kGlauber) throw ParseError("nogo needs Glauber rates (--rates glauber:FILE)");
  const Potential& U = rates.potential();
  const std::vector<int> sides(torus.sides().begin(), torus.sides().end());
  const auto mu_plus = boundary_gibbs_on_box(U, sides, true);
  const auto mu_minus = boundary_gibbs_on_box(U, sides, false);
  auto times = parse_time_grid(cfg.t_grid);
  if (!std::is_sorted(times.begin(), times.end())) throw DomainError("nogo needs an increasing t-grid");
  const auto family = parse_family(cfg.family, torus.site_count());
  const auto windows = centred_windows(torus, 0, std::max(0, cfg.window));
  const ExactSemigroup sg(rates, cfg.exact_cap);
  const auto rep = nogo_experiment(sg, mu_plus, mu_minus, times, family, windows);

  CommandResult res;
  res.report["window_sizes"] = rep.window_sizes;
  res.report["degenerate_input"] = rep.degenerate_input;
  res.report["summary"] = rep.summary;
  res.report["series"] = Json::array();
  res.table.header = {"t", "tv", "H", "window", "H_per_site", "gcb_hat"};
  double previous = INFINITY;
  for (const auto& row : rep.rows) {
    res.report["series"].push_back({{"t", row.t},
                                    {"tv", row.tv},
                                    {"H", row.entropy},
                                    {"H_per_site", row.entropy_profile},
                                    {"gcb_hat", row.gcb_hat}});
    for (std::size_t w = 0; w < row.entropy_profile.size(); ++w) {
      res.table.rows.push_back({row.t, row.tv, row.entropy, rep.window_sizes[w], row.entropy_profile[w], row.gcb_hat});
    }
    if (row.entropy > previous + 1e-10) ++res.violations;
    previous = row.entropy;
    ctx.out << fmt(row.t) << ' ' << fmt(row.tv) << ' ' << fmt(row.entropy) << ' ' << fmt(row.gcb_hat) << '\n';
  }
  ctx.out << rep.summary << '\n';
  res.inequality = "data processing: H(mu S(t) | nu S(t)) nonincreasing in t";
  return res;
}

// ------------------------------------------------------------------- mc

StateSampler resolve_sampler(const ExperimentConfig& cfg, const RateModel& rates) {
  const int n = rates.sites();
  const auto [kind, rest] = split_kind(cfg.init);
  if (kind == "product") return StateSampler::product(n, rest.empty() ? 0.5 : parse_double(rest, "init"));
  if (kind == "dirac") return StateSampler::dirac(SpinConfiguration::parse(n, rest));
  return StateSampler::from_distribution(resolve_initial(cfg, rates));
}

CommandResult cmd_mc(const Context& ctx) {
  const auto& cfg = ctx.cfg;
  const Torus torus = resolve_torus(cfg);
  const RateModel rates = resolve_rates(cfg, torus);
  const int n = torus.site_count();
  if (n > 64) throw CapacityError("mc supports at most 64 sites");
  if (cfg.replicas < 3) throw DomainError("--replicas must be at least 3");
  const auto reps = static_cast<std::size_t>(cfg.replicas);
  const auto sampler = resolve_sampler(cfg, rates);
  const auto obs = resolve_observables(cfg, n);
  const auto times = parse_time_grid(cfg.t);
  const bool exact = n <= std::min(cfg.exact_cap, 16);
  std::optional<ExactSemigroup> sg;
  std::optional<DistributionVector> mu;
  if (exact) {
    sg.emplace(rates, cfg.exact_cap);
    mu = resolve_initial(cfg, rates);
  }

  CommandResult res;
  res.report["torus"] = torus.to_string();
  res.report["replicas"] = reps;
  res.report["seed"] = cfg.seed;
  res.report["records"] = Json::array();
  res.table.header = {"t", "observable", "estimator", "value", "standard_error", "samples", "exact", "z"};
  for (double t : times) {
    std::vector<SpinConfiguration> finals(reps, SpinConfiguration(n));
    parallel_for(reps, [&](std::size_t r) {
      CounterRng rng(cfg.seed, r);
      SpinConfiguration sigma = sampler.draw(rng);
      run_until(rates, sigma, t, rng);
      finals[r] = sigma;
    });
    std::optional<DistributionVector> mut;
    if (exact) mut = sg->evolve(t, *mu);
    for (const auto& f : obs) {
      std::vector<double> x(reps);
      for (std::size_t r = 0; r < reps; ++r) x[r] = f(finals[r]);
      std::vector<double> fv;
      if (mut) fv = f.state_vector(n);
      for (auto kind : {EstimatorKind::kMean, EstimatorKind::kVariance, EstimatorKind::kExponentialMoment}) {
        EnsembleEstimate e = kind == EstimatorKind::kMean       ? mean_estimate(x)
                             : kind == EstimatorKind::kVariance ? variance_estimate(x)
                                                                : exponential_moment_estimate(x);
        e.seed = cfg.seed;
        Json rec = {{"t", t},
                    {"observable", f.name()},
                    {"estimator", to_string(kind)},
                    {"value", e.value},
                    {"raw", e.raw},
                    {"standard_error", e.standard_error},
                    {"samples", e.samples},
                    {"seed", e.seed}};
        Json exact_v = nullptr;
        Json z = nullptr;
        if (mut) {
          const auto p = mut->probabilities();
          const double v = kind == EstimatorKind::kMean       ? mut->expectation(fv)
                           : kind == EstimatorKind::kVariance ? variance(p, fv)
                                                              : centered_log_mgf(p, fv);
          exact_v = v;
          if (e.standard_error > 0.0) z = (e.value - v) / e.standard_error;
        }
        rec["exact"] = exact_v;
        rec["z"] = z;
        res.report["records"].push_back(rec);
        res.table.rows.push_back({t, f.name(), to_string(kind), e.value, e.standard_error, e.samples, exact_v, z});
        ctx.out << fmt(t) << ' ' << f.name() << ' ' << to_string(kind) << ' ' << fmt(e.value) << " +- "
                << fmt(e.standard_error) << '\n';
      }
    }
  }
  return res;
}

// ------------------------------------------------------------- selftest

struct Check {
  std::string name;
  bool ok = false;
  std::string detail;
};

Check check_spectral_law() {
  const RateModel rates = RateModel::independent(Torus({6}), 1.0);
  const std::vector<double> p = {0.9, 0.2, 0.6, 0.5, 0.35, 0.7};
  const auto mu = DistributionVector::product(p);
  const Observable f = Observable::monomial({0, 2, 5});
  double worst = 0.0;
  for (double t : {0.1, 0.5, 2.0}) {
    const auto mut = exact_semigroup_measure(rates, t, mu);
    worst = std::max(worst, std::abs(mut.expectation(f) - std::exp(-6.0 * t) * mu.expectation(f)));
  }
  return {"independent spectral law E sigma_A(t) = e^{-2|A|t} E sigma_A", worst < 1e-10, "max error " + fmt(worst)};
}

Check check_dobrushin() {
  const auto U = Potential::ising_nearest_neighbour(1, 0.2);
  const double c = dobrushin_constant(U);
  const double C = gcb_constant_dobrushin(U);
  const Torus torus({8});
  const auto mu = gibbs_measure(U, Volume::whole(torus), BoundaryCondition::periodic()).distribution;
  const auto rep = empirical_gcb_constant(mu, monomial_family(8, 2), lambda_grid(), C);
  const bool ok = std::abs(c - 0.4) < 1e-12 && rep.violations == 0;
  return {"Gibbs concentration below 1/(2(1-c(U))^2)", ok, "c = " + fmt(c) + ", C_hat = " + fmt(rep.best)};
}

Check check_generator_power() {
  GeneratorSpec g;
  g.entries.push_back({SiteSet{}, Rational(1)});
  g.entries.push_back({make_site_set({Point{1, 0, 0}}), Rational(3, 10)});
  const SiteSet a = make_site_set({Point{0, 0, 0}, Point{2, 0, 0}});
  bool ok = true;
  for (int n = 1; n <= 4; ++n) {
    const auto r = apply_generator_power(g, n, a);
    ok = ok && r.sup.value <= r.bound;
  }
  return {"generator power bound ||L^n sigma_A|| <= 2^n M^n |B|^n (|A|+K)^n n!", ok, "n <= 4"};
}

Check check_data_processing() {
  const Torus torus({6});
  const RateModel rates = RateModel::glauber(torus, Potential::ising_nearest_neighbour(1, 0.3));
  const ExactSemigroup sg(rates);
  const auto mu = DistributionVector::dirac(6, 0b101101);
  const auto nu = DistributionVector::product(6, 0.3);
  const auto rep = data_processing_check(sg, mu, nu, {0.0, 0.1, 0.3, 0.7, 1.5});
  return {"data processing H(mu S(t) | nu S(t)) nonincreasing", rep.monotone,
          "max increase " + fmt(rep.max_increase)};
}

Check check_psi_identity() {
  const Torus torus({5});
  const RateModel rates = RateModel::glauber(torus, Potential::ising_nearest_neighbour(1, 0.4));
  const Observable f = Observable::from_terms({{1.0, {0}}, {0.5, {1, 3}}});
  const auto r = psi_identity_check(rates, 0.7, f, 128);
  return {"variation of constants S(t)f^2 - (S(t)f)^2 = int S(t-s) Gamma(S(s)f) ds", r.gap < 1e-6,
          "gap " + fmt(r.gap)};
}

Check check_conservation() {
  const Torus torus({6});
  const RateModel rates = RateModel::independent(torus, 1.0);
  const ExactSemigroup sg(rates);
  const auto family = monomial_family(6, 2);
  std::size_t violations = 0;
  for (double t : {0.2, 1.0}) {
    violations += theorem31_check(sg, rates, t, DistributionVector::uniform(6), 0.125, family).violations;
  }
  return {"Gaussian concentration under independent flips C_hat <= D_t + K C_mu", violations == 0,
          std::to_string(violations) + " violations"};
}

Check check_combinatorial_lemma() {
  bool ok = true;
  for (int n = 1; n <= 3; ++n) ok = ok && infinite_range_bound(TailMeasure::geometric(2.0), 1.0, 1.0, 1, n).lemma_holds;
  return {"infinite range sum <= e^u n! u^-n F(u)^n", ok, "psi(k) = e^{-2k}, u = 1"};
}

Check check_monte_carlo() {
  const Torus torus({6});
  const RateModel rates = RateModel::glauber(torus, Potential::ising_nearest_neighbour(1, 0.3));
  const auto start = SpinConfiguration(6, true);
  const Observable f = Observable::monomial({0, 1});
  const auto e = ensemble_expectation(rates, StateSampler::dirac(start), 0.4, f, 4000, 7);
  const auto exact = exact_semigroup_measure(rates, 0.4, DistributionVector::dirac(6, start.state())).expectation(f);
  const double z = std::abs(e.value - exact) / e.standard_error;
  return {"Monte Carlo mean within 4 standard errors of the exact value", z < 4.0, "z = " + fmt(z)};
}

CommandResult cmd_selftest(const Context& ctx) {
  CommandResult res;
  const std::vector<Check (*)()> checks = {check_spectral_law,      check_dobrushin,     check_generator_power,
                                           check_data_processing,   check_psi_identity,  check_conservation,
                                           check_combinatorial_lemma, check_monte_carlo};
  res.report["checks"] = Json::array();
  res.table.header = {"check", "ok", "detail"};
  std::vector<std::string> failed;
  for (auto fn : checks) {
    const Check c = fn();
    res.report["checks"].push_back({{"name", c.name}, {"ok", c.ok}, {"detail", c.detail}});
    res.table.rows.push_back({c.name, c.ok, c.detail});
    ctx.out << (c.ok ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
    if (!c.ok) failed.push_back(c.name);
  }
  res.violations = failed.size();
  for (std::size_t k = 0; k < failed.size(); ++k) res.inequality += (k ? "; " : "") + failed[k];
  return res;
}

}  // namespace

// ---------------------------------------------------------- resolution

std::vector<double> parse_time_grid(const std::string& spec) {
  std::vector<double> times;
  const auto c1 = spec.find(':');
  if (c1 != std::string::npos) {
    const auto c2 = spec.find(':', c1 + 1);
    if (c2 == std::string::npos) throw ParseError("time grid 'A:B:N' needs three fields, got '" + spec + "'");
    const double a = parse_double(spec.substr(0, c1), "time grid");
    const double b = parse_double(spec.substr(c1 + 1, c2 - c1 - 1), "time grid");
    const std::string count = spec.substr(c2 + 1);
    int n = 0;
    try {
      std::size_t used = 0;
      n = std::stoi(count, &used);
      if (used != count.size()) n = 0;
    } catch (const std::exception&) {
      n = 0;
    }
    if (n < 1) throw ParseError("time grid point count must be a positive integer, got '" + count + "'");
    for (int k = 0; k < n; ++k) times.push_back(n == 1 ? a : a + (b - a) * k / (n - 1));
  } else {
    std::stringstream in(spec);
    std::string item;
    while (std::getline(in, item, ',')) {
      const auto b = item.find_first_not_of(" \t");
      const auto e = item.find_last_not_of(" \t");
      if (b == std::string::npos) throw ParseError("empty entry in time grid '" + spec + "'");
      times.push_back(parse_double(item.substr(b, e - b + 1), "time grid"));
    }
  }
  if (times.empty()) throw ParseError("empty time grid");
  for (double t : times) {
    if (t < 0.0) throw DomainError("times must be nonnegative");
  }
  return times;
}

std::optional<Potential> resolve_potential(const ExperimentConfig& cfg) {
  std::string path = cfg.potential;
  if (path.empty()) {
    const auto [kind, rest] = split_kind(cfg.rates);
    if (kind == "glauber") path = rest;
  }
  if (path.empty()) return std::nullopt;
  Potential U = Potential::load(require_file(path));
  return cfg.beta == 1.0 ? U : U.scaled(cfg.beta);
}

Torus resolve_torus(const ExperimentConfig& cfg) {
  Torus torus = Torus::parse(cfg.torus);
  if (cfg.sites_per_dim < 0) throw DomainError("sites-per-dim must be nonnegative");
  if (cfg.sites_per_dim == 0) return torus;
  int dim = torus.dimension();
  if (const auto U = resolve_potential(cfg)) dim = U->dimension();
  return Torus(std::vector<int>(static_cast<std::size_t>(dim), cfg.sites_per_dim));
}

RateModel resolve_rates(const ExperimentConfig& cfg, const Torus& torus) {
  const auto [kind, rest] = split_kind(cfg.rates);
  if (kind == "independent") {
    const double r = rest.empty() ? 1.0 : parse_double(rest, "rates");
    if (r <= 0.0) throw DomainError("independent rate must be positive");
    return RateModel::independent(torus, r);
  }
  if (kind == "glauber") {
    const auto U = resolve_potential(cfg);
    if (!U) throw ParseError("glauber rates need a potential file");
    return RateModel::glauber(torus, *U);
  }
  if (kind == "perturbed") return RateModel::perturbed(torus, load_perturbation(require_file(rest)));
  if (kind == "generator") return GeneratorSpec::load(require_file(rest)).rates(torus);
  throw ParseError("rates must be independent:R, glauber:FILE, perturbed:FILE or generator:FILE, got '" +
                   cfg.rates + "'");
}

bool initial_is_uniform_product(const ExperimentConfig& cfg) {
  const auto [kind, rest] = split_kind(cfg.init);
  return kind == "product" && (rest.empty() || parse_double(rest, "init") == 0.5);
}

DistributionVector resolve_initial(const ExperimentConfig& cfg, const RateModel& rates) {
  const int n = rates.sites();
  check_exact_size(cfg, n);
  const auto [kind, rest] = split_kind(cfg.init);
  if (kind == "gibbs") {
    if (const auto U = resolve_potential(cfg)) {
      return gibbs_measure(*U, Volume::whole(rates.torus()), BoundaryCondition::periodic()).distribution;
    }
    return stationary_distribution(rates);
  }
  if (kind == "product") {
    const double p = rest.empty() ? 0.5 : parse_double(rest, "init");
    if (p < 0.0 || p > 1.0) throw DomainError("product probability must lie in [0, 1]");
    return DistributionVector::product(n, p);
  }
  if (kind == "dirac") return DistributionVector::dirac(n, SpinConfiguration::parse(n, rest).state());
  if (kind == "file") {
    std::ifstream in(require_file(rest));
    std::vector<double> p;
    double v = 0.0;
    while (in >> v) p.push_back(v);
    if (!in.eof()) throw ParseError("non-numeric entry in distribution file '" + rest + "'");
    if (p.size() != (std::size_t{1} << n)) {
      throw ParseError("distribution file must hold 2^" + std::to_string(n) + " probabilities");
    }
    return DistributionVector::from_probabilities(n, std::move(p), 1e-9);
  }
  throw ParseError("init must be gibbs, product[:P], dirac:BITS or file:PATH, got '" + cfg.init + "'");
}

std::vector<Observable> resolve_observables(const ExperimentConfig& cfg, int sites) {
  if (!cfg.observable.empty()) return load_observables(require_file(cfg.observable));
  return parse_family(cfg.family, sites).members;
}

const std::vector<CommandInfo>& commands() {
  static const std::vector<CommandInfo> list = {
      {"dobrushin", "Strong-uniqueness constant c(U), summability norm and GCB constant of a potential",
       cmd_dobrushin},
      {"evolve", "Exact evolution: observable expectations and TV distance to the stationary law", cmd_evolve},
      {"gcb-scan", "Empirical Gaussian concentration constant of mu S(t) over a function family", cmd_gcb_scan},
      {"uvb-check", "Empirical variance constant of mu S(t) over a function family", cmd_uvb_check},
      {"conserve", "Conservation of GCB / variance / (H,J,C) inequalities under the dynamics", cmd_conserve},
      {"symbolic-bound", "Exact sup norms of generator powers against the factorial bound", cmd_symbolic_bound},
      {"radius", "Convergence radius t0 of the generator series", cmd_radius},
      {"nogo", "Plus/minus boundary Gibbs measures under the dynamics: TV, relative entropy, GCB", cmd_nogo},
      {"mc", "Kinetic Monte Carlo ensemble estimates", cmd_mc},
      {"selftest", "Fast invariant suite", cmd_selftest},
  };
  return list;
}

}  // namespace flipconc::cli
