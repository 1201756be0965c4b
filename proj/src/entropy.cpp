#include "flipconc/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "flipconc/errors.hpp"

namespace flipconc {

double relative_entropy(const DistributionVector& mu, const DistributionVector& nu) {
  if (mu.size() != nu.size()) throw DomainError("relative entropy of distributions on different state spaces");
  double h = 0.0;
  for (std::size_t s = 0; s < mu.size(); ++s) {
    const double p = mu[s];
    if (p <= 0.0) continue;
    if (nu[s] <= 0.0) return std::numeric_limits<double>::infinity();
    h += p * std::log(p / nu[s]);
  }
  return std::max(h, 0.0);
}

DistributionVector marginal(const DistributionVector& mu, std::span<const int> sites) {
  for (int s : sites) {
    if (s < 0 || s >= mu.sites()) throw DomainError("marginal site outside the torus");
  }
  std::vector<double> out(std::size_t{1} << sites.size(), 0.0);
  for (std::size_t s = 0; s < mu.size(); ++s) {
    std::size_t r = 0;
    for (std::size_t k = 0; k < sites.size(); ++k) r |= ((s >> sites[k]) & 1u) << k;
    out[r] += mu[s];
  }
  return DistributionVector::from_weights(static_cast<int>(sites.size()), std::move(out));
}

std::vector<std::vector<int>> centred_windows(const Torus& torus, int centre, int radius_max) {
  std::vector<std::vector<int>> out;
  const Point c = torus.coordinates(centre);
  for (int r = 0; r <= radius_max; ++r) {
    std::vector<int> w;
    Point lo{}, hi{};
    for (int k = 0; k < torus.dimension(); ++k) {
      const int side = torus.sides()[static_cast<std::size_t>(k)];
      if (2 * r + 1 >= side) {
        lo[k] = 0;
        hi[k] = side - 1;
      } else {
        lo[k] = c[k] - r;
        hi[k] = c[k] + r;
      }
    }
    Point p{};
    for (p[2] = lo[2]; p[2] <= hi[2]; ++p[2]) {
      for (p[1] = lo[1]; p[1] <= hi[1]; ++p[1]) {
        for (p[0] = lo[0]; p[0] <= hi[0]; ++p[0]) w.push_back(torus.site(p));
      }
    }
    std::sort(w.begin(), w.end());
    w.erase(std::unique(w.begin(), w.end()), w.end());
    if (!out.empty() && out.back() == w) break;
    out.push_back(std::move(w));
  }
  return out;
}

EntropyProfile entropy_density_profile(const DistributionVector& mu, const DistributionVector& nu,
                                       const std::vector<std::vector<int>>& windows) {
  EntropyProfile prof;
  for (std::size_t k = 0; k < windows.size(); ++k) {
    const auto& w = windows[k];
    if (w.empty()) throw DomainError("entropy window is empty");
    if (k > 0) {
      const auto& prev = windows[k - 1];
      if (!std::includes(w.begin(), w.end(), prev.begin(), prev.end())) {
        throw DomainError("entropy windows must be nested");
      }
    }
    prof.window_sizes.push_back(static_cast<int>(w.size()));
    prof.values.push_back(relative_entropy(marginal(nu, w), marginal(mu, w)) / static_cast<double>(w.size()));
  }
  prof.covers_torus = !windows.empty() && static_cast<int>(windows.back().size()) == mu.sites();
  return prof;
}

DataProcessingReport data_processing_check(const ExactSemigroup& sg, const DistributionVector& mu,
                                           const DistributionVector& nu, const std::vector<double>& times,
                                           double tol) {
  DataProcessingReport rep;
  DistributionVector a = mu;
  DistributionVector b = nu;
  double now = 0.0;
  for (double t : times) {
    if (t < now) throw DomainError("time grid must be increasing");
    if (t > now) {
      a = sg.evolve(t - now, a);
      b = sg.evolve(t - now, b);
      now = t;
    }
    const double h = relative_entropy(a, b);
    if (!rep.entropy.empty()) {
      const double inc = h - rep.entropy.back();
      rep.max_increase = std::max(rep.max_increase, inc);
      if (inc > tol) rep.monotone = false;
    }
    rep.times.push_back(t);
    rep.entropy.push_back(h);
  }
  return rep;
}

NogoReport nogo_experiment(const ExactSemigroup& sg, const DistributionVector& mu_plus,
                           const DistributionVector& mu_minus, const std::vector<double>& times,
                           const FunctionFamily& family, const std::vector<std::vector<int>>& windows,
                           const std::vector<double>& lambdas) {
  NogoReport rep;
  rep.degenerate_input = total_variation(mu_plus, mu_minus) == 0.0;
  DistributionVector plus = mu_plus;
  DistributionVector minus = mu_minus;
  double now = 0.0;
  double min_tv = std::numeric_limits<double>::infinity();
  double max_density = 0.0;
  for (double t : times) {
    if (t < now) throw DomainError("time grid must be increasing");
    if (t > now) {
      plus = sg.evolve(t - now, plus);
      minus = sg.evolve(t - now, minus);
      now = t;
    }
    NogoRow row;
    row.t = t;
    row.tv = total_variation(plus, minus);
    row.entropy = relative_entropy(minus, plus);
    const EntropyProfile prof = entropy_density_profile(plus, minus, windows);
    row.entropy_profile = prof.values;
    if (rep.window_sizes.empty()) rep.window_sizes = prof.window_sizes;
    row.gcb_hat = empirical_gcb_constant(plus, family, lambdas).best;
    min_tv = std::min(min_tv, row.tv);
    if (!prof.values.empty()) max_density = std::max(max_density, prof.values.back());
    rep.rows.push_back(std::move(row));
  }
  std::ostringstream os;
  if (rep.degenerate_input) {
    os << "degenerate input: the two initial measures coincide";
  } else {
    os << "min TV distance " << min_tv << " over the grid (evolved measures stay distinct); "
       << "max per-site relative entropy on the largest window " << max_density
       << ". A GCB for mu+ S(t) together with vanishing entropy density would force the two evolved "
          "measures to agree in the infinite-volume limit; at this finite size the quantities are "
          "diagnostics, not a proof.";
  }
  rep.summary = os.str();
  return rep;
}

}  // namespace flipconc
