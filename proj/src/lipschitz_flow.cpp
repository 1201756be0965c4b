#include "flipconc/lipschitz_flow.hpp"

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>
#include <algorithm>
#include <cmath>
#include <limits>

#include "flipconc/errors.hpp"

namespace flipconc {
namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Mat to_matrix(const std::vector<double>& a, int n) {
  return Eigen::Map<const Mat>(a.data(), n, n);
}

std::vector<double> from_matrix(const Mat& m) {
  return std::vector<double>(m.data(), m.data() + m.size());
}

}  // namespace

double flip_pair_floor(const RateModel& rates) {
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < rates.sites(); ++i) {
    const auto dep = rates.dependence(i);
    if (dep.size() > 24) throw CapacityError("rate dependence set too large for exhaustive enumeration");
    const auto pos = std::find(dep.begin(), dep.end(), i);
    const std::size_t count = std::size_t{1} << dep.size();
    for (std::size_t a = 0; a < count; ++a) {
      auto up = [&](std::size_t assignment) {
        return [&, assignment](int j) {
          const auto it = std::find(dep.begin(), dep.end(), j);
          return it != dep.end() && ((assignment >> (it - dep.begin())) & 1u) != 0;
        };
      };
      const std::size_t flipped = pos == dep.end() ? a : a ^ (std::size_t{1} << (pos - dep.begin()));
      best = std::min(best, rates.rate(i, up(a)) + rates.rate(i, up(flipped)));
    }
  }
  return best;
}

std::vector<double> gamma_dense(const RateModel& rates, GammaConvention convention) {
  const GammaMatrix g = gamma_matrix(rates);
  std::vector<double> a = g.dense();
  if (convention == GammaConvention::kShifted) {
    const double eps = flip_pair_floor(rates);
    for (int i = 0; i < g.n; ++i) a[static_cast<std::size_t>(i) * static_cast<std::size_t>(g.n + 1)] = -eps;
  }
  return a;
}

std::vector<double> matrix_exponential(const std::vector<double>& g, int n, double t) {
  if (!(t >= 0.0)) throw DomainError("propagation time must be nonnegative");
  const Mat m = (t * to_matrix(g, n)).eval();
  return from_matrix(m.exp());
}

LipschitzVector lipschitz_propagation(const RateModel& rates, double t, const LipschitzVector& delta,
                                      GammaConvention convention) {
  const int n = rates.sites();
  if (static_cast<int>(delta.size()) != n) throw DomainError("Lipschitz vector length does not match the torus");
  const Mat e = to_matrix(matrix_exponential(gamma_dense(rates, convention), n, t), n);
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(delta.entries.data(), n);
  const Eigen::VectorXd y = e.transpose() * x;
  return LipschitzVector{std::vector<double>(y.data(), y.data() + n)};
}

std::vector<double> propagation_kernel(const RateModel& rates, double t, GammaConvention convention) {
  const int n = rates.sites();
  const auto e = matrix_exponential(gamma_dense(rates, convention), n, t);
  std::vector<double> column(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) column[static_cast<std::size_t>(j)] = e[static_cast<std::size_t>(j) * static_cast<std::size_t>(n)];
  return column;
}

double squared_operator_norm(const std::vector<double>& a, int n) {
  if (n == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(to_matrix(a, n));
  const double s = svd.singularValues()(0);
  return s * s;
}

ContractionConstants contraction_constants(const RateModel& rates, double t) {
  if (!(t >= 0.0)) throw DomainError("propagation time must be nonnegative");
  const int n = rates.sites();
  const GammaMatrix g = gamma_matrix(rates);
  ContractionConstants out;
  const std::vector<double> lit = g.dense();
  out.rigid = std::all_of(lit.begin(), lit.end(), [](double v) { return v == 0.0; });
  out.K = squared_operator_norm(matrix_exponential(lit, n, t), n);
  out.schur_bound = std::exp(2.0 * t * std::sqrt(g.max_row_sum() * g.max_col_sum()));
  out.eps = flip_pair_floor(rates);
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& [j, v] : g.rows[static_cast<std::size_t>(i)]) {
      if (j != i) s += v;
    }
    out.M = std::max(out.M, s);
  }
  const std::vector<double> shifted = gamma_dense(rates, GammaConvention::kShifted);
  out.K_shifted = squared_operator_norm(matrix_exponential(shifted, n, t), n);
  if (out.eps > out.M) {
    const double alpha = 2.0 * (out.eps - out.M);
    bool ok = true;
    for (int k = 1; k <= 16 && ok; ++k) {
      const double s = 0.25 * k;
      const double ks = squared_operator_norm(matrix_exponential(shifted, n, s), n);
      ok = ks <= std::exp(-alpha * s) * (1.0 + 1e-10);
    }
    if (ok) out.alpha = alpha;
  }
  return out;
}

}  // namespace flipconc
