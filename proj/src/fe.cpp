#include "paneleval/fe.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "paneleval/errors.hpp"

namespace paneleval {

DemeanResult two_way_demean(const Eigen::MatrixXd& values,
                            const std::vector<int>& unit_ids,
                            const std::vector<int>& year_ids) {
  const auto n = values.rows();
  if (static_cast<std::size_t>(n) != unit_ids.size() ||
      static_cast<std::size_t>(n) != year_ids.size())
    throw NumericError("two_way_demean: id vectors do not match row count");

  int n_units = 0, n_years = 0;
  for (int u : unit_ids) n_units = std::max(n_units, u + 1);
  for (int y : year_ids) n_years = std::max(n_years, y + 1);
  if (n_units < 2 || n_years < 2)
    throw DesignError("two_way_demean needs at least 2 units and 2 years");

  std::vector<int> unit_count(n_units, 0), year_count(n_years, 0);
  for (int u : unit_ids) unit_count[u]++;
  for (int y : year_ids) year_count[y]++;

  DemeanResult result;
  result.values = values;
  constexpr double kTol = 1e-10;
  constexpr int kMaxSweeps = 500;

  Eigen::MatrixXd unit_means(n_units, values.cols());
  Eigen::MatrixXd year_means(n_years, values.cols());
  for (int sweep = 1; sweep <= kMaxSweeps; ++sweep) {
    double max_change = 0.0;

    unit_means.setZero();
    for (Eigen::Index i = 0; i < n; ++i)
      unit_means.row(unit_ids[i]) += result.values.row(i);
    for (int u = 0; u < n_units; ++u)
      if (unit_count[u] > 0) unit_means.row(u) /= unit_count[u];
    for (Eigen::Index i = 0; i < n; ++i)
      result.values.row(i) -= unit_means.row(unit_ids[i]);
    max_change = std::max(max_change, unit_means.cwiseAbs().maxCoeff());

    year_means.setZero();
    for (Eigen::Index i = 0; i < n; ++i)
      year_means.row(year_ids[i]) += result.values.row(i);
    for (int y = 0; y < n_years; ++y)
      if (year_count[y] > 0) year_means.row(y) /= year_count[y];
    for (Eigen::Index i = 0; i < n; ++i)
      result.values.row(i) -= year_means.row(year_ids[i]);
    max_change = std::max(max_change, year_means.cwiseAbs().maxCoeff());

    result.sweeps = sweep;
    if (max_change < kTol) return result;
  }
  throw NumericError("two_way_demean did not converge after " +
                     std::to_string(kMaxSweeps) + " sweeps");
}

double FitResult::coefficient(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return coefficients(static_cast<Eigen::Index>(i));
  throw NumericError("no coefficient named " + name);
}

FitResult fit_ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                  const std::vector<std::string>& names) {
  const auto n = X.rows();
  const auto k = X.cols();
  if (n <= k)
    throw NumericError("fit_ols: " + std::to_string(n) + " rows for " +
                       std::to_string(k) + " parameters");
  if (static_cast<std::size_t>(k) != names.size())
    throw NumericError("fit_ols: name list does not match column count");

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) {
    // Columns pivoted past the numerical rank are the collinear ones.
    const auto& perm = qr.colsPermutation().indices();
    std::string collinear;
    for (Eigen::Index j = qr.rank(); j < k; ++j) {
      if (!collinear.empty()) collinear += ", ";
      collinear += names[static_cast<std::size_t>(perm(j))];
    }
    throw NumericError("fit_ols: rank-deficient design, collinear columns: " +
                       collinear);
  }

  FitResult fit;
  fit.names = names;
  fit.coefficients = qr.solve(y);
  fit.residuals = y - X * fit.coefficients;
  fit.n_obs = static_cast<std::size_t>(n);
  fit.n_params = static_cast<std::size_t>(k);
  const double ssr = fit.residuals.squaredNorm();
  fit.sigma2 = ssr / static_cast<double>(n - k);

  const double ybar = y.mean();
  const double tss = (y.array() - ybar).matrix().squaredNorm();
  fit.r_squared = tss > 0 ? 1.0 - ssr / tss : 0.0;

  fit.design = X;
  fit.xtx_inv = (X.transpose() * X).ldlt().solve(
      Eigen::MatrixXd::Identity(k, k));
  fit.vcov = fit.sigma2 * fit.xtx_inv;
  return fit;
}

Eigen::MatrixXd cluster_vcov(const FitResult& fit,
                             const std::vector<int>& clusters) {
  const auto n = fit.design.rows();
  const auto k = fit.design.cols();
  if (static_cast<std::size_t>(n) != clusters.size())
    throw NumericError("cluster_vcov: cluster labels do not match row count");

  int n_clusters = 0;
  for (int c : clusters) n_clusters = std::max(n_clusters, c + 1);
  std::vector<bool> present(n_clusters, false);
  for (int c : clusters) present[c] = true;
  int g = 0;
  for (bool p : present) g += p ? 1 : 0;
  if (g < 2) throw DesignError("cluster_vcov needs at least 2 clusters");

  // Meat: sum over clusters of (X_g' e_g)(X_g' e_g)'.
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(n_clusters, k);
  for (Eigen::Index i = 0; i < n; ++i)
    scores.row(clusters[i]) += fit.design.row(i) * fit.residuals(i);
  Eigen::MatrixXd meat = scores.transpose() * scores;

  const double gd = static_cast<double>(g);
  const double nd = static_cast<double>(n);
  const double kd = static_cast<double>(k);
  const double factor = gd / (gd - 1.0) * (nd - 1.0) / (nd - kd);
  return factor * fit.xtx_inv * meat * fit.xtx_inv;
}

double t_critical(double level_two_sided, int dof) {
  boost::math::students_t dist(static_cast<double>(std::max(dof, 1)));
  return boost::math::quantile(dist, 1.0 - (1.0 - level_two_sided) / 2.0);
}

double t_pvalue(double t_stat, int dof) {
  boost::math::students_t dist(static_cast<double>(std::max(dof, 1)));
  return 2.0 * boost::math::cdf(dist, -std::abs(t_stat));
}

double normal_critical(double level_two_sided) {
  boost::math::normal dist;
  return boost::math::quantile(dist, 1.0 - (1.0 - level_two_sided) / 2.0);
}

double normal_pvalue(double z_stat) {
  boost::math::normal dist;
  return 2.0 * boost::math::cdf(dist, -std::abs(z_stat));
}

}  // namespace paneleval
