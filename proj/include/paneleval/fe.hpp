#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace paneleval {

// Regression metadata shared by the estimators. Absorbed dimensions are
// handled by demeaning, never by dummy columns.
struct DesignSpec {
  std::string outcome;
  std::vector<std::string> regressors;
  bool absorb_unit = true;
  bool absorb_year = true;
  std::string cluster = "unit";
};

struct DemeanResult {
  Eigen::MatrixXd values;
  int sweeps = 0;
};

// Alternating projection on unit and year means, applied column-wise.
// Stops when the largest mean removed in a sweep is below 1e-10 in
// absolute value; throws NumericError after 500 sweeps. unit_ids and
// year_ids are dense 0-based codes.
DemeanResult two_way_demean(const Eigen::MatrixXd& values,
                            const std::vector<int>& unit_ids,
                            const std::vector<int>& year_ids);

struct FitResult {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd vcov;  // iid sigma2*(X'X)^-1 from fit_ols; see cluster_vcov
  Eigen::VectorXd residuals;
  double sigma2 = 0;  // SSR / (n - k)
  std::size_t n_obs = 0;
  std::size_t n_params = 0;
  double r_squared = 0;
  Eigen::MatrixXd design;   // retained for cluster_vcov
  Eigen::MatrixXd xtx_inv;  // (X'X)^-1

  double coefficient(const std::string& name) const;
};

// Least squares via column-pivoted Householder QR. Rank deficiency
// (relative threshold 1e-10) raises NumericError naming the collinear
// columns.
FitResult fit_ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& X,
                  const std::vector<std::string>& names);

// Cluster-robust sandwich with the CRVE1 small-sample factor
// G/(G-1) * (N-1)/(N-K), K counting only the explicit regressors
// (absorbed fixed effects are not in K; the convention is part of the
// artifact's contract so standard errors reproduce exactly).
Eigen::MatrixXd cluster_vcov(const FitResult& fit,
                             const std::vector<int>& clusters);

// Student-t helpers (clustered inference uses G-1 degrees of freedom).
double t_critical(double level_two_sided, int dof);
double t_pvalue(double t_stat, int dof);
double normal_critical(double level_two_sided);
double normal_pvalue(double z_stat);

}  // namespace paneleval
