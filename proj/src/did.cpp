#include "paneleval/did.hpp"

#include <algorithm>
#include <map>

#include "paneleval/errors.hpp"
#include "paneleval/fe.hpp"

namespace paneleval {

EstimationFrame build_frame(const PanelDataset& subset, const PanelSpec& spec,
                            const std::vector<std::string>& covariates) {
  std::vector<int> cov_idx;
  for (const auto& name : covariates) {
    int idx = covariate_index(name);
    if (idx < 0) throw DesignError("unknown covariate: " + name);
    cov_idx.push_back(idx);
  }

  EstimationFrame frame;
  frame.covariate_names = covariates;

  std::map<std::string, int> unit_codes;
  std::map<int, int> year_codes;
  std::vector<double> y;
  std::vector<std::array<double, kNumCovariates>> xs;

  for (const auto& o : subset.observations) {
    const bool is_treated = spec.treated_regions.count(o.region) > 0;
    if (!is_treated && !spec.control_regions.count(o.region)) continue;
    if (!o.roa) continue;
    bool complete = true;
    std::array<double, kNumCovariates> row{};
    for (std::size_t j = 0; j < cov_idx.size(); ++j) {
      const auto& v = o.covariates[static_cast<std::size_t>(cov_idx[j])];
      if (!v) {
        complete = false;
        break;
      }
      row[j] = *v;
    }
    if (!complete) continue;

    auto [uit, unew] = unit_codes.try_emplace(
        o.unit_id, static_cast<int>(unit_codes.size()));
    if (unew) frame.unit_of.push_back(o.unit_id);
    frame.unit_code.push_back(uit->second);
    frame.year.push_back(o.year);
    frame.treated.push_back(is_treated);
    frame.treatment_year.push_back(
        is_treated ? spec.treatment_year_of(o.region) : 0);
    y.push_back(*o.roa);
    xs.push_back(row);
  }

  // Dense year codes in calendar order.
  std::vector<int> years_sorted = frame.year;
  std::sort(years_sorted.begin(), years_sorted.end());
  years_sorted.erase(std::unique(years_sorted.begin(), years_sorted.end()),
                     years_sorted.end());
  std::map<int, int> year_to_code;
  for (std::size_t i = 0; i < years_sorted.size(); ++i)
    year_to_code[years_sorted[i]] = static_cast<int>(i);
  frame.year_code.reserve(frame.year.size());
  for (int yr : frame.year) frame.year_code.push_back(year_to_code[yr]);

  frame.n_units = unit_codes.size();
  frame.n_years = years_sorted.size();

  const auto n = static_cast<Eigen::Index>(y.size());
  frame.outcome.resize(n);
  frame.covariates.resize(n, static_cast<Eigen::Index>(covariates.size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    frame.outcome(i) = y[static_cast<std::size_t>(i)];
    for (std::size_t j = 0; j < covariates.size(); ++j)
      frame.covariates(i, static_cast<Eigen::Index>(j)) =
          xs[static_cast<std::size_t>(i)][j];
  }
  return frame;
}

namespace {

// Empty group/period cells make the design unidentifiable; name the cell.
void check_cells(const EstimationFrame& frame, const PanelSpec& spec) {
  std::size_t treated_pre = 0, treated_post = 0, control_pre = 0,
              control_post = 0;
  for (std::size_t i = 0; i < frame.treated.size(); ++i) {
    if (frame.treated[i]) {
      (frame.year[i] >= frame.treatment_year[i] ? treated_post : treated_pre)++;
    } else {
      (frame.year[i] >= spec.t0 ? control_post : control_pre)++;
    }
  }
  auto fail = [](const std::string& cell) {
    throw DesignError("empty estimation cell: " + cell);
  };
  if (treated_pre == 0) fail("treated pre-period");
  if (treated_post == 0) fail("treated post-period");
  if (control_pre == 0) fail("control pre-period");
  if (control_post == 0) fail("control post-period");
}

CoefEstimate make_estimate(const std::string& term, double beta, double se,
                           int dof, double level) {
  CoefEstimate est;
  est.term = term;
  est.estimate = beta;
  est.se = se;
  est.t_stat = se > 0 ? beta / se : 0.0;
  est.p_value = se > 0 ? t_pvalue(est.t_stat, dof) : 0.0;
  const double crit = t_critical(level, dof);
  est.ci_lo = beta - crit * se;
  est.ci_hi = beta + crit * se;
  return est;
}

}  // namespace

EstimateReport estimate_twfe_did(const PanelDataset& subset,
                                 const PanelSpec& spec,
                                 const std::vector<std::string>& controls) {
  for (const auto& r : spec.treated_regions)
    if (spec.control_regions.count(r))
      throw DesignError("treated and control sets overlap at region " + r);

  EstimationFrame frame = build_frame(subset, spec, controls);
  if (frame.outcome.size() == 0)
    throw DesignError("no usable observations after listwise deletion");
  check_cells(frame, spec);

  const auto n = frame.outcome.size();
  const auto n_cov = static_cast<Eigen::Index>(controls.size());

  Eigen::MatrixXd data(n, 2 + n_cov);
  data.col(0) = frame.outcome;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    data(i, 1) = (frame.treated[idx] &&
                  frame.year[idx] >= frame.treatment_year[idx])
                     ? 1.0
                     : 0.0;
  }
  if (n_cov > 0) data.rightCols(n_cov) = frame.covariates;

  DemeanResult demeaned =
      two_way_demean(data, frame.unit_code, frame.year_code);

  std::vector<std::string> names{"treat_post"};
  for (const auto& c : controls) names.push_back(c);
  FitResult fit = fit_ols(demeaned.values.col(0),
                          demeaned.values.rightCols(1 + n_cov), names);

  Eigen::MatrixXd vc = cluster_vcov(fit, frame.unit_code);
  const int dof = static_cast<int>(frame.n_units) - 1;

  EstimateReport report;
  report.panel_id = spec.panel_id;
  report.panel_name = spec.name;
  report.n_obs = fit.n_obs;
  report.n_units = frame.n_units;
  report.r_squared = fit.r_squared;
  report.effect = make_estimate("treat_post", fit.coefficients(0),
                                std::sqrt(vc(0, 0)), dof,
                                report.confidence_level);
  for (Eigen::Index j = 1; j < fit.coefficients.size(); ++j)
    report.covariate_effects.push_back(
        make_estimate(names[static_cast<std::size_t>(j)], fit.coefficients(j),
                      std::sqrt(vc(j, j)), dof, report.confidence_level));
  return report;
}

EventStudyResult estimate_event_study(const PanelDataset& subset,
                                      const PanelSpec& spec,
                                      const std::vector<std::string>& controls,
                                      int window_lo, int window_hi) {
  if (window_lo >= -1 || window_hi < 0)
    throw DesignError("event window must span the base period -1");

  EstimationFrame frame = build_frame(subset, spec, controls);
  if (frame.outcome.size() == 0)
    throw DesignError("no usable observations after listwise deletion");
  check_cells(frame, spec);

  const auto n = frame.outcome.size();

  // Bin event times into the window; -1 is the omitted base.
  auto binned_time = [&](std::size_t i) -> std::optional<int> {
    if (!frame.treated[i]) return std::nullopt;
    int e = frame.year[i] - frame.treatment_year[i];
    e = std::clamp(e, window_lo, window_hi);
    return e;
  };

  std::map<int, std::size_t> bin_counts;
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i)
    if (auto e = binned_time(i)) bin_counts[*e]++;

  EventStudyResult result;
  result.panel_id = spec.panel_id;
  result.panel_name = spec.name;
  result.window_lo = window_lo;
  result.window_hi = window_hi;

  std::vector<int> dummy_times;  // event times that enter the regression
  for (int e = window_lo; e <= window_hi; ++e) {
    if (e == -1) continue;
    if (bin_counts.count(e) && bin_counts[e] > 0) {
      dummy_times.push_back(e);
    } else {
      result.warnings.push_back("event time " + std::to_string(e) +
                                " has no observations; coefficient missing");
    }
  }
  if (dummy_times.empty())
    throw DesignError("no event-time bin has observations");

  const auto n_dummies = static_cast<Eigen::Index>(dummy_times.size());
  const auto n_cov = static_cast<Eigen::Index>(controls.size());
  Eigen::MatrixXd data = Eigen::MatrixXd::Zero(n, 1 + n_dummies + n_cov);
  data.col(0) = frame.outcome;
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
    if (auto e = binned_time(i)) {
      auto pos = std::find(dummy_times.begin(), dummy_times.end(), *e);
      if (pos != dummy_times.end())
        data(static_cast<Eigen::Index>(i),
             1 + static_cast<Eigen::Index>(pos - dummy_times.begin())) = 1.0;
    }
  }
  if (n_cov > 0) data.rightCols(n_cov) = frame.covariates;

  DemeanResult demeaned =
      two_way_demean(data, frame.unit_code, frame.year_code);

  std::vector<std::string> names;
  for (int e : dummy_times) names.push_back("event_" + std::to_string(e));
  for (const auto& c : controls) names.push_back(c);
  FitResult fit = fit_ols(demeaned.values.col(0),
                          demeaned.values.rightCols(n_dummies + n_cov), names);
  Eigen::MatrixXd vc = cluster_vcov(fit, frame.unit_code);
  const int dof = static_cast<int>(frame.n_units) - 1;
  const double crit = t_critical(0.95, dof);

  result.n_obs = fit.n_obs;
  result.n_units = frame.n_units;
  result.r_squared = fit.r_squared;

  for (int e = window_lo; e <= window_hi; ++e) {
    EventCoef coef;
    coef.event_time = e;
    coef.binned = (e == window_lo || e == window_hi);
    if (e == -1) {
      coef.is_base = true;  // identically zero by construction
      result.coefficients.push_back(coef);
      continue;
    }
    auto pos = std::find(dummy_times.begin(), dummy_times.end(), e);
    if (pos == dummy_times.end()) {
      coef.missing = true;
      result.coefficients.push_back(coef);
      continue;
    }
    const auto j = static_cast<Eigen::Index>(pos - dummy_times.begin());
    coef.estimate = fit.coefficients(j);
    coef.se = std::sqrt(vc(j, j));
    coef.ci_lo = coef.estimate - crit * coef.se;
    coef.ci_hi = coef.estimate + crit * coef.se;
    coef.n_treated_obs = bin_counts[e];
    result.coefficients.push_back(coef);
  }
  return result;
}

}  // namespace paneleval
