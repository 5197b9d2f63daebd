#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "paneleval/registry.hpp"
#include "paneleval/types.hpp"

namespace paneleval {

// Listwise-complete estimation rows extracted from a panel subset.
// Rows missing the outcome or any requested covariate are dropped.
struct EstimationFrame {
  std::vector<int> unit_code;        // dense 0-based
  std::vector<int> year_code;        // dense 0-based
  std::vector<int> year;             // calendar year
  std::vector<std::string> unit_of;  // unit_code -> unit_id
  Eigen::VectorXd outcome;
  Eigen::MatrixXd covariates;  // n x n_cov, requested order
  std::vector<std::string> covariate_names;
  std::vector<bool> treated;          // row-level group flag
  std::vector<int> treatment_year;    // per row; 0 for control rows
  std::size_t n_units = 0;
  std::size_t n_years = 0;
};

EstimationFrame build_frame(const PanelDataset& subset, const PanelSpec& spec,
                            const std::vector<std::string>& covariates);

struct CoefEstimate {
  std::string term;
  double estimate = 0;
  double se = 0;
  double t_stat = 0;
  double p_value = 0;
  double ci_lo = 0;
  double ci_hi = 0;
};

struct EstimateReport {
  int panel_id = 0;
  std::string panel_name;
  CoefEstimate effect;  // the Treat x Post coefficient
  std::vector<CoefEstimate> covariate_effects;
  std::size_t n_obs = 0;
  std::size_t n_units = 0;  // clusters
  double r_squared = 0;
  double confidence_level = 0.95;
};

// TWFE DiD: outcome on Treat x Post plus covariates, unit and year
// effects absorbed, standard errors clustered by unit. For staggered
// specs the treatment dummy switches on at each region's own year.
EstimateReport estimate_twfe_did(const PanelDataset& subset,
                                 const PanelSpec& spec,
                                 const std::vector<std::string>& controls);

struct EventCoef {
  int event_time = 0;
  double estimate = 0;
  double se = 0;
  double ci_lo = 0;
  double ci_hi = 0;
  std::size_t n_treated_obs = 0;
  bool binned = false;   // endpoint bin absorbing times outside the window
  bool is_base = false;  // event time -1, identically zero
  bool missing = false;  // no observations in this bin
};

struct EventStudyResult {
  int panel_id = 0;
  std::string panel_name;
  int window_lo = -4;
  int window_hi = 4;
  std::vector<EventCoef> coefficients;  // ordered by event time
  std::size_t n_obs = 0;
  std::size_t n_units = 0;
  double r_squared = 0;
  std::vector<std::string> warnings;
};

// Dynamic effects: event-time dummies interacted with treatment, event
// time -1 omitted as the base, endpoint bins accumulate times outside
// [window_lo, window_hi].
EventStudyResult estimate_event_study(
    const PanelDataset& subset, const PanelSpec& spec,
    const std::vector<std::string>& controls, int window_lo = -4,
    int window_hi = 4);

}  // namespace paneleval
