#pragma once

#include <map>
#include <string>
#include <vector>

#include "paneleval/registry.hpp"
#include "paneleval/types.hpp"

namespace paneleval {

struct CsdidOptions {
  // Control pool rule: not-yet-treated (default) or never-treated only.
  bool never_treated_only = false;
  // Optional outcome-regression covariate adjustment, fitted on the
  // control pool with covariates measured at the base period g-1.
  std::vector<std::string> covariates;
};

struct GroupTimeATT {
  int cohort_g = 0;
  int period_t = 0;
  double att = 0;
  double se = 0;
  std::size_t n_treated = 0;
  std::size_t n_control = 0;
  bool available = true;
  std::string note;
  // Per-unit plug-in influence contributions (already scaled); the
  // aggregation schemes combine these to get delta-method SEs with unit
  // clustering.
  std::map<std::string, double> influence;

  int event_time() const { return period_t - cohort_g; }
};

// ATT(g,t): change in mean outcome of cohort g from base period g-1 to t,
// minus the same change among not-yet-treated controls. Throws
// DesignError when the cohort or the control pool is empty.
GroupTimeATT estimate_att_gt(const PanelDataset& subset, const PanelSpec& spec,
                             int g, int t, const CsdidOptions& opts = {});

// All cells over the spec's cohorts and the years present in the data
// (t != g-1). Cells whose control pool is empty are returned with
// available = false instead of failing the sweep.
std::vector<GroupTimeATT> estimate_att_cells(const PanelDataset& subset,
                                             const PanelSpec& spec,
                                             const CsdidOptions& opts = {});

enum class AggregationScheme { Simple, EventPre, EventPost, ByGroup, ByCalendar };

std::string to_string(AggregationScheme scheme);
AggregationScheme aggregation_scheme_from_string(const std::string& name);

struct AggregateComponent {
  int cohort_g = 0;
  int period_t = 0;
  double weight = 0;
};

struct AggregateResult {
  AggregationScheme scheme = AggregationScheme::Simple;
  double estimate = 0;
  double se = 0;
  double ci_lo = 0;
  double ci_hi = 0;
  double z_stat = 0;
  double p_value = 0;
  std::vector<AggregateComponent> components;  // weights are >= 0, sum to 1
};

// Weighted combinations of the cells:
//   simple      cohort-share weights over post cells (t >= g)
//   event_pre   per-event-time cohort-share means, averaged over e <= -2
//   event_post  same over e >= 0
//   by_group    per-cohort means, combined with cohort-share weights
//   by_calendar per-year means, averaged over calendar years
AggregateResult aggregate_att(const std::vector<GroupTimeATT>& cells,
                              AggregationScheme scheme);

std::vector<AggregateResult> aggregate_all_schemes(
    const std::vector<GroupTimeATT>& cells);

// Rademacher multiplier bootstrap over the aggregate's unit-level
// influence sums; a seeded cross-check of the analytic SE.
double multiplier_bootstrap_se(const std::vector<GroupTimeATT>& cells,
                               AggregationScheme scheme, int n_draws = 999,
                               std::uint64_t seed = 20240901);

}  // namespace paneleval
