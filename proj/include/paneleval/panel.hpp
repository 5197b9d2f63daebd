#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "paneleval/types.hpp"

namespace paneleval {

// --- Outcome construction -------------------------------------------------

// ROA = 100 * net_profit / ((assets_begin + assets_end)/2).
// Missing or zero average assets produce a missing value, never an error.
std::optional<double> compute_roa(std::optional<double> net_profit,
                                  std::optional<double> assets_begin,
                                  std::optional<double> assets_end);

// Pre-tax variant: numerator is total_profit + financial_expenses.
std::optional<double> compute_roa_before_tax(
    std::optional<double> total_profit,
    std::optional<double> financial_expenses,
    std::optional<double> assets_begin, std::optional<double> assets_end);

// --- Winsorization ----------------------------------------------------------

enum class TailRule { Clamp, Drop };

// Empirical quantile with linear interpolation between order statistics
// (position h = (n-1)q on the sorted sample). This definition is the
// contract; the winsorization oracle tests depend on it.
double interpolated_quantile(std::vector<double> sorted_nonmissing, double q);

// Clamps values outside the [lower_q, upper_q] interpolated quantiles
// (TailRule::Clamp) or turns them into missing (TailRule::Drop). Missing
// inputs pass through unchanged. Throws DesignError when every value is
// missing or the quantile pair is invalid.
std::vector<std::optional<double>> winsorize_column(
    const std::vector<std::optional<double>>& values, double lower_q,
    double upper_q, TailRule rule = TailRule::Clamp);

// --- Panel preparation ------------------------------------------------------

struct PrepareOptions {
  double lower_q = 0.01;
  double upper_q = 0.99;
  TailRule tail_rule = TailRule::Clamp;
  bool winsorize_outcome = true;
  bool winsorize_covariates = true;
};

struct PrepareReport {
  std::size_t n_dropped_st = 0;
  std::vector<std::string> warnings;
};

// Applies the sample-preparation rules in place: ST-flagged rows dropped
// (when the flag column was present at load), then winsorization of the
// outcome and covariates over the full sample. Sets panel.prepared.
PrepareReport prepare_panel(PanelDataset& panel, const PrepareOptions& opts);

// --- Summaries --------------------------------------------------------------

struct SummaryRow {
  std::string variable;
  std::size_t n = 0;  // non-missing count
  double mean = 0, median = 0, sd = 0, min = 0, max = 0;
  bool sd_undefined = false;  // n < 2: sd reported as 0 with this flag
  // Present only when a treated/control split was requested.
  std::optional<double> treated_mean, control_mean, difference;
};

struct SummaryTable {
  std::vector<SummaryRow> rows;
};

// Optional labeling for the split columns: every unit id maps to exactly
// "treated" or "control"; any other label is an error.
struct SplitLabels {
  std::set<std::string> treated_units;
  std::set<std::string> control_units;
};

SummaryTable summarize(const PanelDataset& panel,
                       const std::optional<SplitLabels>& split = std::nullopt);

// --- Industry filter --------------------------------------------------------

// Keeps observations whose industry code is in `codes` (subset of A..S).
PanelDataset filter_industries(const PanelDataset& panel,
                               const std::set<char>& codes);

// --- CSV I/O ----------------------------------------------------------------

enum class OutcomeChoice { Roa, RoaBeforeTax };

struct LoadOptions {
  OutcomeChoice outcome = OutcomeChoice::Roa;
  // When the raw accounting columns are present, the outcome is computed
  // from them; otherwise the precomputed column of the same name is used.
};

struct LoadResult {
  PanelDataset panel;
  bool had_st_flag = false;  // st_flag column present in the file
  std::vector<std::string> warnings;
};

// Long-format CSV: unit_id,region,industry,year plus numeric columns.
// Missing values are empty fields.
LoadResult load_panel_csv(const std::string& path, const LoadOptions& opts = {});
LoadResult parse_panel_csv(const std::string& text, const LoadOptions& opts = {},
                           const std::string& provenance = "inline");

void write_panel_csv(const PanelDataset& panel, const std::string& path);
std::string panel_to_csv(const PanelDataset& panel);

}  // namespace paneleval
