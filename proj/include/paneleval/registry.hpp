#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "paneleval/types.hpp"

namespace paneleval {

// The four environmental markets. Exposure sets are subsets of these.
enum class MarketKind { Pollution, Carbon, Energy, GreenElectricity };

using ExposureSet = std::set<MarketKind>;

std::string to_string(MarketKind kind);
MarketKind market_kind_from_string(const std::string& name);
std::string to_string(const ExposureSet& exposure);

// A region entering a market in a given year. Markets never switch off.
struct MarketEvent {
  std::string region;
  MarketKind kind;
  int start_year = 0;
};

struct TreatmentRegistry {
  std::vector<MarketEvent> events;
  std::vector<std::string> universe;  // all region codes, ordered
  int window_start = 2000;
  int window_end = 2024;

  bool in_universe(const std::string& region) const;
  // Start year of the (region, kind) event, if any. At most one per pair.
  std::optional<int> event_year(const std::string& region,
                                MarketKind kind) const;
  void validate() const;  // throws DesignError on inconsistency
};

TreatmentRegistry load_registry_json(const std::string& path);
TreatmentRegistry parse_registry_json(const std::string& text);
std::string registry_to_json(const TreatmentRegistry& registry);

// Markets active for a region in a given year: every event with
// start_year <= year. Unknown region is an error.
ExposureSet exposure_set(const TreatmentRegistry& registry,
                         const std::string& region, int year);

// --- Period groups ----------------------------------------------------------

struct Period {
  int start = 0;
  int end = 0;
};

// The periods implied by the registry's distinct event years: the
// pre-policy block plus one block per adoption wave.
std::vector<Period> registry_periods(const TreatmentRegistry& registry);

struct GroupCode {
  std::string label;  // letter + period index, e.g. "F2"
  int period_index = 0;
  ExposureSet exposure;
  int region_count = 0;  // regions sharing this label within the period
};

// Maps each region to its group code in the given period. Throws
// DesignError when a region's exposure set has no letter (registry
// combination outside the eight observed permutations).
std::map<std::string, GroupCode> assign_groups(
    const TreatmentRegistry& registry, const Period& period);

// Convenience: label -> region count for a period.
std::map<std::string, int> group_counts(const TreatmentRegistry& registry,
                                        const Period& period);

// --- Panel designs ----------------------------------------------------------

// One identification design: treated regions that add `added` markets on
// top of a shared `conditioning` exposure, against controls that hold the
// conditioning exposure. Contaminated region-years are excluded via
// clean_until: a region contributes only years in [window_start,
// clean_until(region)].
struct PanelSpec {
  int panel_id = 0;  // 1..8 for the default designs, 0 for derived ones
  std::string name;
  ExposureSet conditioning;
  ExposureSet added;
  std::set<std::string> treated_regions;
  std::set<std::string> control_regions;
  std::map<std::string, int> treatment_year;  // per treated region
  int t0 = 0;                                 // earliest treatment year
  int window_start = 0;
  int window_end = 0;
  std::map<std::string, int> clean_until;  // per region, within the window
  bool enforce_clean = true;  // static §5-style designs set this false

  bool staggered() const;
  int treatment_year_of(const std::string& region) const;
};

std::string panel_spec_to_json(const PanelSpec& spec);

struct DeriveOptions {
  // Restrict treated cohorts to these adoption years (empty = all).
  std::set<int> cohort_filter;
  std::optional<int> window_start;
  std::optional<int> window_end;
};

// Mechanical derivation of a clean design from the registry.
PanelSpec derive_panel(const TreatmentRegistry& registry,
                       const ExposureSet& conditioning,
                       const ExposureSet& added,
                       const DeriveOptions& opts = {});

// The eight Table-style designs for the default registry layout.
PanelSpec panel_spec(const TreatmentRegistry& registry, int panel_id);

// Restricts the dataset to the spec's regions and clean year ranges.
PanelDataset panel_subset(const PanelSpec& spec, const PanelDataset& dataset);

// panel_spec + panel_subset in one call.
std::pair<PanelSpec, PanelDataset> build_panel(
    const TreatmentRegistry& registry, int panel_id,
    const PanelDataset& dataset);

// --- Clean-control verification ----------------------------------------------

struct ExposureViolation {
  std::string region;
  int year = 0;
  ExposureSet exposure;
  std::string detail;
};

struct CleanControlReport {
  bool pass = true;
  std::vector<ExposureViolation> violations;
};

// Recomputes exposure sets year by year and checks the spec's invariants:
// disjoint groups, controls hold exactly the conditioning exposure over
// their clean years, treated hold conditioning before their adoption year
// and conditioning+added after, and every control stays clean through t0.
CleanControlReport verify_clean_controls(const PanelSpec& spec,
                                         const TreatmentRegistry& registry);

// --- Static (replication) designs --------------------------------------------

// Classic single-market designs: all pilot regions of `kind` against
// everyone else, no contamination exclusions. These intentionally do not
// satisfy the clean-control invariants.
PanelSpec static_spec(const TreatmentRegistry& registry, MarketKind kind);

}  // namespace paneleval
