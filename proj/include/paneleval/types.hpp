#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace paneleval {

// Firm-level covariates carried on every observation, in fixed order.
// Column names in CSV files match these strings exactly.
inline constexpr std::array<const char*, 5> kCovariateNames = {
    "hhi", "lnage", "lnemp", "occar", "der"};
inline constexpr std::size_t kNumCovariates = kCovariateNames.size();

int covariate_index(const std::string& name);  // -1 if unknown

// One firm-year record in long format. Missing values are
// std::nullopt; missingness is data, not an error.
struct Observation {
  std::string unit_id;
  std::string region;
  char industry = '?';  // single-letter code A..S
  int year = 0;
  std::optional<double> roa;  // outcome, percent (roa or roa_before_tax)
  std::array<std::optional<double>, kNumCovariates> covariates;

  bool covariates_complete() const {
    for (const auto& c : covariates)
      if (!c) return false;
    return true;
  }
};

struct PanelDataset {
  std::vector<Observation> observations;
  std::string provenance;  // digest of the source file or generator config
  bool prepared = false;   // winsorization / exclusions have run

  bool empty() const { return observations.empty(); }
  std::size_t size() const { return observations.size(); }
};

// Checks the (unit_id, year) uniqueness invariant; throws IngestError
// on a duplicate, naming the offending pair.
void validate_unique_unit_years(const PanelDataset& panel);

}  // namespace paneleval
