#include "paneleval/registry.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "paneleval/errors.hpp"

namespace paneleval {

using nlohmann::json;

std::string to_string(MarketKind kind) {
  switch (kind) {
    case MarketKind::Pollution: return "pollution";
    case MarketKind::Carbon: return "carbon";
    case MarketKind::Energy: return "energy";
    case MarketKind::GreenElectricity: return "green_electricity";
  }
  return "?";
}

MarketKind market_kind_from_string(const std::string& name) {
  if (name == "pollution") return MarketKind::Pollution;
  if (name == "carbon") return MarketKind::Carbon;
  if (name == "energy") return MarketKind::Energy;
  if (name == "green_electricity" || name == "green")
    return MarketKind::GreenElectricity;
  throw IngestError("unknown market kind: " + name);
}

std::string to_string(const ExposureSet& exposure) {
  if (exposure.empty()) return "{}";
  std::string out = "{";
  bool first = true;
  for (auto k : exposure) {
    if (!first) out += ",";
    out += to_string(k);
    first = false;
  }
  return out + "}";
}

bool TreatmentRegistry::in_universe(const std::string& region) const {
  return std::find(universe.begin(), universe.end(), region) != universe.end();
}

std::optional<int> TreatmentRegistry::event_year(const std::string& region,
                                                 MarketKind kind) const {
  for (const auto& e : events)
    if (e.region == region && e.kind == kind) return e.start_year;
  return std::nullopt;
}

void TreatmentRegistry::validate() const {
  std::set<std::string> seen_regions(universe.begin(), universe.end());
  if (seen_regions.size() != universe.size())
    throw DesignError("registry universe contains duplicate region codes");
  std::set<std::pair<std::string, int>> pairs;
  for (const auto& e : events) {
    if (!in_universe(e.region))
      throw DesignError("registry event region not in universe: " + e.region);
    if (!pairs.insert({e.region, static_cast<int>(e.kind)}).second)
      throw DesignError("duplicate event for (" + e.region + ", " +
                        to_string(e.kind) + ")");
    if (e.start_year < window_start || e.start_year > window_end)
      throw DesignError("event start year outside registry window: " +
                        e.region + " " + std::to_string(e.start_year));
  }
}

TreatmentRegistry parse_registry_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IngestError(std::string("registry json parse error: ") + e.what());
  }
  TreatmentRegistry r;
  if (!j.contains("universe") || !j.contains("events"))
    throw IngestError("registry json needs 'universe' and 'events'");
  for (const auto& u : j.at("universe")) r.universe.push_back(u.get<std::string>());
  if (j.contains("window")) {
    r.window_start = j.at("window").at(0).get<int>();
    r.window_end = j.at("window").at(1).get<int>();
  }
  for (const auto& e : j.at("events")) {
    MarketEvent ev;
    ev.region = e.at("region").get<std::string>();
    ev.kind = market_kind_from_string(e.at("kind").get<std::string>());
    ev.start_year = e.at("start_year").get<int>();
    r.events.push_back(std::move(ev));
  }
  r.validate();
  return r;
}

TreatmentRegistry load_registry_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open registry file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_registry_json(buf.str());
}

std::string registry_to_json(const TreatmentRegistry& registry) {
  json j;
  j["universe"] = registry.universe;
  j["window"] = {registry.window_start, registry.window_end};
  j["events"] = json::array();
  for (const auto& e : registry.events)
    j["events"].push_back({{"region", e.region},
                           {"kind", to_string(e.kind)},
                           {"start_year", e.start_year}});
  return j.dump(2);
}

ExposureSet exposure_set(const TreatmentRegistry& registry,
                         const std::string& region, int year) {
  if (!registry.in_universe(region))
    throw DesignError("region not in registry universe: " + region);
  ExposureSet out;
  for (const auto& e : registry.events)
    if (e.region == region && e.start_year <= year) out.insert(e.kind);
  return out;
}

// --- Period groups ----------------------------------------------------------

std::vector<Period> registry_periods(const TreatmentRegistry& registry) {
  std::set<int> cuts;
  for (const auto& e : registry.events) cuts.insert(e.start_year);
  std::vector<Period> periods;
  int start = registry.window_start;
  for (int cut : cuts) {
    if (cut > start) periods.push_back({start, cut - 1});
    start = cut;
  }
  periods.push_back({start, registry.window_end});
  return periods;
}

namespace {

// The eight observed market permutations. Any other combination means the
// registry is inconsistent with the group-code scheme.
std::optional<char> letter_for_exposure(const ExposureSet& e) {
  using MK = MarketKind;
  const bool p = e.count(MK::Pollution), c = e.count(MK::Carbon),
             n = e.count(MK::Energy), g = e.count(MK::GreenElectricity);
  if (e.empty()) return 'A';
  if (!p && c && n && !g) return 'B';
  if (!p && c && !n && !g) return 'C';
  if (!p && c && !n && g) return 'D';
  if (p && !c && !n && !g) return 'E';
  if (p && c && !n && !g) return 'F';
  if (p && !c && n && !g) return 'G';
  if (p && !c && !n && g) return 'H';
  return std::nullopt;
}

}  // namespace

std::map<std::string, GroupCode> assign_groups(
    const TreatmentRegistry& registry, const Period& period) {
  const auto periods = registry_periods(registry);
  int index = -1;
  for (std::size_t i = 0; i < periods.size(); ++i)
    if (periods[i].start == period.start && periods[i].end == period.end)
      index = static_cast<int>(i);
  if (index < 0)
    throw DesignError("period [" + std::to_string(period.start) + ", " +
                      std::to_string(period.end) +
                      "] is not a registry period");

  std::map<std::string, GroupCode> out;
  std::map<std::string, int> counts;
  for (const auto& region : registry.universe) {
    // Exposure is constant within a period: events only fall on period
    // start years. Evaluate at the period end to include them all.
    ExposureSet exposure = exposure_set(registry, region, period.end);
    auto letter = letter_for_exposure(exposure);
    if (!letter)
      throw DesignError("region " + region + " has exposure " +
                        to_string(exposure) +
                        " with no group code in period [" +
                        std::to_string(period.start) + ", " +
                        std::to_string(period.end) + "]");
    GroupCode code;
    code.label = std::string(1, *letter) + std::to_string(index);
    code.period_index = index;
    code.exposure = std::move(exposure);
    out[region] = std::move(code);
    counts[out[region].label] += 1;
  }
  for (auto& [region, code] : out) code.region_count = counts[code.label];
  return out;
}

std::map<std::string, int> group_counts(const TreatmentRegistry& registry,
                                        const Period& period) {
  std::map<std::string, int> counts;
  for (const auto& [region, code] : assign_groups(registry, period))
    counts[code.label] += 1;
  return counts;
}

// --- Panel designs ----------------------------------------------------------

bool PanelSpec::staggered() const {
  std::set<int> years;
  for (const auto& [r, y] : treatment_year) years.insert(y);
  return years.size() > 1;
}

int PanelSpec::treatment_year_of(const std::string& region) const {
  auto it = treatment_year.find(region);
  if (it == treatment_year.end())
    throw DesignError("region " + region + " is not treated in this panel");
  return it->second;
}

std::string panel_spec_to_json(const PanelSpec& spec) {
  json j;
  j["panel_id"] = spec.panel_id;
  j["name"] = spec.name;
  json cond = json::array(), added = json::array();
  for (auto k : spec.conditioning) cond.push_back(to_string(k));
  for (auto k : spec.added) added.push_back(to_string(k));
  j["conditioning"] = cond;
  j["added"] = added;
  j["treated_regions"] = spec.treated_regions;
  j["control_regions"] = spec.control_regions;
  j["treatment_year"] = spec.treatment_year;
  j["t0"] = spec.t0;
  j["window"] = {spec.window_start, spec.window_end};
  j["clean_until"] = spec.clean_until;
  j["enforce_clean"] = spec.enforce_clean;
  return j.dump(2);
}

namespace {

ExposureSet set_union(const ExposureSet& a, const ExposureSet& b) {
  ExposureSet out = a;
  out.insert(b.begin(), b.end());
  return out;
}

// Last year (>= from, <= window_end) through which the region's exposure
// stays exactly `expected`.
int last_clean_year(const TreatmentRegistry& registry,
                    const std::string& region, int from,
                    const ExposureSet& expected, int window_end) {
  int last = from - 1;
  for (int y = from; y <= window_end; ++y) {
    if (exposure_set(registry, region, y) != expected) break;
    last = y;
  }
  return last;
}

}  // namespace

PanelSpec derive_panel(const TreatmentRegistry& registry,
                       const ExposureSet& conditioning,
                       const ExposureSet& added, const DeriveOptions& opts) {
  if (added.empty()) throw DesignError("derive_panel: no added market");
  const ExposureSet full = set_union(conditioning, added);

  PanelSpec spec;
  spec.conditioning = conditioning;
  spec.added = added;

  // Window starts with the conditioning market's earliest adoption.
  int ws = registry.window_start;
  if (!conditioning.empty()) {
    int earliest = registry.window_end + 1;
    for (const auto& e : registry.events)
      if (conditioning.count(e.kind)) earliest = std::min(earliest, e.start_year);
    if (earliest > registry.window_end)
      throw DesignError("registry has no events for conditioning markets " +
                        to_string(conditioning));
    ws = earliest;
  }
  spec.window_start = opts.window_start.value_or(ws);
  spec.window_end = opts.window_end.value_or(registry.window_end);

  // Treated: regions whose exposure steps from `conditioning` to
  // `conditioning + added` in some year g (all added markets starting by g).
  for (const auto& region : registry.universe) {
    int g = 0;
    bool has_all = true;
    for (auto kind : added) {
      auto y = registry.event_year(region, kind);
      if (!y) {
        has_all = false;
        break;
      }
      g = std::max(g, *y);
    }
    if (!has_all || g <= spec.window_start) continue;
    if (!opts.cohort_filter.empty() && !opts.cohort_filter.count(g)) continue;
    if (exposure_set(registry, region, g - 1) != conditioning) continue;
    if (exposure_set(registry, region, g) != full) continue;
    spec.treated_regions.insert(region);
    spec.treatment_year[region] = g;
  }
  if (spec.treated_regions.empty())
    throw DesignError("derive_panel: no region adds " + to_string(added) +
                      " on top of " + to_string(conditioning));
  spec.t0 = registry.window_end;
  for (const auto& [r, g] : spec.treatment_year) spec.t0 = std::min(spec.t0, g);

  // Controls: regions holding exactly the conditioning exposure from the
  // window start through at least t0.
  for (const auto& region : registry.universe) {
    if (spec.treated_regions.count(region)) continue;
    bool clean = true;
    for (int y = spec.window_start; y <= spec.t0 && clean; ++y)
      clean = exposure_set(registry, region, y) == conditioning;
    if (clean) spec.control_regions.insert(region);
  }
  if (spec.control_regions.empty())
    throw DesignError("derive_panel: no clean control region for " +
                      to_string(conditioning) + " + " + to_string(added));

  // Clean year ranges: controls until their exposure changes, treated
  // until they pick up a market beyond conditioning + added.
  for (const auto& region : spec.control_regions)
    spec.clean_until[region] = last_clean_year(
        registry, region, spec.window_start, conditioning, spec.window_end);
  for (const auto& region : spec.treated_regions) {
    const int g = spec.treatment_year.at(region);
    spec.clean_until[region] =
        last_clean_year(registry, region, g, full, spec.window_end);
  }
  return spec;
}

PanelSpec panel_spec(const TreatmentRegistry& registry, int panel_id) {
  using MK = MarketKind;
  PanelSpec spec;
  DeriveOptions opts;
  switch (panel_id) {
    case 1:
      spec = derive_panel(registry, {}, {MK::Pollution});
      spec.name = "pollution_vs_all";
      break;
    case 2:
      // The first carbon wave only; later carbon adopters come with other
      // markets attached and drop out mechanically.
      spec = derive_panel(registry, {}, {MK::Carbon});
      spec.name = "carbon_vs_no_policy";
      break;
    case 3: {
      // Single-cohort version: carbon added to pollution in the first wave.
      PanelSpec all = derive_panel(registry, {MK::Pollution}, {MK::Carbon});
      opts.cohort_filter = {all.t0};
      spec = derive_panel(registry, {MK::Pollution}, {MK::Carbon}, opts);
      spec.name = "add_carbon_on_pollution";
      break;
    }
    case 4:
      spec = derive_panel(registry, {MK::Pollution}, {MK::Carbon});
      spec.name = "add_carbon_on_pollution_staggered";
      break;
    case 5:
      spec = derive_panel(registry, {}, {MK::Carbon, MK::Energy});
      spec.name = "carbon_energy_vs_no_policy";
      break;
    case 6:
      spec = derive_panel(registry, {MK::Pollution}, {MK::Energy});
      spec.name = "add_energy_on_pollution";
      break;
    case 7:
      spec = derive_panel(registry, {MK::Carbon}, {MK::GreenElectricity});
      spec.name = "add_green_on_carbon";
      break;
    case 8:
      spec = derive_panel(registry, {MK::Pollution}, {MK::GreenElectricity});
      spec.name = "add_green_on_pollution";
      break;
    default:
      throw DesignError("panel_id must be 1..8, got " +
                        std::to_string(panel_id));
  }
  spec.panel_id = panel_id;
  return spec;
}

PanelDataset panel_subset(const PanelSpec& spec, const PanelDataset& dataset) {
  PanelDataset out;
  out.prepared = dataset.prepared;
  out.provenance = dataset.provenance + "|panel=" + std::to_string(spec.panel_id);
  for (const auto& o : dataset.observations) {
    auto it = spec.clean_until.find(o.region);
    if (it == spec.clean_until.end()) continue;
    if (o.year < spec.window_start || o.year > spec.window_end) continue;
    if (o.year > it->second) continue;  // contaminated years excluded
    out.observations.push_back(o);
  }
  return out;
}

std::pair<PanelSpec, PanelDataset> build_panel(
    const TreatmentRegistry& registry, int panel_id,
    const PanelDataset& dataset) {
  if (!dataset.prepared && !dataset.empty())
    throw DesignError("build_panel requires a prepared dataset");
  PanelSpec spec = panel_spec(registry, panel_id);
  return {spec, panel_subset(spec, dataset)};
}

// --- Clean-control verification ----------------------------------------------

CleanControlReport verify_clean_controls(const PanelSpec& spec,
                                         const TreatmentRegistry& registry) {
  CleanControlReport report;
  auto flag = [&](const std::string& region, int year,
                  const ExposureSet& exposure, const std::string& detail) {
    report.pass = false;
    report.violations.push_back({region, year, exposure, detail});
  };

  for (const auto& region : spec.treated_regions)
    if (spec.control_regions.count(region))
      flag(region, 0, {}, "region is in both treated and control sets");

  const ExposureSet full = set_union(spec.conditioning, spec.added);
  auto clean_end = [&](const std::string& region) {
    auto it = spec.clean_until.find(region);
    return it != spec.clean_until.end() ? std::min(it->second, spec.window_end)
                                        : spec.window_end;
  };

  for (const auto& region : spec.control_regions) {
    if (!registry.in_universe(region)) {
      flag(region, 0, {}, "control region not in registry universe");
      continue;
    }
    const int end = clean_end(region);
    if (end < spec.t0)
      flag(region, end, exposure_set(registry, region, std::max(end, spec.window_start)),
           "control contributes no post-treatment years");
    for (int y = spec.window_start; y <= end; ++y) {
      auto e = exposure_set(registry, region, y);
      if (e != spec.conditioning)
        flag(region, y, e, "control exposure differs from conditioning set");
    }
  }

  for (const auto& region : spec.treated_regions) {
    if (!registry.in_universe(region)) {
      flag(region, 0, {}, "treated region not in registry universe");
      continue;
    }
    auto git = spec.treatment_year.find(region);
    if (git == spec.treatment_year.end()) {
      flag(region, 0, {}, "treated region has no treatment year");
      continue;
    }
    const int g = git->second;
    const int end = clean_end(region);
    for (int y = spec.window_start; y <= end; ++y) {
      auto e = exposure_set(registry, region, y);
      const ExposureSet& expected = (y < g) ? spec.conditioning : full;
      if (e != expected)
        flag(region, y, e,
             y < g ? "treated exposure differs from conditioning before adoption"
                   : "treated exposure differs from conditioning+added");
    }
  }
  return report;
}

// --- Static (replication) designs --------------------------------------------

PanelSpec static_spec(const TreatmentRegistry& registry, MarketKind kind) {
  PanelSpec spec;
  spec.name = "static_" + to_string(kind);
  spec.added = {kind};
  spec.window_start = registry.window_start;
  spec.window_end = registry.window_end;
  spec.enforce_clean = false;
  for (const auto& region : registry.universe) {
    auto y = registry.event_year(region, kind);
    if (y) {
      spec.treated_regions.insert(region);
      spec.treatment_year[region] = *y;
    } else {
      spec.control_regions.insert(region);
    }
    spec.clean_until[region] = registry.window_end;
  }
  if (spec.treated_regions.empty())
    throw DesignError("no pilot regions for market " + to_string(kind));
  if (spec.control_regions.empty())
    throw DesignError("no control regions for market " + to_string(kind));
  spec.t0 = registry.window_end;
  for (const auto& [r, g] : spec.treatment_year) spec.t0 = std::min(spec.t0, g);
  return spec;
}

}  // namespace paneleval
