#include "paneleval/csdid.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "paneleval/errors.hpp"
#include "paneleval/fe.hpp"

namespace paneleval {

std::string to_string(AggregationScheme scheme) {
  switch (scheme) {
    case AggregationScheme::Simple: return "simple";
    case AggregationScheme::EventPre: return "event_pre";
    case AggregationScheme::EventPost: return "event_post";
    case AggregationScheme::ByGroup: return "by_group";
    case AggregationScheme::ByCalendar: return "by_calendar";
  }
  return "?";
}

AggregationScheme aggregation_scheme_from_string(const std::string& name) {
  if (name == "simple") return AggregationScheme::Simple;
  if (name == "event_pre") return AggregationScheme::EventPre;
  if (name == "event_post") return AggregationScheme::EventPost;
  if (name == "by_group") return AggregationScheme::ByGroup;
  if (name == "by_calendar") return AggregationScheme::ByCalendar;
  throw DesignError("unknown aggregation scheme: " + name);
}

namespace {

struct UnitSeries {
  std::string unit_id;
  int cohort = 0;  // 0 = never treated within this spec
  std::map<int, double> outcome_by_year;
  std::map<int, std::array<double, kNumCovariates>> covariates_by_year;
};

std::vector<UnitSeries> collect_units(const PanelDataset& subset,
                                      const PanelSpec& spec) {
  std::map<std::string, UnitSeries> units;
  for (const auto& o : subset.observations) {
    const bool is_treated = spec.treated_regions.count(o.region) > 0;
    if (!is_treated && !spec.control_regions.count(o.region)) continue;
    if (o.year < spec.window_start || o.year > spec.window_end) continue;
    auto& u = units[o.unit_id];
    u.unit_id = o.unit_id;
    u.cohort = is_treated ? spec.treatment_year_of(o.region) : 0;
    if (o.roa) u.outcome_by_year[o.year] = *o.roa;
    std::array<double, kNumCovariates> row{};
    bool complete = true;
    for (std::size_t k = 0; k < kNumCovariates; ++k) {
      if (o.covariates[k]) row[k] = *o.covariates[k];
      else complete = false;
    }
    if (complete) u.covariates_by_year[o.year] = row;
  }
  std::vector<UnitSeries> out;
  out.reserve(units.size());
  for (auto& [id, u] : units) out.push_back(std::move(u));
  return out;
}

}  // namespace

GroupTimeATT estimate_att_gt(const PanelDataset& subset, const PanelSpec& spec,
                             int g, int t, const CsdidOptions& opts) {
  if (t == g - 1)
    throw DesignError("ATT(g, g-1) is the base period and identically zero");

  std::vector<int> cov_idx;
  for (const auto& name : opts.covariates) {
    int idx = covariate_index(name);
    if (idx < 0) throw DesignError("unknown covariate: " + name);
    cov_idx.push_back(idx);
  }
  const int base = g - 1;
  const auto units = collect_units(subset, spec);

  // Complete pairs: outcome observed in both the base period and t, and
  // base-period covariates present when adjustment is requested.
  struct Pair {
    const UnitSeries* unit;
    double delta;
    Eigen::VectorXd x;  // [1, covariates at base]
  };
  std::vector<Pair> cohort, pool;
  const auto k = static_cast<Eigen::Index>(1 + cov_idx.size());
  for (const auto& u : units) {
    auto y_t = u.outcome_by_year.find(t);
    auto y_b = u.outcome_by_year.find(base);
    if (y_t == u.outcome_by_year.end() || y_b == u.outcome_by_year.end())
      continue;
    Pair p{&u, y_t->second - y_b->second, Eigen::VectorXd::Ones(k)};
    if (!cov_idx.empty()) {
      auto xit = u.covariates_by_year.find(base);
      if (xit == u.covariates_by_year.end()) continue;
      for (std::size_t j = 0; j < cov_idx.size(); ++j)
        p.x(static_cast<Eigen::Index>(j + 1)) =
            xit->second[static_cast<std::size_t>(cov_idx[j])];
    }
    if (u.cohort == g) {
      cohort.push_back(std::move(p));
    } else if (u.cohort == 0 ||
               (!opts.never_treated_only && u.cohort > std::max(t, base))) {
      // Not yet treated at either comparison date.
      pool.push_back(std::move(p));
    }
  }

  if (cohort.empty())
    throw DesignError("cohort " + std::to_string(g) +
                      " has no complete (base, t) pairs for t = " +
                      std::to_string(t));
  if (pool.empty())
    throw DesignError("empty control pool for ATT(" + std::to_string(g) +
                      ", " + std::to_string(t) + ")");

  const double n1 = static_cast<double>(cohort.size());
  const double n0 = static_cast<double>(pool.size());

  // Outcome-regression adjustment fitted on the pool; with no covariates
  // this reduces to the plain difference of mean changes.
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(k);
  for (const auto& p : pool) {
    a += p.x * p.x.transpose();
    b += p.x * p.delta;
  }
  a /= n0;
  b /= n0;
  Eigen::LDLT<Eigen::MatrixXd> a_ldlt(a);
  if (a_ldlt.info() != Eigen::Success)
    throw NumericError("singular covariate design in control pool for ATT(" +
                       std::to_string(g) + ", " + std::to_string(t) + ")");
  Eigen::VectorXd theta = a_ldlt.solve(b);

  double att = 0;
  Eigen::VectorXd x1_mean = Eigen::VectorXd::Zero(k);
  for (const auto& p : cohort) {
    att += (p.delta - p.x.dot(theta)) / n1;
    x1_mean += p.x / n1;
  }

  GroupTimeATT cell;
  cell.cohort_g = g;
  cell.period_t = t;
  cell.att = att;
  cell.n_treated = cohort.size();
  cell.n_control = pool.size();

  // Plug-in influence contributions; Var = sum of squares.
  Eigen::VectorXd adj = a_ldlt.solve(x1_mean);
  for (const auto& p : cohort)
    cell.influence[p.unit->unit_id] += (p.delta - p.x.dot(theta) - att) / n1;
  for (const auto& p : pool) {
    const double eps = p.delta - p.x.dot(theta);
    cell.influence[p.unit->unit_id] += -adj.dot(p.x) * eps / n0;
  }
  double var = 0;
  for (const auto& [id, v] : cell.influence) var += v * v;
  cell.se = std::sqrt(var);
  return cell;
}

std::vector<GroupTimeATT> estimate_att_cells(const PanelDataset& subset,
                                             const PanelSpec& spec,
                                             const CsdidOptions& opts) {
  std::set<int> cohorts;
  for (const auto& [region, year] : spec.treatment_year) cohorts.insert(year);
  if (cohorts.empty()) throw DesignError("spec has no treated cohorts");

  std::set<int> years;
  for (const auto& o : subset.observations)
    if (o.year >= spec.window_start && o.year <= spec.window_end)
      years.insert(o.year);

  std::vector<GroupTimeATT> cells;
  for (int g : cohorts) {
    for (int t : years) {
      if (t == g - 1) continue;
      try {
        cells.push_back(estimate_att_gt(subset, spec, g, t, opts));
      } catch (const DesignError& e) {
        GroupTimeATT cell;
        cell.cohort_g = g;
        cell.period_t = t;
        cell.available = false;
        cell.note = e.what();
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

namespace {

// Cohort size = largest complete-pair count seen for that cohort.
std::map<int, double> cohort_sizes(const std::vector<GroupTimeATT>& cells) {
  std::map<int, double> sizes;
  for (const auto& c : cells)
    if (c.available)
      sizes[c.cohort_g] =
          std::max(sizes[c.cohort_g], static_cast<double>(c.n_treated));
  return sizes;
}

AggregateResult finalize(const std::vector<const GroupTimeATT*>& cells,
                         const std::vector<double>& weights,
                         AggregationScheme scheme) {
  AggregateResult result;
  result.scheme = scheme;
  double total = 0;
  for (double w : weights) total += w;
  if (cells.empty() || total <= 0)
    throw DesignError("aggregation scheme " + to_string(scheme) +
                      " has empty support");

  std::map<std::string, double> phi;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const double w = weights[i] / total;
    result.estimate += w * cells[i]->att;
    result.components.push_back({cells[i]->cohort_g, cells[i]->period_t, w});
    for (const auto& [unit, v] : cells[i]->influence) phi[unit] += w * v;
  }
  double var = 0;
  for (const auto& [unit, v] : phi) var += v * v;
  result.se = std::sqrt(var);
  const double crit = normal_critical(0.95);
  result.ci_lo = result.estimate - crit * result.se;
  result.ci_hi = result.estimate + crit * result.se;
  result.z_stat = result.se > 0 ? result.estimate / result.se : 0.0;
  result.p_value = result.se > 0 ? normal_pvalue(result.z_stat) : 0.0;
  return result;
}

}  // namespace

AggregateResult aggregate_att(const std::vector<GroupTimeATT>& cells,
                              AggregationScheme scheme) {
  std::vector<const GroupTimeATT*> used;
  std::vector<double> weights;
  const auto sizes = cohort_sizes(cells);

  auto post = [](const GroupTimeATT& c) { return c.period_t >= c.cohort_g; };

  switch (scheme) {
    case AggregationScheme::Simple: {
      for (const auto& c : cells) {
        if (!c.available || !post(c)) continue;
        used.push_back(&c);
        weights.push_back(static_cast<double>(c.n_treated));
      }
      break;
    }
    case AggregationScheme::EventPre:
    case AggregationScheme::EventPost: {
      const bool pre = scheme == AggregationScheme::EventPre;
      std::map<int, double> time_totals;  // event time -> total size
      for (const auto& c : cells) {
        if (!c.available) continue;
        const int e = c.event_time();
        if (pre ? e >= -1 : e < 0) continue;
        time_totals[e] += static_cast<double>(c.n_treated);
      }
      if (time_totals.empty())
        throw DesignError("aggregation scheme " + to_string(scheme) +
                          " has empty support");
      const double n_times = static_cast<double>(time_totals.size());
      for (const auto& c : cells) {
        if (!c.available) continue;
        const int e = c.event_time();
        if (pre ? e >= -1 : e < 0) continue;
        used.push_back(&c);
        weights.push_back(static_cast<double>(c.n_treated) /
                          time_totals[e] / n_times);
      }
      break;
    }
    case AggregationScheme::ByGroup: {
      std::map<int, double> group_totals;  // cohort -> total post size
      for (const auto& c : cells)
        if (c.available && post(c))
          group_totals[c.cohort_g] += static_cast<double>(c.n_treated);
      double size_total = 0;
      for (const auto& [gv, sz] : sizes)
        if (group_totals.count(gv)) size_total += sz;
      for (const auto& c : cells) {
        if (!c.available || !post(c)) continue;
        used.push_back(&c);
        weights.push_back(sizes.at(c.cohort_g) / size_total *
                          static_cast<double>(c.n_treated) /
                          group_totals[c.cohort_g]);
      }
      break;
    }
    case AggregationScheme::ByCalendar: {
      std::map<int, double> year_totals;
      for (const auto& c : cells)
        if (c.available && post(c))
          year_totals[c.period_t] += static_cast<double>(c.n_treated);
      if (year_totals.empty())
        throw DesignError("aggregation scheme by_calendar has empty support");
      const double n_years = static_cast<double>(year_totals.size());
      for (const auto& c : cells) {
        if (!c.available || !post(c)) continue;
        used.push_back(&c);
        weights.push_back(static_cast<double>(c.n_treated) /
                          year_totals[c.period_t] / n_years);
      }
      break;
    }
  }
  return finalize(used, weights, scheme);
}

std::vector<AggregateResult> aggregate_all_schemes(
    const std::vector<GroupTimeATT>& cells) {
  std::vector<AggregateResult> out;
  for (auto scheme :
       {AggregationScheme::Simple, AggregationScheme::EventPre,
        AggregationScheme::EventPost, AggregationScheme::ByGroup,
        AggregationScheme::ByCalendar}) {
    try {
      out.push_back(aggregate_att(cells, scheme));
    } catch (const DesignError&) {
      // Schemes without support (e.g. no pre-period cells) are skipped.
    }
  }
  return out;
}

double multiplier_bootstrap_se(const std::vector<GroupTimeATT>& cells,
                               AggregationScheme scheme, int n_draws,
                               std::uint64_t seed) {
  AggregateResult agg = aggregate_att(cells, scheme);

  // Rebuild the per-unit influence sums with the aggregate's weights.
  std::map<std::string, double> phi;
  for (const auto& comp : agg.components) {
    for (const auto& c : cells) {
      if (!c.available || c.cohort_g != comp.cohort_g ||
          c.period_t != comp.period_t)
        continue;
      for (const auto& [unit, v] : c.influence) phi[unit] += comp.weight * v;
    }
  }
  std::vector<double> phis;
  phis.reserve(phi.size());
  for (const auto& [unit, v] : phi) phis.push_back(v);

  std::mt19937_64 rng(seed);
  std::vector<double> draws(static_cast<std::size_t>(n_draws));
  for (auto& d : draws) {
    double s = 0;
    for (double v : phis) s += ((rng() & 1ull) ? 1.0 : -1.0) * v;
    d = s;
  }
  double mean = 0;
  for (double d : draws) mean += d;
  mean /= static_cast<double>(n_draws);
  double var = 0;
  for (double d : draws) var += (d - mean) * (d - mean);
  var /= static_cast<double>(n_draws - 1);
  return std::sqrt(var);
}

}  // namespace paneleval
