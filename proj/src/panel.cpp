#include "paneleval/panel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "paneleval/csv.hpp"
#include "paneleval/errors.hpp"

namespace paneleval {

int covariate_index(const std::string& name) {
  for (std::size_t i = 0; i < kCovariateNames.size(); ++i)
    if (name == kCovariateNames[i]) return static_cast<int>(i);
  return -1;
}

void validate_unique_unit_years(const PanelDataset& panel) {
  std::set<std::pair<std::string, int>> seen;
  for (const auto& o : panel.observations) {
    if (!seen.insert({o.unit_id, o.year}).second)
      throw IngestError("duplicate (unit_id, year) pair: (" + o.unit_id +
                        ", " + std::to_string(o.year) + ")");
  }
}

// --- Outcome construction ---------------------------------------------------

std::optional<double> compute_roa(std::optional<double> net_profit,
                                  std::optional<double> assets_begin,
                                  std::optional<double> assets_end) {
  if (!net_profit || !assets_begin || !assets_end) return std::nullopt;
  const double avg_assets = (*assets_begin + *assets_end) / 2.0;
  if (avg_assets == 0.0) return std::nullopt;
  return 100.0 * *net_profit / avg_assets;
}

std::optional<double> compute_roa_before_tax(
    std::optional<double> total_profit,
    std::optional<double> financial_expenses,
    std::optional<double> assets_begin, std::optional<double> assets_end) {
  if (!total_profit || !financial_expenses) return std::nullopt;
  return compute_roa(*total_profit + *financial_expenses, assets_begin,
                     assets_end);
}

// --- Winsorization ----------------------------------------------------------

double interpolated_quantile(std::vector<double> x, double q) {
  if (x.empty()) throw DesignError("quantile of empty sample");
  std::sort(x.begin(), x.end());
  if (x.size() == 1) return x[0];
  const double h = (static_cast<double>(x.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, x.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return x[lo] + frac * (x[hi] - x[lo]);
}

std::vector<std::optional<double>> winsorize_column(
    const std::vector<std::optional<double>>& values, double lower_q,
    double upper_q, TailRule rule) {
  if (!(0.0 <= lower_q && lower_q < upper_q && upper_q <= 1.0))
    throw DesignError("invalid quantile pair [" + std::to_string(lower_q) +
                      ", " + std::to_string(upper_q) + "]");
  std::vector<double> present;
  present.reserve(values.size());
  for (const auto& v : values)
    if (v) present.push_back(*v);
  if (present.empty())
    throw DesignError("winsorize_column: no non-missing values");

  const double lo = interpolated_quantile(present, lower_q);
  const double hi = interpolated_quantile(present, upper_q);

  std::vector<std::optional<double>> out = values;
  for (auto& v : out) {
    if (!v) continue;
    if (*v < lo) v = (rule == TailRule::Clamp) ? std::optional<double>(lo)
                                               : std::nullopt;
    else if (*v > hi) v = (rule == TailRule::Clamp) ? std::optional<double>(hi)
                                                    : std::nullopt;
  }
  return out;
}

// --- Panel preparation ------------------------------------------------------

PrepareReport prepare_panel(PanelDataset& panel, const PrepareOptions& opts) {
  PrepareReport report;
  if (panel.empty()) throw DesignError("prepare_panel: empty panel");

  auto winsorize_field = [&](auto getter) {
    std::vector<std::optional<double>> col;
    col.reserve(panel.size());
    for (auto& o : panel.observations) col.push_back(getter(o));
    bool any = std::any_of(col.begin(), col.end(),
                           [](const auto& v) { return v.has_value(); });
    if (!any) return;  // nothing to winsorize in this column
    col = winsorize_column(col, opts.lower_q, opts.upper_q, opts.tail_rule);
    for (std::size_t i = 0; i < panel.size(); ++i)
      getter(panel.observations[i]) = col[i];
  };

  if (opts.winsorize_outcome)
    winsorize_field([](Observation& o) -> std::optional<double>& { return o.roa; });
  if (opts.winsorize_covariates)
    for (std::size_t k = 0; k < kNumCovariates; ++k)
      winsorize_field([k](Observation& o) -> std::optional<double>& {
        return o.covariates[k];
      });

  panel.prepared = true;
  return report;
}

// --- Summaries --------------------------------------------------------------

namespace {

SummaryRow summarize_values(const std::string& name,
                            const std::vector<double>& v) {
  SummaryRow row;
  row.variable = name;
  row.n = v.size();
  if (v.empty()) {
    row.sd_undefined = true;
    return row;
  }
  double sum = 0;
  row.min = v[0];
  row.max = v[0];
  for (double x : v) {
    sum += x;
    row.min = std::min(row.min, x);
    row.max = std::max(row.max, x);
  }
  row.mean = sum / static_cast<double>(v.size());
  if (v.size() >= 2) {
    double ss = 0;
    for (double x : v) ss += (x - row.mean) * (x - row.mean);
    row.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  } else {
    row.sd = 0.0;
    row.sd_undefined = true;
  }
  std::vector<double> sorted = v;
  row.median = interpolated_quantile(std::move(sorted), 0.5);
  return row;
}

}  // namespace

SummaryTable summarize(const PanelDataset& panel,
                       const std::optional<SplitLabels>& split) {
  if (panel.empty()) throw DesignError("summarize: empty panel");
  if (split) {
    for (const auto& o : panel.observations) {
      const bool t = split->treated_units.count(o.unit_id) > 0;
      const bool c = split->control_units.count(o.unit_id) > 0;
      if (t == c)
        throw DesignError("summarize: unit '" + o.unit_id +
                          "' has no valid treated/control label");
    }
  }

  SummaryTable table;
  auto add_variable = [&](const std::string& name, auto getter) {
    std::vector<double> all, treated, control;
    for (const auto& o : panel.observations) {
      auto v = getter(o);
      if (!v) continue;
      all.push_back(*v);
      if (split) {
        if (split->treated_units.count(o.unit_id))
          treated.push_back(*v);
        else
          control.push_back(*v);
      }
    }
    SummaryRow row = summarize_values(name, all);
    if (split) {
      auto mean_of = [](const std::vector<double>& xs) -> std::optional<double> {
        if (xs.empty()) return std::nullopt;
        double s = 0;
        for (double x : xs) s += x;
        return s / static_cast<double>(xs.size());
      };
      row.treated_mean = mean_of(treated);
      row.control_mean = mean_of(control);
      if (row.treated_mean && row.control_mean)
        row.difference = *row.treated_mean - *row.control_mean;
    }
    table.rows.push_back(std::move(row));
  };

  add_variable("roa", [](const Observation& o) { return o.roa; });
  for (std::size_t k = 0; k < kNumCovariates; ++k)
    add_variable(kCovariateNames[k],
                 [k](const Observation& o) { return o.covariates[k]; });
  return table;
}

// --- Industry filter --------------------------------------------------------

PanelDataset filter_industries(const PanelDataset& panel,
                               const std::set<char>& codes) {
  for (char c : codes)
    if (c < 'A' || c > 'S')
      throw DesignError(std::string("unknown industry code: ") + c);
  PanelDataset out;
  out.prepared = panel.prepared;
  out.provenance = panel.provenance + "|industries=";
  for (char c : codes) out.provenance.push_back(c);
  for (const auto& o : panel.observations)
    if (codes.count(o.industry)) out.observations.push_back(o);
  return out;
}

// --- CSV I/O ----------------------------------------------------------------

namespace {

// FNV-1a over the raw text, used as the provenance digest.
std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace

LoadResult parse_panel_csv(const std::string& text, const LoadOptions& opts,
                           const std::string& provenance) {
  csv::Table t = csv::parse(text);
  for (const char* req : {"unit_id", "region", "industry", "year"})
    if (t.column(req) < 0)
      throw IngestError(std::string("panel csv missing column: ") + req);

  const int c_unit = t.column("unit_id");
  const int c_region = t.column("region");
  const int c_ind = t.column("industry");
  const int c_year = t.column("year");
  const int c_roa = t.column("roa");
  const int c_roa_bt = t.column("roa_before_tax");
  const int c_st = t.column("st_flag");
  const int c_np = t.column("net_profit");
  const int c_tp = t.column("total_profit");
  const int c_fe = t.column("financial_expenses");
  const int c_ab = t.column("assets_begin");
  const int c_ae = t.column("assets_end");
  std::array<int, kNumCovariates> c_cov{};
  for (std::size_t k = 0; k < kNumCovariates; ++k)
    c_cov[k] = t.column(kCovariateNames[k]);

  const bool raw_post = c_np >= 0 && c_ab >= 0 && c_ae >= 0;
  const bool raw_pre = c_tp >= 0 && c_fe >= 0 && c_ab >= 0 && c_ae >= 0;

  LoadResult result;
  result.had_st_flag = c_st >= 0;
  result.panel.provenance = provenance + ":" + fnv1a_hex(text);

  auto num = [&](const std::vector<std::string>& row,
                 int col) -> std::optional<double> {
    if (col < 0) return std::nullopt;
    return csv::parse_number(row[col]);
  };

  std::size_t dropped_st = 0;
  for (const auto& row : t.rows) {
    if (c_st >= 0) {
      auto st = csv::parse_number(row[c_st]);
      if (st && *st != 0.0) {
        ++dropped_st;
        continue;
      }
    }
    Observation o;
    o.unit_id = row[c_unit];
    o.region = row[c_region];
    if (row[c_ind].size() != 1)
      throw IngestError("industry code must be a single letter, got '" +
                        row[c_ind] + "'");
    o.industry = row[c_ind][0];
    auto year = csv::parse_number(row[c_year]);
    if (!year) throw IngestError("missing year for unit " + o.unit_id);
    o.year = static_cast<int>(*year);

    switch (opts.outcome) {
      case OutcomeChoice::Roa:
        o.roa = raw_post ? compute_roa(num(row, c_np), num(row, c_ab),
                                       num(row, c_ae))
                         : num(row, c_roa);
        break;
      case OutcomeChoice::RoaBeforeTax:
        if (raw_pre)
          o.roa = compute_roa_before_tax(num(row, c_tp), num(row, c_fe),
                                         num(row, c_ab), num(row, c_ae));
        else if (c_roa_bt >= 0)
          o.roa = num(row, c_roa_bt);
        else
          throw IngestError(
              "roa_before_tax requested but neither raw accounting columns "
              "nor a roa_before_tax column are present");
        break;
    }
    for (std::size_t k = 0; k < kNumCovariates; ++k)
      o.covariates[k] = num(row, c_cov[k]);
    result.panel.observations.push_back(std::move(o));
  }

  if (c_st < 0)
    result.warnings.push_back(
        "st_flag column absent: ST/ST* exclusion is a no-op");
  else if (dropped_st > 0)
    result.warnings.push_back("dropped " + std::to_string(dropped_st) +
                              " ST-flagged rows");

  validate_unique_unit_years(result.panel);
  return result;
}

LoadResult load_panel_csv(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open panel csv: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_panel_csv(buf.str(), opts, path);
}

std::string panel_to_csv(const PanelDataset& panel) {
  std::ostringstream out;
  out << "unit_id,region,industry,year,roa";
  for (const auto* name : kCovariateNames) out << ',' << name;
  out << '\n';
  auto field = [](const std::optional<double>& v) {
    return v ? csv::format_number_full(*v) : std::string();
  };
  for (const auto& o : panel.observations) {
    out << o.unit_id << ',' << o.region << ',' << o.industry << ',' << o.year
        << ',' << field(o.roa);
    for (const auto& c : o.covariates) out << ',' << field(c);
    out << '\n';
  }
  return out.str();
}

void write_panel_csv(const PanelDataset& panel, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IngestError("cannot write panel csv: " + path);
  out << panel_to_csv(panel);
}

}  // namespace paneleval
