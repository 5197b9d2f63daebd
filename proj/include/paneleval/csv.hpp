#pragma once

#include <optional>
#include <string>
#include <vector>

namespace paneleval::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 if absent
};

// Minimal CSV: comma-separated, no quoting (the panel schema never needs
// it), header row required, empty field = missing.
Table read_file(const std::string& path);
Table parse(const std::string& text);

std::optional<double> parse_number(const std::string& field);

// Formats a double with 6 significant digits, the report convention.
std::string format_number(double v);

// Shortest decimal form that parses back to the same double; used for
// panel data files where round-trip fidelity matters.
std::string format_number_full(double v);

}  // namespace paneleval::csv
