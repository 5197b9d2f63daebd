#pragma once

#include <stdexcept>
#include <string>

namespace paneleval {

// Error taxonomy mirrors the CLI exit codes: ingestion (2), design (3),
// numerical (4). Library code throws; the CLI maps to exit status.

class IngestError : public std::runtime_error {
 public:
  explicit IngestError(const std::string& msg) : std::runtime_error(msg) {}
};

class DesignError : public std::runtime_error {
 public:
  explicit DesignError(const std::string& msg) : std::runtime_error(msg) {}
};

class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace paneleval
