#pragma once

#include <stdexcept>
#include <string>

namespace capmod {

/// Invalid or inconsistent user input: bad group tables, malformed regions,
/// unparsable config files. The CLI maps this to exit status 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A numerical procedure could not produce a result (disconnected graph,
/// under-resolved kernel, curve leaving the grid). The CLI maps this to 3.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace capmod
