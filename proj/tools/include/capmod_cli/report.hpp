#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace capmod::cli {

using Json = nlohmann::ordered_json;

/// Result of one CLI command: scalar summary fields plus an optional table.
struct Report {
  std::string command;
  Json summary = Json::object();
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;
  std::vector<std::string> warnings;

  void add_row(std::vector<Json> row) { rows.push_back(std::move(row)); }
};

/// Doubles in csv and json use 17 significant digits.
std::string format_number(double v);
void write_json(std::ostream& os, const Json& j);

/// format is one of text, csv, json.
void write_report(std::ostream& os, const Report& r, const std::string& format);

}  // namespace capmod::cli
