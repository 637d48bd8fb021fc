#include "capmod_cli/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "capmod/error.hpp"

namespace capmod::cli {
namespace {

std::string csv_cell(const Json& v) {
  if (v.is_number_float()) return format_number(v.get<double>());
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
      if (c == '"') out += '"';
      out += c;
    }
    return out + "\"";
  }
  if (v.is_null()) return "";
  return v.dump();
}

std::string text_cell(const Json& v) {
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (!std::isfinite(d)) return format_number(d);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", d);
    return buf;
  }
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return "-";
  return v.dump();
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_json(std::ostream& os, const Json& j) {
  switch (j.type()) {
    case Json::value_t::object: {
      os << '{';
      bool first = true;
      for (const auto& [k, v] : j.items()) {
        if (!first) os << ',';
        first = false;
        os << Json(k).dump() << ':';
        write_json(os, v);
      }
      os << '}';
      break;
    }
    case Json::value_t::array: {
      os << '[';
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ',';
        write_json(os, j[i]);
      }
      os << ']';
      break;
    }
    case Json::value_t::number_float: {
      const double d = j.get<double>();
      // JSON has no infinities; non-finite values become strings.
      if (std::isfinite(d)) {
        os << format_number(d);
      } else {
        os << '"' << format_number(d) << '"';
      }
      break;
    }
    default:
      os << j.dump();
  }
}

void write_report(std::ostream& os, const Report& r, const std::string& format) {
  if (format == "json") {
    Json j = Json::object();
    j["command"] = r.command;
    j["summary"] = r.summary;
    Json rows = Json::array();
    for (const auto& row : r.rows) {
      Json o = Json::object();
      for (std::size_t c = 0; c < r.columns.size() && c < row.size(); ++c) {
        o[r.columns[c]] = row[c];
      }
      rows.push_back(std::move(o));
    }
    j["rows"] = std::move(rows);
    j["warnings"] = r.warnings;
    write_json(os, j);
    os << '\n';
    return;
  }
  if (format == "csv") {
    if (r.columns.empty()) {
      os << "key,value\n";
      for (const auto& [k, v] : r.summary.items()) os << k << ',' << csv_cell(v) << '\n';
      return;
    }
    for (std::size_t c = 0; c < r.columns.size(); ++c) {
      os << (c ? "," : "") << r.columns[c];
    }
    os << '\n';
    for (const auto& row : r.rows) {
      for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << csv_cell(row[c]);
      os << '\n';
    }
    return;
  }
  if (format != "text") throw ConfigError("unknown output format '" + format + "'");

  os << r.command << '\n';
  std::size_t key_width = 0;
  for (const auto& [k, v] : r.summary.items()) key_width = std::max(key_width, k.size());
  for (const auto& [k, v] : r.summary.items()) {
    os << "  " << k << std::string(key_width - k.size(), ' ') << "  " << text_cell(v) << '\n';
  }
  if (!r.columns.empty()) {
    std::vector<std::size_t> w(r.columns.size());
    std::vector<std::vector<std::string>> cells;
    for (std::size_t c = 0; c < r.columns.size(); ++c) w[c] = r.columns[c].size();
    for (const auto& row : r.rows) {
      cells.emplace_back();
      for (std::size_t c = 0; c < row.size() && c < w.size(); ++c) {
        cells.back().push_back(text_cell(row[c]));
        w[c] = std::max(w[c], cells.back().back().size());
      }
    }
    os << '\n';
    for (std::size_t c = 0; c < r.columns.size(); ++c) {
      os << (c ? "  " : "") << std::string(w[c] - r.columns[c].size(), ' ') << r.columns[c];
    }
    os << '\n';
    for (const auto& row : cells) {
      for (std::size_t c = 0; c < row.size(); ++c) {
        os << (c ? "  " : "") << std::string(w[c] - row[c].size(), ' ') << row[c];
      }
      os << '\n';
    }
  }
  for (const auto& msg : r.warnings) os << "warning: " << msg << '\n';
}

}  // namespace capmod::cli
