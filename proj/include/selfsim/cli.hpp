#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace selfsim::cli {

struct RunConfig {
  std::string command;
  int N = 1;
  double p = 2.0;
  double chi = 1.0;
  std::optional<double> a_or_b;
  std::optional<std::pair<double, double>> bracket;
  std::string grid;
  std::string times;
  std::string direction = "backward";
  double T = 1.0;
  double rel_tol = 1e-10;
  double abs_tol = 1e-10;
  double event_tol = 1e-12;
  std::optional<double> r_max;
  double slope_tol = 1e-6;
  int points = 4000;
  bool fit_decay = false;
  std::string output;
  std::string format = "csv";
  std::string gnuplot;
  bool timing = false;
  unsigned threads = 0;

  bool operator==(const RunConfig&) const = default;
};

/// Plot-ready table; cells are numbers (or null) and, for label columns,
/// strings.
struct Table {
  std::vector<std::string> columns;
  std::vector<nlohmann::json> rows;

  bool operator==(const Table&) const = default;
};

struct RunReport {
  RunConfig config;
  std::map<std::string, double> derived;
  nlohmann::json results = nlohmann::json::object();
  Table table;
  std::map<std::string, bool> tolerance_flags;
  /// Only filled when timing was requested, so reports stay reproducible.
  std::optional<double> wall_clock_seconds;

  bool operator==(const RunReport&) const = default;
};

nlohmann::json to_json(const RunConfig& c);
RunConfig config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const RunReport& r);
RunReport report_from_json(const nlohmann::json& j);

std::string serialize(const RunReport& r);
RunReport parse_report(const std::string& text);

/// CSV with a header line; numbers printed with 17 significant digits.
std::string to_csv(const Table& t);

RunReport cmd_solve_backward(const RunConfig& c);
RunReport cmd_solve_forward(const RunConfig& c);
RunReport cmd_find_critical(const RunConfig& c);
RunReport cmd_sweep(const RunConfig& c);
RunReport cmd_reconstruct(const RunConfig& c);
RunReport cmd_delta_test(const RunConfig& c);

/// Dispatches on config.command.
RunReport run(const RunConfig& c);

/// Expands "log:lo:hi:n" or "lin:lo:hi:n" into grid values.
std::vector<double> parse_grid(const std::string& spec);

/// Full command-line entry point; returns the process exit code.
int main_entry(int argc, const char* const* argv, std::ostream& out,
               std::ostream& err);

}  // namespace selfsim::cli
