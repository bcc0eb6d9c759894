#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "pireg/dynamics.hpp"
#include "pireg/global_iss.hpp"

namespace pireg {

// A scenario file could not be read or does not match the schema.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Contents of a scenario document: plant limits, outflow family, gains, and
// an optional sector-parameter section ("h2").
struct ScenarioFile {
  Scenario scenario;
  OutflowModel outflow;
  Gains gains;
  std::optional<SectorBounds> h2;
};

ScenarioFile load_scenario_file(const std::filesystem::path& path);
ScenarioFile parse_scenario_json(const std::string& text, const std::string& origin = "<string>");
void save_scenario_file(const ScenarioFile& file, const std::filesystem::path& path);
std::string scenario_to_json(const ScenarioFile& file);

// Decimal formatting with 17 significant digits; locale-free, round-trips.
std::string format_double(double v);

// Single-column numeric file: one value per line; a non-numeric header line is
// skipped.
std::vector<double> read_column(const std::filesystem::path& path);

// CSV with comma separator, dot decimal, one header row, 17 significant digits.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::span<const std::string_view> header);
  void row(std::initializer_list<double> values);
  void row(std::span<const std::string> cells);

 private:
  std::ofstream out_;
  std::size_t width_;
};

// Flat "key = value" report; keys are stable, order is emission order.
class Report {
 public:
  void add(std::string_view key, double v);
  void add(std::string_view key, std::int64_t v);
  void add(std::string_view key, int v) { add(key, static_cast<std::int64_t>(v)); }
  void add(std::string_view key, std::size_t v) { add(key, static_cast<std::int64_t>(v)); }
  void add(std::string_view key, bool v);
  void add(std::string_view key, std::string_view v);
  void print(std::ostream& os) const;
  void save(const std::filesystem::path& path) const;

  const std::string* find(std::string_view key) const;
  double get_double(std::string_view key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Parses a saved report back into key/value pairs (used by tests).
Report parse_report(const std::filesystem::path& path);

}  // namespace pireg
