#pragma once

// Report bundles: a summary record with pass/fail rows, CSV tables and
// optional SVG plots, written together into one output directory.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace hypbridge::report {

inline constexpr const char* kLibraryVersion = "0.1.0";

struct SummaryRow {
  std::string name;
  std::string anchor;  // the mathematical statement the row tests
  double value = 0.0;
  std::optional<double> target;
  std::optional<double> lower;  // acceptance band, when the row is checked
  std::optional<double> upper;
  bool checked = false;
  bool pass = true;
  std::string detail;
};

// Row checked against the closed band [lower, upper].
SummaryRow banded(std::string name, std::string anchor, double value, std::optional<double> lower,
                  std::optional<double> upper, std::string detail = {});
// Informational row, never fails.
SummaryRow info(std::string name, std::string anchor, double value, std::string detail = {});
// Boolean check reported as 1/0.
SummaryRow check(std::string name, std::string anchor, bool ok, std::string detail = {});

struct Table {
  std::string file;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
};

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool line = true;
};

struct Plot {
  std::string file;
  std::string title;
  std::string xlabel;
  std::string ylabel;
  std::vector<Series> series;
};

struct ReportBundle {
  std::string experiment;
  nlohmann::json config;
  std::vector<SummaryRow> summary;
  std::vector<Table> tables;
  std::vector<Plot> plots;
  double wall_seconds = 0.0;

  bool pass() const;
  const SummaryRow& row(const std::string& name) const;
};

// Shortest round-trip decimal form ("%.17g" trimmed), '.' separator always.
std::string fmt(double v);
std::string fmt(std::size_t v);
std::string csv_field(const std::string& s);
std::string to_csv(const Table& table);
std::string to_svg(const Plot& plot);
nlohmann::json summary_json(const ReportBundle& bundle, bool with_plots);

// Writes summary.json, every table and, if requested, every plot.
void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir, bool with_plots);

}  // namespace hypbridge::report
