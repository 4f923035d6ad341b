#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tradenet/netmetrics.hpp"

namespace tradenet::panel {

enum class FeatureKind { kNumeric, kNominal };

// One panel value: missing, a number, or a nominal label. Missing values are
// explicit markers, never silent zeros.
class Cell {
 public:
  Cell() = default;
  static Cell number(double v) { return Cell(v); }
  static Cell label(std::string v) { return Cell(std::move(v)); }

  bool is_missing() const { return std::holds_alternative<std::monostate>(value_); }
  bool is_number() const { return std::holds_alternative<double>(value_); }
  double number_value() const { return std::get<double>(value_); }
  const std::string& label_value() const { return std::get<std::string>(value_); }

 private:
  explicit Cell(double v) : value_(v) {}
  explicit Cell(std::string v) : value_(std::move(v)) {}
  std::variant<std::monostate, double, std::string> value_;
};

struct PanelRow {
  std::string country;
  int year = 0;
  std::vector<Cell> cells;
};

struct FeaturePanel {
  std::vector<std::string> feature_names;
  std::vector<FeatureKind> kinds;
  std::vector<PanelRow> rows;

  int feature_index(const std::string& name) const;  // -1 when absent
};

// Wide indicator file: country,year,<indicator...>; empty field = missing.
// A column whose every non-empty value parses as a number is numeric,
// otherwise nominal.
struct IndicatorTable {
  std::vector<std::string> names;
  std::vector<FeatureKind> kinds;
  std::map<std::pair<std::string, int>, std::vector<Cell>> values;
};

IndicatorTable load_indicators(std::istream& in);

struct PanelConfig {
  std::vector<int> sections;                  // empty = all sections given
  std::map<int, std::string> section_labels;  // default "s<id>"
  bool include_global_metrics = true;
  bool include_node_metrics = true;
};

// Country-year rows: indicators, a numeric "year" feature, per-section global
// metrics replicated across countries, and per-section node metrics for the
// country (missing when the country is absent from that network).
FeaturePanel assemble_panel(const std::vector<IndicatorTable>& indicators,
                            const std::map<int, metrics::MetricTable>& metric_tables,
                            const PanelConfig& config);

struct DatasetRow {
  std::string country;
  int target_year = 0;
  std::vector<Cell> cells;
  double target = 0.0;  // GDP growth at target_year
};

struct SupervisedDataset {
  std::vector<std::string> feature_names;
  std::vector<FeatureKind> kinds;
  std::vector<DatasetRow> rows;
};

// Supervised rows for target year T take every predictor from year T-h and
// add a growth lag from year T-h-1 (named "<target>_lag2" for h=1). A row is
// kept only when the target and the current growth are both present; a
// missing lag stays a missing marker for imputation.
SupervisedDataset align_target(const FeaturePanel& panel, int horizon = 1,
                               const std::string& target_indicator = "gdp_growth");

std::string export_panel(const FeaturePanel& panel);
FeaturePanel import_panel(std::istream& in);

}  // namespace tradenet::panel
