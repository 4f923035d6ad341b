#include "tradenet/panel.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "tradenet/common.hpp"
#include "tradenet/csv.hpp"

namespace tradenet::panel {

int FeaturePanel::feature_index(const std::string& name) const {
  for (std::size_t i = 0; i < feature_names.size(); ++i)
    if (feature_names[i] == name) return static_cast<int>(i);
  return -1;
}

IndicatorTable load_indicators(std::istream& in) {
  const auto table = csv::read_table(in);
  const int c_country = table.column("country");
  const int c_year = table.column("year");
  if (c_country < 0 || c_year < 0)
    throw ConfigError("indicator table needs 'country' and 'year' columns");

  IndicatorTable out;
  std::vector<int> columns;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    if (static_cast<int>(i) == c_country || static_cast<int>(i) == c_year) continue;
    out.names.push_back(table.header[i]);
    columns.push_back(static_cast<int>(i));
  }

  // Column kind: numeric unless some non-empty value fails to parse.
  out.kinds.assign(out.names.size(), FeatureKind::kNumeric);
  for (const auto& row : table.rows) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (static_cast<std::size_t>(columns[j]) >= row.size()) continue;
      const auto text = trim(row[columns[j]]);
      if (text.empty()) continue;
      bool ok = false;
      parse_double(text, ok);
      if (!ok) out.kinds[j] = FeatureKind::kNominal;
    }
  }

  for (const auto& row : table.rows) {
    bool ok = false;
    const long year = parse_long(row[c_year], ok);
    if (!ok) throw RuntimeFailure("indicator table: unparseable year '" + row[c_year] + "'");
    std::vector<Cell> cells(out.names.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (static_cast<std::size_t>(columns[j]) >= row.size()) continue;
      const auto text = trim(row[columns[j]]);
      if (text.empty()) continue;
      if (out.kinds[j] == FeatureKind::kNumeric) {
        bool vok = false;
        const double v = parse_double(text, vok);
        if (!vok) throw RuntimeFailure("indicator table: unparseable value '" + std::string(text) + "'");
        cells[j] = Cell::number(v);
      } else {
        cells[j] = Cell::label(std::string(text));
      }
    }
    out.values[{row[c_country], static_cast<int>(year)}] = std::move(cells);
  }
  return out;
}

namespace {

int year_of_bucket(const std::string& bucket) {
  bool ok = false;
  const long year = parse_long(std::string_view(bucket).substr(0, 4), ok);
  return ok ? static_cast<int>(year) : -1;
}

}  // namespace

FeaturePanel assemble_panel(const std::vector<IndicatorTable>& indicators,
                            const std::map<int, metrics::MetricTable>& metric_tables,
                            const PanelConfig& config) {
  std::vector<int> sections = config.sections;
  if (sections.empty())
    for (const auto& [section, table] : metric_tables) sections.push_back(section);
  for (const int section : sections)
    if (!metric_tables.count(section))
      throw ConfigError("panel config references unknown section " + std::to_string(section));

  auto section_label = [&](int section) {
    const auto it = config.section_labels.find(section);
    return it != config.section_labels.end() ? it->second : "s" + std::to_string(section);
  };

  FeaturePanel panel;
  // Indicator features in first-appearance order across tables.
  std::vector<std::pair<int, int>> indicator_slots;  // (table, column)
  for (std::size_t t = 0; t < indicators.size(); ++t) {
    for (std::size_t j = 0; j < indicators[t].names.size(); ++j) {
      if (panel.feature_index(indicators[t].names[j]) >= 0)
        throw ConfigError("duplicate indicator column: " + indicators[t].names[j]);
      panel.feature_names.push_back(indicators[t].names[j]);
      panel.kinds.push_back(indicators[t].kinds[j]);
      indicator_slots.emplace_back(static_cast<int>(t), static_cast<int>(j));
    }
  }
  panel.feature_names.push_back("year");
  panel.kinds.push_back(FeatureKind::kNumeric);

  static constexpr const char* kGlobalNames[] = {"density", "assortativity", "reciprocity",
                                                 "transitivity", "modularity"};
  static constexpr const char* kNodeNames[] = {"in_strength", "out_strength", "pagerank"};
  for (const int section : sections) {
    const auto label = section_label(section);
    if (config.include_global_metrics)
      for (const char* name : kGlobalNames) {
        panel.feature_names.push_back(label + "_" + name);
        panel.kinds.push_back(FeatureKind::kNumeric);
      }
    if (config.include_node_metrics)
      for (const char* name : kNodeNames) {
        panel.feature_names.push_back(label + "_" + name);
        panel.kinds.push_back(FeatureKind::kNumeric);
      }
  }

  std::set<std::pair<std::string, int>> keys;
  for (const auto& table : indicators)
    for (const auto& [key, cells] : table.values) keys.insert(key);

  for (const auto& [country, year] : keys) {
    PanelRow row;
    row.country = country;
    row.year = year;
    row.cells.resize(panel.feature_names.size());

    std::size_t slot = 0;
    for (const auto& [t, j] : indicator_slots) {
      const auto it = indicators[t].values.find({country, year});
      if (it != indicators[t].values.end()) row.cells[slot] = it->second[j];
      ++slot;
    }
    row.cells[slot++] = Cell::number(static_cast<double>(year));

    for (const int section : sections) {
      const auto& table = metric_tables.at(section);
      const metrics::PeriodMetrics* pm = nullptr;
      for (const auto& [bucket, period_metrics] : table.periods) {
        if (year_of_bucket(bucket) == year && bucket.size() == 4) {
          pm = &period_metrics;
          break;
        }
      }
      if (config.include_global_metrics) {
        if (pm) {
          row.cells[slot++] = Cell::number(pm->global.density);
          row.cells[slot++] = pm->global.assortativity
                                  ? Cell::number(*pm->global.assortativity)
                                  : Cell();
          row.cells[slot++] = Cell::number(pm->global.reciprocity);
          row.cells[slot++] = pm->global.transitivity
                                  ? Cell::number(*pm->global.transitivity)
                                  : Cell();
          row.cells[slot++] = Cell::number(pm->global.modularity);
        } else {
          slot += 5;
        }
      }
      if (config.include_node_metrics) {
        const metrics::NodeMetrics* nm = nullptr;
        if (pm) {
          const auto it = pm->nodes.find(country);
          if (it != pm->nodes.end()) nm = &it->second;
        }
        if (nm) {
          row.cells[slot++] = Cell::number(nm->in_strength);
          row.cells[slot++] = Cell::number(nm->out_strength);
          row.cells[slot++] = Cell::number(nm->pagerank);
        } else {
          slot += 3;  // country absent from this network that year
        }
      }
    }
    panel.rows.push_back(std::move(row));
  }
  return panel;
}

SupervisedDataset align_target(const FeaturePanel& panel, int horizon,
                               const std::string& target_indicator) {
  if (horizon < 1) throw ConfigError("align_target: horizon must be >= 1");
  const int growth_idx = panel.feature_index(target_indicator);
  if (growth_idx < 0)
    throw ConfigError("align_target: panel lacks target indicator '" + target_indicator + "'");
  if (panel.kinds[growth_idx] != FeatureKind::kNumeric)
    throw ConfigError("align_target: target indicator must be numeric");

  SupervisedDataset dataset;
  dataset.feature_names = panel.feature_names;
  dataset.kinds = panel.kinds;
  // Lag relative to the target year: growth(T - horizon - 1), "lag2" at the
  // default one-year horizon.
  dataset.feature_names.push_back(target_indicator + "_lag" + std::to_string(horizon + 1));
  dataset.kinds.push_back(FeatureKind::kNumeric);

  std::map<std::string, std::map<int, const PanelRow*>> by_country;
  for (const auto& row : panel.rows) by_country[row.country][row.year] = &row;

  for (const auto& [country, years] : by_country) {
    for (const auto& [target_year, target_row] : years) {
      const auto& target_cell = target_row->cells[growth_idx];
      if (target_cell.is_missing()) continue;

      const auto predictor_it = years.find(target_year - horizon);
      if (predictor_it == years.end()) continue;
      const PanelRow& predictor_row = *predictor_it->second;
      if (predictor_row.cells[growth_idx].is_missing()) continue;  // no current growth

      DatasetRow out;
      out.country = country;
      out.target_year = target_year;
      out.target = target_cell.number_value();
      out.cells = predictor_row.cells;

      Cell lag;  // growth two periods before the target
      const auto lag_it = years.find(target_year - horizon - 1);
      if (lag_it != years.end() && !lag_it->second->cells[growth_idx].is_missing())
        lag = lag_it->second->cells[growth_idx];
      out.cells.push_back(lag);

      dataset.rows.push_back(std::move(out));
    }
  }
  return dataset;
}

std::string export_panel(const FeaturePanel& panel) {
  std::ostringstream out;
  std::vector<std::string> header = {"country", "year"};
  header.insert(header.end(), panel.feature_names.begin(), panel.feature_names.end());
  csv::write_row(out, header);
  for (const auto& row : panel.rows) {
    std::vector<std::string> fields = {row.country, std::to_string(row.year)};
    for (const auto& cell : row.cells) {
      if (cell.is_missing()) fields.emplace_back();
      else if (cell.is_number()) fields.push_back(format_double(cell.number_value()));
      else fields.push_back(cell.label_value());
    }
    csv::write_row(out, fields);
  }
  return out.str();
}

FeaturePanel import_panel(std::istream& in) {
  const auto table = csv::read_table(in);
  const int c_country = table.column("country");
  const int c_year = table.column("year");
  if (c_country != 0 || c_year != 1)
    throw ConfigError("panel file must start with country,year columns");

  FeaturePanel panel;
  for (std::size_t i = 2; i < table.header.size(); ++i)
    panel.feature_names.push_back(table.header[i]);

  // Kind inference mirrors load_indicators.
  panel.kinds.assign(panel.feature_names.size(), FeatureKind::kNumeric);
  for (const auto& row : table.rows) {
    for (std::size_t j = 2; j < row.size() && j < table.header.size(); ++j) {
      const auto text = trim(row[j]);
      if (text.empty()) continue;
      bool ok = false;
      parse_double(text, ok);
      if (!ok) panel.kinds[j - 2] = FeatureKind::kNominal;
    }
  }

  for (const auto& row : table.rows) {
    bool ok = false;
    const long year = parse_long(row[c_year], ok);
    if (!ok) throw RuntimeFailure("panel file: unparseable year");
    PanelRow prow;
    prow.country = row[c_country];
    prow.year = static_cast<int>(year);
    prow.cells.resize(panel.feature_names.size());
    for (std::size_t j = 2; j < row.size() && j - 2 < prow.cells.size(); ++j) {
      const auto text = trim(row[j]);
      if (text.empty()) continue;
      if (panel.kinds[j - 2] == FeatureKind::kNumeric) {
        bool vok = false;
        const double v = parse_double(text, vok);
        if (!vok) throw RuntimeFailure("panel file: unparseable value");
        prow.cells[j - 2] = Cell::number(v);
      } else {
        prow.cells[j - 2] = Cell::label(std::string(text));
      }
    }
    panel.rows.push_back(std::move(prow));
  }
  return panel;
}

}  // namespace tradenet::panel
