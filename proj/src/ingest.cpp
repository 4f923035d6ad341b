#include "tradenet/ingest.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "tradenet/common.hpp"
#include "tradenet/csv.hpp"

namespace tradenet::ingest {

std::optional<Period> Period::parse(std::string_view text) {
  text = trim(text);
  if (text.size() != 7 || text[4] != '-') return std::nullopt;
  bool ok1 = false, ok2 = false;
  const long year = parse_long(text.substr(0, 4), ok1);
  const long month = parse_long(text.substr(5, 2), ok2);
  if (!ok1 || !ok2 || month < 1 || month > 12) return std::nullopt;
  return Period{static_cast<int>(year), static_cast<int>(month)};
}

std::string Period::str() const {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
  return buf;
}

ColumnSchema ColumnSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open schema file: " + path);
  ColumnSchema schema;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto stripped = trim(line);
    if (stripped.empty() || stripped.front() == '#') continue;
    const auto eq = stripped.find('=');
    if (eq == std::string_view::npos)
      throw ConfigError("schema line " + std::to_string(lineno) + ": expected 'field = column'");
    const std::string key = std::string(trim(stripped.substr(0, eq)));
    const std::string val = std::string(trim(stripped.substr(eq + 1)));
    if (key == "reporter") schema.reporter = val;
    else if (key == "partner") schema.partner = val;
    else if (key == "flow") schema.flow = val;
    else if (key == "section") schema.section = val;
    else if (key == "period") schema.period = val;
    else if (key == "value") schema.value = val;
    else if (key == "delimiter") {
      if (val.size() != 1) throw ConfigError("schema: delimiter must be a single character");
      schema.delimiter = val[0];
    } else {
      throw ConfigError("schema: unknown field '" + key + "'");
    }
  }
  return schema;
}

double FlowTable::total_value() const {
  double total = 0.0;
  for (const auto& [key, value] : entries) total += value;
  return total;
}

std::string bucket_label(const Period& p, Granularity g) {
  char buf[32];
  switch (g) {
    case Granularity::kMonthly:
      return p.str();
    case Granularity::kQuarterly:
      std::snprintf(buf, sizeof(buf), "%04d-Q%d", p.year, (p.month - 1) / 3 + 1);
      return buf;
    case Granularity::kAnnual:
      std::snprintf(buf, sizeof(buf), "%04d", p.year);
      return buf;
  }
  return {};
}

namespace {

bool parse_flow_field(std::string_view text, Direction& direction, FlowClass& flow_class) {
  std::string v = lower_copy(trim(text));
  std::replace(v.begin(), v.end(), '_', '-');
  if (v == "import" || v == "imports" || v == "m") {
    direction = Direction::kImport;
    flow_class = FlowClass::kNormal;
  } else if (v == "export" || v == "exports" || v == "x") {
    direction = Direction::kExport;
    flow_class = FlowClass::kNormal;
  } else if (v == "re-import" || v == "reimport" || v == "re-imports") {
    direction = Direction::kImport;
    flow_class = FlowClass::kReImport;
  } else if (v == "re-export" || v == "reexport" || v == "re-exports") {
    direction = Direction::kExport;
    flow_class = FlowClass::kReExport;
  } else {
    return false;
  }
  return true;
}

// Bucket granularity is inferred from the label shape on import/aggregate.
std::optional<Granularity> label_granularity(const std::string& label) {
  if (label.size() == 4) return Granularity::kAnnual;
  if (label.size() == 7 && label[4] == '-' && (label[5] == 'Q' || label[5] == 'q'))
    return Granularity::kQuarterly;
  if (Period::parse(label)) return Granularity::kMonthly;
  return std::nullopt;
}

std::optional<std::string> rebucket(const std::string& label, Granularity from, Granularity to) {
  if (from == to) return label;
  if (from == Granularity::kMonthly) {
    const auto p = Period::parse(label);
    if (!p) return std::nullopt;
    return bucket_label(*p, to);
  }
  if (from == Granularity::kQuarterly && to == Granularity::kAnnual) return label.substr(0, 4);
  return std::nullopt;  // cannot disaggregate
}

}  // namespace

ParseResult parse_records(std::istream& in, const ColumnSchema& schema) {
  ParseResult result;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  int c_reporter = -1, c_partner = -1, c_flow = -1, c_section = -1, c_period = -1, c_value = -1;
  bool have_header = false;

  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = csv::split_line(line, schema.delimiter);
    if (!have_header) {
      header = std::move(fields);
      auto find = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
          if (std::string(trim(header[i])) == name) return static_cast<int>(i);
        return -1;
      };
      c_reporter = find(schema.reporter);
      c_partner = find(schema.partner);
      c_flow = find(schema.flow);
      c_section = find(schema.section);
      c_period = find(schema.period);
      c_value = find(schema.value);
      for (const auto& [col, name] :
           {std::pair{c_reporter, schema.reporter}, {c_partner, schema.partner},
            {c_flow, schema.flow}, {c_section, schema.section}, {c_period, schema.period},
            {c_value, schema.value}}) {
        if (col < 0) throw ConfigError("missing required column: " + name);
      }
      have_header = true;
      continue;
    }

    auto fail = [&](const std::string& message) {
      result.errors.push_back({lineno, message});
    };
    const int max_col =
        std::max({c_reporter, c_partner, c_flow, c_section, c_period, c_value});
    if (static_cast<int>(fields.size()) <= max_col) {
      fail("too few fields");
      continue;
    }

    TradeRecord rec;
    rec.reporter = std::string(trim(fields[c_reporter]));
    rec.partner = std::string(trim(fields[c_partner]));
    if (rec.reporter.empty() || rec.partner.empty()) {
      fail("empty country code");
      continue;
    }
    if (rec.reporter == rec.partner) {
      fail("reporter equals partner");
      continue;
    }
    if (!parse_flow_field(fields[c_flow], rec.direction, rec.flow_class)) {
      fail("unrecognized flow '" + fields[c_flow] + "'");
      continue;
    }
    bool ok = false;
    const long section = parse_long(fields[c_section], ok);
    if (!ok || section < 1 || section > 21) {
      fail("section out of range 1..21: '" + fields[c_section] + "'");
      continue;
    }
    rec.section = static_cast<int>(section);
    const auto period = Period::parse(fields[c_period]);
    if (!period) {
      fail("unparseable period '" + fields[c_period] + "'");
      continue;
    }
    rec.period = *period;
    rec.value = parse_double(fields[c_value], ok);
    if (!ok) {
      fail("unparseable value '" + fields[c_value] + "'");
      continue;
    }
    if (rec.value < 0) {
      fail("negative value");
      continue;
    }
    result.records.push_back(std::move(rec));
  }
  if (!have_header) throw ConfigError("input has no header row");
  return result;
}

std::vector<TradeRecord> filter_standard_flows(const std::vector<TradeRecord>& records) {
  std::vector<TradeRecord> kept;
  kept.reserve(records.size());
  for (const auto& rec : records)
    if (rec.flow_class == FlowClass::kNormal) kept.push_back(rec);
  return kept;
}

FlowTable reconcile_dual_reports(const std::vector<TradeRecord>& records, int section,
                                 const std::string& bucket, Granularity granularity,
                                 std::vector<ReconcileNote>* notes) {
  // Bucket-level sums per (reporter, partner, direction), plus each
  // reporter's aggregate trade value used as the priority score.
  struct Observation {
    double import_by_dest = 0.0;   // destination reported an import
    bool has_import = false;
    double export_by_origin = 0.0;  // origin reported an export
    bool has_export = false;
  };
  std::map<std::pair<std::string, std::string>, Observation> flows;  // (origin, destination)
  std::map<std::string, double> reporter_aggregate;

  for (const auto& rec : records) {
    if (rec.section != section) throw RuntimeFailure("reconcile: record outside section");
    if (bucket_label(rec.period, granularity) != bucket)
      throw RuntimeFailure("reconcile: record outside bucket " + bucket);
    reporter_aggregate[rec.reporter] += rec.value;
    if (rec.direction == Direction::kImport) {
      auto& obs = flows[{rec.partner, rec.reporter}];
      obs.import_by_dest += rec.value;
      obs.has_import = true;
    } else {
      auto& obs = flows[{rec.reporter, rec.partner}];
      obs.export_by_origin += rec.value;
      obs.has_export = true;
    }
  }

  FlowTable table;
  table.granularity = granularity;
  for (const auto& [od, obs] : flows) {
    const auto& [origin, destination] = od;
    FlowKey key{origin, destination, section, bucket};
    double value = 0.0;
    if (obs.has_import && obs.has_export) {
      const double agg_origin = reporter_aggregate[origin];
      const double agg_dest = reporter_aggregate[destination];
      std::string chosen;
      bool tie = false;
      if (agg_origin > agg_dest) {
        chosen = origin;
      } else if (agg_dest > agg_origin) {
        chosen = destination;
      } else {
        chosen = std::min(origin, destination);
        tie = true;
      }
      value = (chosen == origin) ? obs.export_by_origin : obs.import_by_dest;
      if (notes) notes->push_back({key, chosen, tie});
    } else if (obs.has_import) {
      value = obs.import_by_dest;
    } else {
      value = obs.export_by_origin;
    }
    table.entries[key] = value;
  }
  return table;
}

FlowTable aggregate(const std::vector<FlowTable>& fragments, Granularity granularity) {
  FlowTable out;
  out.granularity = granularity;
  std::optional<Granularity> seen;
  for (const auto& fragment : fragments) {
    for (const auto& [key, value] : fragment.entries) {
      const auto from = label_granularity(key.bucket);
      if (!from) throw RuntimeFailure("aggregate: unrecognized bucket '" + key.bucket + "'");
      if (seen && *seen != *from)
        throw RuntimeFailure("aggregate: mixed granularities in input");
      seen = *from;
      const auto target = rebucket(key.bucket, *from, granularity);
      if (!target)
        throw RuntimeFailure("aggregate: cannot rebucket '" + key.bucket + "' to coarser grid");
      out.entries[FlowKey{key.origin, key.destination, key.section, *target}] += value;
    }
  }
  return out;
}

FlowTable build_flow_table(const std::vector<TradeRecord>& records, Granularity granularity,
                           std::vector<ReconcileNote>* notes) {
  const auto kept = filter_standard_flows(records);
  std::map<std::pair<int, std::string>, std::vector<TradeRecord>> groups;
  for (const auto& rec : kept)
    groups[{rec.section, bucket_label(rec.period, granularity)}].push_back(rec);
  std::vector<FlowTable> fragments;
  fragments.reserve(groups.size());
  for (const auto& [key, group] : groups)
    fragments.push_back(reconcile_dual_reports(group, key.first, key.second, granularity, notes));
  return aggregate(fragments, granularity);
}

std::string export_flow_table(const FlowTable& table) {
  std::ostringstream out;
  out << "origin,destination,section,period,value\n";
  for (const auto& [key, value] : table.entries) {
    csv::write_row(out, {key.origin, key.destination, std::to_string(key.section), key.bucket,
                         format_double(value)});
  }
  return out.str();
}

FlowTable import_flow_table(std::istream& in, Granularity granularity) {
  const auto table = csv::read_table(in);
  const int c_origin = table.column("origin");
  const int c_dest = table.column("destination");
  const int c_section = table.column("section");
  const int c_period = table.column("period");
  const int c_value = table.column("value");
  if (c_origin < 0 || c_dest < 0 || c_section < 0 || c_period < 0 || c_value < 0)
    throw ConfigError("flow table missing canonical columns");
  FlowTable out;
  out.granularity = granularity;
  for (const auto& row : table.rows) {
    bool ok1 = false, ok2 = false;
    const long section = parse_long(row[c_section], ok1);
    const double value = parse_double(row[c_value], ok2);
    if (!ok1 || !ok2) throw RuntimeFailure("flow table: malformed row");
    out.entries[FlowKey{row[c_origin], row[c_dest], static_cast<int>(section), row[c_period]}] +=
        value;
  }
  return out;
}

}  // namespace tradenet::ingest
