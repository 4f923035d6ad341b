#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tradenet::ingest {

enum class Direction { kImport, kExport };
enum class FlowClass { kNormal, kReImport, kReExport };
enum class Granularity { kMonthly, kQuarterly, kAnnual };

struct Period {
  int year = 0;
  int month = 0;  // 1..12

  static std::optional<Period> parse(std::string_view text);  // "YYYY-MM"
  std::string str() const;
  auto operator<=>(const Period&) const = default;
};

// One bilateral trade observation as reported by one side.
struct TradeRecord {
  std::string reporter;
  std::string partner;
  Direction direction = Direction::kImport;
  int section = 0;  // HS section, 1..21
  Period period;
  double value = 0.0;  // US$
  FlowClass flow_class = FlowClass::kNormal;
};

// Maps canonical field names to source column names. Required fields:
// reporter, partner, flow, section, period, value. The flow column carries
// both direction and class (import / export / re-import / re-export).
struct ColumnSchema {
  std::string reporter = "reporter";
  std::string partner = "partner";
  std::string flow = "flow";
  std::string section = "section";
  std::string period = "period";
  std::string value = "value";
  char delimiter = ',';

  // Reads "field = column" pairs; unknown keys are rejected.
  static ColumnSchema load(const std::string& path);
};

struct RowError {
  std::size_t line = 0;  // 1-based line number in the source stream
  std::string message;
};

struct ParseResult {
  std::vector<TradeRecord> records;
  std::vector<RowError> errors;
};

// Directed flow key at a given period bucket.
struct FlowKey {
  std::string origin;
  std::string destination;
  int section = 0;
  std::string bucket;  // "YYYY-MM", "YYYY-Qq" or "YYYY"

  auto operator<=>(const FlowKey&) const = default;
};

struct FlowTable {
  std::map<FlowKey, double> entries;
  Granularity granularity = Granularity::kAnnual;

  double total_value() const;
};

struct ReconcileNote {
  FlowKey key;
  std::string chosen_reporter;
  bool tie = false;
};

std::string bucket_label(const Period& p, Granularity g);

// Every well-formed row becomes a TradeRecord; malformed rows land in the
// error report with their line number. A missing required column is a
// configuration error.
ParseResult parse_records(std::istream& in, const ColumnSchema& schema);

// Keeps exactly the records with flow_class == normal, order preserved.
std::vector<TradeRecord> filter_standard_flows(const std::vector<TradeRecord>& records);

// Resolves dual reporting for one (section, bucket): both sides of a flow are
// first summed to the bucket, then the figure from the reporter with the
// larger aggregate trade value (imports + exports in this section/bucket)
// wins. Ties go to the lexicographically smaller code and are logged.
FlowTable reconcile_dual_reports(const std::vector<TradeRecord>& records, int section,
                                 const std::string& bucket, Granularity granularity,
                                 std::vector<ReconcileNote>* notes = nullptr);

// Sums fragment values into (origin, destination, section, bucket) cells at
// the requested granularity. Mixed fragment granularities are an error, and
// an annual table cannot be re-bucketed to quarters.
FlowTable aggregate(const std::vector<FlowTable>& fragments, Granularity granularity);

// parse -> filter -> per-(section, bucket) reconcile -> aggregate.
FlowTable build_flow_table(const std::vector<TradeRecord>& records, Granularity granularity,
                           std::vector<ReconcileNote>* notes = nullptr);

// Canonical export: origin,destination,section,period,value, sorted by key.
std::string export_flow_table(const FlowTable& table);
FlowTable import_flow_table(std::istream& in, Granularity granularity);

}  // namespace tradenet::ingest
