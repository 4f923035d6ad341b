#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tradenet::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const;  // -1 when absent
};

// Splits one delimited line. Double-quoted fields may contain the delimiter
// and doubled quotes.
std::vector<std::string> split_line(const std::string& line, char delimiter);

// Reads a header-bearing delimited stream. Blank lines are skipped.
Table read_table(std::istream& in, char delimiter = ',');
Table read_table_file(const std::string& path, char delimiter = ',');

std::string escape_field(const std::string& field, char delimiter);
void write_row(std::ostream& out, const std::vector<std::string>& fields, char delimiter = ',');

// Writes content to path atomically (temp file + rename).
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace tradenet::csv
