#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace luckskill {

// A delimited text file with a named-column header. Quoted fields follow the
// usual CSV convention ("" escapes a quote inside a quoted field).
struct DelimitedTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // 1-based line number in the source file for each row.
  std::vector<std::size_t> line_numbers;

  std::optional<std::size_t> column(std::string_view name) const;
};

DelimitedTable read_delimited(std::istream& in, char delimiter = ',');
DelimitedTable read_delimited_file(const std::filesystem::path& path,
                                   char delimiter = ',');

std::vector<std::string> split_delimited_line(std::string_view line,
                                              char delimiter);

// Quotes a field only when it contains the delimiter, a quote or a newline.
std::string escape_field(std::string_view field, char delimiter = ',');

void write_delimited_row(std::ostream& out,
                         const std::vector<std::string>& fields,
                         char delimiter = ',');

// Shortest round-trippable decimal representation.
std::string format_double(double value);

}  // namespace luckskill
