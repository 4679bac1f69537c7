#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace stutterkit {

/// RFC 4180 subset: comma separated, double-quoted fields with "" escapes,
/// LF or CRLF line endings. The first row is the header.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column index; throws InvalidArgument when absent.
  std::size_t column(std::string_view name) const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

std::string csv_field(std::string_view value);
std::string to_csv(const CsvTable& table);
void write_csv(const std::filesystem::path& path, const CsvTable& table);

}  // namespace stutterkit
