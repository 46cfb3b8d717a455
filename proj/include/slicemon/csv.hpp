#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace slicemon::csv {

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  /// Column position by header name, or -1.
  int column(std::string_view name) const;
};

/// RFC 4180 reader: comma separated, double-quote escaping, LF or CRLF line
/// ends, optional UTF-8 BOM. Throws DataError on ragged rows or unterminated quotes.
Table read(std::istream& in);
Table read_file(const std::filesystem::path& path);

/// Quotes `field` if it contains a comma, quote or line break.
std::string escape(std::string_view field);

}  // namespace slicemon::csv
