#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace powerwb::detail {

struct CsvRecord {
    std::size_t line = 0;  // 1-based physical line number
    std::vector<std::string> fields;
};

// Minimal RFC 4180 reader: comma separated, double-quoted fields with ""
// escapes, CRLF or LF line endings. Blank lines and lines whose first
// character is '#' are skipped. Quoted fields may not span lines.
std::vector<CsvRecord> read_csv(std::string_view content);

// Quote a field for output when it contains a comma, quote or newline.
std::string csv_escape(std::string_view field);

}  // namespace powerwb::detail
