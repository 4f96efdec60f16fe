#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace revsent {

using Json = nlohmann::json;

// RFC 4180 CSV: comma-separated, double-quote quoting with "" escapes,
// CRLF or LF record terminators, quoted fields may span lines.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  // Physical line number (1-based) each row started on, for diagnostics.
  std::vector<std::size_t> row_lines;
};

CsvTable parse_csv(std::string_view content);

// Quotes a field only when it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file and renames it over the destination, so a
// reader never observes a truncated file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

// One JSON document per non-blank line; throws IoError naming the line.
std::vector<Json> parse_jsonl(std::string_view content);
std::string to_jsonl(const std::vector<Json>& records);

struct UrlParts {
  std::string scheme_host_port;  // e.g. "https://api.example.com:8443"
  std::string path;              // "/" when absent
};

// Throws ConfigError when the URL lacks a scheme.
UrlParts split_url(const std::string& url);

// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
std::optional<double> parse_double(std::string_view text);

}  // namespace revsent
