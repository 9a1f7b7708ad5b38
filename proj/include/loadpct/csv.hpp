#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace loadpct::csv {

/// Splits one CSV record. Handles double-quoted fields with "" escapes;
/// records spanning lines are not supported.
std::vector<std::string> split_line(std::string_view line);

/// Joins fields, quoting those that contain a comma, quote, or newline.
std::string join_line(std::span<const std::string> fields);

/// Shortest decimal text that parses back to the same double.
std::string format_number(double value);
void append_number(std::string& out, double value);

/// Full-string numeric parse; throws ParseError naming `context`.
double parse_number(std::string_view text, std::string_view context);
std::int64_t parse_integer(std::string_view text, std::string_view context);

/// Reads the next non-empty line, stripping a trailing '\r'.
bool next_line(std::istream& in, std::string& line);

std::string_view trim(std::string_view text);

/// FNV-1a 64-bit.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t state = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);
/// FNV-1a over the raw bytes of a file; throws Error if unreadable.
std::uint64_t hash_file(const std::string& path);

}  // namespace loadpct::csv
