#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace gazecoach {

/// One `key = value` line of the plain-text config and scenario formats.
/// Blank lines and `#` comments are skipped.
struct KeyValue {
  std::string key;
  std::string value;
  int line = 0;
};

std::vector<KeyValue> parse_key_values(std::string_view text);

std::vector<std::string> split_words(std::string_view text);

double parse_double(std::string_view text);
long long parse_int(std::string_view text);

/// Shortest text that parses back to the same double.
std::string format_double(double value);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace gazecoach
