#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace entrank {

std::string read_file(const std::filesystem::path& path, const std::string& module);
void write_file(const std::filesystem::path& path, std::string_view contents,
                const std::string& module);

// Splits on '\n'; a trailing '\r' is stripped from each line.
std::vector<std::string> split_lines(std::string_view text);
std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Shortest decimal that parses back to the same double.
std::string format_double(double value);
// Strict parse of a complete decimal string; false on any trailing garbage.
bool parse_double(std::string_view text, double& out);

// Replaces tab, CR and LF so a value fits in one TSV cell.
std::string tsv_cell(std::string_view text);

}  // namespace entrank
