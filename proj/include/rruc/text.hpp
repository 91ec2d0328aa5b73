#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace rruc {

/// Shortest decimal representation that round-trips exactly.
std::string format_double(double v);

/// Parses a whole field as a double; throws InputError mentioning `what`.
double parse_double(std::string_view field, std::string_view what);

std::vector<std::string> split_csv_line(std::string_view line);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace rruc
