#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

namespace rfmia {

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
double parse_double(std::string_view s);

// Writes to a sibling temp file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);
nlohmann::json read_json(const std::filesystem::path& path);

}  // namespace rfmia
