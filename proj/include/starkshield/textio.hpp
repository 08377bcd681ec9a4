#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace starkshield {

/// Shortest-safe, locale-independent rendering with 17 significant digits.
std::string format_double(double value);

double parse_double(std::string_view text);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace starkshield
