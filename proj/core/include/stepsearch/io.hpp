#pragma once

#include <string>

namespace stepsearch {

std::string read_file(const std::string& path);  // throws IoError

/// Writes content to a temp file in the same directory, then renames over
/// path, so readers never observe partial files.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace stepsearch
