#pragma once

#include <string>
#include <string_view>

namespace pilotwave {

/// Writes via a temporary sibling and rename, so readers never see a
/// partial file.
void write_file_atomic(const std::string& path, std::string_view content);

std::string read_file(const std::string& path);

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::string& path);

}  // namespace pilotwave
