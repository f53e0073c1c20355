#pragma once

#include <string>
#include <string_view>

namespace tractflow {

/// Lowercase hex SHA-256.
std::string sha256_hex(std::string_view data);
/// Throws MissingInput when the file cannot be read.
std::string file_sha256(const std::string& path);

}  // namespace tractflow
