#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace recoil {

/// Lower-case hex SHA-256 of a byte string.
std::string sha256_hex(std::string_view bytes);

/// SHA-256 of a file's contents; throws ConfigError when the file cannot be read.
std::string sha256_file(const std::filesystem::path& path);

}  // namespace recoil
