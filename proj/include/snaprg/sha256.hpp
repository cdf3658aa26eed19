#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>

namespace snaprg {

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(std::span<const std::byte> data);
std::string sha256_hex(std::string_view data);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace snaprg
