#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace segagent {

std::string base64_encode(std::span<const std::uint8_t> bytes);
/// Throws Error(BadImage) on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// Lower-case hex SHA-256.
std::string sha256_hex(std::span<const std::uint8_t> bytes);

}  // namespace segagent
