#pragma once

#include <string>
#include <string_view>

namespace jslight {

// Lowercase hex SHA-256 of the given bytes.
std::string sha256_hex(std::string_view bytes);

std::string base64_encode(std::string_view bytes);

// Throws jslight::Error on malformed input.
std::string base64_decode(std::string_view text);

}  // namespace jslight
