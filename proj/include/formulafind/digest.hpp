#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace formulafind {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::string_view bytes);
/// Throws std::runtime_error when the file cannot be read.
Digest sha256_file(const std::string& path);
std::string to_hex(const Digest& digest);

} // namespace formulafind
