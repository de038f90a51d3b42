#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace styloforge {

/// Strip leading/trailing ASCII whitespace.
std::string trim(std::string_view s);

/// splitmix64 step; used to derive independent sub-seeds from one master seed.
uint64_t splitmix64(uint64_t x);

/// Deterministic sub-seed for (base seed, salt) pairs. Distinct salts give
/// statistically independent streams.
uint64_t derive_seed(uint64_t base, uint64_t salt);

/// FNV-1a over a byte string; stable across platforms.
uint64_t fnv1a64(std::string_view data);

std::string to_hex(uint64_t value);

/// Lossless mapping between raw byte strings and valid UTF-8 for JSON
/// transport: each byte b becomes the UTF-8 encoding of code point U+00b.
std::string bytes_to_utf8(std::string_view bytes);
std::string utf8_to_bytes(std::string_view utf8);

}  // namespace styloforge
