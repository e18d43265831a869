#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tinygroups {

// SHA-256 digest of an arbitrary byte buffer.
std::array<uint8_t, 32> sha256(std::span<const uint8_t> data);

// First 8 digest bytes (big-endian) of SHA-256 over tag || payload.
// The tag acts as a domain separator so independent uses of the hash
// never collide on input bytes.
uint64_t hash64(std::string_view tag, std::span<const uint8_t> payload);

// Convenience form for fixed-width integer inputs.
uint64_t hash64_words(std::string_view tag, std::initializer_list<uint64_t> words);
uint64_t hash64_words(std::string_view tag, std::span<const uint64_t> words);

std::string to_hex(std::span<const uint8_t> bytes);
std::vector<uint8_t> from_hex(std::string_view hex);

}  // namespace tinygroups
