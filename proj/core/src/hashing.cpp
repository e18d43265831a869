#include "tinygroups/hashing.hpp"

#include <openssl/sha.h>

#include <cstring>
#include <stdexcept>

namespace tinygroups {

std::array<uint8_t, 32> sha256(std::span<const uint8_t> data) {
  std::array<uint8_t, 32> out{};
  SHA256(data.data(), data.size(), out.data());
  return out;
}

uint64_t hash64(std::string_view tag, std::span<const uint8_t> payload) {
  std::vector<uint8_t> buf;
  buf.reserve(tag.size() + 1 + payload.size());
  buf.insert(buf.end(), tag.begin(), tag.end());
  buf.push_back(0x1f);  // tag/payload separator
  buf.insert(buf.end(), payload.begin(), payload.end());
  auto digest = sha256(buf);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | digest[static_cast<size_t>(i)];
  return v;
}

uint64_t hash64_words(std::string_view tag, std::span<const uint64_t> words) {
  std::vector<uint8_t> payload;
  payload.reserve(words.size() * 8);
  for (uint64_t w : words) {
    for (int i = 7; i >= 0; --i) payload.push_back(static_cast<uint8_t>(w >> (8 * i)));
  }
  return hash64(tag, payload);
}

uint64_t hash64_words(std::string_view tag, std::initializer_list<uint64_t> words) {
  return hash64_words(tag, std::span<const uint64_t>(words.begin(), words.size()));
}

std::string to_hex(std::span<const uint8_t> bytes) {
  static const char* digits = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (uint8_t b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xf]);
  }
  return s;
}

std::vector<uint8_t> from_hex(std::string_view hex) {
  if (hex.size() % 2 != 0) throw std::invalid_argument("odd-length hex string");
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    throw std::invalid_argument("bad hex digit");
  };
  std::vector<uint8_t> out(hex.size() / 2);
  for (size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<uint8_t>((nibble(hex[2 * i]) << 4) | nibble(hex[2 * i + 1]));
  }
  return out;
}

}  // namespace tinygroups
