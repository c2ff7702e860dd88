#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace rata {

using byte = std::uint8_t;
using bytes = std::vector<byte>;
using address = std::uint32_t;
/// Simulated time, in MCU clock cycles on the shared timeline.
using cycle_t = std::uint64_t;
/// Security-parameter-wide value (challenge, counter, tag, key): 32 bytes.
using block32 = std::array<byte, 32>;

inline constexpr std::size_t block_size = 32;

class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// An access fell outside the address space or hit a protected region.
class address_fault : public error {
public:
  explicit address_fault(address addr, const std::string& what)
      : error(what + " at 0x" + to_hex_address(addr)), addr_(addr) {}

  address where() const noexcept { return addr_; }

  static std::string to_hex_address(address a) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(4, '0');
    for (int i = 3; i >= 0; --i) {
      s[static_cast<std::size_t>(i)] = digits[a & 0xF];
      a >>= 4;
    }
    while (a != 0) {
      s.insert(s.begin(), digits[a & 0xF]);
      a >>= 4;
    }
    return s;
  }

private:
  address addr_;
};

/// Malformed or inconsistent configuration text. Carries a 1-based line (0 when unknown).
class config_error : public error {
public:
  explicit config_error(const std::string& what, std::size_t line = 0)
      : error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

class formula_error : public error {
public:
  using error::error;
};

inline std::string to_hex(std::span<const byte> data) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out;
  out.reserve(data.size() * 2);
  for (byte b : data) {
    out.push_back(digits[b >> 4]);
    out.push_back(digits[b & 0xF]);
  }
  return out;
}

inline bytes from_hex(std::string_view text) {
  auto nibble = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  if (text.size() % 2 != 0) throw error("odd-length hex string");
  bytes out(text.size() / 2);
  for (std::size_t i = 0; i < out.size(); ++i) {
    int hi = nibble(text[2 * i]);
    int lo = nibble(text[2 * i + 1]);
    if (hi < 0 || lo < 0) throw error("invalid hex digit");
    out[i] = static_cast<byte>((hi << 4) | lo);
  }
  return out;
}

} // namespace rata
