#pragma once

#include <rata/common.hpp>
#include <rata/config.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <string>

namespace rata {

/// Inclusive byte-address range [first, last].
struct address_range {
  address first = 0;
  address last = 0;

  constexpr bool contains(address a) const noexcept { return a >= first && a <= last; }
  constexpr bool contains(const address_range& r) const noexcept {
    return r.first >= first && r.last <= last;
  }
  constexpr bool overlaps(const address_range& r) const noexcept {
    return r.first <= last && first <= r.last;
  }
  constexpr std::size_t size() const noexcept { return std::size_t{last} - first + 1; }

  friend constexpr bool operator==(const address_range&, const address_range&) = default;
};

inline constexpr std::size_t lmt_width_a = 8;
inline constexpr std::size_t lmt_width_b = 32;

/// Prover address-space layout: attested region (AR), latest-modification-time
/// region (LMT, inside AR), challenge/MAC buffer (MR) and the attestation
/// routine's ROM (CR). `cr.last` is the routine's final instruction.
struct memory_map {
  address_range ar;
  address_range lmt;
  address_range mr;
  address_range cr;
  address cr_auth = 0;
  std::size_t address_space = 0x10000;

  constexpr address cr_max() const noexcept { return cr.last; }
  constexpr std::size_t lmt_offset() const noexcept { return lmt.first - ar.first; }

  /// Throws config_error if the layout breaks a containment/disjointness rule.
  /// A nonzero `lmt_width` additionally pins the LMT span.
  void validate(std::size_t lmt_width = 0) const {
    auto check_range = [&](const address_range& r, const char* name) {
      if (r.first > r.last) throw config_error(std::string(name) + " range is empty or reversed");
      if (r.last >= address_space) throw config_error(std::string(name) + " range exceeds the address space");
    };
    check_range(ar, "ar");
    check_range(lmt, "lmt");
    check_range(mr, "mr");
    check_range(cr, "cr");
    if (!ar.contains(lmt)) throw config_error("lmt range must lie inside ar");
    if (mr.overlaps(ar)) throw config_error("mr range must be disjoint from ar");
    if (cr.overlaps(ar)) throw config_error("cr range must be disjoint from ar");
    if (cr.overlaps(mr)) throw config_error("cr range must be disjoint from mr");
    // Entry, post-authentication and exit instructions must be distinct.
    if (!(cr.first < cr_auth && cr_auth < cr.last)) throw config_error("cr_auth must lie strictly inside cr");
    if (mr.size() < block_size) throw config_error("mr must hold at least 32 bytes");
    if (lmt_width != 0 && lmt.size() != lmt_width)
      throw config_error("lmt span must be " + std::to_string(lmt_width) + " bytes");
  }

  friend bool operator==(const memory_map&, const memory_map&) = default;
};

/// Place an LMT of `width` bytes at the last bytes of `ar`.
constexpr address_range lmt_at_end(const address_range& ar, std::size_t width) {
  return {static_cast<address>(ar.last + 1 - width), ar.last};
}

/// MSP430-class layout: 64 KiB space, 4 KiB attested program memory.
inline memory_map default_layout(std::size_t lmt_width) {
  memory_map m;
  m.address_space = 0x10000;
  m.ar = {0xE000, 0xEFFF};
  m.lmt = lmt_at_end(m.ar, lmt_width);
  m.mr = {0x0200, 0x021F};
  m.cr = {0xA000, 0xA0FF};
  m.cr_auth = 0xA010;
  return m;
}

/// 512-byte space with a 64-byte AR; used by exhaustive enumeration.
inline memory_map toy_layout(std::size_t lmt_width) {
  memory_map m;
  m.address_space = 0x200;
  m.ar = {0x100, 0x13F};
  m.lmt = lmt_at_end(m.ar, lmt_width);
  m.mr = {0x020, 0x03F};
  m.cr = {0x180, 0x1BF};
  m.cr_auth = 0x190;
  return m;
}

/// Per-cycle MCU signal tuple observed by the hardware monitor.
struct signal_state {
  cycle_t cycle = 0;
  address pc = 0;
  bool r_en = false;
  bool w_en = false;
  address d_addr = 0;
  bool dma_en = false;
  address dma_addr = 0;
  bool irq = false;

  friend bool operator==(const signal_state&, const signal_state&) = default;
};

/// True iff the event is a CPU or DMA write into `region`.
constexpr bool mod_mem(const signal_state& e, const address_range& region) noexcept {
  return (e.w_en && region.contains(e.d_addr)) || (e.dma_en && region.contains(e.dma_addr));
}

class memory_image {
public:
  explicit memory_image(memory_map map) : map_(map), bytes_(map.address_space, 0) {}

  memory_image(memory_map map, bytes content) : map_(map), bytes_(std::move(content)) {
    if (bytes_.size() != map_.address_space)
      throw config_error("image length " + std::to_string(bytes_.size()) + " does not match address space " +
                         std::to_string(map_.address_space));
  }

  const memory_map& map() const noexcept { return map_; }
  std::size_t size() const noexcept { return bytes_.size(); }

  byte at(address a) const {
    if (a >= bytes_.size()) throw address_fault(a, "read outside address space");
    return bytes_[a];
  }

  std::span<const byte> view(const address_range& r) const {
    if (r.first > r.last || r.last >= bytes_.size()) throw address_fault(r.last, "region outside address space");
    return std::span<const byte>(bytes_).subspan(r.first, r.size());
  }

  /// Store one byte. CR is ROM; writes there fault like out-of-range ones.
  void store(address a, byte value) {
    if (a >= bytes_.size()) throw address_fault(a, "write outside address space");
    if (map_.cr.contains(a)) throw address_fault(a, "write into ROM (cr)");
    bytes_[a] = value;
  }

  /// Unchecked-for-ROM store used by hardware-owned updates (LMT) and
  /// physical reprogramming.
  void poke(address a, byte value) {
    if (a >= bytes_.size()) throw address_fault(a, "write outside address space");
    bytes_[a] = value;
  }

  void overwrite(const address_range& r, std::span<const byte> data) {
    if (data.size() != r.size()) throw error("overwrite length mismatch");
    if (r.last >= bytes_.size()) throw address_fault(r.last, "write outside address space");
    std::copy(data.begin(), data.end(), bytes_.begin() + r.first);
  }

  const bytes& raw() const noexcept { return bytes_; }

  friend bool operator==(const memory_image&, const memory_image&) = default;

private:
  memory_map map_;
  bytes bytes_;
};

/// In-place form of apply_event used by the simulator.
inline void write_event(memory_image& image, const signal_state& e, byte value) {
  if (e.w_en) image.store(e.d_addr, value);
  if (e.dma_en) image.store(e.dma_addr, value);
}

inline memory_image apply_event(memory_image image, const signal_state& e, byte value) {
  write_event(image, e, value);
  return image;
}

inline bytes region_bytes(const memory_image& image, const address_range& region) {
  auto v = image.view(region);
  return bytes(v.begin(), v.end());
}

/// Layout text: `key = hex` lines for ar_min, ar_max, lmt_min, lmt_max, mr_min,
/// mr_max, cr_min, cr_max, cr_auth and optional address_space. Keys not
/// recognised are reported through `unknown` (or rejected when it is null).
inline memory_map parse_layout(const std::vector<config::entry>& entries, memory_map base,
                               std::vector<config::entry>* unknown = nullptr) {
  for (const auto& e : entries) {
    auto addr = [&] { return config::parse_address(e.value, e.line); };
    if (e.key == "ar_min") base.ar.first = addr();
    else if (e.key == "ar_max") base.ar.last = addr();
    else if (e.key == "lmt_min") base.lmt.first = addr();
    else if (e.key == "lmt_max") base.lmt.last = addr();
    else if (e.key == "mr_min") base.mr.first = addr();
    else if (e.key == "mr_max") base.mr.last = addr();
    else if (e.key == "cr_min") base.cr.first = addr();
    else if (e.key == "cr_max") base.cr.last = addr();
    else if (e.key == "cr_auth") base.cr_auth = addr();
    else if (e.key == "address_space") base.address_space = addr();
    else if (unknown) unknown->push_back(e);
    else throw config_error("unknown layout key `" + e.key + "`", e.line);
  }
  return base;
}

inline memory_map parse_layout(std::string_view text, std::size_t lmt_width = 0) {
  auto m = parse_layout(config::parse_entries(text), memory_map{});
  m.validate(lmt_width);
  return m;
}

inline std::string format_layout(const memory_map& m) {
  auto hex = [](address a) { return "0x" + address_fault::to_hex_address(a); };
  std::string s;
  s += "address_space = " + hex(static_cast<address>(m.address_space)) + "\n";
  s += "ar_min = " + hex(m.ar.first) + "\nar_max = " + hex(m.ar.last) + "\n";
  s += "lmt_min = " + hex(m.lmt.first) + "\nlmt_max = " + hex(m.lmt.last) + "\n";
  s += "mr_min = " + hex(m.mr.first) + "\nmr_max = " + hex(m.mr.last) + "\n";
  s += "cr_min = " + hex(m.cr.first) + "\ncr_max = " + hex(m.cr.last) + "\n";
  s += "cr_auth = " + hex(m.cr_auth) + "\n";
  return s;
}

/// Raw binary: either a full address-space dump or exactly |AR| bytes placed at ar_min.
inline memory_image load_image(const std::filesystem::path& path, const memory_map& map) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open image file " + path.string());
  bytes content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (content.size() == map.address_space) return memory_image(map, std::move(content));
  if (content.size() == map.ar.size()) {
    memory_image img(map);
    img.overwrite(map.ar, content);
    return img;
  }
  throw config_error("image " + path.string() + " is " + std::to_string(content.size()) +
                     " bytes; expected the address-space size or |AR|");
}

/// Deterministic stand-in program: AR filled with a seed-dependent pattern.
inline memory_image synthetic_image(const memory_map& map, std::uint64_t seed = 0) {
  memory_image img(map);
  std::uint64_t x = seed * 0x9E3779B97F4A7C15ull + 0x2545F4914F6CDD1Dull;
  for (address a = map.ar.first; a <= map.ar.last; ++a) {
    x ^= x >> 12;
    x ^= x << 25;
    x ^= x >> 27;
    img.poke(a, static_cast<byte>((x * 0x2545F4914F6CDD1Dull) >> 56));
  }
  for (address a = map.lmt.first; a <= map.lmt.last; ++a) img.poke(a, 0);
  return img;
}

} // namespace rata
