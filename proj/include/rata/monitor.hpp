#pragma once

// Hardware monitors for the two TOCTOU-secure designs. Both are Mealy
// machines: outputs are a function of the current state and this cycle's
// signals, and take effect in the same cycle.
//
// RATA_A stamps LMT with the RTC whenever AR is written.
// RATA_B remembers that AR was written (MOD) and copies the challenge in MR
// into LMT the first time the attestation routine reaches CR_auth afterwards.
//
// A software or DMA write into LMT raises `reset` regardless of state.

#include <rata/common.hpp>
#include <rata/memory.hpp>

#include <string_view>
#include <utility>

namespace rata {

struct monitor_outputs {
  bool reset = false;
  bool set_lmt = false; // RATA_A
  bool up_lmt = false;  // RATA_B

  friend bool operator==(const monitor_outputs&, const monitor_outputs&) = default;
};

enum class fsm_a : std::uint8_t { not_mod, mod, reset };
enum class fsm_b : std::uint8_t { not_mod, mod, update, attest, reset };

constexpr std::string_view to_string(fsm_a s) {
  switch (s) {
  case fsm_a::not_mod: return "NotMOD";
  case fsm_a::mod: return "MOD";
  case fsm_a::reset: return "RESET";
  }
  return "?";
}

constexpr std::string_view to_string(fsm_b s) {
  switch (s) {
  case fsm_b::not_mod: return "NotMOD";
  case fsm_b::mod: return "MOD";
  case fsm_b::update: return "UPDATE";
  case fsm_b::attest: return "ATTEST";
  case fsm_b::reset: return "RESET";
  }
  return "?";
}

struct monitor_a_state {
  fsm_a fsm = fsm_a::not_mod;
  cycle_t lmt = 0;
  cycle_t rtc = 0;

  friend bool operator==(const monitor_a_state&, const monitor_a_state&) = default;
};

/// Boot state is MOD so the first authenticated attestation stamps LMT.
struct monitor_b_state {
  fsm_b fsm = fsm_b::mod;
  block32 lmt{};

  friend bool operator==(const monitor_b_state&, const monitor_b_state&) = default;
};

/// One RATA_A cycle. `rtc` is the time of this cycle on entry and advances by
/// one. set_lmt tracks Mod_Mem(AR) exactly, including the cycle of an LMT
/// write, where reset is raised as well.
inline std::pair<monitor_a_state, monitor_outputs> step_a(const memory_map& map, monitor_a_state s,
                                                          const signal_state& e) {
  monitor_outputs out;
  const bool lmt_write = mod_mem(e, map.lmt);
  const bool ar_write = mod_mem(e, map.ar);

  out.set_lmt = ar_write;
  if (out.set_lmt) s.lmt = s.rtc;

  if (lmt_write || s.fsm == fsm_a::reset) {
    s.fsm = fsm_a::reset;
    out.reset = true;
  } else {
    s.fsm = ar_write ? fsm_a::mod : fsm_a::not_mod;
  }
  ++s.rtc;
  return {s, out};
}

/// One RATA_B cycle. `mr` is the current content of the challenge buffer.
inline std::pair<monitor_b_state, monitor_outputs> step_b(const memory_map& map, monitor_b_state s,
                                                          const signal_state& e, std::span<const byte> mr) {
  monitor_outputs out;
  if (mod_mem(e, map.lmt) || s.fsm == fsm_b::reset) {
    s.fsm = fsm_b::reset;
    out.reset = true;
    return {s, out};
  }

  const bool ar_write = mod_mem(e, map.ar);
  const bool at_auth = e.pc == map.cr_auth;

  if (at_auth && (s.fsm == fsm_b::mod || ar_write)) {
    s.fsm = fsm_b::update;
    out.up_lmt = true;
    std::copy_n(mr.begin(), std::min(mr.size(), s.lmt.size()), s.lmt.begin());
    return {s, out};
  }
  if (ar_write) {
    s.fsm = fsm_b::mod;
    return {s, out};
  }

  switch (s.fsm) {
  case fsm_b::update:
    s.fsm = e.pc == map.cr_max() ? fsm_b::not_mod : fsm_b::attest;
    break;
  case fsm_b::attest:
    if (e.pc == map.cr_max()) s.fsm = fsm_b::not_mod;
    break;
  default:
    break;
  }
  return {s, out};
}

/// Reset completion: LMT takes the RTC value.
inline monitor_a_state apply_reset(monitor_a_state s) {
  s.fsm = fsm_a::not_mod;
  s.lmt = s.rtc;
  return s;
}

/// Reset completion: the next authenticated attestation must refresh LMT.
inline monitor_b_state apply_reset(monitor_b_state s) {
  s.fsm = fsm_b::mod;
  return s;
}

/// Little-endian 8-byte LMT encoding for RATA_A timestamps.
inline std::array<byte, lmt_width_a> encode_timestamp(cycle_t t) {
  std::array<byte, lmt_width_a> out{};
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<byte>(t >> (8 * i));
  return out;
}

inline cycle_t decode_timestamp(std::span<const byte> b) {
  if (b.size() != lmt_width_a) throw error("timestamp LMT must be 8 bytes");
  cycle_t t = 0;
  for (std::size_t i = 0; i < b.size(); ++i) t |= cycle_t{b[i]} << (8 * i);
  return t;
}

// Monitor policies plugged into the prover simulator.

struct rata_a_monitor {
  static constexpr std::size_t lmt_width = lmt_width_a;
  static constexpr std::string_view name = "rata_a";
  monitor_a_state state;

  monitor_outputs step(const memory_map& map, const signal_state& e, std::span<const byte>) {
    auto [next, out] = step_a(map, state, e);
    state = next;
    return out;
  }
  void complete_reset() { state = apply_reset(state); }
  void idle(cycle_t n) {
    if (state.fsm != fsm_a::reset) state.fsm = fsm_a::not_mod;
    state.rtc += n;
  }
  bytes lmt_bytes() const {
    auto b = encode_timestamp(state.lmt);
    return bytes(b.begin(), b.end());
  }
  std::string_view fsm_name() const { return to_string(state.fsm); }
  static constexpr bool owns_lmt = true;
};

struct rata_b_monitor {
  static constexpr std::size_t lmt_width = lmt_width_b;
  static constexpr std::string_view name = "rata_b";
  monitor_b_state state;

  monitor_outputs step(const memory_map& map, const signal_state& e, std::span<const byte> mr) {
    auto [next, out] = step_b(map, state, e, mr);
    state = next;
    return out;
  }
  void complete_reset() { state = apply_reset(state); }
  void idle(cycle_t) {}
  bytes lmt_bytes() const { return bytes(state.lmt.begin(), state.lmt.end()); }
  std::string_view fsm_name() const { return to_string(state.fsm); }
  static constexpr bool owns_lmt = true;
};

/// Unmodified hybrid-RA device: nothing watches AR and LMT is plain memory.
struct null_monitor {
  static constexpr std::size_t lmt_width = 0;
  static constexpr std::string_view name = "baseline";

  monitor_outputs step(const memory_map&, const signal_state&, std::span<const byte>) { return {}; }
  void complete_reset() {}
  void idle(cycle_t) {}
  bytes lmt_bytes() const { return {}; }
  std::string_view fsm_name() const { return "-"; }
  static constexpr bool owns_lmt = false;
};

} // namespace rata
