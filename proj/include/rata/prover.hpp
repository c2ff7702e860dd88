#pragma once

// Cycle-level prover simulator: a memory image, a hardware monitor policy
// (rata_a_monitor, rata_b_monitor or null_monitor), the device key and the
// attestation routine's execution as a sequence of PC values in CR.

#include <rata/crypto.hpp>
#include <rata/memory.hpp>
#include <rata/monitor.hpp>
#include <rata/trace.hpp>

#include <optional>
#include <utility>

namespace rata {

/// LMT bytes followed by the MAC over the attested data.
struct attest_report {
  bytes lmt;
  mac_tag tag;

  friend bool operator==(const attest_report&, const attest_report&) = default;
};

/// Hex of lmt || tag.
inline std::string serialize_report(const attest_report& r) {
  bytes all(r.lmt);
  all.insert(all.end(), r.tag.bytes.begin(), r.tag.bytes.end());
  return to_hex(all);
}

inline attest_report parse_report(std::string_view hex, std::size_t lmt_width) {
  bytes all = from_hex(hex);
  if (all.size() != lmt_width + block_size) throw error("report length does not match LMT width");
  attest_report r;
  r.lmt.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(lmt_width));
  std::copy(all.begin() + static_cast<std::ptrdiff_t>(lmt_width), all.end(), r.tag.bytes.begin());
  return r;
}

/// Case-1 MACs only the LMT bytes; Case-2 MACs all of AR.
enum class attest_case { lmt_only, full_ar };

inline std::string_view to_string(attest_case c) { return c == attest_case::lmt_only ? "case1" : "case2"; }

template <class Monitor>
class prover {
public:
  using monitor_type = Monitor;

  prover(memory_image image, master_key key, bool record_trace = true)
      : image_(std::move(image)), key_(key), record_(record_trace) {
    sync_lmt();
  }

  cycle_t now() const noexcept { return now_; }
  const memory_image& image() const noexcept { return image_; }
  const memory_map& map() const noexcept { return image_.map(); }
  const Monitor& monitor() const noexcept { return monitor_; }
  const auth_counter& counter() const noexcept { return ctr_; }
  const trace& recorded() const noexcept { return trace_; }
  trace take_trace() { return std::exchange(trace_, {}); }
  void reserve_trace(std::size_t n) { trace_.reserve(n); }
  std::size_t resets() const noexcept { return resets_; }

  /// Address the application executes from between attestations.
  address app_pc() const noexcept { return map().ar.first; }

  /// Advance one cycle. Writes are dropped on a cycle that raises reset.
  monitor_outputs step(signal_state e, byte value = 0) {
    e.cycle = now_;
    const auto& m = map();
    auto out = monitor_.step(m, e, mr_view());
    if (!out.reset) write_event(image_, e, value);
    if (record_) trace_.push_back(make_step(m, e, out, monitor_.fsm_name()));
    if (out.reset) {
      ++resets_;
      monitor_.complete_reset();
    }
    sync_lmt();
    ++now_;
    return out;
  }

  /// Idle (non-writing) application cycles until `t`.
  void idle_until(cycle_t t) {
    if (t <= now_) return;
    if (record_) {
      signal_state idle{};
      idle.pc = app_pc();
      while (now_ < t) step(idle);
    } else {
      monitor_.idle(t - now_);
      now_ = t;
    }
  }

  monitor_outputs cpu_write(address a, byte value) {
    signal_state e{};
    e.pc = app_pc();
    e.w_en = true;
    e.d_addr = a;
    return step(e, value);
  }

  monitor_outputs dma_write(address a, byte value) {
    signal_state e{};
    e.pc = app_pc();
    e.dma_en = true;
    e.dma_addr = a;
    return step(e, value);
  }

  /// Wired reprogramming: the reset line is held for one cycle, flash is
  /// overwritten directly (no bus signals), then the device reboots.
  void physical_reprogram(std::span<const std::pair<address, byte>> writes) {
    signal_state e{};
    e.cycle = now_;
    e.pc = app_pc();
    monitor_.step(map(), e, mr_view());
    if (record_) trace_.push_back(make_step(map(), e, monitor_outputs{true, false, false}, "RESET"));
    for (auto [a, v] : writes) image_.poke(a, v);
    ++resets_;
    monitor_.complete_reset();
    sync_lmt();
    ++now_;
  }

  void reboot() { physical_reprogram({}); }

  /// Untrusted software stores the received challenge into MR, byte by byte.
  void deliver_challenge(const challenge& chal) {
    for (std::size_t i = 0; i < chal.bytes.size(); ++i)
      cpu_write(static_cast<address>(map().mr.first + i), chal.bytes[i]);
  }

  /// Plain SW-Att: HMAC(KDF(K, Chal), data) where data is AR or, for Case-1, LMT.
  attest_report attest_plain(const challenge& chal, attest_case scope = attest_case::full_ar) {
    require_running();
    deliver_challenge(chal);
    execute(map().cr.first);
    attest_report r{lmt_now(), sw_att_plain(key_, chal, attested(scope))};
    execute(map().cr_max());
    last_attested_lmt_ = r.lmt;
    return r;
  }

  /// SW-Att with verifier authentication. Returns nullopt when the request is
  /// ignored (replayed or forged); in that case only the entry and exit PCs run.
  std::optional<attest_report> attest_auth(const challenge& chal, const mac_tag& auth,
                                           attest_case scope = attest_case::full_ar) {
    return run_auth(chal, auth, [scope](const bytes&) { return scope; }).first;
  }

  /// Constant-time variant (plain): Case-1 when LMT equals the copy cached at
  /// the previous attestation, Case-2 otherwise.
  std::pair<attest_report, attest_case> attest_fast_plain(const challenge& chal) {
    const auto c = choose_case(lmt_now());
    return {attest_plain(chal, c), c};
  }

  /// Constant-time variant (authenticated). The case is chosen after CR_auth,
  /// once the monitor has had the chance to refresh LMT.
  std::optional<std::pair<attest_report, attest_case>> attest_fast_auth(const challenge& chal, const mac_tag& auth) {
    auto [r, c] = run_auth(chal, auth, [this](const bytes& lmt) { return choose_case(lmt); });
    if (!r) return std::nullopt;
    return std::pair{*r, c};
  }

  const std::optional<bytes>& cached_lmt() const noexcept { return last_attested_lmt_; }

private:
  template <class Chooser>
  std::pair<std::optional<attest_report>, attest_case> run_auth(const challenge& chal, const mac_tag& auth,
                                                                Chooser choose) {
    require_running();
    deliver_challenge(chal);
    const auto& m = map();
    execute(m.cr.first);
    if (!authenticate_request(key_, chal, auth, ctr_)) {
      execute(m.cr_max());
      return {std::nullopt, attest_case::full_ar};
    }
    execute(m.cr_auth);
    const bytes lmt = lmt_now();
    const attest_case scope = choose(lmt);
    if (m.cr_auth + 1 < m.cr_max()) execute(m.cr_auth + 1);
    auto result = sw_att_auth(key_, chal, auth, attested(scope), ctr_);
    auto* ok = std::get_if<att_accepted>(&result);
    if (!ok) throw error("authenticated request rejected after the guard passed");
    ctr_ = ok->new_ctr;
    execute(m.cr_max());
    last_attested_lmt_ = lmt;
    return {attest_report{lmt, ok->tag}, scope};
  }

  attest_case choose_case(const bytes& lmt) const {
    return last_attested_lmt_ && *last_attested_lmt_ == lmt ? attest_case::lmt_only : attest_case::full_ar;
  }

  void execute(address pc) {
    signal_state e{};
    e.pc = pc;
    e.r_en = true;
    step(e);
  }

  std::span<const byte> attested(attest_case scope) const {
    return image_.view(scope == attest_case::full_ar ? map().ar : map().lmt);
  }

  bytes lmt_now() const { return region_bytes(image_, map().lmt); }

  std::span<const byte> mr_view() const {
    const auto& m = map();
    return image_.view({m.mr.first, static_cast<address>(m.mr.first + block_size - 1)});
  }

  void sync_lmt() {
    if constexpr (Monitor::owns_lmt) {
      const auto lmt = monitor_.lmt_bytes();
      const auto& r = map().lmt;
      for (std::size_t i = 0; i < lmt.size() && i < r.size(); ++i)
        image_.poke(static_cast<address>(r.first + i), lmt[i]);
    }
  }

  void require_running() const {
    if (monitor_.fsm_name() == "RESET") throw error("attestation unavailable while the device is in reset");
  }

  memory_image image_;
  master_key key_;
  Monitor monitor_{};
  auth_counter ctr_{};
  cycle_t now_ = 0;
  bool record_;
  trace trace_;
  std::size_t resets_ = 0;
  std::optional<bytes> last_attested_lmt_;
};

} // namespace rata
