#pragma once

// Collective attestation of a device fleet: each device runs the clockless
// (challenge-as-LMT) protocol with the verifier; a round's results bound a
// window during which the whole fleet was unmodified.

#include <rata/game.hpp>
#include <rata/protocol.hpp>

#include <limits>
#include <queue>
#include <random>
#include <stdexcept>
#include <vector>

namespace rata {

struct swarm_entry {
  std::size_t device = 0;
  std::size_t round = 0;
  cycle_t t_req = 0; // when the verifier issued this round's request
  cycle_t t_lmt = 0; // verifier time associated with the reported LMT
  bool verified = false;

  friend bool operator==(const swarm_entry&, const swarm_entry&) = default;
};

struct safe_window {
  cycle_t start = 0;
  cycle_t end = 0;

  friend bool operator==(const safe_window&, const safe_window&) = default;
};

/// (max t_lmt, min t_req) when every entry verified and the interval is
/// non-empty; nullopt otherwise.
inline std::optional<safe_window> compute_safe_window(std::span<const swarm_entry> entries) {
  if (entries.empty()) throw std::domain_error("safe window of an empty fleet");
  cycle_t start = 0;
  cycle_t end = std::numeric_limits<cycle_t>::max();
  for (const auto& e : entries) {
    if (!e.verified) return std::nullopt;
    start = std::max(start, e.t_lmt);
    end = std::min(end, e.t_req);
  }
  if (!(start < end)) return std::nullopt;
  return safe_window{start, end};
}

struct device_write {
  std::size_t device = 0;
  scheduled_write write; // cpu or dma only
};

struct fleet_config {
  std::size_t devices = 3;
  memory_map map = toy_layout(lmt_width_b);
  std::vector<memory_image> images; // one per device; synthetic when empty
  std::size_t rounds = 3;
  cycle_t period = 1000;  // cycles between round starts
  cycle_t stagger = 0;    // request issue offset between consecutive devices
  cycle_t d_max = 50;     // one-way delay drawn uniformly from [0, d_max]
  cycle_t timeout = 0;    // 0 disables; otherwise max round trip
  std::optional<std::size_t> replay_device; // answers with its previous response
  std::vector<device_write> writes;         // sorted by cycle per device
  std::uint64_t seed = 0;
};

/// A write as it actually happened (writes falling inside an attestation run after it).
struct applied_write {
  std::size_t device = 0;
  cycle_t cycle = 0;
  address addr = 0;
  byte value = 0;
};

struct fleet_outcome {
  std::vector<std::vector<swarm_entry>> rounds;
  std::vector<applied_write> applied;
  std::size_t replays_sent = 0;

  std::optional<safe_window> window(std::size_t round) const { return compute_safe_window(rounds.at(round)); }
};

inline void validate(const fleet_config& cfg) {
  if (cfg.devices == 0) throw config_error("fleet needs at least one device");
  if (cfg.rounds == 0) throw config_error("fleet needs at least one round");
  cfg.map.validate(lmt_width_b);
  if (!cfg.images.empty() && cfg.images.size() != cfg.devices)
    throw config_error("one image per device is required when images are given");
  for (const auto& img : cfg.images)
    if (img.map() != cfg.map) throw config_error("device image layout differs from the fleet layout");
  const cycle_t busy = 2 * cfg.d_max + 2 * block_size + 16 + cfg.stagger * cfg.devices;
  if (cfg.period <= busy)
    throw config_error("round period " + std::to_string(cfg.period) + " must exceed " + std::to_string(busy) +
                       " so rounds do not overlap");
  if (cfg.replay_device && *cfg.replay_device >= cfg.devices) throw config_error("replay_device out of range");
  std::vector<cycle_t> last(cfg.devices, 0);
  for (const auto& dw : cfg.writes) {
    if (dw.device >= cfg.devices) throw config_error("write names a device that does not exist");
    if (dw.write.via == channel::physical) throw config_error("fleet writes must use cpu or dma");
    if (dw.write.addr >= cfg.map.address_space || cfg.map.cr.contains(dw.write.addr))
      throw config_error("fleet write address outside writable memory");
    if (dw.write.cycle < last[dw.device]) throw config_error("fleet writes must be sorted by cycle per device");
    last[dw.device] = dw.write.cycle;
  }
}

namespace detail {

struct fleet_device {
  prover<rata_b_monitor> prv;
  verifier_b vrf;
  std::vector<scheduled_write> pending; // reversed: back() is next
  std::optional<attest_report> last_response;
  cycle_t last_verified_at = 0;
};

enum class event_kind { request_arrives, response_arrives };

struct fleet_event {
  cycle_t time = 0;
  std::uint64_t seq = 0;
  event_kind kind = event_kind::request_arrives;
  std::size_t device = 0;
  std::size_t round = 0;
  challenge chal;
  mac_tag auth;
  std::optional<attest_report> report;

  bool operator>(const fleet_event& o) const { return time != o.time ? time > o.time : seq > o.seq; }
};

} // namespace detail

/// Discrete-event run of `rounds` collective attestation rounds.
inline fleet_outcome run_cra(const fleet_config& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<cycle_t> delay(0, cfg.d_max);

  std::vector<detail::fleet_device> devs;
  devs.reserve(cfg.devices);
  for (std::size_t i = 0; i < cfg.devices; ++i) {
    memory_image img = cfg.images.empty() ? synthetic_image(cfg.map, cfg.seed * 7919 + i) : cfg.images[i];
    master_key key;
    key.bytes = random_challenge(rng).bytes;
    verifier_b vrf;
    vrf.key = key;
    vrf.expected = expected_memory::from_image(img);
    devs.push_back({prover<rata_b_monitor>(std::move(img), key, false), std::move(vrf), {}, std::nullopt, 0});
  }
  for (const auto& dw : cfg.writes) devs[dw.device].pending.push_back(dw.write);
  for (auto& d : devs) std::reverse(d.pending.begin(), d.pending.end());

  fleet_outcome out;
  out.rounds.assign(cfg.rounds, std::vector<swarm_entry>(cfg.devices));
  std::priority_queue<detail::fleet_event, std::vector<detail::fleet_event>, std::greater<>> queue;
  std::uint64_t seq = 0;

  for (std::size_t r = 0; r < cfg.rounds; ++r) {
    for (std::size_t i = 0; i < cfg.devices; ++i) {
      const cycle_t issue = r * cfg.period + i * cfg.stagger;
      auto [chal, auth] = request_b(devs[i].vrf);
      out.rounds[r][i] = {i, r, issue, 0, false};
      queue.push({issue + delay(rng), seq++, detail::event_kind::request_arrives, i, r, chal, auth, std::nullopt});
    }
  }

  auto apply_pending = [&](detail::fleet_device& d, std::size_t idx, cycle_t until) {
    while (!d.pending.empty() && d.pending.back().cycle <= until) {
      const auto w = d.pending.back();
      d.pending.pop_back();
      d.prv.idle_until(w.cycle);
      const cycle_t t = d.prv.now();
      if (w.via == channel::dma) d.prv.dma_write(w.addr, w.value);
      else d.prv.cpu_write(w.addr, w.value);
      out.applied.push_back({idx, t, w.addr, w.value});
    }
  };

  while (!queue.empty()) {
    auto ev = queue.top();
    queue.pop();
    auto& d = devs[ev.device];
    auto& entry = out.rounds[ev.round][ev.device];

    if (ev.kind == detail::event_kind::request_arrives) {
      apply_pending(d, ev.device, ev.time);
      d.prv.idle_until(ev.time);
      auto report = attest_b(d.prv, ev.chal, ev.auth);
      if (cfg.replay_device == ev.device && d.last_response) {
        ++out.replays_sent;
        std::swap(report, d.last_response);
      } else {
        d.last_response = report;
      }
      if (!report) continue; // ignored request: the verifier times out
      queue.push({d.prv.now() + delay(rng), seq++, detail::event_kind::response_arrives, ev.device, ev.round,
                  ev.chal, ev.auth, report});
      continue;
    }

    if (cfg.timeout != 0 && ev.time - entry.t_req > cfg.timeout) continue;
    // Devices are chosen fresh-t0 per round: just after the previous verification.
    const cycle_t t0 = d.last_verified_at + 1;
    d.vrf.clock = ev.time;
    entry.verified = verify_b(d.vrf, *ev.report, ev.chal, t0);
    entry.t_lmt = d.vrf.pair_p ? d.vrf.pair_p->time : 0;
    d.last_verified_at = ev.time;
  }
  return out;
}

/// Malware sits on `from` during [start, instant) and on `to` from `instant`
/// for `linger` cycles. Returns the writes realising that.
inline std::vector<device_write> migration_writes(const fleet_config& cfg, std::size_t from, std::size_t to,
                                                  address target, cycle_t start, cycle_t instant, cycle_t linger) {
  auto original = [&](std::size_t dev) {
    return cfg.images.empty() ? synthetic_image(cfg.map, cfg.seed * 7919 + dev).at(target) : cfg.images[dev].at(target);
  };
  std::vector<device_write> ws;
  ws.push_back({from, {start, target, static_cast<byte>(original(from) ^ 0xA5), channel::cpu}});
  ws.push_back({from, {instant, target, original(from), channel::cpu}});
  ws.push_back({to, {instant, target, static_cast<byte>(original(to) ^ 0xA5), channel::cpu}});
  if (linger != 0) ws.push_back({to, {instant + linger, target, original(to), channel::cpu}});
  return ws;
}

/// Per-device infection intervals [start, end) derived from applied writes and
/// the device's expected image (AR body only). `end` is max() while still infected.
struct infection_interval {
  std::size_t device = 0;
  cycle_t start = 0;
  cycle_t end = 0;
};

inline std::vector<infection_interval> infection_intervals(const fleet_config& cfg, const fleet_outcome& out) {
  std::vector<infection_interval> result;
  for (std::size_t dev = 0; dev < cfg.devices; ++dev) {
    memory_image expected = cfg.images.empty() ? synthetic_image(cfg.map, cfg.seed * 7919 + dev) : cfg.images[dev];
    memory_image now = expected;
    std::size_t dirty = 0;
    cycle_t since = 0;
    for (const auto& w : out.applied) {
      if (w.device != dev) continue;
      const bool tracked = cfg.map.ar.contains(w.addr) && !cfg.map.lmt.contains(w.addr);
      if (!tracked) continue;
      const bool before = now.at(w.addr) != expected.at(w.addr);
      now.poke(w.addr, w.value);
      const bool after = now.at(w.addr) != expected.at(w.addr);
      if (before == after) continue;
      if (after && dirty++ == 0) since = w.cycle;
      if (!after && --dirty == 0) {
        result.push_back({dev, since, w.cycle});
      }
    }
    if (dirty > 0) result.push_back({dev, since, std::numeric_limits<cycle_t>::max()});
  }
  return result;
}

/// True when the closed window [start, end] shares a cycle with [iv.start, iv.end).
constexpr bool overlaps(const safe_window& w, const infection_interval& iv) {
  return iv.start <= w.end && iv.end > w.start;
}

} // namespace rata
