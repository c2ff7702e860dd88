#pragma once

// TOCTOU security game. The challenger fixes t0 and an attestation schedule;
// the adversary controls the prover's software and DMA (and, for
// ResetReprogram, a wired programmer) and wins if the final verification
// succeeds although AR differed from the expected content at some point in
// [t0, t_att].

#include <rata/ltl.hpp>
#include <rata/protocol.hpp>

#include <random>
#include <string>
#include <vector>

namespace rata {

enum class construction { rata_a, rata_b, baseline };

enum class strategy_kind {
  benign,
  transient_restore,
  erase_on_request,
  lmt_direct_write,
  dma_ar_write,
  replay_challenge,
  spoof_lmt_field,
  reset_reprogram,
};

inline constexpr strategy_kind all_strategies[] = {
    strategy_kind::benign,           strategy_kind::transient_restore, strategy_kind::erase_on_request,
    strategy_kind::lmt_direct_write, strategy_kind::dma_ar_write,      strategy_kind::replay_challenge,
    strategy_kind::spoof_lmt_field,  strategy_kind::reset_reprogram,
};

inline constexpr std::pair<std::string_view, construction> construction_names[] = {
    {"rata_a", construction::rata_a}, {"rata_b", construction::rata_b}, {"baseline", construction::baseline}};

inline constexpr std::pair<std::string_view, strategy_kind> strategy_names[] = {
    {"benign", strategy_kind::benign},
    {"transient_restore", strategy_kind::transient_restore},
    {"erase_on_request", strategy_kind::erase_on_request},
    {"lmt_direct_write", strategy_kind::lmt_direct_write},
    {"dma_ar_write", strategy_kind::dma_ar_write},
    {"replay_challenge", strategy_kind::replay_challenge},
    {"spoof_lmt_field", strategy_kind::spoof_lmt_field},
    {"reset_reprogram", strategy_kind::reset_reprogram},
};

inline std::string_view to_string(construction c) {
  for (auto [n, v] : construction_names)
    if (v == c) return n;
  return "?";
}

inline std::string_view to_string(strategy_kind k) {
  for (auto [n, v] : strategy_names)
    if (v == k) return n;
  return "?";
}

inline std::optional<construction> construction_from_name(std::string_view s) {
  for (auto [n, v] : construction_names)
    if (n == s) return v;
  return std::nullopt;
}

inline std::optional<strategy_kind> strategy_from_name(std::string_view s) {
  for (auto [n, v] : strategy_names)
    if (n == s) return v;
  return std::nullopt;
}

inline std::size_t lmt_width_for(construction c) { return c == construction::rata_b ? lmt_width_b : lmt_width_a; }

enum class channel { cpu, dma, physical };

inline std::string_view to_string(channel c) {
  switch (c) {
  case channel::cpu: return "cpu";
  case channel::dma: return "dma";
  case channel::physical: return "physical";
  }
  return "?";
}

struct scheduled_write {
  cycle_t cycle = 0;
  address addr = 0;
  byte value = 0;
  channel via = channel::cpu;

  friend bool operator==(const scheduled_write&, const scheduled_write&) = default;
};

struct adversary_strategy {
  strategy_kind kind = strategy_kind::benign;
  /// Timed writes, non-decreasing in cycle. A write whose cycle falls inside
  /// an attestation is performed right after it. Physical writes sharing a
  /// cycle form one reprogramming session.
  std::vector<scheduled_write> writes;
  /// Writes performed when the final request arrives, before the routine runs.
  std::vector<scheduled_write> on_request;
};

struct game_config {
  construction kind = construction::rata_a;
  memory_image image{toy_layout(lmt_width_a)}; // expected content M
  cycle_t t0 = 100;
  std::vector<cycle_t> attest_at{200}; // the last entry is the final exchange
  adversary_strategy strategy;
  std::uint64_t seed = 0;
  bool record_trace = true;
};

struct exchange_record {
  cycle_t start = 0;
  cycle_t verified_at = 0;
  bool accepted = true; // false when the prover ignored the request
  bool verify = false;
};

struct game_outcome {
  construction kind = construction::rata_a;
  strategy_kind strategy = strategy_kind::benign;
  std::uint64_t seed = 0;
  bool verify_result = false;
  bool premise_modified = false;
  bool adv_wins = false;
  cycle_t t0 = 0;
  cycle_t t_att = 0;
  std::size_t resets = 0;
  std::size_t replays_attempted = 0;
  std::size_t replays_rejected = 0;
  attest_report final_report;
  std::vector<exchange_record> exchanges;
  trace steps;
  memory_map map;
};

/// Throws config_error when the configuration is inconsistent.
inline void validate(const game_config& cfg) {
  const auto& m = cfg.image.map();
  m.validate(lmt_width_for(cfg.kind));
  if (cfg.attest_at.empty()) throw config_error("attestation schedule is empty");
  for (std::size_t i = 1; i < cfg.attest_at.size(); ++i)
    if (cfg.attest_at[i] <= cfg.attest_at[i - 1]) throw config_error("attestation schedule must be strictly increasing");
  if (cfg.t0 > cfg.attest_at.front()) throw config_error("t0 must not exceed the first attestation time");
  auto check = [&](const std::vector<scheduled_write>& ws, bool timed) {
    cycle_t prev = 0;
    for (const auto& w : ws) {
      if (w.addr >= m.address_space) throw config_error("write address outside the address space");
      if (m.cr.contains(w.addr)) throw config_error("write into ROM (cr)");
      if (!timed) continue;
      if (w.cycle < prev) throw config_error("write schedule must be sorted by cycle");
      if (w.cycle >= cfg.attest_at.back()) throw config_error("write scheduled at or after the final attestation");
      prev = w.cycle;
    }
  };
  check(cfg.strategy.writes, true);
  check(cfg.strategy.on_request, false);
}

namespace detail {

/// Tracks how many AR bytes outside LMT differ from M.
class premise_tracker {
public:
  premise_tracker(const memory_image& expected, cycle_t t0) : expected_(expected), t0_(t0) {}

  void refresh(const memory_image& now, address a) {
    const auto& m = expected_.map();
    if (!m.ar.contains(a) || m.lmt.contains(a)) return;
    const bool differs = now.at(a) != expected_.at(a);
    if (differs != dirty_[a]) {
      dirty_[a] = differs;
      differs ? ++count_ : --count_;
    }
  }

  /// Called with the time an event happens (or the attestation starts).
  void reach(cycle_t t) {
    if (!checked_t0_ && t >= t0_) {
      checked_t0_ = true;
      if (count_ > 0) modified_ = true;
    }
  }

  /// After a write at time t (within the window up to t_att).
  void after_write(cycle_t t) {
    if (t >= t0_ && count_ > 0) modified_ = true;
  }

  bool modified() const noexcept { return modified_; }

private:
  const memory_image& expected_;
  cycle_t t0_;
  std::vector<bool> dirty_ = std::vector<bool>(expected_.size(), false);
  std::size_t count_ = 0;
  bool checked_t0_ = false;
  bool modified_ = false;
};

struct recorded_exchange {
  challenge chal;
  mac_tag auth;
  attest_report report;
};

template <class Monitor>
class game_runner {
public:
  explicit game_runner(const game_config& cfg)
      : cfg_(cfg), rng_(cfg.seed), prv_key_(make_key(rng_)), prv_(cfg.image, prv_key_, cfg.record_trace),
        premise_(cfg.image, cfg.t0) {
    auto exp = expected_memory::from_image(cfg.image);
    vrf_a_ = {prv_key_, exp, 0};
    vrf_b_.key = prv_key_;
    vrf_b_.expected = exp;
    if (cfg.record_trace) prv_.reserve_trace(static_cast<std::size_t>(cfg.attest_at.back()) + 128);
  }

  game_outcome run() {
    game_outcome out;
    out.kind = cfg_.kind;
    out.strategy = cfg_.strategy.kind;
    out.seed = cfg_.seed;
    out.t0 = cfg_.t0;
    out.map = cfg_.image.map();

    // Priming exchange at boot: gives the verifier its first association
    // and the adversary something to replay.
    out.exchanges.push_back(exchange(false, out));
    if (prv_.now() >= cfg_.t0) throw config_error("t0 must be later than the boot-time exchange (ends at cycle " +
                                                  std::to_string(prv_.now()) + ")");

    const auto& writes = cfg_.strategy.writes;
    std::size_t wi = 0;
    for (std::size_t ai = 0; ai < cfg_.attest_at.size(); ++ai) {
      const cycle_t at = cfg_.attest_at[ai];
      while (wi < writes.size() && writes[wi].cycle < at) wi = perform(writes, wi);
      prv_.idle_until(at);
      const bool last = ai + 1 == cfg_.attest_at.size();
      if (last) {
        for (const auto& w : cfg_.strategy.on_request) apply(w);
        out.t_att = prv_.now();
        premise_.reach(out.t_att);
      }
      out.exchanges.push_back(exchange(last, out));
    }
    out.verify_result = out.exchanges.back().verify;
    out.premise_modified = premise_.modified();
    out.adv_wins = out.verify_result && out.premise_modified;
    out.resets = prv_.resets();
    out.steps = prv_.take_trace();
    return out;
  }

private:
  static master_key make_key(std::mt19937_64& rng) {
    master_key k;
    k.bytes = random_challenge(rng).bytes;
    return k;
  }

  /// Performs writes[i] (and any physical writes sharing its cycle); returns the next index.
  std::size_t perform(const std::vector<scheduled_write>& writes, std::size_t i) {
    prv_.idle_until(writes[i].cycle);
    if (writes[i].via == channel::physical) {
      std::vector<std::pair<address, byte>> session;
      std::size_t j = i;
      for (; j < writes.size() && writes[j].via == channel::physical && writes[j].cycle == writes[i].cycle; ++j)
        session.emplace_back(writes[j].addr, writes[j].value);
      const cycle_t t = prv_.now();
      premise_.reach(t);
      prv_.physical_reprogram(session);
      for (auto [a, v] : session) premise_.refresh(prv_.image(), a);
      premise_.after_write(t);
      return j;
    }
    apply(writes[i]);
    return i + 1;
  }

  void apply(const scheduled_write& w) {
    const cycle_t t = prv_.now();
    premise_.reach(t);
    if (w.via == channel::physical) {
      const std::pair<address, byte> one{w.addr, w.value};
      prv_.physical_reprogram(std::span(&one, 1));
    } else if (w.via == channel::dma) {
      prv_.dma_write(w.addr, w.value);
    } else {
      prv_.cpu_write(w.addr, w.value);
    }
    premise_.refresh(prv_.image(), w.addr);
    premise_.after_write(t);
  }

  exchange_record exchange(bool final, game_outcome& out) {
    exchange_record rec;
    rec.start = prv_.now();
    const strategy_kind k = cfg_.strategy.kind;
    if (final && k == strategy_kind::replay_challenge) replay_requests(out);

    std::optional<attest_report> report;
    challenge chal;
    mac_tag auth{};
    if constexpr (std::is_same_v<Monitor, rata_b_monitor>) {
      std::tie(chal, auth) = request_b(vrf_b_);
      report = attest_b(prv_, chal, auth);
    } else {
      chal = request_a(vrf_a_, rng_);
      report = prv_.attest_plain(chal, attest_case::full_ar);
    }
    rec.accepted = report.has_value();
    if (report && !final) history_.push_back({chal, auth, *report});

    if (final && report) {
      if (k == strategy_kind::replay_challenge && !history_.empty()) {
        report = history_.front().report;
      } else if (k == strategy_kind::spoof_lmt_field) {
        report = spoof(*report);
      }
    }

    rec.verified_at = prv_.now();
    if (report) {
      if (final) out.final_report = *report;
      rec.verify = verify(*report, chal, rec.verified_at);
    }
    return rec;
  }

  /// Re-sends earlier requests to the prover, hoping one is accepted and
  /// stamps LMT with an already-associated challenge.
  void replay_requests(game_outcome& out) {
    for (const auto& h : history_) {
      ++out.replays_attempted;
      if constexpr (std::is_same_v<Monitor, rata_b_monitor>) {
        if (!prv_.attest_auth(h.chal, h.auth)) ++out.replays_rejected;
      } else {
        prv_.attest_plain(h.chal);
      }
    }
  }

  attest_report spoof(attest_report r) const {
    if constexpr (std::is_same_v<Monitor, rata_b_monitor>) {
      if (vrf_b_.pair_p) r.lmt.assign(vrf_b_.pair_p->chal.bytes.begin(), vrf_b_.pair_p->chal.bytes.end());
    } else {
      auto old = encode_timestamp(0);
      r.lmt.assign(old.begin(), old.end());
    }
    return r;
  }

  bool verify(const attest_report& r, const challenge& chal, cycle_t now) {
    if constexpr (std::is_same_v<Monitor, rata_b_monitor>) {
      vrf_b_.clock = now;
      return verify_b(vrf_b_, r, chal, cfg_.t0);
    } else if constexpr (std::is_same_v<Monitor, rata_a_monitor>) {
      vrf_a_.clock = now;
      return verify_a(vrf_a_, r, chal, cfg_.t0);
    } else {
      return verify_baseline(vrf_a_, r, chal);
    }
  }

  const game_config& cfg_;
  std::mt19937_64 rng_;
  master_key prv_key_;
  prover<Monitor> prv_;
  premise_tracker premise_;
  verifier_a vrf_a_;
  verifier_b vrf_b_;
  std::vector<recorded_exchange> history_;
};

} // namespace detail

inline game_outcome run_game(const game_config& cfg) {
  validate(cfg);
  switch (cfg.kind) {
  case construction::rata_a: return detail::game_runner<rata_a_monitor>(cfg).run();
  case construction::rata_b: return detail::game_runner<rata_b_monitor>(cfg).run();
  case construction::baseline: return detail::game_runner<null_monitor>(cfg).run();
  }
  throw config_error("unknown construction");
}

inline std::vector<ltl::named_formula> invariant_suite(construction c) {
  switch (c) {
  case construction::rata_a: return ltl::rata_a_invariants();
  case construction::rata_b: return ltl::rata_b_invariants();
  case construction::baseline: return {};
  }
  return {};
}

// --- strategy generation ----------------------------------------------------

/// Randomized schedule for `kind` against the expected image, with every
/// adversarial write falling in [from, to) and at most `max_writes` distinct
/// AR bytes touched.
template <class Engine>
adversary_strategy generate_strategy(strategy_kind kind, const memory_image& expected, cycle_t from, cycle_t to,
                                     Engine& rng, std::size_t max_writes = 8) {
  adversary_strategy s;
  s.kind = kind;
  if (kind == strategy_kind::benign) return s;
  if (to <= from + 2 * max_writes + 2) throw config_error("write window too short for the schedule");

  const auto& m = expected.map();
  auto pick = [&](std::uint64_t lo, std::uint64_t hi) { return std::uniform_int_distribution<std::uint64_t>(lo, hi)(rng); };
  auto body_addr = [&] {
    address a;
    do a = static_cast<address>(pick(m.ar.first, m.ar.last));
    while (m.lmt.contains(a));
    return a;
  };
  auto evil = [&](address a) { return static_cast<byte>(expected.at(a) ^ static_cast<byte>(pick(1, 255))); };

  const std::size_t n = static_cast<std::size_t>(pick(1, max_writes));
  std::vector<address> targets;
  while (targets.size() < n) {
    address a = body_addr();
    if (std::find(targets.begin(), targets.end(), a) == targets.end()) targets.push_back(a);
  }

  // Distinct sorted cycles: infection writes, optional extra events, restores.
  std::vector<cycle_t> cycles;
  const std::size_t slots = 2 * n + 2 * lmt_width_b;
  while (cycles.size() < std::min<std::size_t>(slots, static_cast<std::size_t>(to - from))) {
    cycle_t c = pick(from, to - 1);
    if (std::find(cycles.begin(), cycles.end(), c) == cycles.end()) cycles.push_back(c);
  }
  std::sort(cycles.begin(), cycles.end());
  std::size_t ci = 0;
  auto next_cycle = [&] { return cycles.at(ci++); };

  const channel via = kind == strategy_kind::dma_ar_write ? channel::dma
                      : kind == strategy_kind::reset_reprogram ? channel::physical
                                                               : channel::cpu;
  const bool mixed = kind == strategy_kind::transient_restore;
  auto chan = [&] { return mixed && pick(0, 1) ? channel::dma : via; };

  if (kind == strategy_kind::reset_reprogram) {
    const cycle_t infect = next_cycle();
    const cycle_t restore = cycles.at(cycles.size() / 2 + 1);
    for (address a : targets) s.writes.push_back({infect, a, evil(a), channel::physical});
    for (address a : targets) s.writes.push_back({restore, a, expected.at(a), channel::physical});
    return s;
  }

  for (address a : targets) s.writes.push_back({next_cycle(), a, evil(a), chan()});
  if (kind == strategy_kind::lmt_direct_write) {
    // Try to put LMT back to a value the verifier would accept.
    const auto lmt = expected.view(m.lmt);
    for (std::size_t i = 0; i < m.lmt.size() && ci + n < cycles.size(); ++i)
      s.writes.push_back({next_cycle(), static_cast<address>(m.lmt.first + i), lmt[i], chan()});
  }
  if (kind == strategy_kind::erase_on_request) {
    for (auto it = targets.rbegin(); it != targets.rend(); ++it) s.on_request.push_back({0, *it, expected.at(*it), via});
    return s;
  }
  for (auto it = targets.rbegin(); it != targets.rend(); ++it)
    s.writes.push_back({next_cycle(), *it, expected.at(*it), chan()});
  return s;
}

} // namespace rata
