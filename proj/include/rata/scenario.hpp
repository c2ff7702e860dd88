#pragma once

// Scenario and fleet configuration files (`key = value`, `#` comments).
//
// Scenario keys:
//   construction = rata_a | rata_b | baseline
//   strategy     = benign | transient_restore | ... (see strategy_names)
//   seed         = integer
//   t0           = cycle
//   attest_at    = cycle[, cycle ...]        strictly increasing
//   layout       = toy | default             base layout, then per-key overrides
//   ar_min, ar_max, lmt_min, lmt_max, mr_min, mr_max, cr_min, cr_max, cr_auth, address_space
//   image        = path                      raw dump or |AR| bytes; synthetic otherwise
//   image_seed   = integer                   synthetic image pattern
//   write        = cycle addr value [cpu|dma|physical]     repeatable, sorted
//   on_request   = addr value [cpu|dma]                    repeatable
//   max_writes   = n                         size of a generated schedule
//   trace_out, record_out = path            optional outputs
//
// When a non-benign strategy has no explicit writes, a schedule is generated
// from the seed over [t0, final attestation).

#include <rata/game.hpp>
#include <rata/swarm.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

namespace rata {

struct scenario {
  game_config game;
  std::optional<std::filesystem::path> trace_out;
  std::optional<std::filesystem::path> record_out;
  bool generated = false; // schedule drawn from the seed rather than listed
  std::size_t max_writes = 8;
};

namespace detail {

inline std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw error("cannot open " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline channel parse_channel(std::string_view s, std::size_t line, bool allow_physical) {
  if (s == "cpu") return channel::cpu;
  if (s == "dma") return channel::dma;
  if (s == "physical" && allow_physical) return channel::physical;
  throw config_error("unknown write channel `" + std::string(s) + "`", line);
}

inline byte parse_byte(std::string_view s, std::size_t line) {
  auto v = config::parse_uint(s, line);
  if (v > 0xFF) throw config_error("byte value out of range", line);
  return static_cast<byte>(v);
}

inline memory_map base_layout(std::string_view name, std::size_t width, std::size_t line) {
  if (name == "toy") return toy_layout(width);
  if (name == "default") return default_layout(width);
  throw config_error("unknown layout `" + std::string(name) + "`", line);
}

/// Applies layout entries; LMT follows AR's end unless given explicitly.
inline memory_map resolve_layout(const std::vector<config::entry>& layout_entries, std::string_view base_name,
                                 std::size_t base_line, std::size_t width) {
  memory_map m = parse_layout(layout_entries, base_layout(base_name, width, base_line));
  bool lmt_given = false;
  for (const auto& e : layout_entries)
    if (e.key == "lmt_min" || e.key == "lmt_max") lmt_given = true;
  if (!lmt_given) m.lmt = lmt_at_end(m.ar, width);
  std::size_t line = layout_entries.empty() ? base_line : layout_entries.back().line;
  try {
    m.validate(width);
  } catch (const config_error& e) {
    throw config_error(e.what(), line);
  }
  return m;
}

inline bool is_layout_key(std::string_view k) {
  static constexpr std::string_view keys[] = {"ar_min", "ar_max", "lmt_min", "lmt_max", "mr_min",
                                              "mr_max", "cr_min", "cr_max",  "cr_auth", "address_space"};
  return std::find(std::begin(keys), std::end(keys), k) != std::end(keys);
}

inline void check_write_target(const memory_map& m, address a, std::size_t line) {
  if (a >= m.address_space) throw config_error("write address 0x" + address_fault::to_hex_address(a) +
                                                   " outside the address space", line);
  if (m.cr.contains(a)) throw config_error("write into ROM (cr) at 0x" + address_fault::to_hex_address(a), line);
}

} // namespace detail

inline scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {}) {
  const auto entries = config::parse_entries(text);
  scenario sc;
  auto& g = sc.game;

  std::string layout_name = "toy";
  std::size_t layout_line = 0;
  std::vector<config::entry> layout_entries;
  std::optional<config::entry> image_entry;
  std::uint64_t image_seed = 0;
  std::size_t max_writes = 8;
  std::vector<config::entry> write_entries, request_entries;

  for (const auto& e : entries) {
    if (e.key == "construction") {
      auto c = construction_from_name(e.value);
      if (!c) throw config_error("unknown construction `" + e.value + "`", e.line);
      g.kind = *c;
    } else if (e.key == "strategy") {
      auto k = strategy_from_name(e.value);
      if (!k) throw config_error("unknown strategy `" + e.value + "`", e.line);
      g.strategy.kind = *k;
    } else if (e.key == "seed") {
      g.seed = config::parse_uint(e.value, e.line);
    } else if (e.key == "t0") {
      g.t0 = config::parse_uint(e.value, e.line);
    } else if (e.key == "attest_at") {
      g.attest_at.clear();
      for (auto part : config::split(e.value, ',')) {
        for (auto tok : config::split_ws(part)) {
          auto t = config::parse_uint(tok, e.line);
          if (!g.attest_at.empty() && t <= g.attest_at.back())
            throw config_error("attest_at must be strictly increasing", e.line);
          g.attest_at.push_back(t);
        }
      }
      if (g.attest_at.empty()) throw config_error("attest_at is empty", e.line);
    } else if (e.key == "layout") {
      layout_name = e.value;
      layout_line = e.line;
    } else if (detail::is_layout_key(e.key)) {
      layout_entries.push_back(e);
    } else if (e.key == "image") {
      image_entry = e;
    } else if (e.key == "image_seed") {
      image_seed = config::parse_uint(e.value, e.line);
    } else if (e.key == "write") {
      write_entries.push_back(e);
    } else if (e.key == "on_request") {
      request_entries.push_back(e);
    } else if (e.key == "max_writes") {
      max_writes = config::parse_uint(e.value, e.line);
      if (max_writes == 0) throw config_error("max_writes must be positive", e.line);
    } else if (e.key == "trace_out") {
      sc.trace_out = base_dir / e.value;
    } else if (e.key == "record_out") {
      sc.record_out = base_dir / e.value;
    } else {
      throw config_error("unknown key `" + e.key + "`", e.line);
    }
  }

  const memory_map m = detail::resolve_layout(layout_entries, layout_name, layout_line, lmt_width_for(g.kind));
  if (image_entry) {
    try {
      g.image = load_image(base_dir / image_entry->value, m);
    } catch (const config_error& err) {
      throw config_error(err.what(), image_entry->line);
    } catch (const error& err) {
      throw config_error(err.what(), image_entry->line);
    }
    // Monitor-owned LMT starts from its boot value.
    for (address a = m.lmt.first; a <= m.lmt.last; ++a) g.image.poke(a, 0);
  } else {
    g.image = synthetic_image(m, image_seed);
  }

  cycle_t prev = 0;
  for (const auto& e : write_entries) {
    auto f = config::split_ws(e.value);
    if (f.size() < 3 || f.size() > 4) throw config_error("write expects `cycle addr value [cpu|dma|physical]`", e.line);
    scheduled_write w{config::parse_uint(f[0], e.line), config::parse_address(f[1], e.line),
                      detail::parse_byte(f[2], e.line),
                      f.size() == 4 ? detail::parse_channel(f[3], e.line, true) : channel::cpu};
    if (w.cycle < prev) throw config_error("write schedule is not sorted by cycle", e.line);
    if (w.cycle >= g.attest_at.back()) throw config_error("write scheduled at or after the final attestation", e.line);
    detail::check_write_target(m, w.addr, e.line);
    prev = w.cycle;
    g.strategy.writes.push_back(w);
  }
  for (const auto& e : request_entries) {
    auto f = config::split_ws(e.value);
    if (f.size() < 2 || f.size() > 3) throw config_error("on_request expects `addr value [cpu|dma]`", e.line);
    scheduled_write w{0, config::parse_address(f[0], e.line), detail::parse_byte(f[1], e.line),
                      f.size() == 3 ? detail::parse_channel(f[2], e.line, false) : channel::cpu};
    detail::check_write_target(m, w.addr, e.line);
    g.strategy.on_request.push_back(w);
  }

  if (g.t0 > g.attest_at.front()) throw config_error("t0 must not exceed the first attestation time");
  if (g.strategy.kind != strategy_kind::benign && g.strategy.writes.empty() && g.strategy.on_request.empty()) {
    std::mt19937_64 rng(g.seed ^ 0x5CE0A210ull);
    g.strategy = generate_strategy(g.strategy.kind, g.image, g.t0, g.attest_at.back(), rng, max_writes);
    sc.generated = true;
  }
  sc.max_writes = max_writes;
  validate(g);
  return sc;
}

/// Same scenario under another seed; a generated schedule is drawn again.
inline scenario reseed(scenario sc, std::uint64_t seed) {
  auto& g = sc.game;
  g.seed = seed;
  if (sc.generated) {
    std::mt19937_64 rng(g.seed ^ 0x5CE0A210ull);
    g.strategy = generate_strategy(g.strategy.kind, g.image, g.t0, g.attest_at.back(), rng, sc.max_writes);
  }
  return sc;
}

inline scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(detail::read_text(path), path.parent_path());
}

// Fleet keys:
//   devices, rounds, period, stagger, d_max, timeout, seed, replay_device
//   layout and layout keys as for scenarios (LMT is 32 bytes)
//   image = path (every device) ; image.N = path (device N)
//   write   = device cycle addr value [cpu|dma]
//   migrate = from to start instant linger addr

inline fleet_config parse_fleet(std::string_view text, const std::filesystem::path& base_dir = {}) {
  const auto entries = config::parse_entries(text);
  fleet_config f;
  std::string layout_name = "toy";
  std::size_t layout_line = 0;
  std::vector<config::entry> layout_entries, write_entries, migrate_entries;
  std::optional<config::entry> common_image;
  std::vector<config::entry> device_images;

  for (const auto& e : entries) {
    auto num = [&] { return config::parse_uint(e.value, e.line); };
    if (e.key == "devices") f.devices = num();
    else if (e.key == "rounds") f.rounds = num();
    else if (e.key == "period") f.period = num();
    else if (e.key == "stagger") f.stagger = num();
    else if (e.key == "d_max") f.d_max = num();
    else if (e.key == "timeout") f.timeout = num();
    else if (e.key == "seed") f.seed = num();
    else if (e.key == "replay_device") f.replay_device = num();
    else if (e.key == "layout") {
      layout_name = e.value;
      layout_line = e.line;
    } else if (detail::is_layout_key(e.key)) layout_entries.push_back(e);
    else if (e.key == "image") common_image = e;
    else if (e.key.starts_with("image.")) device_images.push_back(e);
    else if (e.key == "write") write_entries.push_back(e);
    else if (e.key == "migrate") migrate_entries.push_back(e);
    else throw config_error("unknown key `" + e.key + "`", e.line);
  }
  if (f.devices == 0) throw config_error("devices must be positive");

  f.map = detail::resolve_layout(layout_entries, layout_name, layout_line, lmt_width_b);
  if (common_image || !device_images.empty()) {
    for (std::size_t i = 0; i < f.devices; ++i) f.images.push_back(synthetic_image(f.map, f.seed * 7919 + i));
    auto load = [&](const config::entry& e, std::size_t dev) {
      try {
        f.images[dev] = load_image(base_dir / e.value, f.map);
      } catch (const error& err) {
        throw config_error(err.what(), e.line);
      }
      for (address a = f.map.lmt.first; a <= f.map.lmt.last; ++a) f.images[dev].poke(a, 0);
    };
    if (common_image)
      for (std::size_t i = 0; i < f.devices; ++i) load(*common_image, i);
    for (const auto& e : device_images) {
      auto dev = config::parse_uint(std::string_view(e.key).substr(6), e.line);
      if (dev >= f.devices) throw config_error("image for a device that does not exist", e.line);
      load(e, dev);
    }
  }

  for (const auto& e : write_entries) {
    auto p = config::split_ws(e.value);
    if (p.size() < 4 || p.size() > 5) throw config_error("write expects `device cycle addr value [cpu|dma]`", e.line);
    device_write dw{config::parse_uint(p[0], e.line),
                    {config::parse_uint(p[1], e.line), config::parse_address(p[2], e.line),
                     detail::parse_byte(p[3], e.line),
                     p.size() == 5 ? detail::parse_channel(p[4], e.line, false) : channel::cpu}};
    if (dw.device >= f.devices) throw config_error("write names a device that does not exist", e.line);
    detail::check_write_target(f.map, dw.write.addr, e.line);
    f.writes.push_back(dw);
  }
  for (const auto& e : migrate_entries) {
    auto p = config::split_ws(e.value);
    if (p.size() != 6) throw config_error("migrate expects `from to start instant linger addr`", e.line);
    auto from = config::parse_uint(p[0], e.line), to = config::parse_uint(p[1], e.line);
    if (from >= f.devices || to >= f.devices || from == to)
      throw config_error("migrate needs two distinct existing devices", e.line);
    auto start = config::parse_uint(p[2], e.line), instant = config::parse_uint(p[3], e.line);
    if (instant <= start) throw config_error("migration instant must follow the infection start", e.line);
    auto addr = config::parse_address(p[5], e.line);
    detail::check_write_target(f.map, addr, e.line);
    auto ws = migration_writes(f, from, to, addr, start, instant, config::parse_uint(p[4], e.line));
    f.writes.insert(f.writes.end(), ws.begin(), ws.end());
  }
  std::stable_sort(f.writes.begin(), f.writes.end(),
                   [](const device_write& a, const device_write& b) { return a.write.cycle < b.write.cycle; });
  validate(f);
  return f;
}

inline fleet_config load_fleet(const std::filesystem::path& path) {
  return parse_fleet(detail::read_text(path), path.parent_path());
}

} // namespace rata
