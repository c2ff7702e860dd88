// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <rata/rata.hpp>

#include "ltl_oracle.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <iostream>
#include <regex>
#include <sstream>

using namespace rata;

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t) {
  return std::chrono::duration<double>(clock_type::now() - t).count();
}

struct result {
  bool pass = true;
  std::string detail;
};

// Game traces from criteria 3 to 5, checked against their suites as they are produced.
struct trace_audit {
  std::size_t traces = 0;
  std::size_t failures = 0;
  std::string first_failure;
  double seconds = 0;

  void check(const game_config& cfg, const game_outcome& o) {
    const auto start = clock_type::now();
    const auto verdicts = ltl::check(invariant_suite(cfg.kind), o.steps);
    ++traces;
    if (!ltl::all_hold(verdicts) && failures++ == 0) {
      std::ostringstream os;
      os << to_string(cfg.kind) << "/" << to_string(cfg.strategy.kind) << " seed " << cfg.seed;
      first_failure = os.str();
    }
    seconds += seconds_since(start);
  }
};

trace_audit audit;
int failed = 0;

void criterion(int id, const std::string& title, double budget_s, const std::function<result()>& body) {
  const auto start = clock_type::now();
  result r;
  try {
    r = body();
  } catch (const std::exception& e) {
    r = {false, std::string("exception: ") + e.what()};
  }
  const double secs = seconds_since(start);
  if (secs > budget_s) {
    r.pass = false;
    r.detail += (r.detail.empty() ? "" : "; ") + std::string("over time budget");
  }
  if (!r.pass) ++failed;
  std::cout << (r.pass ? "PASS" : "FAIL") << "  " << id << ". " << title << "  [" << std::fixed
            << std::setprecision(2) << secs << "s / " << std::setprecision(0) << budget_s << "s]";
  if (!r.detail.empty()) std::cout << "  " << r.detail;
  std::cout << std::endl;
}

game_config base_config(construction c, std::uint64_t seed) {
  game_config cfg;
  cfg.kind = c;
  cfg.seed = seed;
  cfg.image = synthetic_image(toy_layout(lmt_width_for(c)), seed);
  return cfg;
}

game_outcome play(const game_config& cfg) {
  auto o = run_game(cfg);
  audit.check(cfg, o);
  return o;
}

// --- 1 ----------------------------------------------------------------------

result utilization_bound_via_cli() {
  const std::string cmd = std::string(RATA_CLI_PATH) + " analyze --c-adv 1000000 --c-ra 3600000";
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return {false, "cannot start " + cmd};
  std::string out;
  char buf[256];
  while (fgets(buf, sizeof buf, p)) out += buf;
  const int rc = pclose(p);
  if (rc != 0) return {false, "analyze exited with " + std::to_string(rc)};
  std::smatch m;
  if (!std::regex_search(out, m, std::regex(R"(([0-9]+\.[0-9]+)%)"))) return {false, "no percentage printed"};
  const double printed = std::stod(m[1]);
  const double expected = 100.0 * 1e6 / (1e6 + 3.6e6); // C_adv / (C_adv + C_RA)
  const bool ok = std::fabs(printed - expected) <= 0.01 && m[1] == "21.74";
  return {ok, "printed " + m[1].str() + "%"};
}

// --- 2 ----------------------------------------------------------------------

result cost_model_anchors() {
  const auto full = attest_cost(4096);
  const double ratio = (attest_cost(32) / full).value();
  std::ostringstream os;
  os << "cost(4096)=" << full.str() << " cycles, cost(32)/cost(4096)=" << std::setprecision(4) << ratio;
  return {full == fraction(3'600'000) && ratio >= 0.09 && ratio <= 0.11, os.str()};
}

// --- 3 ----------------------------------------------------------------------

result baseline_transient_restore() {
  std::size_t wins = 0, runs = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    auto cfg = base_config(construction::baseline, seed);
    std::mt19937_64 rng(seed);
    cfg.strategy = generate_strategy(strategy_kind::transient_restore, cfg.image, cfg.t0, cfg.attest_at.back(), rng);
    for (const auto& w : cfg.strategy.writes)
      if (w.cycle >= cfg.attest_at.back()) return {false, "generated restore after t_att"};
    wins += play(cfg).adv_wins;
    ++runs;
  }
  return {wins == runs, std::to_string(wins) + "/" + std::to_string(runs) + " schedules won by the adversary"};
}

// --- 4 and 5 ----------------------------------------------------------------

constexpr cycle_t window_start = 100;
constexpr cycle_t window_len = 64;

struct corpus_stats {
  std::size_t exhaustive = 0, fuzz = 0, wins = 0, premise = 0;
  std::string first_win;
};

void note_win(corpus_stats& s, const game_outcome& o, const std::string& what) {
  if (o.adv_wins && s.wins++ == 0) s.first_win = what + " seed " + std::to_string(o.seed);
}

// Every (address, infect cycle, restore cycle) over the 64 AR bytes and 64-cycle window.
void exhaustive_single_write(construction c, corpus_stats& s) {
  auto cfg = base_config(c, 1);
  cfg.t0 = window_start;
  cfg.attest_at = {window_start + window_len};
  const auto& ar = cfg.image.map().ar;
  for (address a = ar.first; a <= ar.last; ++a) {
    const byte orig = cfg.image.at(a);
    for (cycle_t w = window_start; w < window_start + window_len; ++w) {
      for (cycle_t r = w + 1; r < window_start + window_len; ++r) {
        const channel in = (a + w) % 2 ? channel::dma : channel::cpu;
        const channel out = (a + r) % 2 ? channel::dma : channel::cpu;
        cfg.strategy = {strategy_kind::transient_restore,
                        {{w, a, static_cast<byte>(orig ^ 0xFF), in}, {r, a, orig, out}},
                        {}};
        const auto o = play(cfg);
        ++s.exhaustive;
        s.premise += o.premise_modified;
        note_win(s, o, "write " + std::to_string(a) + "@" + std::to_string(w) + "/" + std::to_string(r));
      }
    }
  }
}

void fuzz_multi_write(construction c, std::size_t runs, corpus_stats& s) {
  static constexpr strategy_kind kinds[] = {strategy_kind::transient_restore, strategy_kind::erase_on_request,
                                            strategy_kind::lmt_direct_write, strategy_kind::dma_ar_write,
                                            strategy_kind::reset_reprogram};
  for (std::uint64_t seed = 0; seed < runs; ++seed) {
    std::mt19937_64 rng(seed * 31 + 7);
    auto cfg = base_config(c, seed + 1000);
    const std::size_t extra = rng() % 3;
    cfg.attest_at.clear();
    for (std::size_t i = 0; i <= extra; ++i) cfg.attest_at.push_back(200 + 150 * i);
    const auto kind = kinds[seed % std::size(kinds)];
    cfg.strategy = generate_strategy(kind, cfg.image, cfg.t0, cfg.attest_at.back(), rng, 2 + rng() % 7);
    const auto o = play(cfg);
    ++s.fuzz;
    s.premise += o.premise_modified;
    note_win(s, o, std::string(to_string(kind)));
  }
}

std::string summary(const corpus_stats& s) {
  std::string d = std::to_string(s.exhaustive) + " exhaustive + " + std::to_string(s.fuzz) + " fuzz runs, " +
                  std::to_string(s.premise) + " with modified premise, " + std::to_string(s.wins) + " wins";
  if (s.wins) d += " (first: " + s.first_win + ")";
  return d;
}

result rata_a_detection() {
  corpus_stats s;
  exhaustive_single_write(construction::rata_a, s);
  fuzz_multi_write(construction::rata_a, 1000, s);
  return {s.wins == 0 && s.exhaustive == 64u * (64 * 63 / 2), summary(s)};
}

result rata_b_detection() {
  corpus_stats s;
  exhaustive_single_write(construction::rata_b, s);
  fuzz_multi_write(construction::rata_b, 1000, s);
  std::size_t replays = 0, rejected = 0, spoofs = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    for (auto kind : {strategy_kind::replay_challenge, strategy_kind::spoof_lmt_field}) {
      auto cfg = base_config(construction::rata_b, seed + 5000);
      std::mt19937_64 rng(seed);
      cfg.attest_at = {200, 300};
      cfg.strategy = generate_strategy(kind, cfg.image, cfg.t0, cfg.attest_at.back(), rng);
      const auto o = play(cfg);
      replays += o.replays_attempted;
      rejected += o.replays_rejected;
      spoofs += kind == strategy_kind::spoof_lmt_field;
      note_win(s, o, std::string(to_string(kind)));
    }
  }
  const bool ok = s.wins == 0 && s.exhaustive == 64u * (64 * 63 / 2) && replays > 0 && replays == rejected;
  return {ok, summary(s) + "; " + std::to_string(rejected) + "/" + std::to_string(replays) +
                  " replays rejected at the guard, " + std::to_string(spoofs) + " spoofed reports"};
}

// --- 6 ----------------------------------------------------------------------

result ltl_suite_and_checker() {
  const auto start = clock_type::now();
  std::mt19937_64 rng(2024);
  std::size_t pairs = 0, disagreements = 0;
  while (pairs < 10'000) {
    const auto f = oracle::random_formula(rng, 1 + static_cast<int>(rng() % 4));
    const auto t = oracle::random_trace(rng, 1 + rng() % 12);
    for (std::size_t i = 0; i < t.size(); ++i)
      disagreements += ltl::eval(f, t, i) != oracle::brute_force(f, t, i);
    ++pairs;
  }
  const double own = seconds_since(start) + audit.seconds;
  std::string d = std::to_string(audit.traces) + " game traces checked, " + std::to_string(audit.failures) +
                  " failing; " + std::to_string(pairs) + " random pairs, " + std::to_string(disagreements) +
                  " disagreements with brute force";
  if (audit.failures) d += " (first failing trace: " + audit.first_failure + ")";
  const bool ok = audit.traces > 0 && audit.failures == 0 && disagreements == 0 && own < 60;
  return {ok, d};
}

// --- 7 ----------------------------------------------------------------------

master_key key_from(std::mt19937_64& rng) {
  master_key k;
  k.bytes = random_challenge(rng).bytes;
  return k;
}

// Benign activity between attestations: idling, data writes outside AR, occasional reboot.
template <class P>
void benign_activity(P& prv, std::mt19937_64& rng) {
  const auto& m = prv.map();
  const std::size_t events = rng() % 4;
  for (std::size_t i = 0; i < events; ++i) {
    prv.idle_until(prv.now() + 1 + rng() % 200);
    switch (rng() % 5) {
    case 0: prv.reboot(); break;
    case 1: prv.dma_write(static_cast<address>(m.mr.first + rng() % m.mr.size()), static_cast<byte>(rng())); break;
    default: prv.cpu_write(static_cast<address>(m.mr.first + rng() % m.mr.size()), static_cast<byte>(rng())); break;
    }
  }
  prv.idle_until(prv.now() + 1 + rng() % 50);
}

result constant_time_equivalence() {
  std::size_t rounds = 0, mismatches = 0, case1 = 0, accepted = 0;
  for (std::uint64_t seed = 0; rounds < 500; ++seed) {
    std::mt19937_64 rng(seed);
    const auto image = synthetic_image(toy_layout(seed % 2 ? lmt_width_b : lmt_width_a), seed);
    const auto key = key_from(rng);
    const auto expected = expected_memory::from_image(image);
    if (seed % 2 == 0) {
      verifier_a vrf{key, expected, 0};
      prover<rata_a_monitor> prv(image, key, false);
      prv.idle_until(1 + rng() % 100);
      attest_fast(prv, request_a(vrf, rng)); // caches LMT
      for (int round = 0; round < 5 && rounds < 500; ++round, ++rounds) {
        benign_activity(prv, rng);
        const auto chal = request_a(vrf, rng);
        const cycle_t t0 = rng() % (prv.now() + 1);
        prover<rata_a_monitor> shadow = prv;
        const auto fast = attest_fast(prv, chal);
        const auto full = shadow.attest_plain(chal, attest_case::full_ar);
        const bool v_fast = verify_fast_a(vrf, fast, chal, t0);
        const bool v_full = verify_a(vrf, full, chal, t0);
        mismatches += v_fast != v_full;
        case1 += fast.taken == attest_case::lmt_only;
        accepted += v_full;
      }
    } else {
      verifier_b vrf{key, {}, std::nullopt, expected, 0};
      prover<rata_b_monitor> prv(image, key, false);
      auto exchange = [&] {
        auto [chal, auth] = request_b(vrf);
        auto r = attest_b(prv, chal, auth);
        vrf.clock = prv.now();
        if (r) verify_b(vrf, *r, chal, 0);
      };
      exchange(); // primes P
      for (int round = 0; round < 5 && rounds < 500; ++round, ++rounds) {
        benign_activity(prv, rng);
        if (rng() % 3 == 0) exchange(); // full exchange refreshing P after a reboot
        const auto [chal, auth] = request_b(vrf);
        prover<rata_b_monitor> shadow_prv = prv;
        verifier_b shadow_vrf = vrf;
        const auto fast = attest_fast(prv, chal, auth);
        const auto full = shadow_prv.attest_auth(chal, auth, attest_case::full_ar);
        if (!fast || !full) return {false, "authenticated request refused in round " + std::to_string(rounds)};
        vrf.clock = shadow_vrf.clock = prv.now();
        const cycle_t t_p = vrf.pair_p ? vrf.pair_p->time : 0;
        const cycle_t t0 = rng() % 2 ? t_p + 1 + rng() % 50 : rng() % (t_p + 1);
        const bool v_fast = verify_fast_b(vrf, *fast, chal, t0);
        const bool v_full = verify_b(shadow_vrf, *full, chal, t0);
        mismatches += v_fast != v_full;
        case1 += fast->taken == attest_case::lmt_only;
        accepted += v_full;
        if (fast->taken == attest_case::full_ar) vrf = shadow_vrf; // keep P in step with a full run
      }
    }
  }
  const bool ok = mismatches == 0 && case1 > 0 && accepted > 0 && accepted < rounds;
  return {ok, std::to_string(rounds) + " rounds, " + std::to_string(case1) + " took the LMT-only path, " +
                  std::to_string(accepted) + " accepted, " + std::to_string(mismatches) + " verdict mismatches"};
}

// --- 8 ----------------------------------------------------------------------

fleet_config random_fleet(std::mt19937_64& rng, std::uint64_t seed) {
  fleet_config f;
  f.seed = seed;
  f.devices = 2 + rng() % 5;
  f.rounds = 3 + rng() % 4;
  f.d_max = rng() % 120;
  f.stagger = rng() % 20;
  f.period = 2 * f.d_max + 2 * block_size + 17 + f.stagger * f.devices + rng() % 1500;
  return f;
}

result swarm_windows() {
  std::size_t fleets = 0, windows = 0, wrong = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed);
    const auto f = random_fleet(rng, seed);
    const auto out = run_cra(f);
    ++fleets;
    for (const auto& round : out.rounds) {
      bool all = true;
      cycle_t hi = 0, lo = std::numeric_limits<cycle_t>::max();
      for (const auto& e : round) {
        all = all && e.verified;
        hi = std::max(hi, e.t_lmt);
        lo = std::min(lo, e.t_req);
      }
      const auto w = compute_safe_window(round);
      const bool expect = all && hi < lo;
      if (expect != w.has_value() || (w && (w->start != hi || w->end != lo))) ++wrong;
      windows += w.has_value();
    }
  }

  std::size_t migrations = 0, covered = 0, migrated_windows = 0;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    std::mt19937_64 rng(seed + 777);
    auto f = random_fleet(rng, seed + 777);
    f.rounds = 6;
    const std::size_t from = rng() % f.devices;
    const std::size_t to = (from + 1 + rng() % (f.devices - 1)) % f.devices;
    const address target = static_cast<address>(f.map.ar.first + rng() % (f.map.lmt.first - f.map.ar.first));
    const cycle_t horizon = f.period * f.rounds;
    const cycle_t start = rng() % (horizon / 2);
    const cycle_t instant = start + 1 + rng() % (horizon / 2);
    f.writes = migration_writes(f, from, to, target, start, instant, rng() % 3 ? 1 + rng() % f.period : 0);
    std::stable_sort(f.writes.begin(), f.writes.end(),
                     [](const auto& a, const auto& b) { return a.write.cycle < b.write.cycle; });
    const auto out = run_cra(f);
    const auto infections = infection_intervals(f, out);
    ++migrations;
    bool bad = false;
    for (std::size_t r = 0; r < out.rounds.size(); ++r) {
      const auto w = out.window(r);
      if (!w) continue;
      ++migrated_windows;
      bad = bad || (w->start <= instant && instant <= w->end);
      for (const auto& iv : infections) bad = bad || overlaps(*w, iv);
    }
    covered += bad;
  }
  const bool ok = wrong == 0 && windows > 0 && covered == 0;
  return {ok, std::to_string(fleets) + " benign fleets, " + std::to_string(windows) + " windows, " +
                  std::to_string(wrong) + " mismatches; " + std::to_string(migrations) + " migrations, " +
                  std::to_string(migrated_windows) + " windows reported, " + std::to_string(covered) +
                  " covering an infection"};
}

} // namespace

int main() {
  criterion(1, "utilization bound printed by analyze", 5, utilization_bound_via_cli);
  criterion(2, "attestation cost anchors", 1, cost_model_anchors);
  criterion(3, "baseline loses to transient modification", 10, baseline_transient_restore);
  criterion(4, "timestamp design detects every TOCTOU schedule", 60, rata_a_detection);
  criterion(5, "clockless design detects every TOCTOU schedule, replay and spoof", 60, rata_b_detection);
  criterion(6, "invariant suites hold and checker matches brute force", 60, ltl_suite_and_checker);
  criterion(7, "LMT-only verification agrees with full-AR verification", 30, constant_time_equivalence);
  criterion(8, "swarm safe window exact and never covers migrating malware", 30, swarm_windows);
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << std::endl;
  return failed == 0 ? 0 : 1;
}
