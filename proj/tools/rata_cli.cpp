#include <rata/rata.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <thread>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace rata;

namespace {

enum exit_code : int { ok = 0, violation = 1, bad_input = 2, io_failure = 3 };

struct io_error : error {
  using error::error;
};

struct run_result {
  game_outcome outcome;
  bool invariants_hold = true;
  std::optional<fs::path> trace_path;
};

std::ofstream open_out(const fs::path& p, std::ios::openmode mode = std::ios::out) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
    if (ec) throw io_error("cannot create " + p.parent_path().string() + ": " + ec.message());
  }
  std::ofstream os(p, mode);
  if (!os) throw io_error("cannot write " + p.string());
  return os;
}

void require_file(const std::string& p) {
  std::ifstream in(p);
  if (!in) throw io_error("cannot open " + p);
}

run_result play(const scenario& sc, const std::optional<fs::path>& trace_path) {
  run_result r;
  r.outcome = run_game(sc.game);
  r.invariants_hold = ltl::all_hold(ltl::check(invariant_suite(sc.game.kind), r.outcome.steps));
  if (trace_path) {
    auto os = open_out(*trace_path);
    write_trace(os, to_string(sc.game.kind), r.outcome.map, r.outcome.steps);
    if (!os) throw io_error("failed writing " + trace_path->string());
    r.trace_path = trace_path;
  }
  return r;
}

json record(const run_result& r) {
  const auto& o = r.outcome;
  json j;
  j["seed"] = o.seed;
  j["construction"] = std::string(to_string(o.kind));
  j["strategy"] = std::string(to_string(o.strategy));
  j["adv_wins"] = o.adv_wins;
  j["verify_result"] = o.verify_result;
  j["premise_modified"] = o.premise_modified;
  j["t0"] = o.t0;
  j["t_att"] = o.t_att;
  j["resets"] = o.resets;
  j["replays_attempted"] = o.replays_attempted;
  j["replays_rejected"] = o.replays_rejected;
  j["invariants_hold"] = r.invariants_hold;
  j["trace"] = r.trace_path ? json(r.trace_path->string()) : json(nullptr);
  return j;
}

// --- run-game ---------------------------------------------------------------

struct game_opts {
  std::string scenario_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::size_t fuzz = 0;
};

int cmd_run_game(const game_opts& opt) {
  require_file(opt.scenario_path);
  const scenario base = load_scenario(opt.scenario_path);
  const std::uint64_t first = opt.seed.value_or(base.game.seed);
  const std::size_t runs = std::max<std::size_t>(opt.fuzz, 1);

  auto trace_for = [&](const scenario& sc) -> std::optional<fs::path> {
    if (!opt.out_dir.empty()) {
      return fs::path(opt.out_dir) / (std::string(to_string(sc.game.kind)) + "_" +
                                      std::string(to_string(sc.game.strategy.kind)) + "_" +
                                      std::to_string(sc.game.seed) + ".trace");
    }
    if (opt.fuzz == 0) return sc.trace_out;
    return std::nullopt;
  };

  std::vector<run_result> results(runs);
  if (opt.fuzz == 0) {
    scenario sc = opt.seed ? reseed(base, *opt.seed) : base;
    results[0] = play(sc, trace_for(sc));
  } else {
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::exception_ptr failure;
    auto worker = [&] {
      for (std::size_t i; (i = next.fetch_add(1)) < runs;) {
        try {
          scenario sc = reseed(base, first + i);
          results[i] = play(sc, trace_for(sc));
        } catch (...) {
          std::lock_guard lock(err_mu);
          if (!failure) failure = std::current_exception();
          next = runs;
        }
      }
    };
    const std::size_t n_threads = std::min<std::size_t>(runs, std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  std::optional<std::ofstream> sink;
  if (!opt.out_dir.empty())
    sink = open_out(fs::path(opt.out_dir) / "records.jsonl", std::ios::app);
  else if (base.record_out)
    sink = open_out(*base.record_out, std::ios::app);

  bool held = true;
  for (const auto& r : results) {
    const auto line = record(r).dump();
    std::cout << line << "\n";
    if (sink) *sink << line << "\n";
    held = held && !r.outcome.adv_wins && r.invariants_hold;
  }
  if (sink && !*sink) throw io_error("failed writing outcome records");
  if (opt.fuzz > 0) {
    std::size_t wins = 0;
    for (const auto& r : results) wins += r.outcome.adv_wins;
    std::cerr << runs << " runs, " << wins << " adversary wins\n";
  }
  return held ? ok : violation;
}

// --- check-trace ------------------------------------------------------------

int cmd_check_trace(const std::string& path, const std::vector<std::string>& formulas, const std::string& suite_name) {
  require_file(path);
  std::ifstream in(path);
  const trace_file tf = read_trace(in);

  std::vector<ltl::named_formula> suite;
  if (formulas.empty()) {
    const std::string name = suite_name.empty() ? tf.construction : suite_name;
    auto c = construction_from_name(name);
    if (!c) throw config_error("no invariant suite for construction `" + name + "`; pass --formula or --suite");
    suite = invariant_suite(*c);
  }
  for (std::size_t i = 0; i < formulas.size(); ++i)
    suite.push_back({"formula-" + std::to_string(i + 1), ltl::parse(formulas[i])});

  bool all = true;
  for (const auto& v : ltl::check(suite, tf.steps)) {
    std::cout << (v.holds ? "PASS " : "FAIL ") << v.name << "  " << v.text;
    if (v.violation) std::cout << "  (first violation at cycle " << tf.steps[*v.violation].signals.cycle << ")";
    std::cout << "\n";
    all = all && v.holds;
  }
  std::cout << tf.steps.size() << " steps checked\n";
  return all ? ok : violation;
}

// --- swarm ------------------------------------------------------------------

int cmd_swarm(const std::string& path, std::optional<std::uint64_t> seed, const std::string& out_dir) {
  require_file(path);
  fleet_config f = load_fleet(path);
  if (seed) f.seed = *seed;
  const fleet_outcome out = run_cra(f);
  const auto infections = infection_intervals(f, out);

  std::optional<std::ofstream> sink;
  if (!out_dir.empty()) sink = open_out(fs::path(out_dir) / "swarm.jsonl", std::ios::app);

  bool sound = true;
  for (std::size_t r = 0; r < out.rounds.size(); ++r) {
    json j;
    j["seed"] = f.seed;
    j["round"] = r;
    json devices = json::array();
    for (const auto& e : out.rounds[r])
      devices.push_back({{"device", e.device}, {"t_req", e.t_req}, {"t_lmt", e.t_lmt}, {"verified", e.verified}});
    j["devices"] = devices;
    const auto w = out.window(r);
    j["window"] = w ? json{{"start", w->start}, {"end", w->end}} : json(nullptr);
    bool covered = false;
    if (w)
      for (const auto& iv : infections) covered = covered || overlaps(*w, iv);
    j["covers_infection"] = covered;
    sound = sound && !covered;
    const auto line = j.dump();
    std::cout << line << "\n";
    if (sink) *sink << line << "\n";
  }
  if (f.replay_device) std::cerr << out.replays_sent << " replayed responses sent\n";
  return sound ? ok : violation;
}

// --- analyze ----------------------------------------------------------------

int cmd_analyze(std::int64_t c_adv, std::int64_t c_ra, const std::vector<std::int64_t>& sizes) {
  std::cout << "utilization bound\n";
  std::cout << std::left << std::setw(14) << "C_adv" << std::setw(14) << "C_RA" << "U_max\n";
  std::cout << std::setw(14) << c_adv << std::setw(14) << c_ra << format_percent(max_utilization_bound(c_adv, c_ra))
            << "\n\n";

  const auto case1 = attest_cost(static_cast<std::int64_t>(lmt_width_b));
  std::cout << "attestation cost (cycles)\n";
  std::cout << std::setw(12) << "AR bytes" << std::setw(16) << "LMT only" << std::setw(16) << "full AR"
            << "saving\n";
  for (auto n : sizes) {
    const auto case2 = attest_cost(n);
    std::cout << std::setw(12) << n << std::setw(16) << static_cast<std::int64_t>(std::llround(case1.value()))
              << std::setw(16) << static_cast<std::int64_t>(std::llround(case2.value()))
              << static_cast<std::int64_t>(std::llround((case2 - case1).value())) << "\n";
  }
  return ok;
}

// --- bench ------------------------------------------------------------------

int cmd_bench(std::size_t seeds) {
  using clock = std::chrono::steady_clock;
  std::cout << std::left << std::setw(12) << "design" << std::setw(10) << "games" << std::setw(12) << "seconds"
            << std::setw(14) << "games/s" << "wins\n";
  for (auto [name, c] : construction_names) {
    std::size_t games = 0, wins = 0;
    const auto start = clock::now();
    for (std::uint64_t seed = 0; seed < seeds; ++seed) {
      for (auto k : all_strategies) {
        game_config cfg;
        cfg.kind = c;
        cfg.seed = seed;
        cfg.image = synthetic_image(toy_layout(lmt_width_for(c)), seed);
        std::mt19937_64 rng(seed);
        cfg.strategy = generate_strategy(k, cfg.image, cfg.t0, cfg.attest_at.back(), rng);
        wins += run_game(cfg).adv_wins;
        ++games;
      }
    }
    const double secs = std::chrono::duration<double>(clock::now() - start).count();
    std::cout << std::setw(12) << name << std::setw(10) << games << std::setw(12) << std::fixed
              << std::setprecision(3) << secs << std::setw(14) << std::setprecision(0)
              << (secs > 0 ? games / secs : 0.0) << wins << "\n";
  }
  return ok;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator and checker for TOCTOU-aware remote attestation"};
  app.require_subcommand(1);

  game_opts game;
  auto* run = app.add_subcommand("run-game", "play one scenario (or a seeded batch) of the attestation game");
  run->add_option("--scenario", game.scenario_path, "scenario file")->required();
  run->add_option("--seed", game.seed, "override the scenario seed");
  run->add_option("--out", game.out_dir, "directory for trace files and records.jsonl");
  run->add_option("--fuzz", game.fuzz, "run this many consecutive seeds on worker threads");

  std::string trace_path, suite_name;
  std::vector<std::string> formulas;
  auto* check = app.add_subcommand("check-trace", "check a trace file against LTL formulas");
  check->add_option("trace", trace_path, "trace file")->required();
  check->add_option("--formula", formulas, "formula to check (repeatable); defaults to the construction's suite");
  check->add_option("--suite", suite_name, "invariant suite to use instead of the trace header's");

  std::string fleet_path, swarm_out;
  std::optional<std::uint64_t> swarm_seed;
  auto* swarm = app.add_subcommand("swarm", "run collective attestation over a fleet");
  swarm->add_option("--scenario", fleet_path, "fleet file")->required();
  swarm->add_option("--seed", swarm_seed, "override the fleet seed");
  swarm->add_option("--out", swarm_out, "directory for swarm.jsonl");

  std::int64_t c_adv = 1'000'000, c_ra = 3'600'000;
  std::vector<std::int64_t> sizes{1024, 2048, 4096, 8192};
  auto* analyze = app.add_subcommand("analyze", "utilization bound and attestation cost tables");
  analyze->add_option("--c-adv", c_adv, "adversary computation time in cycles");
  analyze->add_option("--c-ra", c_ra, "attestation time in cycles");
  analyze->add_option("--sizes", sizes, "AR sizes in bytes for the cost sweep")->delimiter(',');

  std::size_t bench_seeds = 200;
  auto* bench = app.add_subcommand("bench", "game throughput over the strategy catalog");
  bench->add_option("--fuzz", bench_seeds, "seeds per design");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? ok : bad_input;
  }

  try {
    if (*run) return cmd_run_game(game);
    if (*check) return cmd_check_trace(trace_path, formulas, suite_name);
    if (*swarm) return cmd_swarm(fleet_path, swarm_seed, swarm_out);
    if (*analyze) return cmd_analyze(c_adv, c_ra, sizes);
    if (*bench) return cmd_bench(bench_seeds);
  } catch (const io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return io_failure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return bad_input;
  }
  return ok;
}
