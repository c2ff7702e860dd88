#include <rata/game.hpp>

#include <gtest/gtest.h>

using namespace rata;

namespace {

game_config make_config(construction c, strategy_kind k, std::uint64_t seed) {
  game_config cfg;
  cfg.kind = c;
  cfg.seed = seed;
  cfg.image = synthetic_image(toy_layout(lmt_width_for(c)), seed);
  cfg.t0 = 100;
  cfg.attest_at = {300};
  std::mt19937_64 rng(seed);
  cfg.strategy = generate_strategy(k, cfg.image, cfg.t0, cfg.attest_at.back(), rng);
  return cfg;
}

address body(const game_config& cfg, int i) { return static_cast<address>(cfg.image.map().ar.first + i); }

} // namespace

TEST(Game, BaselineLosesToTransientRestore) {
  auto o = run_game(make_config(construction::baseline, strategy_kind::transient_restore, 1));
  EXPECT_TRUE(o.verify_result);
  EXPECT_TRUE(o.premise_modified);
  EXPECT_TRUE(o.adv_wins);
}

TEST(Game, RataATransientRestoreDetected) {
  auto o = run_game(make_config(construction::rata_a, strategy_kind::transient_restore, 2));
  EXPECT_FALSE(o.verify_result);
  EXPECT_TRUE(o.premise_modified);
  EXPECT_FALSE(o.adv_wins);
}

TEST(Game, BenignHonestRun) {
  for (auto c : {construction::rata_a, construction::rata_b, construction::baseline}) {
    auto o = run_game(make_config(c, strategy_kind::benign, 3));
    EXPECT_TRUE(o.verify_result) << to_string(c);
    EXPECT_FALSE(o.premise_modified);
    EXPECT_FALSE(o.adv_wins);
  }
}

TEST(Game, AdvWinsIsConjunction) {
  for (std::uint64_t seed = 0; seed < 30; ++seed)
    for (auto c : {construction::rata_a, construction::rata_b, construction::baseline})
      for (auto k : all_strategies) {
        auto o = run_game(make_config(c, k, seed));
        ASSERT_EQ(o.adv_wins, o.verify_result && o.premise_modified);
      }
}

TEST(Game, CatalogNeverWinsAgainstMonitors) {
  for (std::uint64_t seed = 0; seed < 150; ++seed)
    for (auto c : {construction::rata_a, construction::rata_b})
      for (auto k : all_strategies) {
        auto cfg = make_config(c, k, seed);
        auto o = run_game(cfg);
        ASSERT_FALSE(o.adv_wins) << to_string(c) << " " << to_string(k) << " seed " << seed;
        ASSERT_TRUE(ltl::all_hold(ltl::check(invariant_suite(c), o.steps)));
        if (k != strategy_kind::benign) { ASSERT_TRUE(o.premise_modified); }
      }
}

TEST(Game, BaselineLosesWheneverRestoreCompletes) {
  for (std::uint64_t seed = 0; seed < 100; ++seed)
    for (auto k : {strategy_kind::transient_restore, strategy_kind::erase_on_request, strategy_kind::dma_ar_write}) {
      auto o = run_game(make_config(construction::baseline, k, seed));
      ASSERT_TRUE(o.adv_wins) << to_string(k) << " seed " << seed;
    }
}

TEST(Game, LmtDirectWriteAlwaysResets) {
  for (std::uint64_t seed = 0; seed < 50; ++seed)
    for (auto c : {construction::rata_a, construction::rata_b}) {
      auto o = run_game(make_config(c, strategy_kind::lmt_direct_write, seed));
      ASSERT_GT(o.resets, 0u);
      bool reset_seen = false;
      for (const auto& s : o.steps) reset_seen = reset_seen || (s.mod_lmt && s.outputs.reset);
      ASSERT_TRUE(reset_seen);
      ASSERT_FALSE(o.adv_wins);
    }
}

TEST(Game, ReplayAlwaysRejectedByRataB) {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto o = run_game(make_config(construction::rata_b, strategy_kind::replay_challenge, seed));
    ASSERT_GT(o.replays_attempted, 0u);
    ASSERT_EQ(o.replays_attempted, o.replays_rejected);
    ASSERT_FALSE(o.adv_wins);
  }
}

TEST(Game, DeterministicPerSeed) {
  auto a = run_game(make_config(construction::rata_b, strategy_kind::transient_restore, 9));
  auto b = run_game(make_config(construction::rata_b, strategy_kind::transient_restore, 9));
  EXPECT_EQ(a.steps, b.steps);
  EXPECT_EQ(a.final_report, b.final_report);
}

TEST(Game, ModificationEntirelyBeforeT0IsNotPremise) {
  auto cfg = make_config(construction::baseline, strategy_kind::benign, 5);
  cfg.strategy.kind = strategy_kind::transient_restore;
  cfg.strategy.writes = {{80, body(cfg, 1), 0x00, channel::cpu}, {81, body(cfg, 1), cfg.image.at(body(cfg, 1))}};
  auto o = run_game(cfg);
  EXPECT_FALSE(o.premise_modified);
  EXPECT_FALSE(o.adv_wins);
}

TEST(Game, ModificationStraddlingT0IsPremise) {
  auto cfg = make_config(construction::baseline, strategy_kind::benign, 5);
  cfg.strategy.kind = strategy_kind::transient_restore;
  const byte orig = cfg.image.at(body(cfg, 1));
  cfg.strategy.writes = {{90, body(cfg, 1), static_cast<byte>(orig ^ 1)}, {150, body(cfg, 1), orig}};
  auto o = run_game(cfg);
  EXPECT_TRUE(o.premise_modified);
  EXPECT_TRUE(o.adv_wins);
  cfg.kind = construction::rata_a;
  EXPECT_FALSE(run_game(cfg).adv_wins);
}

TEST(Game, PersistentModificationFailsMac) {
  auto cfg = make_config(construction::baseline, strategy_kind::benign, 6);
  cfg.strategy.writes = {{120, body(cfg, 3), static_cast<byte>(cfg.image.at(body(cfg, 3)) ^ 0x80)}};
  auto o = run_game(cfg);
  EXPECT_FALSE(o.verify_result);
  EXPECT_TRUE(o.premise_modified);
}

TEST(Game, IntermediateAttestationsKeepRataBSound) {
  auto cfg = make_config(construction::rata_b, strategy_kind::benign, 7);
  cfg.attest_at = {200, 300, 400};
  const byte orig = cfg.image.at(body(cfg, 2));
  cfg.strategy.writes = {{150, body(cfg, 2), static_cast<byte>(orig ^ 4)}, {160, body(cfg, 2), orig}};
  auto o = run_game(cfg);
  EXPECT_TRUE(o.premise_modified);
  EXPECT_FALSE(o.verify_result);
  ASSERT_EQ(o.exchanges.size(), 4u);
  EXPECT_FALSE(o.exchanges[1].verify); // LMT changed: P refreshed
  EXPECT_FALSE(o.exchanges[2].verify); // t_P is after t0
}

TEST(Game, WritesDuringAttestationAreDeferred) {
  auto cfg = make_config(construction::rata_a, strategy_kind::benign, 8);
  cfg.attest_at = {200, 300};
  // Exchange at 200 occupies the following cycles; this write lands after it.
  cfg.strategy.writes = {{205, body(cfg, 0), cfg.image.at(body(cfg, 0))}};
  auto o = run_game(cfg);
  ASSERT_EQ(o.exchanges.size(), 3u);
  std::size_t write_cycle = 0;
  for (const auto& s : o.steps)
    if (s.mod_ar) write_cycle = s.signals.cycle;
  EXPECT_GE(write_cycle, o.exchanges[1].verified_at);
}

TEST(Game, ValidationErrors) {
  auto cfg = make_config(construction::rata_a, strategy_kind::benign, 1);
  auto bad = cfg;
  bad.attest_at = {};
  EXPECT_THROW(run_game(bad), config_error);
  bad = cfg;
  bad.attest_at = {300, 200};
  EXPECT_THROW(run_game(bad), config_error);
  bad = cfg;
  bad.t0 = 400;
  EXPECT_THROW(run_game(bad), config_error);
  bad = cfg;
  bad.t0 = 5; // inside the boot-time exchange
  EXPECT_THROW(run_game(bad), config_error);
  bad = cfg;
  bad.strategy.writes = {{150, body(cfg, 0), 1}, {120, body(cfg, 1), 1}};
  EXPECT_THROW(run_game(bad), config_error);
  bad = cfg;
  bad.strategy.writes = {{150, cfg.image.map().cr.first, 1}};
  EXPECT_THROW(run_game(bad), config_error);
  bad = cfg;
  bad.strategy.writes = {{300, body(cfg, 0), 1}};
  EXPECT_THROW(run_game(bad), config_error);
  bad = cfg;
  bad.kind = construction::rata_b; // 8-byte LMT layout with the 32-byte design
  EXPECT_THROW(run_game(bad), config_error);
}

TEST(Game, NamesRoundTrip) {
  for (auto k : all_strategies) EXPECT_EQ(strategy_from_name(to_string(k)), k);
  for (auto [n, c] : construction_names) EXPECT_EQ(to_string(c), n);
  EXPECT_FALSE(strategy_from_name("nope"));
}
