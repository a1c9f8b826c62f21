#include <catch2/catch_amalgamated.hpp>

#include "rhsim/throttler.hpp"

using namespace rhsim;

namespace {

SimConfig ddr4_config() {
  SimConfig cfg;
  cfg.timings.t_rc = 46'250;
  cfg.timings.t_faw = 35'000;
  cfg.timings.t_refw = 64 * kPsPerMs;
  cfg.timings.banks_per_rank = 16;
  cfg.timings.rows_per_bank = 65536;
  cfg.timings.threads = 8;
  cfg.bh.n_rh = 32768;
  cfg.bh.blast = BlastProfile::adjacent_only();
  cfg.bh.n_bl = 8192;
  cfg.bh.t_cbf = 64 * kPsPerMs;
  cfg.bh.cbf_counters = 1024;
  cfg.bh.hash_count = 4;
  cfg.bh.quota_max = 16;
  cfg.derived = resolve(cfg.bh, cfg.timings);
  return cfg;
}

}  // namespace

TEST_CASE("rhli arithmetic", "[throttler]") {
  SimConfig cfg = ddr4_config();
  AttackThrottler at(cfg, ThrottleMode::kFullFunctional);
  CHECK(at.rhli(0, 0) == 0.0);
  CHECK(at.quota(0, 0) == 16);

  SECTION("count 4096 on the flagship config is exactly one half") {
    for (int i = 0; i < 4096; ++i) at.record_blacklisted_act(0, 0);
    CHECK(at.rhli(0, 0) == Catch::Approx(0.5));
    CHECK(at.quota(0, 0) == 8);  // ceil(16 * 0.5)
  }
  SECTION("count equal to the denominator pins rhli at 1 and the quota at 0") {
    for (int i = 0; i < 8192; ++i) at.record_blacklisted_act(0, 0);
    CHECK(at.rhli(0, 0) == Catch::Approx(1.0));
    CHECK(at.quota(0, 0) == 0);
  }
}

TEST_CASE("quota is antitone in rhli and zero from one onward", "[throttler]") {
  SimConfig cfg = ddr4_config();
  AttackThrottler at(cfg, ThrottleMode::kFullFunctional);
  std::uint32_t prev = at.quota(2, 3);
  CHECK(prev == cfg.bh.quota_max);
  for (int i = 0; i < 9000; ++i) {
    at.record_blacklisted_act(2, 3);
    std::uint32_t q = at.quota(2, 3);
    CHECK(q <= prev);
    prev = q;
    if (at.rhli(2, 3) >= 1.0) CHECK(q == 0);
  }
  CHECK(prev == 0);
}

TEST_CASE("counters saturate under unbounded attack", "[throttler]") {
  SimConfig cfg = ddr4_config();
  AttackThrottler at(cfg, ThrottleMode::kFullFunctional);
  for (int i = 0; i < 40000; ++i) at.record_blacklisted_act(1, 1);
  CHECK(at.active_count(1, 1) == cfg.derived.throttle_saturation);
}

TEST_CASE("benign threads stay at zero", "[throttler]") {
  SimConfig cfg = ddr4_config();
  AttackThrottler at(cfg, ThrottleMode::kFullFunctional);
  for (int i = 0; i < 1000; ++i) at.record_blacklisted_act(0, 0);
  for (std::uint32_t t = 1; t < cfg.timings.threads; ++t)
    for (std::uint32_t b = 0; b < cfg.timings.banks_per_rank; ++b) {
      CHECK(at.rhli(t, b) == 0.0);
      CHECK(at.quota(t, b) == cfg.bh.quota_max);
    }
}

TEST_CASE("clears swap in lockstep and decay the index to zero", "[throttler]") {
  SimConfig cfg = ddr4_config();
  AttackThrottler at(cfg, ThrottleMode::kFullFunctional);
  for (int i = 0; i < 1000; ++i) at.record_blacklisted_act(0, 5);
  CHECK(at.rhli(0, 5) > 0.0);
  at.on_clear(5);
  // previous epoch's counts still feed the index
  CHECK(at.rhli(0, 5) > 0.0);
  // idle threads and other banks unaffected
  CHECK(at.rhli(1, 5) == 0.0);
  CHECK(at.rhli(0, 4) == 0.0);
  at.on_clear(5);
  CHECK(at.rhli(0, 5) == 0.0);  // two epochs after the attack stopped
}

TEST_CASE("observe-only reports the baseline quota", "[throttler]") {
  SimConfig cfg = ddr4_config();
  AttackThrottler at(cfg, ThrottleMode::kObserveOnly);
  for (int i = 0; i < 9000; ++i) at.record_blacklisted_act(0, 0);
  CHECK(at.rhli(0, 0) > 1.0);  // nothing capped it in observe mode
  CHECK(at.quota(0, 0) == cfg.bh.quota_max);
}
