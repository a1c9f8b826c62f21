#include <catch2/catch_amalgamated.hpp>

#include <deque>
#include <unordered_map>

#include "rhsim/simcore.hpp"
#include "rhsim/tracegen.hpp"

using namespace rhsim;

namespace {

SimConfig scaled_config() {
  SimConfig cfg;
  cfg.timings.t_rc = 46'250;
  cfg.timings.t_faw = 35'000;
  cfg.timings.t_refw = 640 * kPsPerUs;
  cfg.timings.banks_per_rank = 4;
  cfg.timings.rows_per_bank = 4096;
  cfg.timings.threads = 4;
  cfg.bh.n_rh = 128;
  cfg.bh.blast = BlastProfile::adjacent_only();
  cfg.bh.n_bl = 16;
  cfg.bh.t_cbf = 640 * kPsPerUs;
  cfg.bh.cbf_counters = 1024;
  cfg.bh.hash_count = 4;
  cfg.bh.quota_max = 16;
  cfg.derived = resolve(cfg.bh, cfg.timings);
  return cfg;
}

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
  cfg.bh.quota_max = 64;
  cfg.derived = resolve(cfg.bh, cfg.timings);
  return cfg;
}

// Max requests per (bank,row) in any sliding t_refw window, straight off the
// trace text.
std::uint64_t max_row_window_refs(const Trace& t, picos window) {
  std::unordered_map<std::uint64_t, std::deque<picos>> per_row;
  std::uint64_t best = 0;
  for (const MemRequest& r : t) {
    auto& dq = per_row[(static_cast<std::uint64_t>(r.bank) << 40) | r.row];
    while (!dq.empty() && r.ready_at - dq.front() >= window) dq.pop_front();
    dq.push_back(r.ready_at);
    best = std::max<std::uint64_t>(best, dq.size());
  }
  return best;
}

}  // namespace

TEST_CASE("double-sided demand saturates the per-bank activation rate",
          "[tracegen]") {
  SimConfig cfg = scaled_config();
  Trace t = gen_double_sided(cfg, cfg.derived.epoch_len / 4, 0, 1);
  NoneMechanism none;
  RunOptions opts;
  opts.record_commands = true;
  SimMetrics m = run(cfg, t, none, opts);
  // ACT intervals equal max(t_rc, t_faw/4) = t_rc on the hammered bank.
  picos expect = std::max<picos>(cfg.timings.t_rc, cfg.timings.t_faw / 4);
  picos prev = 0;
  bool first = true;
  for (const Command& c : m.commands) {
    REQUIRE(c.kind == CommandKind::kActivate);
    if (!first) CHECK(c.at - prev == expect);
    prev = c.at;
    first = false;
  }
  CHECK(m.acts > 100);
}

TEST_CASE("epoch straddle piles fast activations around a boundary",
          "[tracegen]") {
  SimConfig cfg = scaled_config();
  picos horizon = 6 * cfg.derived.epoch_len;
  Trace t = gen_epoch_straddle(cfg, horizon);
  auto bh = make_mechanism(MechanismKind::kBlockHammer, cfg,
                           ThrottleMode::kFullFunctional, 1);
  RunOptions opts;
  opts.horizon = horizon;
  opts.record_commands = true;
  SimMetrics m = run(cfg, t, *bh, opts);
  CHECK_FALSE(m.bound_exceeded);

  // Count the most activations of the aggressor row inside any window short
  // enough that delay-paced acts cannot contribute: the straddle must land
  // at least 2*n_bl - 2 fast ones (a full burst on each side of an idle
  // epoch, both inside 1.2 epochs).
  picos fast_window = cfg.derived.epoch_len + cfg.derived.epoch_len / 4;
  SlidingWindowOracle fast(fast_window);
  for (const Command& c : m.commands)
    if (c.kind == CommandKind::kActivate) fast.record(c.row, c.at);
  CHECK(fast.max_over_all_keys() >= 2 * cfg.bh.n_bl - 2);
}

TEST_CASE("many-sided round robin never overdrives a victim under blockhammer",
          "[tracegen]") {
  SimConfig cfg = scaled_config();
  cfg.bh.n_rh = 253;
  cfg.bh.blast = BlastProfile::geometric(6);
  cfg.derived = resolve(cfg.bh, cfg.timings);
  REQUIRE(cfg.derived.n_rh_star == 64);

  picos horizon = 6 * cfg.derived.epoch_len;
  Trace t = gen_many_sided(cfg, 12, horizon);
  RunOptions opts;
  opts.horizon = horizon;

  auto bh = make_mechanism(MechanismKind::kBlockHammer, cfg,
                           ThrottleMode::kFullFunctional, 1);
  SimMetrics mb = run(cfg, t, *bh, opts);
  CHECK_FALSE(mb.weighted_overdrive);
  CHECK_FALSE(mb.bound_exceeded);

  NoneMechanism none;
  SimMetrics mn = run(cfg, t, none, opts);
  CHECK(mn.weighted_overdrive);  // the same demand is devastating unmitigated

  CHECK_THROWS_AS(gen_many_sided(cfg, 13, horizon), ConfigError);  // > 2*r_blast
}

TEST_CASE("benign generator", "[tracegen]") {
  SECTION("same seed, same trace") {
    SimConfig cfg = scaled_config();
    Trace a = gen_benign(cfg, BenignCategory::kM, cfg.bh.t_cbf, 7, 0);
    Trace b = gen_benign(cfg, BenignCategory::kM, cfg.bh.t_cbf, 7, 0);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].ready_at == b[i].ready_at);
      CHECK(a[i].row == b[i].row);
    }
    Trace c = gen_benign(cfg, BenignCategory::kM, cfg.bh.t_cbf, 8, 0);
    bool differs = a.size() != c.size();
    for (std::size_t i = 0; !differs && i < a.size(); ++i)
      differs = a[i].ready_at != c[i].ready_at || a[i].row != c[i].row;
    CHECK(differs);
  }

  SECTION("envelope caps hold on the full-scale config") {
    SimConfig cfg = ddr4_config();
    // Generating a full refresh window of traffic is enough to exercise the
    // sliding budget.
    Trace h = gen_benign(cfg, BenignCategory::kH, cfg.timings.t_refw, 3, 0, 4);
    REQUIRE(h.size() > 10'000);
    CHECK(max_row_window_refs(h, cfg.timings.t_refw) <= 314);
    Trace l = gen_benign(cfg, BenignCategory::kL, cfg.timings.t_refw, 3, 0, 4);
    CHECK(max_row_window_refs(l, cfg.timings.t_refw) <= 78);
  }

  SECTION("scaled envelope also bounds simulated activations") {
    SimConfig cfg = scaled_config();
    Trace t = gen_benign(cfg, BenignCategory::kH, 2 * cfg.bh.t_cbf, 11, 0);
    std::uint64_t cap = benign_row_cap(BenignCategory::kH, cfg.timings.t_refw);
    CHECK(max_row_window_refs(t, cfg.timings.t_refw) <= cap);
    NoneMechanism none;
    SimMetrics m = run(cfg, t, none);
    CHECK(m.oracle_max_window <= cap);
  }
}

TEST_CASE("random adversarial traces always exceed the bound unmitigated",
          "[tracegen]") {
  SimConfig cfg = scaled_config();
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    Trace t = gen_random_adversarial(cfg, 8 * cfg.derived.epoch_len, seed);
    NoneMechanism none;
    SimMetrics m = run(cfg, t, none);
    INFO("seed " << seed);
    CHECK(m.bound_exceeded);
  }
}
