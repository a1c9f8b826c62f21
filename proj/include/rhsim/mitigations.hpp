#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <string>

#include "rhsim/config.hpp"
#include "rhsim/rowblocker.hpp"
#include "rhsim/throttler.hpp"

namespace rhsim {

enum class MechanismKind { kNone, kBlockHammer, kPara };

inline const char* to_string(MechanismKind k) {
  switch (k) {
    case MechanismKind::kNone: return "none";
    case MechanismKind::kBlockHammer: return "blockhammer";
    case MechanismKind::kPara: return "para";
  }
  return "?";
}

/// Per-activation refresh probability that keeps the chance of a victim
/// surviving n_rh_star aggressor activations un-refreshed at or below the
/// failure target: p = 1 - failure_target^(1/n_rh_star).
inline double para_probability(std::uint64_t n_rh_star, double failure_target) {
  if (!(failure_target > 0.0 && failure_target < 1.0))
    throw ConfigError("failure target must be in (0,1)");
  if (n_rh_star < 1) throw ConfigError("n_rh_star must be >= 1");
  return -std::expm1(std::log(failure_target) / static_cast<double>(n_rh_star));
}

struct ParaConfig {
  double p = 0.0;  // refresh-emission probability per row close
  double failure_target = 1e-15;
  std::uint64_t rng_seed = 0;

  /// Tunes the emission probability for a config. The close handler picks a
  /// side uniformly, so each neighbor sees p/2 per close; emitting at
  /// min(1, 2 * per-victim rate) delivers the derived rate to both sides.
  static ParaConfig tuned(const SimConfig& cfg, std::uint64_t seed) {
    ParaConfig pc;
    pc.failure_target = cfg.para_failure_target;
    pc.rng_seed = seed;
    pc.p = std::min(1.0, 2.0 * para_probability(cfg.derived.n_rh_star,
                                                cfg.para_failure_target));
    return pc;
  }
};

struct ActDecision {
  bool safe = true;
  bool blacklisted = false;
  picos retry_at = 0;  // hint when !safe: earliest time the verdict can flip
};

struct RefreshCommand {
  std::uint32_t bank = 0;
  std::uint64_t row = 0;
};

/// Uniform mechanism surface the simulator drives. The base class is the
/// pass-through (None) behavior.
class Mechanism {
 public:
  virtual ~Mechanism() = default;
  virtual MechanismKind kind() const { return MechanismKind::kNone; }

  /// Whether the mechanism guarantees the sliding-window bound (the oracle
  /// treats a violation as fatal only under such a mechanism).
  virtual bool claims_safety() const { return false; }

  /// Max in-flight requests for <thread, bank> at the admission point.
  virtual std::uint32_t admission_quota(std::uint32_t, std::uint32_t) const {
    return std::numeric_limits<std::uint32_t>::max();
  }

  /// Issue gate for an activation attempt.
  virtual ActDecision act_check(std::uint32_t, std::uint64_t, picos) {
    return ActDecision{};
  }

  /// An activation was issued. `blacklisted_at_issue` echoes act_check.
  virtual void on_act_issued(std::uint32_t /*thread*/, std::uint32_t /*bank*/,
                             std::uint64_t /*row*/, picos /*now*/,
                             bool /*blacklisted_at_issue*/) {}

  /// A row is being closed (conflict). May emit one neighbor refresh.
  virtual std::optional<RefreshCommand> on_row_close(std::uint32_t /*bank*/,
                                                     std::uint64_t /*row*/,
                                                     picos /*now*/) {
    return std::nullopt;
  }

  /// Clock advance; epoch ticks happen here.
  virtual void on_time_advance(picos /*now*/) {}

  /// Next internally scheduled event strictly after `now`, or 0 if none.
  virtual picos next_event_after(picos /*now*/) const { return 0; }

  virtual std::vector<double> rhli_matrix() const { return {}; }
};

class NoneMechanism final : public Mechanism {};

class BlockHammerMechanism final : public Mechanism {
 public:
  BlockHammerMechanism(const SimConfig& cfg, ThrottleMode mode, std::uint64_t seed)
      : cfg_(cfg),
        rng_(seed ^ 0x9e3779b97f4a7c15ULL),
        rowblocker_(cfg, rng_),
        throttler_(cfg, mode),
        mode_(mode) {}

  MechanismKind kind() const override { return MechanismKind::kBlockHammer; }
  bool claims_safety() const override { return mode_ == ThrottleMode::kFullFunctional; }

  std::uint32_t admission_quota(std::uint32_t thread, std::uint32_t bank) const override {
    // Observe-only never alters scheduling; the quota value it would apply is
    // still available through throttler().quota().
    if (mode_ == ThrottleMode::kObserveOnly)
      return std::numeric_limits<std::uint32_t>::max();
    return throttler_.quota(thread, bank);
  }

  ActDecision act_check(std::uint32_t bank, std::uint64_t row, picos now) override {
    ActQuery q = rowblocker_.query(bank, row, now);
    ActDecision d;
    d.blacklisted = q.blacklisted;
    if (mode_ == ThrottleMode::kFullFunctional && q.verdict == Verdict::kUnsafe) {
      d.safe = false;
      d.retry_at = rowblocker_.unsafe_until(bank, row);
    }
    return d;
  }

  void on_act_issued(std::uint32_t thread, std::uint32_t bank, std::uint64_t row,
                     picos now, bool blacklisted_at_issue) override {
    rowblocker_.on_activate(bank, row, now);
    if (blacklisted_at_issue) throttler_.record_blacklisted_act(thread, bank);
  }

  void on_time_advance(picos now) override {
    rowblocker_.on_epoch_tick(now, rng_, [this](std::uint32_t bank, picos) {
      throttler_.on_clear(bank);
    });
  }

  picos next_event_after(picos now) const override {
    picos t = rowblocker_.next_epoch_at();
    return t > now ? t : 0;
  }

  std::vector<double> rhli_matrix() const override { return throttler_.rhli_matrix(); }

  const RowBlocker& rowblocker() const { return rowblocker_; }
  const AttackThrottler& throttler() const { return throttler_; }
  ThrottleMode mode() const { return mode_; }

 private:
  SimConfig cfg_;
  std::mt19937_64 rng_;
  RowBlocker rowblocker_;
  AttackThrottler throttler_;
  ThrottleMode mode_;
};

class ParaMechanism final : public Mechanism {
 public:
  ParaMechanism(const SimConfig& cfg, ParaConfig pc)
      : rows_per_bank_(cfg.timings.rows_per_bank), pc_(pc), rng_(pc.rng_seed) {
    if (!(pc_.p >= 0.0 && pc_.p <= 1.0))
      throw ConfigError("para probability must be in [0,1]");
  }

  MechanismKind kind() const override { return MechanismKind::kPara; }

  std::optional<RefreshCommand> on_row_close(std::uint32_t bank, std::uint64_t row,
                                             picos) override {
    if (!emit_coin(rng_, pc_.p)) return std::nullopt;
    bool left = (rng_() & 1) != 0;
    std::uint64_t neighbor;
    if (left && row >= 1) neighbor = row - 1;
    else if (!left && row + 1 < rows_per_bank_) neighbor = row + 1;
    else if (row >= 1) neighbor = row - 1;
    else neighbor = row + 1;
    return RefreshCommand{bank, neighbor};
  }

  const ParaConfig& config() const { return pc_; }

  static bool emit_coin(std::mt19937_64& rng, double p) {
    if (p >= 1.0) return true;
    if (p <= 0.0) return false;
    return std::uniform_real_distribution<double>(0.0, 1.0)(rng) < p;
  }

 private:
  std::uint64_t rows_per_bank_;
  ParaConfig pc_;
  std::mt19937_64 rng_;
};

inline std::unique_ptr<Mechanism> make_mechanism(MechanismKind kind,
                                                 const SimConfig& cfg,
                                                 ThrottleMode mode,
                                                 std::uint64_t seed) {
  switch (kind) {
    case MechanismKind::kNone:
      return std::make_unique<NoneMechanism>();
    case MechanismKind::kBlockHammer:
      return std::make_unique<BlockHammerMechanism>(cfg, mode, seed);
    case MechanismKind::kPara:
      return std::make_unique<ParaMechanism>(cfg, ParaConfig::tuned(cfg, seed));
  }
  throw ConfigError("unknown mechanism");
}

/// Event-dispatch shim over the mechanism surface, for callers that prefer a
/// single entry point over the virtual interface.
struct MechanismEvent {
  enum class Type { kRequestAdmission, kActIssueAttempt, kActIssued, kRowClose, kEpochTick };
  Type type;
  std::uint32_t thread = 0;
  std::uint32_t bank = 0;
  std::uint64_t row = 0;
  picos now = 0;
  bool blacklisted_at_issue = false;
};

struct MechanismVerdict {
  bool admit_request = true;
  bool act_safe = true;
  std::optional<RefreshCommand> side_effect;
};

inline MechanismVerdict mechanism_step(Mechanism& m, const MechanismEvent& ev) {
  MechanismVerdict v;
  switch (ev.type) {
    case MechanismEvent::Type::kRequestAdmission:
      v.admit_request = m.admission_quota(ev.thread, ev.bank) > 0;
      break;
    case MechanismEvent::Type::kActIssueAttempt:
      v.act_safe = m.act_check(ev.bank, ev.row, ev.now).safe;
      break;
    case MechanismEvent::Type::kActIssued:
      m.on_act_issued(ev.thread, ev.bank, ev.row, ev.now, ev.blacklisted_at_issue);
      break;
    case MechanismEvent::Type::kRowClose:
      v.side_effect = m.on_row_close(ev.bank, ev.row, ev.now);
      break;
    case MechanismEvent::Type::kEpochTick:
      m.on_time_advance(ev.now);
      break;
  }
  return v;
}

}  // namespace rhsim
