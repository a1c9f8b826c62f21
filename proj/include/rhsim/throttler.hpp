#pragma once

#include <cstdint>
#include <vector>

#include "rhsim/config.hpp"

namespace rhsim {

enum class ThrottleMode { kObserveOnly, kFullFunctional };

/// AttackThrottler: two saturating counters per <thread, bank>, cleared and
/// swapped in lockstep with the bank's D-CBF. The active counter, normalized
/// by the budget a blacklisted row has left in a filter lifetime, is the
/// RowHammer likelihood index; the quota shrinks linearly with it and hits
/// zero when RHLI reaches 1.
class AttackThrottler {
 public:
  AttackThrottler(const SimConfig& cfg, ThrottleMode mode)
      : threads_(cfg.timings.threads),
        banks_(cfg.timings.banks_per_rank),
        saturation_(cfg.derived.throttle_saturation),
        quota_max_(cfg.bh.quota_max),
        denom_scaled_(cfg.rhli_denominator_scaled()),
        t_refw_(cfg.timings.t_refw),
        mode_(mode),
        counters_(2, std::vector<std::uint64_t>(threads_ * banks_, 0)),
        active_(banks_, 0) {}

  ThrottleMode mode() const { return mode_; }

  /// Both counters tick together; only clears separate their histories.
  void record_blacklisted_act(std::uint32_t thread, std::uint32_t bank) {
    for (int side = 0; side < 2; ++side) {
      std::uint64_t& c = counters_[side][slot(thread, bank)];
      if (c < saturation_) ++c;
    }
  }

  double rhli(std::uint32_t thread, std::uint32_t bank) const {
    std::uint64_t c = counters_[active_[bank]][slot(thread, bank)];
    return static_cast<double>(static_cast<u128>(c) * t_refw_) /
           static_cast<double>(denom_scaled_);
  }

  /// In-flight request budget: quota_max at RHLI 0, linearly down to a hard
  /// zero at RHLI >= 1, evaluated in exact integers so the boundary is sharp.
  /// Observe-only mode reports the baseline budget.
  std::uint32_t quota(std::uint32_t thread, std::uint32_t bank) const {
    if (mode_ == ThrottleMode::kObserveOnly) return quota_max_;
    u128 count_scaled =
        static_cast<u128>(counters_[active_[bank]][slot(thread, bank)]) * t_refw_;
    if (count_scaled >= denom_scaled_) return 0;
    u128 head = static_cast<u128>(quota_max_) * (denom_scaled_ - count_scaled);
    return static_cast<std::uint32_t>((head + denom_scaled_ - 1) / denom_scaled_);
  }

  /// Invoked exactly when the bank's D-CBF clears: zero the active counters
  /// for that bank and swap roles.
  void on_clear(std::uint32_t bank) {
    for (std::uint32_t t = 0; t < threads_; ++t)
      counters_[active_[bank]][slot(t, bank)] = 0;
    active_[bank] ^= 1;
  }

  std::uint64_t active_count(std::uint32_t thread, std::uint32_t bank) const {
    return counters_[active_[bank]][slot(thread, bank)];
  }

  std::vector<double> rhli_matrix() const {
    std::vector<double> m(threads_ * banks_, 0.0);
    for (std::uint32_t t = 0; t < threads_; ++t)
      for (std::uint32_t b = 0; b < banks_; ++b) m[slot(t, b)] = rhli(t, b);
    return m;
  }

  std::uint32_t threads() const { return threads_; }
  std::uint32_t banks() const { return banks_; }
  std::uint32_t quota_max() const { return quota_max_; }

 private:
  std::size_t slot(std::uint32_t thread, std::uint32_t bank) const {
    return static_cast<std::size_t>(thread) * banks_ + bank;
  }

  std::uint32_t threads_;
  std::uint32_t banks_;
  std::uint64_t saturation_;
  std::uint32_t quota_max_;
  u128 denom_scaled_;
  picos t_refw_;
  ThrottleMode mode_;
  std::vector<std::vector<std::uint64_t>> counters_;  // [side][thread*banks+bank]
  std::vector<int> active_;                           // per bank
};

}  // namespace rhsim
