#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <vector>

#include "rhsim/arith.hpp"
#include "rhsim/config.hpp"
#include "rhsim/time.hpp"

namespace rhsim {

/// Exact sliding-window activation census, independent of any mechanism
/// state. For each key it reports the maximum activation count over every
/// half-open window [t, t + window); the two-pointer scan is exact because
/// the maximum is always attained by a window flush with an activation.
/// History is pruned as it leaves the window, bounding memory.
class SlidingWindowOracle {
 public:
  explicit SlidingWindowOracle(picos window) : window_(window) {}

  void record(std::uint64_t key, picos t) {
    State& s = keys_[key];
    while (!s.recent.empty() && t - s.recent.front() >= window_) s.recent.pop_front();
    s.recent.push_back(t);
    if (s.recent.size() > s.max_count) s.max_count = s.recent.size();
    ++s.total;
  }

  std::uint64_t max_window_count(std::uint64_t key) const {
    auto it = keys_.find(key);
    return it == keys_.end() ? 0 : it->second.max_count;
  }

  std::uint64_t max_over_all_keys() const {
    std::uint64_t m = 0;
    for (const auto& [k, s] : keys_) m = std::max(m, s.max_count);
    return m;
  }

  std::uint64_t total(std::uint64_t key) const {
    auto it = keys_.find(key);
    return it == keys_.end() ? 0 : it->second.total;
  }

  /// Sorted (key -> max window count) view for deterministic reporting.
  std::vector<std::pair<std::uint64_t, std::uint64_t>> per_key_max() const {
    std::vector<std::pair<std::uint64_t, std::uint64_t>> out;
    out.reserve(keys_.size());
    for (const auto& [k, s] : keys_) out.emplace_back(k, s.max_count);
    return out;
  }

  picos window() const { return window_; }
  std::size_t keys_tracked() const { return keys_.size(); }

 private:
  struct State {
    std::deque<picos> recent;
    std::uint64_t max_count = 0;
    std::uint64_t total = 0;
  };
  picos window_;
  std::map<std::uint64_t, State> keys_;
};

/// Weighted victim-disturbance census for many-sided analysis: an activation
/// of row r contributes impact c_k to each victim k rows away (both sides).
/// Weights are scaled to a common integer denominator so the sliding maximum
/// is exact; a victim is overdriven when its weighted count exceeds
/// n_rh * scale.
class WeightedBlastOracle {
 public:
  WeightedBlastOracle(const BlastProfile& blast, picos window,
                      std::uint64_t rows_per_bank)
      : window_(window), rows_per_bank_(rows_per_bank) {
    scale_ = 1;
    for (const Ratio& c : blast.impact_factors)
      scale_ = scale_ / std::gcd(scale_, c.den) * c.den;
    for (const Ratio& c : blast.impact_factors)
      weights_.push_back(c.num * (scale_ / c.den));
  }

  void record_act(std::uint32_t bank, std::uint64_t row, picos t) {
    for (std::size_t k = 1; k <= weights_.size(); ++k) {
      if (row >= k) bump(bank, row - k, t, weights_[k - 1]);
      if (row + k < rows_per_bank_) bump(bank, row + k, t, weights_[k - 1]);
    }
  }

  /// Maximum weighted disturbance any victim accumulated in one window,
  /// in units of 1/scale().
  std::uint64_t max_weighted() const {
    std::uint64_t m = 0;
    for (const auto& [k, s] : victims_) m = std::max(m, s.max_weight);
    return m;
  }

  std::uint64_t scale() const { return scale_; }

  bool overdrives(std::uint64_t n_rh) const {
    return max_weighted() >= n_rh * scale_;
  }

 private:
  struct State {
    std::deque<std::pair<picos, std::uint64_t>> recent;
    std::uint64_t weight_in_window = 0;
    std::uint64_t max_weight = 0;
  };

  void bump(std::uint32_t bank, std::uint64_t row, picos t, std::uint64_t w) {
    State& s = victims_[(static_cast<std::uint64_t>(bank) << 40) | row];
    while (!s.recent.empty() && t - s.recent.front().first >= window_) {
      s.weight_in_window -= s.recent.front().second;
      s.recent.pop_front();
    }
    s.recent.emplace_back(t, w);
    s.weight_in_window += w;
    if (s.weight_in_window > s.max_weight) s.max_weight = s.weight_in_window;
  }

  picos window_;
  std::uint64_t rows_per_bank_;
  std::uint64_t scale_ = 1;
  std::vector<std::uint64_t> weights_;
  std::map<std::uint64_t, State> victims_;
};

/// Victim-exposure bookkeeping for the reactive-refresh baseline: a row's
/// exposure counts adjacent activations since the row itself was last
/// activated, refreshed, or covered by the periodic refresh sweep (every
/// t_refw). A victim fails once its exposure reaches the threshold.
class ParaExposureOracle {
 public:
  ParaExposureOracle(std::uint64_t threshold, std::uint64_t rows_per_bank,
                     picos t_refw)
      : threshold_(threshold), rows_per_bank_(rows_per_bank), t_refw_(t_refw) {}

  void record_act(std::uint32_t bank, std::uint64_t row, picos t) {
    sweep(t);
    reset(bank, row);
    if (row >= 1) expose(bank, row - 1);
    if (row + 1 < rows_per_bank_) expose(bank, row + 1);
  }

  void record_refresh(std::uint32_t bank, std::uint64_t row, picos t) {
    sweep(t);
    reset(bank, row);
    // A refresh is modeled as an activation of the refreshed row, so it
    // disturbs that row's own neighbors too.
    if (row >= 1) expose(bank, row - 1);
    if (row + 1 < rows_per_bank_) expose(bank, row + 1);
  }

  bool any_failure() const { return failed_; }
  std::uint64_t max_exposure() const { return max_exposure_; }

 private:
  void sweep(picos t) {
    // Periodic refresh restores every row once per refresh window.
    if (t / t_refw_ != current_window_) {
      current_window_ = t / t_refw_;
      exposure_.clear();
    }
  }
  void reset(std::uint32_t bank, std::uint64_t row) {
    exposure_.erase((static_cast<std::uint64_t>(bank) << 40) | row);
  }
  void expose(std::uint32_t bank, std::uint64_t row) {
    std::uint64_t& e = exposure_[(static_cast<std::uint64_t>(bank) << 40) | row];
    ++e;
    if (e > max_exposure_) max_exposure_ = e;
    if (e >= threshold_) failed_ = true;
  }

  std::uint64_t threshold_;
  std::uint64_t rows_per_bank_;
  picos t_refw_;
  std::uint64_t current_window_ = 0;
  std::map<std::uint64_t, std::uint64_t> exposure_;
  bool failed_ = false;
  std::uint64_t max_exposure_ = 0;
};

}  // namespace rhsim
