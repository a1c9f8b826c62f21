#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "rhsim/config.hpp"
#include "rhsim/filters.hpp"
#include "rhsim/history.hpp"

namespace rhsim {

enum class Verdict { kSafe, kUnsafe };

/// Outcome of the "Is this ACT RowHammer-safe?" query, with the two
/// contributing signals kept separate (the blacklist bit also feeds the
/// throttler's accounting).
struct ActQuery {
  Verdict verdict = Verdict::kSafe;
  bool blacklisted = false;
  bool recently_activated = false;
};

/// Per-rank RowBlocker: one D-CBF per bank plus a rank-wide history buffer.
/// An activation is unsafe only when its row is both blacklisted and was
/// activated within the last t_delay; either condition alone passes.
class RowBlocker {
 public:
  RowBlocker(const SimConfig& cfg, std::mt19937_64& rng)
      : t_delay_(cfg.derived.t_delay),
        epoch_len_(cfg.derived.epoch_len),
        history_(history_ring_slots(cfg.derived.t_delay, cfg.timings.t_faw),
                 cfg.derived.t_delay),
        next_epoch_tick_(cfg.derived.epoch_len) {
    banks_.reserve(cfg.timings.banks_per_rank);
    for (std::uint32_t b = 0; b < cfg.timings.banks_per_rank; ++b) {
      banks_.push_back(make_dcbf(cfg.bh.cbf_counters, cfg.bh.hash_count,
                                 cfg.timings.row_bits(), cfg.bh.n_bl, rng));
    }
  }

  static std::uint64_t row_key(std::uint32_t bank, std::uint64_t row) {
    // Row ids are bank-scoped; the rank-scoped history buffer keys on the
    // (bank, row) pair to make them unique in the rank.
    return (static_cast<std::uint64_t>(bank) << 40) | row;
  }

  /// Pure query; identical (state, arguments) always yield the same verdict.
  ActQuery query(std::uint32_t bank, std::uint64_t row, picos now) const {
    ActQuery q;
    q.blacklisted = banks_[bank].is_blacklisted(row);
    q.recently_activated = history_.recently_activated(row_key(bank, row), now);
    q.verdict = (q.blacklisted && q.recently_activated) ? Verdict::kUnsafe
                                                        : Verdict::kSafe;
    return q;
  }

  Verdict is_act_safe(std::uint32_t bank, std::uint64_t row, picos now) const {
    return query(bank, row, now).verdict;
  }

  /// Records an issued activation in both structures.
  void on_activate(std::uint32_t bank, std::uint64_t row, picos now) {
    banks_[bank].insert(row);
    history_.record(row_key(bank, row), now);
  }

  /// Clears + swaps every bank's D-CBF once the rank-wide epoch clock is due.
  /// Returns the number of boundary crossings processed.
  template <typename OnClear>
  std::uint32_t on_epoch_tick(picos now, std::mt19937_64& rng, OnClear&& on_clear) {
    std::uint32_t ticks = 0;
    while (next_epoch_tick_ <= now) {
      for (std::uint32_t b = 0; b < banks_.size(); ++b) {
        banks_[b].clear_and_swap(next_epoch_tick_, rng);
        on_clear(b, next_epoch_tick_);
      }
      history_.expire(next_epoch_tick_);
      next_epoch_tick_ += epoch_len_;
      ++ticks;
    }
    return ticks;
  }
  std::uint32_t on_epoch_tick(picos now, std::mt19937_64& rng) {
    return on_epoch_tick(now, rng, [](std::uint32_t, picos) {});
  }

  picos next_epoch_at() const { return next_epoch_tick_; }
  picos t_delay() const { return t_delay_; }
  const HistoryBuffer& history() const { return history_; }
  const DualCountingBloomFilter& bank_filter(std::uint32_t b) const { return banks_[b]; }

  /// Earliest time at which a currently-unsafe (bank, row) can become safe via
  /// history expiry. Epoch clears can release it sooner; callers combine both.
  picos unsafe_until(std::uint32_t bank, std::uint64_t row) const {
    picos stamp = 0;
    if (!history_.latest_stamp(row_key(bank, row), stamp)) return 0;
    return stamp + t_delay_;
  }

 private:
  picos t_delay_;
  picos epoch_len_;
  std::vector<DualCountingBloomFilter> banks_;
  HistoryBuffer history_;
  picos next_epoch_tick_;
};

}  // namespace rhsim
