#pragma once

#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "rhsim/time.hpp"

namespace rhsim {

/// Per-rank record of recent activations: a circular queue of
/// (row key, timestamp, valid) entries covering the last t_delay. Capacity is
/// sized from the t_faw rate bound, so overflow indicates a broken invariant
/// and is fatal. A lookup map mirrors the live ring entries so the
/// "recently activated?" query stays O(1); semantics match a CAM scan.
class HistoryBuffer {
 public:
  struct Entry {
    std::uint64_t key = 0;
    picos stamp = 0;
    bool valid = false;
  };

  HistoryBuffer(std::uint64_t capacity, picos t_delay)
      : ring_(capacity), t_delay_(t_delay) {}

  /// Invalidates every entry aged t_delay or more ("as old as t_delay" reads
  /// inclusively) and advances the head past them.
  void expire(picos now) {
    while (live_ > 0) {
      Entry& oldest = ring_[head_];
      if (now - oldest.stamp < t_delay_) break;
      oldest.valid = false;
      auto it = index_.find(oldest.key);
      if (--it->second.live == 0) index_.erase(it);
      head_ = (head_ + 1) % ring_.size();
      --live_;
    }
  }

  /// Appends an activation record. Caller is expected to expire(now) first;
  /// the t_faw-derived capacity then guarantees space.
  void record(std::uint64_t key, picos now) {
    expire(now);
    if (live_ == ring_.size())
      throw std::logic_error("history buffer overflow: capacity invariant violated");
    std::size_t tail = (head_ + live_) % ring_.size();
    ring_[tail] = Entry{key, now, true};
    ++live_;
    auto& slot = index_[key];
    ++slot.live;
    slot.latest = now;
  }

  /// True iff a valid entry for the key is younger than t_delay. Pure: logical
  /// expiry is evaluated against `now` without touching the ring.
  bool recently_activated(std::uint64_t key, picos now) const {
    auto it = index_.find(key);
    if (it == index_.end()) return false;
    return now - it->second.latest < t_delay_;
  }

  /// Timestamp of the key's most recent live entry, if any.
  bool latest_stamp(std::uint64_t key, picos& out) const {
    auto it = index_.find(key);
    if (it == index_.end()) return false;
    out = it->second.latest;
    return true;
  }

  std::uint64_t live_entries() const { return live_; }
  std::uint64_t capacity() const { return ring_.size(); }
  picos t_delay() const { return t_delay_; }

 private:
  struct IndexSlot {
    std::uint32_t live = 0;
    picos latest = 0;
  };

  std::vector<Entry> ring_;
  std::size_t head_ = 0;
  std::uint64_t live_ = 0;
  picos t_delay_;
  std::unordered_map<std::uint64_t, IndexSlot> index_;
};

}  // namespace rhsim
