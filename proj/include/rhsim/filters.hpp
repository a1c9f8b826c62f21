#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "rhsim/hashing.hpp"
#include "rhsim/time.hpp"

namespace rhsim {

/// Counting Bloom filter over row ids. Insert increments every indexed
/// counter (saturating); test returns the minimum over them, an upper bound
/// on the true insert count: aliasing can only overcount, never undercount.
class CountingBloomFilter {
 public:
  CountingBloomFilter(H3HashSet hashes, std::uint64_t saturation)
      : hashes_(std::move(hashes)),
        saturation_(saturation),
        counters_(hashes_.index_count(), 0) {}

  void insert(std::uint64_t row) {
    hashes_.indices(row, scratch_);
    // Functions that agree on an index touch that counter once per insert.
    for (std::size_t j = 0; j < scratch_.size(); ++j) {
      bool dup = false;
      for (std::size_t k = 0; k < j; ++k)
        if (scratch_[k] == scratch_[j]) { dup = true; break; }
      if (!dup && counters_[scratch_[j]] < saturation_) ++counters_[scratch_[j]];
    }
  }

  std::uint64_t test(std::uint64_t row) const {
    hashes_.indices(row, scratch_);
    std::uint64_t m = std::numeric_limits<std::uint64_t>::max();
    for (std::uint32_t i : scratch_) m = std::min(m, counters_[i]);
    return m;
  }

  void clear_and_reseed(std::mt19937_64& rng) {
    std::fill(counters_.begin(), counters_.end(), 0);
    hashes_.reseed(rng);
  }

  std::uint64_t saturation() const { return saturation_; }
  const H3HashSet& hashes() const { return hashes_; }

 private:
  H3HashSet hashes_;
  std::uint64_t saturation_;
  std::vector<std::uint64_t> counters_;
  mutable std::vector<std::uint32_t> scratch_;
};

/// Two CBFs run time-interleaved: every insert feeds both, only the active
/// one answers tests, and each clear zeroes + reseeds the active filter then
/// swaps roles. The surviving (previously passive) filter carries the last
/// epoch's counts, so a row hot across the boundary stays blacklisted and a
/// test can never under-report the rolling one-to-two-epoch window.
class DualCountingBloomFilter {
 public:
  DualCountingBloomFilter(CountingBloomFilter a, CountingBloomFilter b,
                          std::uint64_t blacklist_threshold)
      : filters_{std::move(a), std::move(b)},
        blacklist_threshold_(blacklist_threshold) {}

  void insert(std::uint64_t row) {
    filters_[0].insert(row);
    filters_[1].insert(row);
  }

  std::uint64_t test(std::uint64_t row) const {
    return filters_[active_].test(row);
  }

  bool is_blacklisted(std::uint64_t row) const {
    // "reaches" semantics: a row whose active count has reached the
    // threshold is already unsafe to keep accelerating.
    return test(row) >= blacklist_threshold_;
  }

  void clear_and_swap(picos now, std::mt19937_64& rng) {
    filters_[active_].clear_and_reseed(rng);
    active_ ^= 1;
    last_clear_ = now;
  }

  picos last_clear() const { return last_clear_; }
  int active_index() const { return active_; }
  std::uint64_t blacklist_threshold() const { return blacklist_threshold_; }
  const CountingBloomFilter& filter(int i) const { return filters_[i]; }

 private:
  CountingBloomFilter filters_[2];
  int active_ = 0;
  picos last_clear_ = 0;
  std::uint64_t blacklist_threshold_;
};

/// Convenience factory for a bank's D-CBF with the default hash family.
inline DualCountingBloomFilter make_dcbf(std::uint32_t cbf_counters,
                                         std::uint32_t hash_count,
                                         std::uint32_t row_bits,
                                         std::uint64_t n_bl,
                                         std::mt19937_64& rng) {
  CountingBloomFilter a(H3HashSet::make_default(hash_count, cbf_counters, row_bits, rng),
                        n_bl);
  CountingBloomFilter b(H3HashSet::make_default(hash_count, cbf_counters, row_bits, rng),
                        n_bl);
  return DualCountingBloomFilter(std::move(a), std::move(b), n_bl);
}

}  // namespace rhsim
