#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "rhsim/errors.hpp"

namespace rhsim {

/// A set of H3-class hash functions mapping a row id to counter indices.
///
/// Two families:
///  - kMatrix: per function, one random GF(2) matrix column per row-address
///    bit; the index is the XOR of the columns selected by the set bits.
///    Reseeding draws a fresh matrix, so which rows alias changes every
///    filter clear.
///  - kShiftXor: index = ((row >> shift) ^ seed) & mask. Cheap and useful as
///    a deterministic stub (all-zero seeds/shifts hash a row to itself), but
///    two rows collide for either every seed or none, so it cannot serve the
///    re-aliasing role of a clear.
class H3HashSet {
 public:
  enum class Family { kMatrix, kShiftXor };

  static H3HashSet matrix(std::uint32_t hash_count, std::uint32_t index_count,
                          std::uint32_t row_bits, std::mt19937_64& rng) {
    check_index_count(index_count);
    H3HashSet h;
    h.family_ = Family::kMatrix;
    h.index_mask_ = index_count - 1;
    h.row_bits_ = row_bits;
    h.columns_.resize(hash_count);
    h.reseed(rng);
    return h;
  }

  static H3HashSet shift_xor(std::vector<std::uint64_t> seeds,
                             std::vector<std::uint32_t> shifts,
                             std::uint32_t index_count) {
    check_index_count(index_count);
    if (seeds.size() != shifts.size() || seeds.empty())
      throw ConfigError("shift_xor needs matching non-empty seed/shift lists");
    H3HashSet h;
    h.family_ = Family::kShiftXor;
    h.index_mask_ = index_count - 1;
    h.seeds_ = std::move(seeds);
    h.shifts_ = std::move(shifts);
    return h;
  }

  /// Default production family: matrix hashing with `hash_count` functions
  /// over `row_bits`-wide addresses.
  static H3HashSet make_default(std::uint32_t hash_count, std::uint32_t index_count,
                                std::uint32_t row_bits, std::mt19937_64& rng) {
    return matrix(hash_count, index_count, row_bits, rng);
  }

  std::uint32_t hash_count() const {
    return family_ == Family::kMatrix ? static_cast<std::uint32_t>(columns_.size())
                                      : static_cast<std::uint32_t>(seeds_.size());
  }
  std::uint32_t index_count() const { return index_mask_ + 1; }
  Family family() const { return family_; }

  void indices(std::uint64_t row, std::vector<std::uint32_t>& out) const {
    out.clear();
    if (family_ == Family::kMatrix) {
      for (std::size_t f = 0; f < columns_.size(); ++f) {
        std::uint32_t idx = offsets_[f];  // affine part keeps row 0 unpinned
        std::uint64_t bits = row;
        for (std::uint32_t b = 0; bits != 0 && b < row_bits_; ++b, bits >>= 1) {
          if (bits & 1) idx ^= columns_[f][b];
        }
        out.push_back(idx & index_mask_);
      }
    } else {
      for (std::size_t j = 0; j < seeds_.size(); ++j) {
        out.push_back(static_cast<std::uint32_t>(((row >> shifts_[j]) ^ seeds_[j]) &
                                                 index_mask_));
      }
    }
  }

  std::vector<std::uint32_t> indices(std::uint64_t row) const {
    std::vector<std::uint32_t> out;
    indices(row, out);
    return out;
  }

  /// Replaces the seed material with freshly drawn randomness. No-op content
  /// change for kShiftXor beyond the seeds themselves.
  void reseed(std::mt19937_64& rng) {
    if (family_ == Family::kMatrix) {
      offsets_.resize(columns_.size());
      for (std::size_t f = 0; f < columns_.size(); ++f) {
        columns_[f].resize(row_bits_);
        for (auto& c : columns_[f])
          c = static_cast<std::uint32_t>(rng()) & index_mask_;
        offsets_[f] = static_cast<std::uint32_t>(rng()) & index_mask_;
      }
    } else {
      for (auto& s : seeds_) s = rng();
    }
  }

  /// Default hardwired shifts (0, 4, 8, 12) scaled to the row-address width.
  static std::vector<std::uint32_t> default_shifts(std::uint32_t hash_count,
                                                   std::uint32_t row_bits) {
    std::vector<std::uint32_t> shifts(hash_count);
    for (std::uint32_t j = 0; j < hash_count; ++j)
      shifts[j] = j * row_bits / hash_count;
    return shifts;
  }

 private:
  static void check_index_count(std::uint32_t n) {
    if (n == 0 || (n & (n - 1)) != 0)
      throw ConfigError("hash index count must be a power of two");
  }

  Family family_ = Family::kMatrix;
  std::uint32_t index_mask_ = 0;
  std::uint32_t row_bits_ = 0;
  std::vector<std::vector<std::uint32_t>> columns_;  // kMatrix
  std::vector<std::uint32_t> offsets_;               // kMatrix affine part
  std::vector<std::uint64_t> seeds_;                 // kShiftXor
  std::vector<std::uint32_t> shifts_;                // kShiftXor
};

}  // namespace rhsim
