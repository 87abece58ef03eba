#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

namespace noisynet {

using Symbol = std::uint16_t;
inline constexpr Symbol kErasedSymbol = std::numeric_limits<Symbol>::max();
inline constexpr std::size_t kDefaultDecodeCap = 16;

/// Symbol: count of mismatched symbols. Bit: count of mismatched bits, the
/// likelihood order when symbols travel over a binary symmetric channel.
enum class DecodeMetric { Symbol, Bit };

/// Binary-branching tree code with seeded random labels. The two children
/// of every node carry distinct symbols.
class TreeCode {
 public:
  TreeCode(std::size_t depth, std::size_t alphabet, std::uint64_t seed);

  std::size_t depth() const { return depth_; }
  std::size_t alphabet() const { return alphabet_; }
  std::size_t bits_per_symbol() const { return symbol_bits_; }
  std::uint64_t seed() const { return seed_; }

  /// Label of the node reached by the first level+1 steps of a path whose
  /// steps are packed LSB-first into `prefix`.
  Symbol label(std::size_t level, std::uint64_t prefix) const {
    return labels_[level][prefix & ((std::uint64_t{2} << level) - 1)];
  }

  std::vector<Symbol> encode(std::span<const std::uint8_t> path) const;

  /// Minimum-distance path, exhaustive over all 2^len paths with
  /// branch-and-bound; ties go to the lexicographically smaller path. Erased
  /// symbols carry no information. Throws CapacityError when len exceeds
  /// `cap`.
  std::vector<std::uint8_t> decode(std::span<const Symbol> received, std::size_t cap = kDefaultDecodeCap,
                                   DecodeMetric metric = DecodeMetric::Symbol) const;

  /// Same code with every label passed through `perm` (a bijection on the
  /// alphabet).
  TreeCode relabeled(std::span<const Symbol> perm) const;

 private:
  std::size_t depth_ = 0;
  std::size_t alphabet_ = 0;
  std::size_t symbol_bits_ = 0;
  std::uint64_t seed_ = 0;
  std::vector<std::vector<Symbol>> labels_;  // labels_[level][prefix]
};

}  // namespace noisynet
