#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "noisynet/channel.hpp"

namespace noisynet {

enum class Obs : std::uint8_t { Zero = 0, One = 1, Erased = 2 };

inline Obs to_obs(const RxOutcome& o) {
  if (o.kind != RxKind::Received) return Obs::Erased;
  return o.bit ? Obs::One : Obs::Zero;
}

inline Obs to_obs(std::uint8_t bit) { return bit ? Obs::One : Obs::Zero; }

/// Majority over non-erased observations; an exact tie decodes to 0.
/// Throws DecodeFailure when every observation is erased.
std::uint8_t majority_decode(std::span<const Obs> observations);

/// Same, but all-erased decodes to `fallback`.
std::uint8_t majority_or(std::span<const Obs> observations, std::uint8_t fallback);

/// P(more than half of k independent flips at rate eps) -- the per-hop
/// failure of k-fold repetition with majority decoding (k odd).
double majority_error_bound(std::size_t k, double eps);

struct RepetitionScheme {
  std::size_t k = 1;

  explicit RepetitionScheme(std::size_t repeats);
  double error_bound(double eps) const { return majority_error_bound(k, eps); }
};

/// Seeded random binary linear code with exhaustive nearest-codeword
/// decoding. All 2^msg_bits codewords are tabulated at construction.
class BlockCode {
 public:
  static BlockCode make(std::size_t msg_bits, std::size_t block_len, std::uint64_t seed);

  /// Best minimum distance among `tries` consecutive generator seeds.
  static BlockCode search(std::size_t msg_bits, std::size_t block_len, std::uint64_t base_seed, std::size_t tries);

  std::size_t msg_bits() const { return msg_bits_; }
  std::size_t block_len() const { return block_len_; }
  std::uint64_t seed() const { return seed_; }
  std::size_t min_distance() const { return min_distance_; }

  std::vector<std::uint8_t> encode(std::span<const std::uint8_t> msg) const;
  std::vector<std::uint8_t> encode_value(std::uint64_t msg) const;

  std::vector<std::uint8_t> decode(std::span<const std::uint8_t> word) const;

  /// Erased positions are ignored when measuring distance. Ties go to the
  /// smaller message value.
  std::uint64_t decode_value(std::span<const Obs> word) const;

 private:
  BlockCode(std::size_t msg_bits, std::size_t block_len, std::uint64_t seed);

  const std::uint64_t* codeword(std::uint64_t msg) const { return &table_[msg * words_]; }

  std::size_t msg_bits_ = 0;
  std::size_t block_len_ = 0;
  std::uint64_t seed_ = 0;
  std::size_t words_ = 0;
  std::size_t min_distance_ = 0;
  std::vector<std::uint64_t> table_;
};

std::vector<std::uint8_t> to_bits(std::uint64_t value, std::size_t width);
std::uint64_t from_bits(std::span<const std::uint8_t> bits);

}  // namespace noisynet
