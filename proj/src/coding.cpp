#include "noisynet/coding.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "noisynet/errors.hpp"
#include "noisynet/rng.hpp"

namespace noisynet {

std::uint8_t majority_decode(std::span<const Obs> observations) {
  std::size_t ones = 0, zeros = 0;
  for (Obs o : observations) {
    if (o == Obs::One) ++ones;
    else if (o == Obs::Zero) ++zeros;
  }
  if (ones + zeros == 0) throw DecodeFailure("majority_decode: every observation erased");
  return ones > zeros ? 1 : 0;
}

std::uint8_t majority_or(std::span<const Obs> observations, std::uint8_t fallback) {
  std::size_t ones = 0, zeros = 0;
  for (Obs o : observations) {
    if (o == Obs::One) ++ones;
    else if (o == Obs::Zero) ++zeros;
  }
  if (ones + zeros == 0) return fallback;
  return ones > zeros ? 1 : 0;
}

double majority_error_bound(std::size_t k, double eps) {
  if (eps <= 0.0) return 0.0;
  double total = 0.0;
  const double lp = std::log(eps), lq = std::log1p(-eps);
  for (std::size_t i = k / 2 + 1; i <= k; ++i) {
    const double lc = std::lgamma(double(k) + 1) - std::lgamma(double(i) + 1) - std::lgamma(double(k - i) + 1);
    total += std::exp(lc + double(i) * lp + double(k - i) * lq);
  }
  return total;
}

RepetitionScheme::RepetitionScheme(std::size_t repeats) : k(repeats) {
  if (repeats == 0 || repeats % 2 == 0) throw std::invalid_argument("repetition: repeat count must be odd");
}

std::vector<std::uint8_t> to_bits(std::uint64_t value, std::size_t width) {
  std::vector<std::uint8_t> out(width);
  for (std::size_t i = 0; i < width; ++i) out[i] = static_cast<std::uint8_t>((value >> i) & 1U);
  return out;
}

std::uint64_t from_bits(std::span<const std::uint8_t> bits) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) v |= std::uint64_t{bits[i] & 1U} << i;
  return v;
}

BlockCode::BlockCode(std::size_t msg_bits, std::size_t block_len, std::uint64_t seed)
    : msg_bits_(msg_bits), block_len_(block_len), seed_(seed), words_((block_len + 63) / 64) {
  if (msg_bits == 0 || msg_bits > 24) throw std::invalid_argument("block code: msg_bits must lie in [1, 24]");
  if (block_len < msg_bits) throw std::invalid_argument("block code: block_len must be at least msg_bits");

  Rng rng(mix_seed(seed));
  std::vector<std::uint64_t> rows(msg_bits * words_, 0);
  for (std::size_t r = 0; r < msg_bits; ++r) {
    for (std::size_t b = 0; b < block_len; ++b) {
      if (rng.next() >> 63) rows[r * words_ + b / 64] |= std::uint64_t{1} << (b % 64);
    }
  }

  const std::size_t count = std::size_t{1} << msg_bits;
  table_.assign(count * words_, 0);
  min_distance_ = block_len;
  for (std::size_t msg = 1; msg < count; ++msg) {
    // codeword(msg) = codeword(msg without its lowest set bit) ^ row(lowest bit)
    const std::size_t low = static_cast<std::size_t>(std::countr_zero(msg));
    const std::size_t prev = msg & (msg - 1);
    std::size_t weight = 0;
    for (std::size_t w = 0; w < words_; ++w) {
      table_[msg * words_ + w] = table_[prev * words_ + w] ^ rows[low * words_ + w];
      weight += static_cast<std::size_t>(std::popcount(table_[msg * words_ + w]));
    }
    min_distance_ = std::min(min_distance_, weight);
  }
}

BlockCode BlockCode::make(std::size_t msg_bits, std::size_t block_len, std::uint64_t seed) {
  return BlockCode(msg_bits, block_len, seed);
}

BlockCode BlockCode::search(std::size_t msg_bits, std::size_t block_len, std::uint64_t base_seed, std::size_t tries) {
  BlockCode best(msg_bits, block_len, base_seed);
  for (std::size_t t = 1; t < tries; ++t) {
    BlockCode cand(msg_bits, block_len, base_seed + t);
    if (cand.min_distance() > best.min_distance()) best = std::move(cand);
  }
  return best;
}

std::vector<std::uint8_t> BlockCode::encode_value(std::uint64_t msg) const {
  if (msg >= (std::uint64_t{1} << msg_bits_)) throw std::invalid_argument("block code: message out of range");
  std::vector<std::uint8_t> out(block_len_);
  const auto* cw = codeword(msg);
  for (std::size_t b = 0; b < block_len_; ++b) out[b] = static_cast<std::uint8_t>((cw[b / 64] >> (b % 64)) & 1U);
  return out;
}

std::vector<std::uint8_t> BlockCode::encode(std::span<const std::uint8_t> msg) const {
  if (msg.size() != msg_bits_) throw std::invalid_argument("block code: message length mismatch");
  return encode_value(from_bits(msg));
}

std::vector<std::uint8_t> BlockCode::decode(std::span<const std::uint8_t> word) const {
  std::vector<Obs> obs(word.size());
  std::transform(word.begin(), word.end(), obs.begin(), [](std::uint8_t b) { return to_obs(b); });
  return to_bits(decode_value(obs), msg_bits_);
}

std::uint64_t BlockCode::decode_value(std::span<const Obs> word) const {
  if (word.size() != block_len_) throw std::invalid_argument("block code: word length mismatch");
  std::vector<std::uint64_t> recv(words_, 0), mask(words_, 0);
  bool erasures = false;
  for (std::size_t b = 0; b < block_len_; ++b) {
    if (word[b] == Obs::Erased) {
      erasures = true;
      continue;
    }
    mask[b / 64] |= std::uint64_t{1} << (b % 64);
    if (word[b] == Obs::One) recv[b / 64] |= std::uint64_t{1} << (b % 64);
  }
  // A codeword within (d_min - 1) / 2 of a fully observed word is the
  // unique nearest one.
  const std::size_t unique_radius = erasures || min_distance_ == 0 ? 0 : (min_distance_ - 1) / 2;
  const std::size_t count = std::size_t{1} << msg_bits_;
  std::size_t best_dist = std::numeric_limits<std::size_t>::max();
  std::uint64_t best = 0;
  if (words_ == 1) {
    const std::uint64_t r = recv[0], mk = mask[0];
    for (std::size_t msg = 0; msg < count; ++msg) {
      const auto d = static_cast<std::size_t>(std::popcount((table_[msg] ^ r) & mk));
      if (d < best_dist) {
        best_dist = d;
        best = msg;
        if (!erasures && d <= unique_radius) break;
      }
    }
    return best;
  }
  for (std::size_t msg = 0; msg < count; ++msg) {
    const auto* cw = codeword(msg);
    std::size_t d = 0;
    for (std::size_t w = 0; w < words_; ++w) d += static_cast<std::size_t>(std::popcount((cw[w] ^ recv[w]) & mask[w]));
    if (d < best_dist) {
      best_dist = d;
      best = msg;
      if (!erasures && d <= unique_radius) break;
    }
  }
  return best;
}

}  // namespace noisynet
