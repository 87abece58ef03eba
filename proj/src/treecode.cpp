#include "noisynet/treecode.hpp"

#include <bit>
#include <limits>
#include <stdexcept>
#include <string>

#include "noisynet/errors.hpp"
#include "noisynet/rng.hpp"

namespace noisynet {

TreeCode::TreeCode(std::size_t depth, std::size_t alphabet, std::uint64_t seed)
    : depth_(depth), alphabet_(alphabet), seed_(seed) {
  if (depth == 0 || depth > 24) throw std::invalid_argument("tree code: depth must lie in [1, 24]");
  if (alphabet < 4 || !std::has_single_bit(alphabet) || alphabet > 1024) {
    throw std::invalid_argument("tree code: alphabet must be a power of two in [4, 1024]");
  }
  symbol_bits_ = static_cast<std::size_t>(std::countr_zero(alphabet));
  Rng rng(mix_seed(seed ^ 0x7265656364ULL));
  labels_.resize(depth);
  for (std::size_t level = 0; level < depth; ++level) {
    const std::size_t parents = std::size_t{1} << level;
    auto& row = labels_[level];
    row.resize(parents * 2);
    for (std::size_t p = 0; p < parents; ++p) {
      const auto a = static_cast<Symbol>(rng.below(alphabet));
      auto b = static_cast<Symbol>(rng.below(alphabet - 1));
      if (b >= a) ++b;
      row[p] = a;                 // step 0 at this level
      row[p | parents] = b;       // step 1 at this level
    }
  }
}

std::vector<Symbol> TreeCode::encode(std::span<const std::uint8_t> path) const {
  if (path.size() > depth_) throw std::invalid_argument("tree code: path longer than code depth");
  std::vector<Symbol> out(path.size());
  std::uint64_t prefix = 0;
  for (std::size_t i = 0; i < path.size(); ++i) {
    prefix |= std::uint64_t{path[i] & 1U} << i;
    out[i] = label(i, prefix);
  }
  return out;
}

namespace {

struct Search {
  const TreeCode& code;
  std::span<const Symbol> received;
  DecodeMetric metric;
  std::size_t best_dist;
  std::uint64_t best_path;

  void visit(std::size_t level, std::uint64_t prefix, std::size_t dist) {
    if (dist >= best_dist) return;
    if (level == received.size()) {
      best_dist = dist;
      best_path = prefix;
      return;
    }
    for (std::uint64_t step = 0; step < 2; ++step) {
      const std::uint64_t next = prefix | (step << level);
      const Symbol r = received[level];
      std::size_t cost = 0;
      if (r != kErasedSymbol) {
        const Symbol l = code.label(level, next);
        cost = metric == DecodeMetric::Bit ? static_cast<std::size_t>(std::popcount(static_cast<unsigned>(l ^ r))) : (l == r ? 0 : 1);
      }
      visit(level + 1, next, dist + cost);
    }
  }
};

}  // namespace

std::vector<std::uint8_t> TreeCode::decode(std::span<const Symbol> received, std::size_t cap,
                                           DecodeMetric metric) const {
  if (received.size() > cap) {
    throw CapacityError("tree code: exhaustive decoding of depth " + std::to_string(received.size()) +
                        " exceeds the cap of " + std::to_string(cap));
  }
  if (received.size() > depth_) throw std::invalid_argument("tree code: received sequence longer than code depth");
  Search s{*this, received, metric, std::numeric_limits<std::size_t>::max(), 0};
  s.visit(0, 0, 0);
  std::vector<std::uint8_t> path(received.size());
  for (std::size_t i = 0; i < path.size(); ++i) path[i] = static_cast<std::uint8_t>((s.best_path >> i) & 1U);
  return path;
}

TreeCode TreeCode::relabeled(std::span<const Symbol> perm) const {
  if (perm.size() != alphabet_) throw std::invalid_argument("tree code: permutation size mismatch");
  TreeCode out = *this;
  for (auto& row : out.labels_) {
    for (auto& s : row) s = perm[s];
  }
  return out;
}

}  // namespace noisynet
