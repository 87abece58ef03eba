#include <algorithm>
#include <numeric>

#include "doctest.h"
#include "noisynet/errors.hpp"
#include "noisynet/rng.hpp"
#include "noisynet/treecode.hpp"

using namespace noisynet;

namespace {

constexpr std::uint64_t kFixtureSeed = 3;

std::vector<std::uint8_t> path_of(std::uint64_t v, std::size_t depth) {
  std::vector<std::uint8_t> p(depth);
  for (std::size_t i = 0; i < depth; ++i) p[i] = static_cast<std::uint8_t>((v >> i) & 1U);
  return p;
}

// Exhaustive nearest path; paths visited in lexicographic order so the first
// minimum is the lexicographically smallest.
std::vector<std::uint8_t> brute_decode(const TreeCode& code, const std::vector<Symbol>& rx,
                                       DecodeMetric metric = DecodeMetric::Symbol) {
  const std::size_t d = rx.size();
  std::size_t best = SIZE_MAX;
  std::vector<std::uint8_t> best_path;
  for (std::uint64_t v = 0; v < (std::uint64_t{1} << d); ++v) {
    std::vector<std::uint8_t> p(d);
    for (std::size_t i = 0; i < d; ++i) p[i] = static_cast<std::uint8_t>((v >> (d - 1 - i)) & 1U);
    const auto enc = code.encode(p);
    std::size_t dist = 0;
    for (std::size_t i = 0; i < d; ++i) {
      if (rx[i] == kErasedSymbol) continue;
      if (metric == DecodeMetric::Symbol) {
        dist += enc[i] != rx[i];
      } else {
        for (unsigned x = enc[i] ^ rx[i]; x != 0; x >>= 1) dist += x & 1U;
      }
    }
    if (dist < best) {
      best = dist;
      best_path = p;
    }
  }
  return best_path;
}

}  // namespace

TEST_CASE("tree code construction") {
  const TreeCode a(12, 4, 7), b(12, 4, 7), c(12, 4, 8);
  bool differs = false;
  for (std::size_t level = 0; level < 12; ++level) {
    for (std::uint64_t prefix = 0; prefix < (std::uint64_t{1} << level); ++prefix) {
      const Symbol s0 = a.label(level, prefix);
      const Symbol s1 = a.label(level, prefix | (std::uint64_t{1} << level));
      CHECK(s0 != s1);
      CHECK(s0 < 4);
      CHECK(s0 == b.label(level, prefix));
      differs = differs || s0 != c.label(level, prefix);
    }
  }
  CHECK(differs);
  CHECK(a.bits_per_symbol() == 2);
  CHECK_THROWS_AS(TreeCode(10, 6, 0), std::invalid_argument);
  CHECK_THROWS_AS(TreeCode(10, 2, 0), std::invalid_argument);
  CHECK_THROWS_AS(TreeCode(25, 4, 0), std::invalid_argument);
}

TEST_CASE("noiseless round trip at depth 8") {
  const TreeCode code(8, 4, kFixtureSeed);
  for (std::uint64_t v = 0; v < 256; ++v) {
    const auto p = path_of(v, 8);
    CHECK(code.decode(code.encode(p)) == p);
  }
  // Prefixes decode too.
  const auto p = path_of(0xA5, 8);
  const auto enc = code.encode(p);
  for (std::size_t k = 0; k <= 8; ++k) {
    const std::vector<Symbol> part(enc.begin(), enc.begin() + static_cast<long>(k));
    CHECK(code.decode(part) == std::vector<std::uint8_t>(p.begin(), p.begin() + static_cast<long>(k)));
  }
}

TEST_CASE("decode agrees with exhaustive nearest-path search") {
  const TreeCode code(9, 4, 11);
  Rng rng(2);
  for (int t = 0; t < 200; ++t) {
    std::vector<Symbol> rx(1 + rng.below(9));
    for (auto& s : rx) s = rng.below(10) == 0 ? kErasedSymbol : static_cast<Symbol>(rng.below(4));
    CHECK(code.decode(rx) == brute_decode(code, rx));
  }
}

TEST_CASE("bit metric agrees with exhaustive search") {
  const TreeCode code(9, 16, 4);
  Rng rng(21);
  for (int t = 0; t < 200; ++t) {
    std::vector<Symbol> rx(1 + rng.below(9));
    for (auto& s : rx) s = rng.below(10) == 0 ? kErasedSymbol : static_cast<Symbol>(rng.below(16));
    CHECK(code.decode(rx, kDefaultDecodeCap, DecodeMetric::Bit) == brute_decode(code, rx, DecodeMetric::Bit));
  }
}

TEST_CASE("depth 10 over a binary channel with flip rate 0.05") {
  const TreeCode code(10, 256, kFixtureSeed);
  Rng rng(17);
  int ok = 0;
  for (int t = 0; t < 500; ++t) {
    const auto p = path_of(rng.below(1024), 10);
    auto rx = code.encode(p);
    for (auto& s : rx) {
      for (unsigned k = 0; k < 8; ++k) {
        if (rng.bernoulli(0.05)) s = static_cast<Symbol>(s ^ (1U << k));
      }
    }
    ok += code.decode(rx, kDefaultDecodeCap, DecodeMetric::Bit) == p;
  }
  CHECK(ok >= 475);
}

TEST_CASE("decode cap") {
  const TreeCode code(20, 4, 1);
  CHECK_THROWS_AS(code.decode(std::vector<Symbol>(17, 0)), CapacityError);
  CHECK_THROWS_AS(code.decode(std::vector<Symbol>(17, 0), 16), InfeasibleError);
  CHECK_NOTHROW(code.decode(std::vector<Symbol>(4, 0), 16));
  CHECK(code.decode(std::vector<Symbol>{}).empty());
}

TEST_CASE("decode is invariant under relabeling of the alphabet") {
  const TreeCode code(10, 8, 5);
  std::vector<Symbol> perm(8);
  std::iota(perm.begin(), perm.end(), Symbol{0});
  Rng rng(8);
  std::shuffle(perm.begin(), perm.end(), rng);
  const TreeCode other = code.relabeled(perm);
  for (int t = 0; t < 100; ++t) {
    std::vector<Symbol> rx(10);
    for (auto& s : rx) s = static_cast<Symbol>(rng.below(8));
    std::vector<Symbol> mapped(rx.size());
    std::transform(rx.begin(), rx.end(), mapped.begin(), [&](Symbol s) { return perm[s]; });
    CHECK(other.decode(mapped) == code.decode(rx));
  }
  CHECK_THROWS_AS(code.relabeled(std::vector<Symbol>(4)), std::invalid_argument);
}
