#include "noisynet/oracle.hpp"

#include <algorithm>
#include <numeric>

namespace noisynet {

std::uint64_t oracle(const NetworkInstance& instance, Protocol protocol) {
  const auto& b = instance.bits;
  if (protocol == Protocol::Max) return std::any_of(b.begin(), b.end(), [](std::uint8_t x) { return x != 0; }) ? 1 : 0;
  return std::accumulate(b.begin(), b.end(), std::uint64_t{0},
                         [](std::uint64_t acc, std::uint8_t x) { return acc + (x != 0 ? 1 : 0); });
}

}  // namespace noisynet
