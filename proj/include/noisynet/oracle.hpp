#pragma once

#include <cstdint>

#include "noisynet/geometry.hpp"

namespace noisynet {

enum class Protocol { Max, Hist };

/// Direct evaluation on the raw data: max of the bits, or the number of ones.
std::uint64_t oracle(const NetworkInstance& instance, Protocol protocol);

}  // namespace noisynet
