#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string_view>
#include <vector>

#include "noisynet/coding.hpp"
#include "noisynet/rng.hpp"
#include "noisynet/treecode.hpp"

namespace noisynet {

/// Noiseless synchronous protocol on a linear array. Position 0 is the
/// upstream end; link i carries bits from position i to position i+1. In
/// every round each active link's sender emits from its state at the start
/// of the round, then receivers absorb. Inactive links carry dummy zeros.
struct LineProtocol {
  std::size_t length = 0;
  std::size_t rounds = 0;
  std::vector<std::uint64_t> initial;
  std::function<bool(std::size_t link, std::size_t round)> active;
  std::function<std::uint8_t(std::size_t pos, std::size_t round, std::uint64_t state)> emit;
  std::function<std::uint64_t(std::size_t pos, std::size_t round, std::uint64_t state, std::uint8_t bit)> absorb;

  std::size_t links() const { return length == 0 ? 0 : length - 1; }
  std::size_t active_link_rounds() const;
};

/// Executes the protocol with perfect links; returns final states.
std::vector<std::uint64_t> run_noiseless(const LineProtocol& protocol);

enum class SimMode { Repetition, TreeCode, Abstract };

std::string_view mode_name(SimMode mode);
SimMode parse_mode(std::string_view name);

/// Carries one bit over one array link per call. `reverse` selects the
/// downstream-to-upstream direction; `logical_slot` is relative to the
/// start of the simulation.
class LinkTransport {
 public:
  virtual ~LinkTransport() = default;
  virtual Obs send(std::size_t link, bool reverse, std::uint64_t logical_slot, std::uint8_t bit) = 0;
};

/// Independent BSC per call, no geometry. Useful on its own and in tests.
class BscTransport : public LinkTransport {
 public:
  BscTransport(double eps, Rng& rng) : eps_(eps), rng_(rng) {}
  Obs send(std::size_t, bool, std::uint64_t, std::uint8_t bit) override;
  std::uint64_t uses() const { return uses_; }

 private:
  double eps_;
  Rng& rng_;
  std::uint64_t uses_ = 0;
};

struct SimConfig {
  SimMode mode = SimMode::Abstract;
  std::size_t r3 = 1;       // repetition count per noiseless link bit
  double gamma = 0.5;       // abstract-mode error exponent
  double k_rs = 3.0;        // abstract-mode time dilation
  std::size_t d_max = kDefaultDecodeCap;
  const TreeCode* tree_code = nullptr;
  double eps0 = 0.0;        // noise level; abstract mode injects failures only when > 0
  std::size_t stage_rounds = 0;  // abstract mode: arrays of one sub-stage run this long together
  /// Abstract-mode replacement for the root output on failure.
  std::function<std::uint64_t(Rng&)> corrupt;
};

struct LineResult {
  std::vector<std::uint64_t> outputs;
  std::uint64_t logical_slots = 0;
  std::uint64_t transmissions = 0;  // link uses, both directions
  std::uint64_t link_bits = 0;      // noiseless active (link, round) bits
  bool corrupted = false;           // abstract-mode failure injected
};

/// Noiseless rounds plus tree-code tail rounds actually run in tree-code
/// mode (the tail pads the code depth up to d_max).
std::size_t treecode_depth(const LineProtocol& protocol, const SimConfig& config);

LineResult simulate_line(const LineProtocol& protocol, const SimConfig& config, LinkTransport& transport, Rng& rng);

// Line protocols used by the inter-cell stage ---------------------------------

/// Running OR toward the last position: link i is active in round i only.
LineProtocol or_line_protocol(std::span<const std::uint8_t> values);

/// Bit-serial pipelined addition, least significant bit first. Position 0
/// streams its g-bit value; every later position adds its own value to the
/// incoming stream one round behind. Final state of every position k>0
/// holds (own value + incoming sum) in its low g bits.
LineProtocol sum_line_protocol(std::span<const std::uint64_t> values, std::size_t g);

/// Out bit and carry of a one-bit full adder.
struct AdderStep {
  std::uint8_t out = 0;
  std::uint8_t carry = 0;
};
AdderStep serial_add_step(std::uint8_t carry, std::uint8_t child_bit, std::uint8_t own_bit);

/// Decodes one sum_line_protocol state into its accumulated value.
std::uint64_t sum_state_value(std::uint64_t state, std::size_t g);

}  // namespace noisynet
