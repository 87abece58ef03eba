#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "noisynet/channel.hpp"
#include "noisynet/coding.hpp"
#include "noisynet/geometry.hpp"

namespace noisynet {

struct Stage1Config {
  double eps1 = 0.05;      // per-cell budget for missing every 1 in a cell
  std::size_t c_rep = 9;   // discovery repeats per member
  std::size_t r2 = 1;      // confirmation / histogram repeats
  const BlockCode* id_code = nullptr;  // witness identity code

  std::size_t l1() const { return id_code ? id_code->block_len() : 0; }

  /// Throws ConfigError if c_rep is even or its majority-flip probability at
  /// eps0 exceeds eps1, or if the identity code is missing.
  void validate(double eps0) const;
};

/// r2 = smallest odd integer >= factor * ln n.
std::size_t log_repeats(std::size_t n, double factor);

struct Stage1Result {
  std::vector<NodeId> witness;        // W_j per cell
  std::vector<std::uint8_t> value;    // f_j per cell
  std::vector<std::size_t> count;     // n_j per cell (histogram variant)
  std::vector<std::size_t> believers; // members that confirmed as witness
  std::uint64_t slots = 0;
};

using CellGroup = std::vector<const Cell*>;

/// Cells of one color class transmit in the same slots. Members broadcast
/// in ascending id order, c_rep times each; the center majority-decodes
/// every member and picks the least id decoded as 1 (else the least id).
std::vector<NodeId> witness_discovery(const CellGroup& group, std::span<const std::uint8_t> bits,
                                      const Stage1Config& cfg, SlotEngine& engine, std::uint64_t slot0);

/// The center block-encodes the witness's index within the cell, one bit
/// per slot. Returns, per cell, the local index each member decoded.
std::vector<std::vector<std::uint64_t>> distribute_identity(const CellGroup& group, std::span<const NodeId> witness,
                                                            const Stage1Config& cfg, SlotEngine& engine,
                                                            std::uint64_t slot0);

/// Every member that decoded its own index transmits its bit in each of the
/// r2 reserved slots; the center majority-decodes (collisions erased, all
/// erased gives 0). A center that is the witness uses its own bit.
std::vector<std::uint8_t> confirm_value(const CellGroup& group, std::span<const NodeId> witness,
                                        const std::vector<std::vector<std::uint64_t>>& believed,
                                        std::span<const std::uint8_t> bits, const Stage1Config& cfg,
                                        SlotEngine& engine, std::uint64_t slot0,
                                        std::vector<std::size_t>* believers = nullptr);

/// Phase lengths for one group, in slots.
std::uint64_t discovery_slots(const CellGroup& group, const Stage1Config& cfg);
std::uint64_t hist_collect_slots(const CellGroup& group, const Stage1Config& cfg);

Stage1Result run_stage1_max(std::span<const Cell> cells, std::span<const ScheduleClass> classes,
                            std::span<const std::uint8_t> bits, const Stage1Config& cfg, SlotEngine& engine);

/// Members broadcast their bit r2 times each; the center counts decoded 1s.
Stage1Result run_stage1_hist(std::span<const Cell> cells, std::span<const ScheduleClass> classes,
                             std::span<const std::uint8_t> bits, const Stage1Config& cfg, SlotEngine& engine);

}  // namespace noisynet
