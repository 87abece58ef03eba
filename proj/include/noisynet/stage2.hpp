#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "noisynet/channel.hpp"
#include "noisynet/geometry.hpp"
#include "noisynet/line_sim.hpp"

namespace noisynet {

enum class PlanPhase { RowsToAxis, AxisToSink, DistributeDown };

/// Cells in data-flow order: the upstream end first, the receiving end
/// last. Upward arrays end at the cell nearest the sink.
struct CellArray {
  std::vector<CellId> cells;
  std::size_t links() const { return cells.empty() ? 0 : cells.size() - 1; }
};

struct Substage {
  PlanPhase phase = PlanPhase::RowsToAxis;
  std::vector<CellArray> arrays;
};

struct SubstagePlan {
  std::size_t l_sub = 1;  // maximum links per array
  std::vector<Substage> stages;

  std::size_t array_count() const;
  std::size_t link_count() const;
};

/// L_sub = ceil(factor * ln n), at least 1.
std::size_t substage_levels(std::size_t n, double factor = 1.0);

/// Every row segment (left and right of the sink column) and both halves of
/// the sink column are cut into arrays of at most l_sub links, with cut
/// points at multiples of l_sub from the receiving end; the remainder sits
/// at the outer edge. All rows advance band by band toward the axis, then
/// the column advances toward the sink. Arrays in one stage share at most
/// their receiving cell.
SubstagePlan build_substages(const SpanningTree& tree, std::size_t l_sub);

/// Same arrays with data flowing from the sink outward, stages reversed.
SubstagePlan reverse_plan(const SubstagePlan& plan);

struct Stage2Config {
  SimConfig sim;
  std::size_t g = 1;  // histogram bit width, ceil(log2(n + 1))
};

struct Stage2Result {
  std::uint64_t sink_value = 0;
  std::vector<std::uint64_t> cell_value;  // per cell after the stage
  std::uint64_t slots = 0;
  std::uint64_t link_bits = 0;
  std::size_t corruptions = 0;  // abstract-mode failures injected
  std::size_t arrays = 0;
  std::size_t max_rounds = 0;   // longest noiseless array schedule
};

/// Physical transport between the centers of an array's cells. Each link
/// gets its color's physical slot inside every logical slot of k5 slots.
class CenterTransport : public LinkTransport {
 public:
  CenterTransport(const CellArray& array, std::span<const Cell> cells, SlotEngine& engine, Phase phase,
                  std::uint64_t stage_slot0);
  Obs send(std::size_t link, bool reverse, std::uint64_t logical_slot, std::uint8_t bit) override;

 private:
  const CellArray& array_;
  std::span<const Cell> cells_;
  SlotEngine& engine_;
  Phase phase_;
  std::uint64_t slot0_;
};

/// Noiseless schedule lengths in logical slots.
inline std::size_t max_schedule_rounds(std::size_t links) { return links; }
inline std::size_t hist_schedule_rounds(std::size_t links, std::size_t g) { return links == 0 ? 0 : links + g - 1; }

/// Largest noiseless round count over the plan's arrays.
std::size_t plan_max_rounds(const SubstagePlan& plan, bool histogram, std::size_t g);

/// OR of the array's values delivered to its last cell, executed in the
/// configured mode. `values` is indexed by cell and updated at the root.
LineResult run_substage_max(const CellArray& array, std::vector<std::uint64_t>& values, std::span<const Cell> cells,
                            const Stage2Config& cfg, SlotEngine& engine, Phase phase, std::uint64_t slot0);

/// Pipelined bit-serial sum of the array's subtree counts into its last
/// cell. Throws std::invalid_argument if a count does not fit in g bits.
LineResult run_substage_hist(const CellArray& array, std::vector<std::uint64_t>& values, std::span<const Cell> cells,
                             const Stage2Config& cfg, SlotEngine& engine, Phase phase, std::uint64_t slot0);

Stage2Result run_stage2_max(const SubstagePlan& plan, const SpanningTree& tree, std::span<const Cell> cells,
                            std::span<const std::uint8_t> cell_values, const Stage2Config& cfg, SlotEngine& engine);

Stage2Result run_stage2_hist(const SubstagePlan& plan, const SpanningTree& tree, std::span<const Cell> cells,
                             std::span<const std::size_t> cell_counts, const Stage2Config& cfg, SlotEngine& engine);

struct DistributionResult {
  std::vector<std::uint64_t> node_value;
  std::uint64_t slots = 0;
};

/// Sends the sink's value down the reversed plan, then every center
/// broadcasts it r2 times (per bit) to its members, who majority-decode.
/// `bits` is 1 for MAX and g for the histogram.
DistributionResult distribute_result(const SubstagePlan& plan, const SpanningTree& tree, std::span<const Cell> cells,
                                     std::span<const ScheduleClass> classes, std::uint64_t value, std::size_t bits,
                                     std::size_t r2, const Stage2Config& cfg, SlotEngine& engine);

}  // namespace noisynet
